"""Command-line front end: config files, runs, sweeps, figure-data export.

Config files are flat ``key = value`` text with dotted section prefixes
(e.g. ``energy.drain_ch = 0.1``).  Resolution order: built-in defaults, then
the config file, then command-line flags.  Unknown keys are rejected.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import hashlib
import json
import math
import os
import statistics
import sys
import time
from pathlib import Path
from typing import Callable, Mapping, Optional, Sequence

from . import __version__
from .baselines import WcaParams
from .clustering import ChprobParams, WeightParams
from .energy import EnergyModel
from .engine import (
    ALGORITHMS,
    METRIC_FIELDS,
    ConfigError,
    RunResult,
    ScenarioConfig,
    SweepRow,
    sweep,
    run,
)
from .traffic import FlowConfig

OUT_DIR_ENV = "MANETSIM_OUT"


def _parse_bool(raw: str) -> bool:
    low = raw.strip().lower()
    if low in ("true", "1", "yes", "on"):
        return True
    if low in ("false", "0", "no", "off"):
        return False
    raise ValueError(f"expected true/false, got {raw!r}")


def _parse_opt_int(raw: str) -> Optional[int]:
    low = raw.strip().lower()
    if low in ("none", ""):
        return None
    return int(low)


def _parse_sources(raw: str) -> Optional[int]:
    low = raw.strip().lower()
    if low in ("all", "none"):
        return None
    return int(low)


def _parse_arrivals(raw: str) -> tuple[tuple[int, int], ...]:
    raw = raw.strip()
    if not raw:
        return ()
    out = []
    for part in raw.split(","):
        tick_s, _, id_s = part.partition(":")
        if not id_s:
            raise ValueError(f"expected tick:node_id, got {part!r}")
        out.append((int(tick_s), int(id_s)))
    return tuple(out)


def _fmt_bool(v: bool) -> str:
    return "true" if v else "false"


def _fmt_opt(v) -> str:
    return "none" if v is None else str(v)


def _fmt_sources(v: Optional[int]) -> str:
    return "all" if v is None else str(v)


def _fmt_arrivals(v: tuple[tuple[int, int], ...]) -> str:
    return ",".join(f"{t}:{n}" for t, n in v)


@dataclasses.dataclass(frozen=True)
class _Key:
    name: str
    section: str  # "" for top-level ScenarioConfig fields
    attr: str
    parse: Callable[[str], object]
    fmt: Callable[[object], str] = str


_KEYS: tuple[_Key, ...] = (
    _Key("nodes", "", "node_count", int),
    _Key("area_width", "", "area_width", float),
    _Key("area_height", "", "area_height", float),
    _Key("speed_min", "", "speed_min", float),
    _Key("speed_max", "", "speed_max", float),
    _Key("pause", "", "pause", float),
    _Key("range_min", "", "range_min", float),
    _Key("range_max", "", "range_max", float),
    _Key("tx", "", "tx_rate", float),
    _Key("energy_min", "", "energy_min", float),
    _Key("energy_max", "", "energy_max", float),
    _Key("sim_time", "", "sim_time", int),
    _Key("dt", "", "dt", float),
    _Key("algorithm", "", "algorithm", lambda s: s.strip().lower()),
    _Key("seed", "", "seed", int),
    _Key("orphan_timeout", "", "orphan_timeout", int),
    _Key("max_cluster_size", "", "max_cluster_size", _parse_opt_int, _fmt_opt),
    _Key("arrival_schedule", "", "arrivals", _parse_arrivals, _fmt_arrivals),
    _Key("unsafe", "", "unsafe", _parse_bool, _fmt_bool),
    _Key("weights.w1", "weights", "w1", float),
    _Key("weights.w2", "weights", "w2", float),
    _Key("weights.w3", "weights", "w3", float),
    _Key("weights.w4", "weights", "w4", float),
    _Key("weights.include_chprob_term", "weights", "include_chprob_term", _parse_bool, _fmt_bool),
    _Key("weights.normalize_terms", "weights", "normalize_terms", _parse_bool, _fmt_bool),
    _Key("weights.tr_max", "weights", "tr_max", float),
    _Key("weights.tx_max", "weights", "tx_max", float),
    _Key("weights.mv_max", "weights", "mv_max", float),
    _Key("weights.pv_max", "weights", "pv_max", float),
    _Key("chprob.c_prob", "chprob", "c_prob", float),
    _Key("chprob.p_min", "chprob", "p_min", float),
    _Key("chprob.tr_max", "chprob", "tr_max", float),
    _Key("chprob.normalize_range", "chprob", "normalize_range", _parse_bool, _fmt_bool),
    _Key("energy.drain_idle", "energy", "drain_idle", float),
    _Key("energy.drain_member", "energy", "drain_member", float),
    _Key("energy.drain_ch", "energy", "drain_ch", float),
    _Key("energy.cost_tx", "energy", "cost_tx", float),
    _Key("energy.cost_rx", "energy", "cost_rx", float),
    _Key("traffic.sources", "traffic", "source_count", _parse_sources, _fmt_sources),
    _Key("traffic.rate", "traffic", "rate", float),
    _Key("traffic.queue_capacity", "traffic", "queue_capacity", int),
    _Key("traffic.per_hop_delay", "traffic", "per_hop_delay", int),
    _Key("traffic.gen_until", "traffic", "gen_until", _parse_opt_int, _fmt_opt),
    _Key("wca.w1", "wca", "w1", float),
    _Key("wca.w2", "wca", "w2", float),
    _Key("wca.w3", "wca", "w3", float),
    _Key("wca.w4", "wca", "w4", float),
    _Key("wca.ideal_degree", "wca", "ideal_degree", int),
    _Key("wca.use_degree_difference", "wca", "use_degree_difference", _parse_bool, _fmt_bool),
)

_KEY_BY_NAME = {k.name: k for k in _KEYS}

_SECTION_FIELDS = {
    "": ScenarioConfig,
    "weights": WeightParams,
    "chprob": ChprobParams,
    "energy": EnergyModel,
    "traffic": FlowConfig,
    "wca": WcaParams,
}

_SECTION_ATTR = {
    "weights": "weights",
    "chprob": "chprob",
    "energy": "energy_model",
    "traffic": "traffic",
    "wca": "wca",
}


def read_config_file(path: str | Path) -> dict[str, str]:
    """Flat ``key = value`` lines; blank lines and ``#`` comment lines skipped."""
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file not found: {p}")
    entries: dict[str, str] = {}
    for lineno, line in enumerate(p.read_text().splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        key, sep, value = stripped.partition("=")
        if not sep:
            raise ConfigError(f"{p}:{lineno}: expected 'key = value', got {stripped!r}")
        entries[key.strip()] = value.strip()
    return entries


def resolve_config(
    file_entries: Optional[Mapping[str, str]] = None,
    overrides: Optional[Mapping[str, str]] = None,
) -> ScenarioConfig:
    """Build a validated ScenarioConfig; flags beat file values beat defaults."""
    merged: dict[str, str] = {}
    for source in (file_entries or {}), (overrides or {}):
        for key, raw in source.items():
            if key not in _KEY_BY_NAME:
                raise ConfigError(f"unknown config key {key!r}")
            merged[key] = raw

    section_kwargs: dict[str, dict[str, object]] = {s: {} for s in _SECTION_FIELDS}
    for key, raw in merged.items():
        spec = _KEY_BY_NAME[key]
        try:
            value = spec.parse(raw)
        except ValueError as exc:
            raise ConfigError(f"{key}: {exc}") from exc
        section_kwargs[spec.section][spec.attr] = value

    kwargs = dict(section_kwargs[""])
    for section, attr in _SECTION_ATTR.items():
        if section_kwargs[section]:
            try:
                kwargs[attr] = _SECTION_FIELDS[section](**section_kwargs[section])
            except ValueError as exc:
                raise ConfigError(f"{section}: {exc}") from exc
    try:
        cfg = ScenarioConfig(**kwargs)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    cfg.validate()
    return cfg


def parse_config(
    path: Optional[str | Path] = None,
    overrides: Optional[Mapping[str, str]] = None,
) -> ScenarioConfig:
    entries = read_config_file(path) if path is not None else {}
    return resolve_config(entries, overrides)


def format_config(cfg: ScenarioConfig) -> str:
    """Canonical flat text of a resolved config; parses back to an equal one."""
    lines = []
    for spec in _KEYS:
        if spec.section == "":
            value = getattr(cfg, spec.attr)
        else:
            value = getattr(getattr(cfg, _SECTION_ATTR[spec.section]), spec.attr)
        lines.append(f"{spec.name} = {spec.fmt(value)}")
    return "\n".join(lines) + "\n"


def config_hash(cfg: ScenarioConfig) -> str:
    return hashlib.sha256(format_config(cfg).encode()).hexdigest()


PRESETS: dict[str, dict[str, str]] = {
    # 13-node network joined by one extra node mid-run.
    "arrival": {
        "nodes": "13",
        "arrival_schedule": "50:13",
        "sim_time": "100",
        "traffic.sources": "0",
    },
}


def _csv_value(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def emit_series_csv(result: RunResult, path: str | Path) -> Path:
    """One row per simulated tick, full float precision, stable column order."""
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    with p.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(METRIC_FIELDS)
        for rec in result.series:
            writer.writerow(_csv_value(getattr(rec, f)) for f in METRIC_FIELDS)
    return p


SUMMARY_FIELDS = ("algorithm", "axis", "value", "seeds") + tuple(
    f"{metric}_{stat}"
    for metric in ("cluster_count", "connectivity", "dominant_set_updates",
                   "pdr", "throughput", "mean_delay")
    for stat in ("mean", "std")
)


def emit_summary_csv(rows: Sequence[SweepRow], path: str | Path) -> Path:
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    with p.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(SUMMARY_FIELDS)
        for row in rows:
            cells = [row.algorithm, row.axis, _csv_value(row.value), str(row.n_seeds)]
            for metric, mean, std in row.stats:
                cells.append(_csv_value(mean))
                cells.append(_csv_value(std))
            writer.writerow(cells)
    return p


def write_manifest(
    path: Path,
    cfg: ScenarioConfig,
    outputs: Sequence[Path],
    started: float,
    seeds: Optional[Sequence[int]] = None,
) -> Path:
    manifest = {
        "tool": "manetsim",
        "version": __version__,
        "config_hash": config_hash(cfg),
        "config": format_config(cfg),
        "seed": cfg.seed if seeds is None else None,
        "seeds": list(seeds) if seeds is not None else None,
        "unsafe": cfg.unsafe,
        "started": started,
        "finished": time.time(),
        "outputs": [str(o) for o in outputs],
    }
    p = Path(path)
    p.write_text(json.dumps(manifest, indent=2) + "\n")
    return p


# Figure presets: named sweeps/series matching the comparison plots.
_FIG_ALGOS_COMPARE = ("paiwca", "wca", "mwis")
_NODE_GRID = tuple(float(n) for n in range(10, 101, 10))
_RANGE_GRID = (5.0, 25.0, 50.0, 75.0, 100.0, 125.0, 150.0, 175.0, 200.0)
_PAUSE_GRID = (0.0, 50.0, 100.0, 200.0, 500.0)

_FIGURES: dict[str, dict] = {
    "clusters": {
        "kind": "sweep", "axis": "nodes", "values": _NODE_GRID,
        "metric": "cluster_count", "algorithms": _FIG_ALGOS_COMPARE,
        "base": {"traffic.sources": "0"},
    },
    "connectivity": {
        "kind": "sweep", "axis": "range", "values": _RANGE_GRID,
        "metric": "connectivity", "algorithms": _FIG_ALGOS_COMPARE,
        "base": {"nodes": "50", "traffic.sources": "0"},
    },
    "dominant": {
        "kind": "sweep", "axis": "nodes", "values": _NODE_GRID,
        "metric": "dominant_set_updates", "algorithms": _FIG_ALGOS_COMPARE,
        "base": {"pause": "0", "traffic.sources": "0"},
    },
    "throughput": {
        "kind": "series", "metric": "throughput_cumulative", "algorithms": ("paiwca",),
        "base": {"nodes": "100", "range_min": "100", "range_max": "100", "pause": "100"},
    },
    "pdr": {
        "kind": "sweep", "axis": "pause", "values": _PAUSE_GRID,
        "metric": "pdr", "algorithms": ALGORITHMS,
        "base": {"nodes": "100", "range_min": "100", "range_max": "100"},
    },
    "delay": {
        "kind": "series", "metric": "mean_delay", "algorithms": ("paiwca",),
        "base": {"nodes": "50", "range_min": "100", "range_max": "100", "pause": "0"},
    },
}

FIGURE_NAMES = tuple(sorted(_FIGURES))


def _series_metric(result: RunResult, metric: str) -> list[float]:
    if metric == "throughput_cumulative":
        return [
            rec.delivered / (rec.tick * result.config.dt) if rec.tick else 0.0
            for rec in result.series
        ]
    return [float(getattr(rec, metric)) for rec in result.series]


def figure_export(
    name: str,
    out_dir: str | Path,
    seeds: Sequence[int] = (0, 1, 2, 3, 4),
    overrides: Optional[Mapping[str, str]] = None,
) -> Path:
    """Run a named figure preset and emit plot-ready columns.

    Output columns: the x axis, then ``<algorithm>_mean`` and
    ``<algorithm>_std`` per algorithm in the preset.
    """
    if name not in _FIGURES:
        raise ConfigError(f"unknown figure {name!r}, expected one of {FIGURE_NAMES}")
    fig = _FIGURES[name]
    base_entries = dict(fig["base"])
    base_entries.update(overrides or {})
    out_path = Path(out_dir) / f"{name}.csv"
    out_path.parent.mkdir(parents=True, exist_ok=True)
    started = time.time()

    columns: dict[str, list[float]] = {}
    x_values: list[float]
    base_cfg = resolve_config(base_entries)
    if fig["kind"] == "sweep":
        x_values = list(fig["values"])
        for algo in fig["algorithms"]:
            cfg = dataclasses.replace(base_cfg, algorithm=algo)
            rows = sweep(cfg, fig["axis"], x_values, list(seeds))
            columns[f"{algo}_mean"] = [r.mean(fig["metric"]) for r in rows]
            columns[f"{algo}_std"] = [r.std(fig["metric"]) for r in rows]
        x_name = fig["axis"]
    else:
        x_values = [float(t) for t in range(1, base_cfg.sim_time + 1)]
        for algo in fig["algorithms"]:
            cfg = dataclasses.replace(base_cfg, algorithm=algo)
            per_seed = []
            for s in seeds:
                result = run(dataclasses.replace(cfg, seed=s))
                per_seed.append(_series_metric(result, fig["metric"]))
            means, stds = [], []
            for t in range(len(x_values)):
                xs = [series[t] for series in per_seed]
                means.append(statistics.fmean(xs))
                stds.append(statistics.stdev(xs) if len(xs) > 1 else 0.0)
            columns[f"{algo}_mean"] = means
            columns[f"{algo}_std"] = stds
        x_name = "tick"

    with out_path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([x_name, *columns.keys()])
        for i, x in enumerate(x_values):
            writer.writerow([_csv_value(x), *(_csv_value(col[i]) for col in columns.values())])
    write_manifest(out_path.with_suffix(".manifest.json"), base_cfg, [out_path],
                   started, seeds=list(seeds))
    return out_path


def _default_out_dir() -> Path:
    return Path(os.environ.get(OUT_DIR_ENV, "."))


def _collect_overrides(args: argparse.Namespace) -> dict[str, str]:
    overrides: dict[str, str] = {}
    for item in args.set or []:
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        overrides[key.strip()] = value.strip()
    if getattr(args, "algorithm", None):
        overrides["algorithm"] = args.algorithm
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = str(args.seed)
    if getattr(args, "nodes", None) is not None:
        overrides["nodes"] = str(args.nodes)
    if getattr(args, "range", None) is not None:
        overrides["range_min"] = str(args.range)
        overrides["range_max"] = str(args.range)
    if getattr(args, "pause", None) is not None:
        overrides["pause"] = str(args.pause)
    if getattr(args, "sim_time", None) is not None:
        overrides["sim_time"] = str(args.sim_time)
    if getattr(args, "unsafe", False):
        overrides["unsafe"] = "true"
    return overrides


def _base_entries(args: argparse.Namespace) -> dict[str, str]:
    entries: dict[str, str] = {}
    preset = getattr(args, "preset", None)
    if preset:
        if preset not in PRESETS:
            raise ConfigError(f"unknown preset {preset!r}, expected one of {sorted(PRESETS)}")
        entries.update(PRESETS[preset])
    if getattr(args, "config", None):
        entries.update(read_config_file(args.config))
    return entries


def _parse_list(raw: str, conv: Callable[[str], float]) -> list:
    try:
        return [conv(part) for part in raw.split(",") if part.strip() != ""]
    except ValueError as exc:
        raise ConfigError(f"bad list {raw!r}: {exc}") from exc


def _cmd_run(args: argparse.Namespace) -> int:
    cfg = resolve_config(_base_entries(args), _collect_overrides(args))
    started = time.time()
    result = run(cfg)
    out = Path(args.out) if args.out else _default_out_dir() / (
        f"run-{cfg.algorithm}-seed{cfg.seed}.csv"
    )
    emit_series_csv(result, out)
    write_manifest(out.with_suffix(".manifest.json"), cfg, [out], started)
    s = result.summary
    print(
        f"algorithm={s.algorithm} seed={s.seed} ticks={s.ticks} "
        f"clusters={s.mean_cluster_count:.3f} connectivity={s.mean_connectivity:.3f} "
        f"updates={s.dominant_set_updates} pdr={s.pdr:.4f} "
        f"throughput={s.throughput:.3f} delay={s.mean_delay:.3f} "
        f"alive={s.alive_final} -> {out}"
    )
    return 0


def _cmd_sweep(args: argparse.Namespace) -> int:
    base = resolve_config(_base_entries(args), _collect_overrides(args))
    values = _parse_list(args.values, float)
    seeds = _parse_list(args.seeds, int)
    if not values or not seeds:
        raise ConfigError("sweep needs non-empty --values and --seeds")
    algos = (
        [a.strip().lower() for a in args.algorithms.split(",")]
        if args.algorithms
        else [base.algorithm]
    )
    started = time.time()
    rows: list[SweepRow] = []
    for algo in algos:
        rows.extend(sweep(dataclasses.replace(base, algorithm=algo), args.axis, values, seeds))
    out = Path(args.out) if args.out else _default_out_dir() / f"sweep-{args.axis}.csv"
    emit_summary_csv(rows, out)
    write_manifest(out.with_suffix(".manifest.json"), base, [out], started, seeds=seeds)
    print(f"{len(rows)} sweep rows -> {out}")
    return 0


def _cmd_figure(args: argparse.Namespace) -> int:
    seeds = _parse_list(args.seeds, int) if args.seeds else [0, 1, 2, 3, 4]
    overrides = _collect_overrides(args)
    out_dir = Path(args.out) if args.out else _default_out_dir()
    path = figure_export(args.name, out_dir, seeds, overrides)
    print(f"figure {args.name} -> {path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="manetsim",
        description="Deterministic MANET clustering simulator.",
    )
    parser.add_argument("--version", action="version", version=f"manetsim {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", help="config file (flat key = value)")
        p.add_argument("--algorithm", choices=ALGORITHMS, help="election algorithm")
        p.add_argument("--seed", type=int, help="run seed")
        p.add_argument("--nodes", type=int, help="node count")
        p.add_argument("--range", type=float, help="uniform transmission range (m)")
        p.add_argument("--pause", type=float, help="waypoint pause time (s)")
        p.add_argument("--sim-time", type=int, dest="sim_time", help="ticks to simulate")
        p.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="override any config key; repeatable")
        p.add_argument("--unsafe", action="store_true",
                       help="allow parameters outside the documented bounds")

    p_run = sub.add_parser("run", help="run one scenario and emit its tick series")
    add_common(p_run)
    p_run.add_argument("--preset", help=f"named scenario: {sorted(PRESETS)}")
    p_run.add_argument("--out", help="output CSV path")
    p_run.set_defaults(fn=_cmd_run)

    p_sweep = sub.add_parser("sweep", help="run a values x seeds grid and emit a summary table")
    add_common(p_sweep)
    p_sweep.add_argument("--axis", required=True, choices=("nodes", "range", "pause"))
    p_sweep.add_argument("--values", required=True, help="comma-separated axis values")
    p_sweep.add_argument("--seeds", required=True, help="comma-separated seeds")
    p_sweep.add_argument("--algorithms", help="comma-separated algorithm list")
    p_sweep.add_argument("--out", help="output CSV path")
    p_sweep.set_defaults(fn=_cmd_sweep)

    p_fig = sub.add_parser("figure", help="export plot-ready data for a named figure preset")
    add_common(p_fig)
    p_fig.add_argument("name", choices=FIGURE_NAMES)
    p_fig.add_argument("--out", help="output directory")
    p_fig.add_argument("--seeds", help="comma-separated seeds (default 0-4)")
    p_fig.set_defaults(fn=_cmd_figure)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
