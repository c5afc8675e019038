"""Experiment orchestration: seeded runs, sweeps, CSV and chart output.

A run grid is the cross product of seeds, algorithms, and sweep points.
Every run regenerates its scenario from the seed, executes one
algorithm, audits the returned allocation, and reduces it to one result
row. Outputs are byte-stable given identical inputs: rows are sorted,
floats are written in shortest round-trip form, and charts are plain
SVG assembled from the same sorted data (wall-time columns are the one
exception, and they never feed the charts).
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
import yaml

from .baselines import aauco_run, gucaa, gucro_run, rucaa
from .config import ConfigError, parse_quantity, scenario_config_from_mapping
from .dashf import OuterTraceRow, RunTrace, run_dashf
from .scenario import (ScenarioConfig, check_feasibility, compute_metrics,
                       generate_scenario)

ALGORITHMS = ("dashf", "gucro", "aauco", "gucaa", "rucaa")

SWEEPS = {
    "bandwidth": tuple(10e6 * k for k in range(1, 11)),
    "server_freq": tuple(20e9 * k for k in range(1, 11)),
    "weights": ((0.1, 0.9), (0.5, 0.5), (0.9, 0.1)),
}

_RESULT_HEADER = ("seed", "algorithm", "sweep", "sweep_value", "tcr",
                  "total_delay", "total_energy", "total_trust",
                  "iterations", "seconds")
_TRACE_HEADER = ("iteration", "price", "value", "total_delay",
                 "total_energy", "total_trust", "assoc_iterations",
                 "resource_iterations", "seconds")


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything one experiment needs, resolved and validated."""

    scenario: ScenarioConfig = field(default_factory=ScenarioConfig)
    algorithms: tuple[str, ...] = ALGORITHMS
    sweep: str | None = None
    sweep_values: tuple = ()
    seeds: tuple[int, ...] = (1, 2, 3, 4, 5)
    out_dir: str = "results"
    trace: bool = False
    workers: int = 1

    def validate(self) -> list[str]:
        problems = list(self.scenario.validate())
        if not self.algorithms:
            problems.append("no algorithms selected")
        for name in self.algorithms:
            if name not in ALGORITHMS:
                problems.append(f"unknown algorithm {name!r}")
        if not self.seeds:
            problems.append("no seeds given")
        if self.sweep is not None:
            if self.sweep not in SWEEPS:
                problems.append(f"unknown sweep {self.sweep!r}")
            elif not self.sweep_values:
                problems.append("sweep selected but no values resolved")
        if self.sweep == "weights":
            for pair in self.sweep_values:
                if (not isinstance(pair, tuple) or len(pair) != 2
                        or min(pair) < 0):
                    problems.append(f"bad weight pair {pair!r}")
                elif abs(sum(pair) - 1.0) > 1e-9:
                    problems.append(
                        f"weight pair {pair!r} does not sum to one")
        elif self.sweep is not None:
            for value in self.sweep_values:
                if not isinstance(value, (int, float)) or value <= 0:
                    problems.append(f"sweep value {value!r} not positive")
        if self.workers < 1:
            problems.append("workers must be at least one")
        return problems


@dataclass(frozen=True)
class ResultRow:
    """One finished run, reduced to the quantities the figures need."""

    seed: int
    algorithm: str
    sweep: str
    sweep_value: str
    tcr: float
    total_delay: float
    total_energy: float
    total_trust: float
    iterations: int
    seconds: float


def _sweep_tag(sweep: str | None, value) -> str:
    if sweep is None:
        return ""
    if sweep == "weights":
        return f"{value[0]:g}/{value[1]:g}"
    return f"{value:g}"


def _apply_sweep(scenario: ScenarioConfig, sweep: str | None,
                 value) -> ScenarioConfig:
    if sweep is None:
        return scenario
    if sweep == "bandwidth":
        return replace(scenario, server_bandwidth=float(value))
    if sweep == "server_freq":
        return replace(scenario, server_max_freq=float(value))
    if sweep == "weights":
        params = replace(scenario.params, delay_weight=float(value[0]),
                         energy_weight=float(value[1]))
        return replace(scenario, params=params)
    raise ConfigError(f"unknown sweep {sweep!r}")


def _single_row_trace(scenario, alloc) -> RunTrace:
    metrics = compute_metrics(scenario, alloc)
    row = OuterTraceRow(iteration=0, price=metrics.tcr, value=metrics.tcr,
                        total_delay=metrics.total_delay,
                        total_energy=metrics.total_energy,
                        total_trust=metrics.total_trust,
                        assoc_iterations=0, resource_iterations=0,
                        seconds=0.0)
    return RunTrace(rows=(row,))


def run_one(scenario_cfg: ScenarioConfig, algorithm: str,
            seed: int) -> tuple[ResultRow, RunTrace]:
    """Generate the seeded scenario, run one algorithm, audit, reduce."""
    import time
    scenario = generate_scenario(scenario_cfg, seed)
    tick = time.perf_counter()
    if algorithm == "dashf":
        alloc, trace = run_dashf(scenario)
    elif algorithm == "aauco":
        alloc, trace = aauco_run(scenario)
    elif algorithm == "gucro":
        alloc, trace = gucro_run(scenario)
    elif algorithm == "gucaa":
        alloc = gucaa(scenario)
        trace = _single_row_trace(scenario, alloc)
    elif algorithm == "rucaa":
        alloc = rucaa(scenario, seed)
        trace = _single_row_trace(scenario, alloc)
    else:
        raise ConfigError(f"unknown algorithm {algorithm!r}")
    seconds = time.perf_counter() - tick
    violations = check_feasibility(scenario, alloc)
    if violations:
        names = ", ".join(str(v) for v in violations)
        raise RuntimeError(
            f"{algorithm} (seed {seed}) returned an infeasible "
            f"allocation: {names}")
    metrics = compute_metrics(scenario, alloc)
    row = ResultRow(seed=seed, algorithm=algorithm, sweep="",
                    sweep_value="", tcr=metrics.tcr,
                    total_delay=metrics.total_delay,
                    total_energy=metrics.total_energy,
                    total_trust=metrics.total_trust,
                    iterations=len(trace) - 1, seconds=seconds)
    return row, trace


def _run_task(args):
    scenario_cfg, algorithm, seed, sweep, tag = args
    row, trace = run_one(scenario_cfg, algorithm, seed)
    row = replace(row, sweep=sweep or "", sweep_value=tag)
    return row, trace


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows([[_fmt(cell) for cell in row] for row in rows])


def _quartiles(values) -> tuple[float, float, float]:
    arr = np.sort(np.asarray(values, dtype=float))
    return (float(np.quantile(arr, 0.25)), float(np.median(arr)),
            float(np.quantile(arr, 0.75)))


def summarize(rows: list[ResultRow]) -> list[tuple]:
    """Median and quartile TCR per (algorithm, sweep point)."""
    groups: dict[tuple[str, str, str], list[float]] = {}
    order: list[tuple[str, str, str]] = []
    for row in rows:
        key = (row.algorithm, row.sweep, row.sweep_value)
        if key not in groups:
            groups[key] = []
            order.append(key)
        groups[key].append(row.tcr)
    out = []
    for key in order:
        q25, q50, q75 = _quartiles(groups[key])
        out.append((key[0], key[1], key[2], len(groups[key]),
                    q25, q50, q75))
    return out


def run_experiment(config: ExperimentConfig) -> list[ResultRow]:
    """Run the whole grid, write results, summary, traces, and charts."""
    problems = config.validate()
    if problems:
        raise ConfigError("invalid experiment: " + "; ".join(problems))
    out = Path(config.out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        probe = out / ".writable"
        probe.write_text("", encoding="utf-8")
        probe.unlink()
    except OSError as exc:
        raise ConfigError(f"output directory not writable: {exc}") from exc

    points = ((None,) if config.sweep is None
              else tuple(config.sweep_values))
    tasks = []
    for value in points:
        tag = _sweep_tag(config.sweep, value)
        scenario_cfg = _apply_sweep(config.scenario, config.sweep, value)
        for algorithm in config.algorithms:
            for seed in config.seeds:
                tasks.append((scenario_cfg, algorithm, seed,
                              config.sweep, tag))

    if config.workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            outcomes = list(pool.map(_run_task, tasks))
    else:
        outcomes = [_run_task(task) for task in tasks]

    tag_order = {_sweep_tag(config.sweep, value): k
                 for k, value in enumerate(points)}
    algo_order = {name: k for k, name in enumerate(ALGORITHMS)}
    rows = [row for row, _ in outcomes]
    traces = {(row.algorithm, row.seed, row.sweep_value): trace
              for row, trace in outcomes}
    rows.sort(key=lambda r: (tag_order[r.sweep_value],
                             algo_order[r.algorithm], r.seed))

    _write_csv(out / "results.csv", _RESULT_HEADER,
               [(r.seed, r.algorithm, r.sweep, r.sweep_value, r.tcr,
                 r.total_delay, r.total_energy, r.total_trust,
                 r.iterations, r.seconds) for r in rows])
    _write_csv(out / "summary.csv",
               ("algorithm", "sweep", "sweep_value", "runs",
                "tcr_q25", "tcr_median", "tcr_q75"),
               summarize(rows))

    if config.trace:
        for row in rows:
            trace = traces[(row.algorithm, row.seed, row.sweep_value)]
            suffix = f"_{row.sweep_value.replace('/', '-')}" \
                if row.sweep_value else ""
            name = f"trace_{row.algorithm}_seed{row.seed}{suffix}.csv"
            _write_csv(out / name, _TRACE_HEADER,
                       [(t.iteration, t.price, t.value, t.total_delay,
                         t.total_energy, t.total_trust,
                         t.assoc_iterations, t.resource_iterations,
                         t.seconds) for t in trace])

    kind = "comparison" if config.sweep is None else "sweep"
    emit_plot_data(rows, kind, config.out_dir)
    return rows


# ---------------------------------------------------------------------------
# deterministic SVG charts

_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#8c564b")
_WIDTH, _HEIGHT = 720.0, 480.0
_MARGIN_L, _MARGIN_R, _MARGIN_T, _MARGIN_B = 72.0, 24.0, 28.0, 56.0


def _ticks(lo: float, hi: float, count: int = 6) -> list[float]:
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / max(count - 1, 1)
    mag = 10.0 ** math.floor(math.log10(raw))
    for mult in (1.0, 2.0, 2.5, 5.0, 10.0):
        if mag * mult >= raw:
            step = mag * mult
            break
    first = math.ceil(lo / step) * step
    ticks = []
    t = first
    while t <= hi + 1e-9 * step:
        ticks.append(round(t, 12))
        t += step
    return ticks


def _svg_chart(series: list[tuple[str, list[tuple[float, float, float,
                                                  float]]]],
               x_label: str, y_label: str, categorical: bool) -> str:
    """Line chart with quartile whiskers; series hold (x, q25, q50, q75)."""
    xs = [pt[0] for _, pts in series for pt in pts]
    ys = [v for _, pts in series for pt in pts for v in pt[1:]]
    x_lo, x_hi = min(xs), max(xs)
    if x_lo == x_hi:
        x_lo, x_hi = x_lo - 0.5, x_hi + 0.5
    y_lo = min(0.0, min(ys))
    y_hi = max(ys) * 1.05 if max(ys) > 0 else 1.0
    plot_w = _WIDTH - _MARGIN_L - _MARGIN_R
    plot_h = _HEIGHT - _MARGIN_T - _MARGIN_B

    def px(x: float) -> float:
        return _MARGIN_L + (x - x_lo) / (x_hi - x_lo) * plot_w

    def py(y: float) -> float:
        return _MARGIN_T + (1.0 - (y - y_lo) / (y_hi - y_lo)) * plot_h

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_WIDTH:g}" '
        f'height="{_HEIGHT:g}" viewBox="0 0 {_WIDTH:g} {_HEIGHT:g}">',
        '<rect width="100%" height="100%" fill="white"/>',
        f'<line x1="{_MARGIN_L:g}" y1="{py(y_lo):.2f}" '
        f'x2="{_WIDTH - _MARGIN_R:g}" y2="{py(y_lo):.2f}" '
        'stroke="black" stroke-width="1"/>',
        f'<line x1="{_MARGIN_L:g}" y1="{_MARGIN_T:g}" '
        f'x2="{_MARGIN_L:g}" y2="{py(y_lo):.2f}" '
        'stroke="black" stroke-width="1"/>',
    ]
    if categorical:
        x_ticks = sorted({pt[0] for _, pts in series for pt in pts})
    else:
        x_ticks = _ticks(x_lo, x_hi)
    for t in x_ticks:
        parts.append(f'<line x1="{px(t):.2f}" y1="{py(y_lo):.2f}" '
                     f'x2="{px(t):.2f}" y2="{py(y_lo) + 5:.2f}" '
                     'stroke="black" stroke-width="1"/>')
        parts.append(f'<text x="{px(t):.2f}" y="{py(y_lo) + 20:.2f}" '
                     'font-family="sans-serif" font-size="12" '
                     f'text-anchor="middle">{t:g}</text>')
    for t in _ticks(y_lo, y_hi):
        parts.append(f'<line x1="{_MARGIN_L - 5:g}" y1="{py(t):.2f}" '
                     f'x2="{_MARGIN_L:g}" y2="{py(t):.2f}" '
                     'stroke="black" stroke-width="1"/>')
        parts.append(f'<text x="{_MARGIN_L - 9:g}" y="{py(t) + 4:.2f}" '
                     'font-family="sans-serif" font-size="12" '
                     f'text-anchor="end">{t:g}</text>')
    parts.append(f'<text x="{_MARGIN_L + plot_w / 2:.2f}" '
                 f'y="{_HEIGHT - 14:g}" font-family="sans-serif" '
                 f'font-size="13" text-anchor="middle">{x_label}</text>')
    parts.append(f'<text x="18" y="{_MARGIN_T + plot_h / 2:.2f}" '
                 'font-family="sans-serif" font-size="13" '
                 'text-anchor="middle" transform="rotate(-90 18 '
                 f'{_MARGIN_T + plot_h / 2:.2f})">{y_label}</text>')

    for k, (name, pts) in enumerate(series):
        color = _PALETTE[k % len(_PALETTE)]
        coords = " ".join(f"{px(x):.2f},{py(q50):.2f}"
                          for x, _, q50, _ in pts)
        parts.append(f'<polyline points="{coords}" fill="none" '
                     f'stroke="{color}" stroke-width="2"/>')
        for x, q25, q50, q75 in pts:
            parts.append(f'<line x1="{px(x):.2f}" y1="{py(q25):.2f}" '
                         f'x2="{px(x):.2f}" y2="{py(q75):.2f}" '
                         f'stroke="{color}" stroke-width="1"/>')
            parts.append(f'<circle cx="{px(x):.2f}" cy="{py(q50):.2f}" '
                         f'r="3" fill="{color}"/>')
        ly = _MARGIN_T + 16 + 18 * k
        lx = _WIDTH - _MARGIN_R - 150
        parts.append(f'<line x1="{lx:.2f}" y1="{ly - 4:.2f}" '
                     f'x2="{lx + 24:.2f}" y2="{ly - 4:.2f}" '
                     f'stroke="{color}" stroke-width="2"/>')
        parts.append(f'<text x="{lx + 30:.2f}" y="{ly:.2f}" '
                     'font-family="sans-serif" '
                     f'font-size="12">{name}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def _numeric_sweep_value(tag: str) -> float:
    if "/" in tag:
        return float(tag.split("/", 1)[0])
    return float(tag)


def emit_plot_data(rows: list[ResultRow], kind: str,
                   out_dir: str) -> list[str]:
    """Write the per-figure data table and its SVG chart; return paths."""
    if kind not in ("sweep", "comparison", "convergence"):
        raise ValueError(f"unknown plot kind {kind!r}")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    if kind == "convergence":
        traced = [r for r in rows if r.iterations > 0]
        if not traced:
            raise ValueError(
                "no rows with outer iterations for the convergence chart")
        series = []
        for algorithm in ALGORITHMS:
            picks = [r for r in rows if r.algorithm == algorithm
                     and r.iterations > 0]
            if not picks:
                continue
            pts = []
            for it in sorted({r.iterations for r in picks}):
                q25, q50, q75 = _quartiles(
                    [r.tcr for r in picks if r.iterations == it])
                pts.append((float(it), q25, q50, q75))
            series.append((algorithm, pts))
        data_rows = [(name, x, q25, q50, q75)
                     for name, pts in series for x, q25, q50, q75 in pts]
        data_path = out / "plot_convergence.csv"
        _write_csv(data_path, ("algorithm", "iterations", "tcr_q25",
                               "tcr_median", "tcr_q75"), data_rows)
        svg = _svg_chart(series, "outer iterations", "trust-cost ratio",
                         categorical=True)
        svg_path = out / "plot_convergence.svg"
        svg_path.write_text(svg, encoding="utf-8")
        return [str(data_path), str(svg_path)]

    if kind == "sweep":
        swept = [r for r in rows if r.sweep_value]
        if not swept:
            raise ValueError("no rows with a sweep value to plot")
        sweep_name = swept[0].sweep or "sweep"
        series = []
        for algorithm in ALGORITHMS:
            picks = [r for r in swept if r.algorithm == algorithm]
            if not picks:
                continue
            pts = []
            for tag in sorted({r.sweep_value for r in picks},
                              key=_numeric_sweep_value):
                q25, q50, q75 = _quartiles(
                    [r.tcr for r in picks if r.sweep_value == tag])
                pts.append((_numeric_sweep_value(tag), q25, q50, q75))
            series.append((algorithm, pts))
        data_rows = [(name, x, q25, q50, q75)
                     for name, pts in series for x, q25, q50, q75 in pts]
        data_path = out / "plot_sweep.csv"
        _write_csv(data_path, ("algorithm", "sweep_value", "tcr_q25",
                               "tcr_median", "tcr_q75"), data_rows)
        svg = _svg_chart(series, sweep_name, "trust-cost ratio",
                         categorical=False)
        svg_path = out / "plot_sweep.svg"
        svg_path.write_text(svg, encoding="utf-8")
        return [str(data_path), str(svg_path)]

    if not rows:
        raise ValueError("no rows to plot for the comparison chart")
    series = []
    for k, algorithm in enumerate(ALGORITHMS):
        picks = [r.tcr for r in rows if r.algorithm == algorithm]
        if not picks:
            continue
        q25, q50, q75 = _quartiles(picks)
        series.append((algorithm, [(float(k), q25, q50, q75)]))
    data_rows = [(name, q25, q50, q75)
                 for name, pts in series for _, q25, q50, q75 in pts]
    data_path = out / "plot_comparison.csv"
    _write_csv(data_path, ("algorithm", "tcr_q25", "tcr_median",
                           "tcr_q75"), data_rows)
    svg = _svg_chart(series, "algorithm", "trust-cost ratio",
                     categorical=True)
    svg_path = out / "plot_comparison.svg"
    svg_path.write_text(svg, encoding="utf-8")
    return [str(data_path), str(svg_path)]


# ---------------------------------------------------------------------------
# config-file ingestion

def _parse_weight_pair(raw) -> tuple[float, float]:
    if not (isinstance(raw, (list, tuple)) and len(raw) == 2):
        raise ConfigError(f"weight pair must be [delay, energy]: {raw!r}")
    return (float(parse_quantity(raw[0])), float(parse_quantity(raw[1])))


def experiment_config_from_mapping(data: dict) -> ExperimentConfig:
    """Build an ExperimentConfig from a parsed YAML mapping.

    The `experiment` section holds harness options; everything else is
    the scenario description.
    """
    if not isinstance(data, dict):
        raise ConfigError("config root must be a mapping")
    data = dict(data)
    exp = data.pop("experiment", {}) or {}
    if not isinstance(exp, dict):
        raise ConfigError("experiment section must be a mapping")
    exp = dict(exp)
    scenario = scenario_config_from_mapping(data)

    algorithms: tuple[str, ...] = ALGORITHMS
    if "algorithms" in exp:
        raw = exp.pop("algorithms")
        if isinstance(raw, str):
            raw = [raw]
        if raw == ["all"]:
            algorithms = ALGORITHMS
        else:
            algorithms = tuple(str(a) for a in raw)
    seeds: tuple[int, ...] = (1, 2, 3, 4, 5)
    if "seeds" in exp:
        raw = exp.pop("seeds")
        if not isinstance(raw, (list, tuple)):
            raise ConfigError("seeds must be a list")
        seeds = tuple(int(s) for s in raw)
    sweep = None
    sweep_values: tuple = ()
    if "sweep" in exp:
        raw = exp.pop("sweep")
        if isinstance(raw, str):
            sweep = raw.replace("-", "_")
            sweep_values = SWEEPS.get(sweep, ())
        elif isinstance(raw, dict):
            raw = dict(raw)
            sweep = str(raw.pop("name", "")).replace("-", "_")
            if "values" in raw:
                vals = raw.pop("values")
                if not isinstance(vals, (list, tuple)):
                    raise ConfigError("sweep values must be a list")
                if sweep == "weights":
                    sweep_values = tuple(_parse_weight_pair(v)
                                         for v in vals)
                else:
                    sweep_values = tuple(float(parse_quantity(v))
                                         for v in vals)
            else:
                sweep_values = SWEEPS.get(sweep, ())
            if raw:
                names = ", ".join(sorted(raw))
                raise ConfigError(f"unknown keys in sweep: {names}")
        else:
            raise ConfigError("sweep must be a name or a mapping")
    out_dir = str(exp.pop("out", "results"))
    trace = bool(exp.pop("trace", False))
    workers = int(exp.pop("workers", 1))
    if exp:
        names = ", ".join(sorted(exp))
        raise ConfigError(f"unknown keys in experiment: {names}")

    config = ExperimentConfig(scenario=scenario, algorithms=algorithms,
                              sweep=sweep, sweep_values=sweep_values,
                              seeds=seeds, out_dir=out_dir, trace=trace,
                              workers=workers)
    problems = config.validate()
    if problems:
        raise ConfigError("invalid experiment: " + "; ".join(problems))
    return config


def load_experiment_config(path: str) -> ExperimentConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse config {path!r}: {exc}") from exc
    if data is None:
        data = {}
    return experiment_config_from_mapping(data)


__all__ = ["ALGORITHMS", "SWEEPS", "ExperimentConfig", "ResultRow",
           "emit_plot_data", "experiment_config_from_mapping",
           "load_experiment_config", "run_experiment", "run_one",
           "summarize"]
