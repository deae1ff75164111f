"""Batch experiment driver for caching-strategy comparisons.

Reads a TOML experiment description, evaluates the hybrid design against
the whole-cache and maximum-partitioning baselines over a parameter
sweep, and writes the outcome as CSV plus self-contained plot scripts.

The result schema is frozen: columns ``sweep_variable, sweep_value,
strategy, metric, value, ci_halfwidth, engine`` with one row per grid
point, strategy (hybrid, mpc, ldc), metric (stp, delay) and engine.
Values are written with ``repr`` so files parse back bit for bit, and a
mean delay whose estimate hit the evaluation cap is annotated with an
infinite ``ci_halfwidth`` while the run continues.

Grid points can be fanned out over processes with the MMWCACHE_WORKERS
environment variable; rows always come back in grid order.
"""

from __future__ import annotations

import argparse
import csv
import math
import os
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # python 3.10
    import tomli as tomllib

from .analytic.engine import (
    analytic_strategy_values,
    objective_delay,
    objective_stp,
)
from .model import (
    CacheConfig,
    CachingVector,
    ContentModel,
    StrategyValues,
    SystemParams,
    db_to_linear,
    dbm_to_watt,
    freespace_intercept,
    thermal_noise_watt,
)
from .montecarlo import TrialPlan, montecarlo_strategy_values
from .optimizer import baseline_ldc, baseline_mpc, optimize

RESULT_COLUMNS = (
    "sweep_variable", "sweep_value", "strategy", "metric",
    "value", "ci_halfwidth", "engine",
)

STRATEGIES = ("hybrid", "mpc", "ldc")
METRICS = ("stp", "delay")

_SWEEP_VARIABLES = ("cache_size", "bs_density", "zipf_exponent")
_ENGINES = ("analytic", "montecarlo")


class ConfigError(ValueError):
    """Experiment description is malformed; the message lists each field."""


class SchemaError(ValueError):
    """A results file does not carry the frozen column set."""


@dataclass(frozen=True)
class SweepRow:
    """One strategy/metric evaluation at one grid point."""

    sweep_value: float
    strategy: str
    metric: str
    value: float
    ci_halfwidth: float
    engine: str

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise ValueError(f"strategy must be one of {STRATEGIES}")
        if self.metric not in METRICS:
            raise ValueError(f"metric must be one of {METRICS}")
        if self.engine not in _ENGINES:
            raise ValueError(f"engine must be one of {_ENGINES}")
        if self.ci_halfwidth < 0:
            raise ValueError("confidence half-width cannot be negative")


@dataclass(frozen=True)
class SweepResult:
    """All rows of one sweep, in grid order."""

    variable: str
    rows: tuple[SweepRow, ...]

    def __post_init__(self):
        if self.rows and self.variable not in _SWEEP_VARIABLES:
            raise ValueError(f"sweep variable must be one of {_SWEEP_VARIABLES}")


@dataclass(frozen=True)
class ExperimentConfig:
    """Fully parsed experiment: model blocks plus sweep and output plumbing."""

    params: SystemParams
    content: ContentModel
    cache: CacheConfig
    variable: str
    grid: tuple[float, ...]
    engines: tuple[str, ...]
    plan: TrialPlan
    out_dir: str

    def __post_init__(self):
        if self.variable not in _SWEEP_VARIABLES:
            raise ConfigError(f"sweep.variable: {self.variable!r} is not one of "
                              f"{_SWEEP_VARIABLES}")
        if not self.grid:
            raise ConfigError("sweep.grid: must be a nonempty ascending list")
        if any(b <= a for a, b in zip(self.grid, self.grid[1:])):
            raise ConfigError("sweep.grid: values must be strictly ascending")
        if not self.engines or any(e not in _ENGINES for e in self.engines):
            raise ConfigError(f"engine.choices: must be drawn from {_ENGINES}")


_REQUIRED = object()


def _field(section: dict, section_name: str, key: str, kind, errors: list,
           default=_REQUIRED):
    """Fetch and convert one config value, recording problems by field name."""
    if key not in section:
        if default is _REQUIRED:
            errors.append(f"{section_name}.{key}: missing")
            return None
        return default
    raw = section[key]
    try:
        if kind is float:
            if isinstance(raw, bool) or not isinstance(raw, (int, float)):
                raise TypeError
            return float(raw)
        if kind is int:
            if isinstance(raw, bool) or not isinstance(raw, int):
                raise TypeError
            return int(raw)
        if kind is str:
            if not isinstance(raw, str):
                raise TypeError
            return raw
        if kind is list:
            if not isinstance(raw, list) or not all(
                    isinstance(v, (int, float)) and not isinstance(v, bool)
                    for v in raw):
                raise TypeError
            return [float(v) for v in raw]
    except TypeError:
        errors.append(f"{section_name}.{key}: expected {kind.__name__}, "
                      f"got {type(raw).__name__}")
        return None
    raise AssertionError(f"unhandled field kind {kind}")


def load_config(path) -> ExperimentConfig:
    """Parse a TOML experiment file into validated model objects.

    Decibel quantities (transmit power, antenna gains, noise figure) are
    converted to linear units here and nowhere else; the path-loss
    intercept comes from the carrier frequency as the free-space loss at
    one metre. Every detected problem is reported with its
    ``section.field`` address in a single ConfigError.
    """
    try:
        with open(path, "rb") as fh:
            doc = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"config is not valid TOML: {exc}") from exc

    errors: list[str] = []

    def section(name: str, required: bool = True) -> dict:
        sec = doc.get(name)
        if sec is None:
            if required:
                errors.append(f"{name}: section missing")
            return {}
        if not isinstance(sec, dict):
            errors.append(f"{name}: expected a table")
            return {}
        return sec

    sys_sec = section("system")
    con_sec = section("content")
    cache_sec = section("cache")
    sweep_sec = section("sweep", required=False)
    trials_sec = section("trials", required=False)
    engine_sec = section("engine", required=False)
    out_sec = section("output", required=False)

    g = lambda key, kind, default=_REQUIRED: _field(
        sys_sec, "system", key, kind, errors, default)
    bs_density = g("bs_density", float)
    gateway_density = g("gateway_density", float)
    tx_power_dbm = g("tx_power_dbm", float)
    bandwidth = g("bandwidth_hz", float)
    slot_length = g("slot_length_s", float)
    noise_figure = g("noise_figure_db", float)
    blockage = g("blockage_per_m", float)
    carrier = g("carrier_hz", float)
    alpha_los = g("alpha_los", float)
    alpha_nlos = g("alpha_nlos", float)
    nakagami_m = g("nakagami_m", int, 3)
    nakagami_m_nlos = g("nakagami_m_nlos", int, 2)
    mainlobe_db = g("mainlobe_gain_db", float, 10.0)
    sidelobe_db = g("sidelobe_gain_db", float, -10.0)
    beamwidth = g("beamwidth_rad", float, math.pi / 6.0)
    backhaul_scale = g("backhaul_scale", float, 2e-3)

    file_count = _field(con_sec, "content", "file_count", int, errors)
    zipf_exponent = _field(con_sec, "content", "zipf_exponent", float, errors)
    file_size = _field(con_sec, "content", "file_size_bits", float, errors)

    cache_size = _field(cache_sec, "cache", "cache_size", int, errors)
    sic = _field(cache_sec, "cache", "sic_capability", int, errors)

    variable = _field(sweep_sec, "sweep", "variable", str, errors, "cache_size")
    grid = _field(sweep_sec, "sweep", "grid", list, errors,
                  [float(cache_size)] if cache_size else None)

    raw_engines = engine_sec.get("choices", "analytic")
    if isinstance(raw_engines, str):
        engines = (("analytic", "montecarlo") if raw_engines == "both"
                   else (raw_engines,))
    elif isinstance(raw_engines, list) and all(isinstance(e, str) for e in raw_engines):
        engines = tuple(raw_engines)
    else:
        errors.append("engine.choices: expected a string or list of strings")
        engines = ("analytic",)

    t = lambda key, kind, default: _field(trials_sec, "trials", key, kind,
                                          errors, default)
    plan_kwargs = dict(
        n_geometries=t("n_geometries", int, 400),
        n_fading_per_geometry=t("n_fading_per_geometry", int, 400),
        confidence=t("confidence", float, 0.99),
        seed=t("seed", int, 0),
        window_scale=t("window_scale", float, 1.0),
    )

    out_dir = _field(out_sec, "output", "directory", str, errors, "results")

    if errors:
        raise ConfigError("invalid config:\n  " + "\n  ".join(errors))

    try:
        params = SystemParams(
            bs_density=bs_density,
            gateway_density=gateway_density,
            tx_power=dbm_to_watt(tx_power_dbm),
            bandwidth=bandwidth,
            slot_length=slot_length,
            noise_power=thermal_noise_watt(bandwidth, noise_figure),
            blockage=blockage,
            kappa_los=freespace_intercept(carrier),
            kappa_nlos=freespace_intercept(carrier),
            alpha_los=alpha_los,
            alpha_nlos=alpha_nlos,
            nakagami_m=nakagami_m,
            nakagami_m_nlos=nakagami_m_nlos,
            mainlobe_gain=db_to_linear(mainlobe_db),
            sidelobe_gain=db_to_linear(sidelobe_db),
            beamwidth=beamwidth,
            backhaul_scale=backhaul_scale,
        )
    except ValueError as exc:
        raise ConfigError(f"system: {exc}") from exc
    try:
        content = ContentModel.zipf(file_count, zipf_exponent, file_size)
    except ValueError as exc:
        raise ConfigError(f"content: {exc}") from exc
    try:
        cache = CacheConfig(cache_size=cache_size, sic_capability=sic)
    except ValueError as exc:
        raise ConfigError(f"cache: {exc}") from exc
    try:
        plan = TrialPlan(**plan_kwargs)
    except ValueError as exc:
        raise ConfigError(f"trials: {exc}") from exc

    if variable == "cache_size":
        bad = [v for v in grid if int(v) != v or v < 1]
        if bad:
            raise ConfigError(f"sweep.grid: cache sizes must be positive "
                              f"integers, got {bad}")
    elif variable == "bs_density":
        if any(v <= 0 for v in grid):
            raise ConfigError("sweep.grid: densities must be positive")
    elif any(v < 0 for v in grid):
        raise ConfigError("sweep.grid: Zipf exponents must be nonnegative")

    return ExperimentConfig(
        params=params, content=content, cache=cache,
        variable=variable, grid=tuple(grid), engines=engines,
        plan=plan, out_dir=out_dir,
    )


def _apply_sweep(cfg: ExperimentConfig, value: float):
    """Specialize the config blocks to one grid point."""
    params, content, cache = cfg.params, cfg.content, cfg.cache
    if cfg.variable == "cache_size":
        cache = CacheConfig(cache_size=int(value),
                            sic_capability=cache.sic_capability)
    elif cfg.variable == "bs_density":
        params = replace(params, bs_density=float(value))
    else:
        content = ContentModel.zipf(content.file_count, float(value),
                                    content.file_size_bits)
    return params, content, cache


def _objective_halfwidth(splits, popularity, values: StrategyValues,
                         metric: str) -> float:
    """Propagated CI half-width of a request-weighted objective.

    Per-split half-widths combine linearly (a conservative bound); a
    delay objective touching any capped split is flagged as infinite.
    """
    used = set(splits)
    if metric == "delay":
        if any(values.delay_diverged[s] for s in used):
            return math.inf
        table = values.delay_halfwidth
    else:
        table = values.stp_halfwidth
    return math.fsum(p * table[s] for p, s in zip(popularity, splits))


def point_rows(value: float, params: SystemParams, content: ContentModel,
               cache: CacheConfig, engines, plan: TrialPlan,
               values_by_engine: dict | None = None) -> tuple[SweepRow, ...]:
    """Evaluate all strategies and metrics at one grid point.

    The hybrid rows use the vector optimized for the row's own metric;
    baseline vectors are fixed by popularity alone. One call yields
    len(engines) * 6 rows. ``values_by_engine`` short-circuits the
    per-split tabulation when the caller knows it is shared across
    points (it depends on neither cache size nor popularity).
    """
    rows = []
    pop = content.popularity
    mpc = baseline_mpc(pop, cache.cache_size)
    ldc = baseline_ldc(pop, cache.cache_size, cache.sic_capability)
    for engine in engines:
        if values_by_engine is not None and engine in values_by_engine:
            values = values_by_engine[engine]
        elif engine == "analytic":
            values = analytic_strategy_values(params, content, cache)
        else:
            values = montecarlo_strategy_values(params, content, cache, plan)
        best_stp = optimize(params, content, cache, mode="stp", values=values)
        best_delay = optimize(params, content, cache, mode="delay", values=values)
        vectors = {
            "hybrid": {"stp": best_stp.vector, "delay": best_delay.vector},
            "mpc": {"stp": mpc, "delay": mpc},
            "ldc": {"stp": ldc, "delay": ldc},
        }
        for strategy in STRATEGIES:
            for metric in METRICS:
                vec: CachingVector = vectors[strategy][metric]
                if metric == "stp":
                    obj = objective_stp(vec.splits, pop, values)
                else:
                    obj = objective_delay(vec.splits, pop, values)
                rows.append(SweepRow(
                    sweep_value=float(value), strategy=strategy, metric=metric,
                    value=obj,
                    ci_halfwidth=_objective_halfwidth(vec.splits, pop, values,
                                                      metric),
                    engine=engine,
                ))
    return tuple(rows)


def _point_worker(task) -> tuple[SweepRow, ...]:
    return point_rows(*task)


def run_sweep(cfg: ExperimentConfig) -> SweepResult:
    """Run every grid point and collect rows in grid order.

    MMWCACHE_WORKERS > 1 fans points out to that many processes; the
    ordered map keeps the output independent of completion order.
    """
    shared = None
    if cfg.variable != "bs_density":
        # per-split values depend only on the system geometry and the
        # file size, both fixed along cache-size and Zipf sweeps
        shared = {}
        for engine in cfg.engines:
            if engine == "analytic":
                shared[engine] = analytic_strategy_values(
                    cfg.params, cfg.content, cfg.cache)
            else:
                shared[engine] = montecarlo_strategy_values(
                    cfg.params, cfg.content, cfg.cache, cfg.plan)
    tasks = []
    for value in cfg.grid:
        params, content, cache = _apply_sweep(cfg, value)
        tasks.append((value, params, content, cache, cfg.engines, cfg.plan,
                      shared))
    workers = int(os.environ.get("MMWCACHE_WORKERS", "1"))
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=min(workers, len(tasks))) as pool:
            per_point = list(pool.map(_point_worker, tasks))
    else:
        per_point = [_point_worker(t) for t in tasks]
    rows = tuple(row for point in per_point for row in point)
    return SweepResult(variable=cfg.variable, rows=rows)


def analyze_point(cfg: ExperimentConfig) -> SweepResult:
    """Evaluate the configured operating point without sweeping.

    The rows are tagged as a one-point cache-size sweep so they share
    the frozen schema.
    """
    rows = point_rows(float(cfg.cache.cache_size), cfg.params, cfg.content,
                      cfg.cache, cfg.engines, cfg.plan)
    return SweepResult(variable="cache_size", rows=rows)


def write_results(result: SweepResult, path) -> Path:
    """Write a SweepResult as CSV; reruns produce identical bytes."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [",".join(RESULT_COLUMNS)]
    for r in result.rows:
        lines.append(",".join([
            result.variable, repr(r.sweep_value), r.strategy, r.metric,
            repr(r.value), repr(r.ci_halfwidth), r.engine,
        ]))
    path.write_text("\n".join(lines) + "\n")
    return path


def read_results(path) -> SweepResult:
    """Parse a results CSV back into a SweepResult.

    Raises SchemaError naming any column that is missing from the
    header, so downstream consumers fail with a usable message.
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: empty file, expected header "
                              f"{','.join(RESULT_COLUMNS)}") from None
        missing = [c for c in RESULT_COLUMNS if c not in header]
        if missing:
            raise SchemaError(f"{path}: missing column {missing[0]!r}")
        idx = {c: header.index(c) for c in RESULT_COLUMNS}
        variable = ""
        rows = []
        for number, record in enumerate(reader, start=2):
            if not record:
                continue
            variable = record[idx["sweep_variable"]]
            try:
                rows.append(SweepRow(
                    sweep_value=float(record[idx["sweep_value"]]),
                    strategy=record[idx["strategy"]],
                    metric=record[idx["metric"]],
                    value=float(record[idx["value"]]),
                    ci_halfwidth=float(record[idx["ci_halfwidth"]]),
                    engine=record[idx["engine"]],
                ))
            except (ValueError, IndexError) as exc:
                raise SchemaError(f"{path}: line {number}: {exc}") from exc
    try:
        return SweepResult(variable=variable, rows=tuple(rows))
    except ValueError as exc:
        raise SchemaError(f"{path}: {exc}") from exc


_PLOT_TEMPLATE = '''\
#!/usr/bin/env python3
"""Render {metric} versus {variable} from {csv_name} (auto-generated)."""

import csv
from collections import defaultdict

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

curves = defaultdict(list)
with open("{csv_name}", newline="") as fh:
    for row in csv.DictReader(fh):
        if row["metric"] != "{metric}":
            continue
        key = (row["strategy"], row["engine"])
        curves[key].append((float(row["sweep_value"]), float(row["value"])))

fig, ax = plt.subplots(figsize=(6.0, 4.0))
for (strategy, engine), points in sorted(curves.items()):
    points.sort()
    style = "-o" if engine == "analytic" else "--s"
    ax.plot([p[0] for p in points], [p[1] for p in points], style,
            label=f"{{strategy}} ({{engine}})")
ax.set_xlabel("{variable}")
ax.set_ylabel("{ylabel}")
ax.grid(True, alpha=0.3)
ax.legend()
fig.tight_layout()
fig.savefig("{png_name}", dpi=150)
print("wrote {png_name}")
'''

_YLABELS = {"stp": "success probability", "delay": "mean delay (slots)"}


def emit_plots(result_paths, out_dir=None) -> list[Path]:
    """Write one self-contained plot script per results file and metric.

    Scripts reference the CSV by file name and can be run from the
    directory they land in; emitting twice produces identical bytes.
    Files with a valid header but no rows are skipped with a warning.
    """
    scripts = []
    for path in result_paths:
        path = Path(path)
        result = read_results(path)
        if not result.rows:
            warnings.warn(f"{path}: no rows, skipping plot generation")
            continue
        target_dir = Path(out_dir) if out_dir is not None else path.parent
        target_dir.mkdir(parents=True, exist_ok=True)
        for metric in METRICS:
            if not any(r.metric == metric for r in result.rows):
                continue
            script = target_dir / f"plot_{path.stem}_{metric}.py"
            script.write_text(_PLOT_TEMPLATE.format(
                metric=metric,
                variable=result.variable,
                csv_name=path.name,
                png_name=f"{path.stem}_{metric}.png",
                ylabel=_YLABELS[metric],
            ))
            scripts.append(script)
    return scripts


def validate_suites(seed: int = 0, n_instances: int = 50) -> list[tuple[str, bool, str]]:
    """Quick self-check suites for the numeric kernels and solvers.

    Returns (name, passed, detail) per suite. These are smoke-level
    mirrors of the test suite so a deployment can sanity-check itself
    without pytest.
    """
    import numpy as np
    from scipy import integrate, linalg

    from .analytic.intensity import intensity_measure
    from .analytic.special import gauss_2f1
    from .analytic.toeplitz import toeplitz_exp_column
    from .model import default_content, default_params, los_probability, path_loss
    from .montecarlo import simulate_stp_jt
    from .optimizer import (
        MckpInstance,
        build_instance,
        exhaustive_oracle,
        greedy_mckp,
        optimal_slope_partition,
        _reduced_classes,
    )

    results = []
    rng = np.random.default_rng(seed)

    worst = 1.0
    ok = True
    for _ in range(n_instances):
        f_count = int(rng.integers(1, 7))
        n = int(rng.integers(1, 4))
        c = int(rng.integers(1, f_count + 1))
        pop = rng.random(f_count)
        pop = pop / pop.sum()
        stp = (0.0,) + tuple(rng.random(n))
        values = StrategyValues(stp=stp, delay=tuple([5.0] * (n + 1)))
        inst = build_instance(pop, values, c, n, "stp")
        exact = exhaustive_oracle(inst)
        good = greedy_mckp(inst)
        if exact.profit > 0:
            worst = min(worst, good.profit / exact.profit)
        ok = ok and good.profit >= 0.5 * exact.profit - 1e-12
        survivors = _reduced_classes(inst)
        pruned = MckpInstance(
            profits=tuple(tuple(inst.profits[r.class_index][i] for i in r.items)
                          for r in survivors),
            weights=tuple(tuple(inst.weights[r.class_index][i] for i in r.items)
                          for r in survivors),
            capacity=inst.capacity,
        )
        ok = ok and abs(exhaustive_oracle(pruned).profit - exact.profit) < 1e-12
    results.append(("knapsack", ok, f"worst greedy/exact ratio {worst:.4f}"))

    mism = 0
    for _ in range(n_instances):
        f_count = int(rng.integers(1, 7))
        n = int(rng.integers(1, 4))
        pop = rng.random(f_count)
        pop = pop / pop.sum()
        stp = (0.0,) + tuple(rng.random(n))
        values = StrategyValues(stp=stp, delay=tuple([5.0] * (n + 1)))
        inst = build_instance(pop, values, int(rng.integers(1, f_count + 1)),
                              n, "stp")
        reduced = _reduced_classes(inst)
        slopes = sorted(
            ((s, r.class_index, k) for r in reduced
             for k, s in enumerate(r.slopes)), reverse=True)
        weight = math.fsum(inst.weights[r.class_index][r.items[0]]
                           for r in reduced)
        reference = slopes[-1][0] if slopes else math.inf
        for s, fc, k in slopes:
            step = (inst.weights[fc][reduced[fc].items[k + 1]]
                    - inst.weights[fc][reduced[fc].items[k]])
            if weight + step > inst.capacity + 1e-9:
                reference = s
                break
            weight += step
        else:
            reference = min((s for s, _, _ in slopes), default=math.inf)
        if not math.isclose(optimal_slope_partition(inst), reference,
                            rel_tol=1e-12, abs_tol=1e-12):
            mism += 1
    results.append(("slope-partition", mism == 0, f"{mism} mismatches"))

    err = 0.0
    for _ in range(20):
        dim = int(rng.integers(1, 11))
        omega = rng.normal(size=dim)
        mat = np.zeros((dim, dim))
        for i in range(dim):
            for j in range(i + 1):
                mat[i, j] = omega[i - j]
        err = max(err, float(np.max(np.abs(
            toeplitz_exp_column(omega) - linalg.expm(mat)[:, 0]))))
    results.append(("toeplitz", err < 1e-10, f"max column error {err:.2e}"))

    err = 0.0
    for z in np.linspace(0.05, 60.0, 24):
        err = max(err, abs(gauss_2f1(1.0, 1.0, 2.0, -z) - math.log1p(z) / z))
    results.append(("hypergeometric", err < 1e-10, f"max identity error {err:.2e}"))

    params = default_params()
    err = 0.0
    for x in (1e6, 1e8, 1e10, 1e12):
        r_los = (x / params.kappa_los) ** (1.0 / params.alpha_los)
        r_nlos = (x / params.kappa_nlos) ** (1.0 / params.alpha_nlos)

        def integrand(r):
            p_los = los_probability(r, params.blockage)
            inside_los = path_loss(r, params, True) < x if r > 0 else True
            inside_nlos = path_loss(r, params, False) < x if r > 0 else True
            return (2.0 * math.pi * params.bs_density * r
                    * (p_los * inside_los + (1.0 - p_los) * inside_nlos))

        direct, _ = integrate.quad(integrand, 0.0, max(r_los, r_nlos),
                                   points=sorted((r_los, r_nlos)), limit=400)
        err = max(err, abs(intensity_measure(x, params) - direct)
                  / max(direct, 1e-300))
    results.append(("intensity", err < 1e-6, f"max relative error {err:.2e}"))

    plan = TrialPlan(n_geometries=40, n_fading_per_geometry=50, seed=seed)
    content = default_content()
    sure = simulate_stp_jt(params, content, 1, 0.0, plan)
    again = simulate_stp_jt(params, content, 1, 0.0, plan)
    ok = sure.value == 1.0 and sure.value == again.value
    results.append(("simulator", ok,
                    f"stp at zero threshold {sure.value:.3f}, reruns match"))
    return results


def _cmd_sweep(cfg: ExperimentConfig) -> int:
    result = run_sweep(cfg)
    out = Path(cfg.out_dir)
    csv_path = write_results(result, out / f"sweep_{cfg.variable}.csv")
    scripts = emit_plots([csv_path])
    print(f"wrote {csv_path} ({len(result.rows)} rows)")
    for script in scripts:
        print(f"wrote {script}")
    return 0


def _cmd_analyze(cfg: ExperimentConfig) -> int:
    result = analyze_point(cfg)
    csv_path = write_results(result, Path(cfg.out_dir) / "analyze.csv")
    for r in result.rows:
        note = "" if math.isfinite(r.ci_halfwidth) else "  [capped]"
        print(f"{r.strategy:>6} {r.metric:>5} ({r.engine}): "
              f"{r.value:.6g} +- {r.ci_halfwidth:.3g}{note}")
    print(f"wrote {csv_path} ({len(result.rows)} rows)")
    return 0


def _cmd_optimize(cfg: ExperimentConfig) -> int:
    source = "montecarlo" if cfg.engines == ("montecarlo",) else "analytic"
    source = {"montecarlo": "simulated", "analytic": "analytic"}[source]
    for mode in METRICS:
        res = optimize(cfg.params, cfg.content, cfg.cache, mode=mode,
                       source=source, plan=cfg.plan)
        splits = ",".join(str(s) for s in res.vector.splits)
        print(f"{mode}-optimal vector [{res.solution.tag}]: {splits}")
        print(f"  objective_stp={res.objective_stp:.6g} "
              f"objective_delay={res.objective_delay:.6g}")
    return 0


def _cmd_validate(seed: int) -> int:
    failures = 0
    for name, ok, detail in validate_suites(seed=seed):
        print(f"{name}: {'ok' if ok else 'FAIL'} ({detail})")
        failures += not ok
    return 1 if failures else 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="mmwcache",
        description="Caching-strategy experiments for mmWave cell networks",
    )
    sub = parser.add_subparsers(dest="verb", required=True)
    for verb, helptext in (
        ("analyze", "evaluate the configured operating point"),
        ("sweep", "run the configured parameter sweep"),
        ("optimize", "print the optimized caching vectors"),
        ("validate", "run the built-in self-check suites"),
    ):
        p = sub.add_parser(verb, help=helptext)
        if verb != "validate":
            p.add_argument("--config", required=True, help="TOML experiment file")
            p.add_argument("--engine", choices=["analytic", "montecarlo", "both"],
                           help="override the configured engine choices")
            p.add_argument("--out", help="override the output directory")
        p.add_argument("--seed", type=int, help="override the trial seed")
    args = parser.parse_args(argv)

    if args.verb == "validate":
        return _cmd_validate(args.seed if args.seed is not None else 0)

    try:
        cfg = load_config(args.config)
        if args.engine:
            engines = (("analytic", "montecarlo") if args.engine == "both"
                       else (args.engine,))
            cfg = replace(cfg, engines=engines)
        if args.seed is not None:
            cfg = replace(cfg, plan=replace(cfg.plan, seed=args.seed))
        if args.out:
            cfg = replace(cfg, out_dir=args.out)
        if args.verb == "sweep":
            return _cmd_sweep(cfg)
        if args.verb == "analyze":
            return _cmd_analyze(cfg)
        return _cmd_optimize(cfg)
    except ConfigError as exc:
        print(exc, file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
