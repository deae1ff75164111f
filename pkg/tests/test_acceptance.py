"""Top-level acceptance runs, one test per headline behavior.

Each test prints a single PASS/FAIL summary line (written past the
capture plumbing so it always reaches the console) and enforces its
own wall-clock budget. These are the slow, end-to-end checks; the
per-module suites carry the fine-grained regressions.
"""

import math
import sys
import time
from dataclasses import replace
from pathlib import Path

import mpmath
import numpy as np
from scipy import integrate, linalg

from mmwcache.analytic.engine import (
    analytic_strategy_values,
    stp_jt,
    stp_pt,
)
from mmwcache.analytic.intensity import (
    intensity_density,
    intensity_inverse,
    intensity_measure,
    nth_pathloss_pdf,
)
from mmwcache.analytic.special import gauss_2f1
from mmwcache.analytic.toeplitz import toeplitz_exp_column, toeplitz_exp_l1
from mmwcache.cli import load_config, run_sweep
from mmwcache.model import (
    CacheConfig,
    StrategyValues,
    default_params,
    sinr_threshold,
    threshold_for,
)
from mmwcache.montecarlo import TrialPlan, simulate_stp_jt, simulate_stp_pt
from mmwcache.optimizer import (
    MckpInstance,
    build_instance,
    exhaustive_oracle,
    greedy_mckp,
    optimize,
)
from test_special import GENERIC_REFERENCE, INTERFERENCE_REFERENCE

CONFIG_DIR = Path(__file__).resolve().parents[1] / "configs"


def _announce(line: str) -> None:
    # pytest captures both streams; __stderr__ is the real console fd,
    # so the summary survives even when the test body passes quietly.
    print(line)
    print(line, file=sys.__stderr__, flush=True)


def _verdict(ok: bool) -> str:
    return "PASS" if ok else "FAIL"


# ---------------------------------------------------------------------------
# 1. closed-form consistency ladder


def test_isotropic_closed_form_agreement():
    """No blockage, unit gains, Rayleigh, no noise: the quadrature path
    must land on the closed-form ladder it degenerates to."""
    start = time.perf_counter()
    params = default_params(
        blockage=1e-9,
        alpha_los=4.0,
        alpha_nlos=4.0,
        nakagami_m=1,
        nakagami_m_nlos=1,
        noise_power=0.0,
        mainlobe_gain=1.0,
        sidelobe_gain=1.0,
        serving_gain=1.0,
    )

    def closed_form(split: int) -> float:
        # With Rayleigh fading and no noise the rank-n success factor is
        # the n-th power of one hypergeometric ratio, so the ladder
        # collapses to hyp^{-split(split+1)/2}.
        theta = 2.0 ** (1.0 / split) - 1.0
        hyp = mpmath.hyp2f1(-0.5, 1.0, 0.5, -theta)
        return float(hyp ** (-split * (split + 1) / 2))

    checks = []
    for split in (1, 2, 3):
        theta = 2.0 ** (1.0 / split) - 1.0
        engine = stp_pt(params, split, theta)
        checks.append((f"pt{split}", engine, closed_form(split)))
    theta1 = 2.0 ** 1.0 - 1.0
    checks.append(("jt1", stp_jt(params, 1, theta1), closed_form(1)))

    errors = {name: abs(a - b) for name, a, b in checks}
    ok = all(err <= 1e-2 for err in errors.values())
    elapsed = time.perf_counter() - start
    detail = ", ".join(f"{k}={v:.2e}" for k, v in errors.items())
    _announce(f"ACCEPTANCE 1/7 closed-form ladder: {_verdict(ok)}"
              f" (abs errs {detail}; {elapsed:.1f}s)")
    for name, engine, exact in checks:
        assert abs(engine - exact) <= 1e-2, (name, engine, exact)
    assert elapsed < 60.0


# ---------------------------------------------------------------------------
# 2. analytic engine against the event-level simulator


def test_analytic_matches_simulation_at_reference_point():
    """Both engines at the steeper-LOS reference geometry.

    The split-file law is an independence approximation: it multiplies
    per-rank success terms that share interference and fading in the
    simulator. The rank-3 product is known to sit below the simulated
    joint success by more than the stated allowance at every load, so
    the split-3 leg documents that model error rather than hiding it.
    """
    start = time.perf_counter()
    cfg = load_config(CONFIG_DIR / "table1_alos21.toml")
    params, content = cfg.params, cfg.content
    plan = TrialPlan(n_geometries=10_000, n_fading_per_geometry=200, seed=1)

    legs = []
    for split in (2, 3):
        theta = threshold_for(params, content, split)
        ana = stp_pt(params, split, theta)
        sim = simulate_stp_pt(params, content, split, plan)
        budget = 0.03 + 3.0 * sim.half_width
        diff = abs(ana - sim.value)
        legs.append((f"pt{split}", diff <= budget,
                     f"|{ana:.4f}-{sim.value:.4f}|={diff:.4f} vs {budget:.4f}"))

    theta1 = threshold_for(params, content, 1)
    ana_jt = stp_jt(params, 2, theta1)
    sim_jt = simulate_stp_jt(params, content, 2, theta1, plan)
    floor = sim_jt.value - 3.0 * sim_jt.half_width
    legs.append(("jt2", ana_jt >= floor,
                 f"bound {ana_jt:.4f} >= {floor:.4f}"))

    ok = all(passed for _, passed, _ in legs)
    elapsed = time.perf_counter() - start
    detail = "; ".join(f"{name} {_verdict(p)} {msg}" for name, p, msg in legs)
    _announce(f"ACCEPTANCE 2/7 analytic vs simulation: {_verdict(ok)}"
              f" ({detail}; {elapsed:.0f}s)")
    for name, passed, msg in legs:
        assert passed, f"{name}: {msg}"
    assert elapsed < 600.0


# ---------------------------------------------------------------------------
# 3. greedy knapsack guarantee


def _random_instance(rng: np.random.Generator) -> MckpInstance:
    """Either a caching-shaped instance or a free-form one."""
    n_classes = int(rng.integers(2, 9))
    if rng.random() < 0.5:
        n_coop = int(rng.integers(1, 4))
        popularity = rng.dirichlet(np.ones(n_classes))
        stp = (0.0, *np.sort(rng.uniform(0.0, 1.0, n_coop)))
        delay = tuple(rng.uniform(1.0, 30.0, n_coop + 1))
        values = StrategyValues(stp=stp, delay=delay)
        capacity = float(rng.integers(1, n_classes + 1))
        mode = "stp" if rng.random() < 0.7 else "delay"
        return build_instance(popularity, values, capacity, n_coop, mode=mode)
    profits, weights = [], []
    for _ in range(n_classes):
        k = int(rng.integers(1, 4))
        profits.append((0.0, *np.round(rng.uniform(0.0, 2.0, k), 3)))
        weights.append((0.0, *np.round(rng.uniform(0.0, 1.0, k), 3)))
    capacity = float(rng.uniform(0.3, n_classes))
    return MckpInstance(tuple(profits), tuple(weights), capacity)


def test_greedy_half_optimal_guarantee():
    start = time.perf_counter()
    rng = np.random.default_rng(20260816)
    worst = 1.0
    for _ in range(200):
        instance = _random_instance(rng)
        best = exhaustive_oracle(instance)
        fast = greedy_mckp(instance)
        assert fast.profit >= 0.5 * best.profit - 1e-12, instance
        if best.profit > 0:
            worst = min(worst, fast.profit / best.profit)
    elapsed = time.perf_counter() - start
    ok = worst >= 0.5
    _announce(f"ACCEPTANCE 3/7 greedy half-guarantee: {_verdict(ok)}"
              f" (worst ratio {worst:.4f} over 200 instances; {elapsed:.1f}s)")
    assert ok
    assert elapsed < 60.0


# ---------------------------------------------------------------------------
# 4. sweep trends at the reference operating point


def _curve(result, strategy, metric):
    rows = sorted((r for r in result.rows
                   if r.strategy == strategy and r.metric == metric),
                  key=lambda r: r.sweep_value)
    return [r.value for r in rows]


def test_cache_and_zipf_sweep_trends():
    """Hybrid dominance along the cache sweep, strategy collapse at the
    full cache, and the shrink of the hybrid edge as popularity skews.

    The partitioned baseline keeps its maximal split even when the cache
    holds the whole catalogue, so its curve cannot rejoin the other two
    at the top of the sweep; the three-way coincidence leg records that
    gap instead of masking it.
    """
    start = time.perf_counter()
    cfg = load_config(CONFIG_DIR / "default.toml")
    cache_sweep = run_sweep(cfg)

    hybrid = _curve(cache_sweep, "hybrid", "stp")
    mpc = _curve(cache_sweep, "mpc", "stp")
    ldc = _curve(cache_sweep, "ldc", "stp")
    legs = []
    dominant = all(h >= max(m, l) - 1e-12
                   for h, m, l in zip(hybrid, mpc, ldc))
    legs.append(("hybrid>=baselines", dominant, "every cache size"))
    spread = max(abs(hybrid[-1] - mpc[-1]), abs(hybrid[-1] - ldc[-1]),
                 abs(mpc[-1] - ldc[-1]))
    legs.append(("coincide@50", spread <= 1e-9, f"spread {spread:.3e}"))
    ordered = all(m >= l - 1e-12 for m, l in zip(mpc, ldc))
    legs.append(("mpc>=ldc", ordered, "every cache size"))

    hybrid_d = _curve(cache_sweep, "hybrid", "delay")
    mpc_d = _curve(cache_sweep, "mpc", "delay")
    ldc_d = _curve(cache_sweep, "ldc", "delay")
    fastest = all(h <= min(m, l) + 1e-12
                  for h, m, l in zip(hybrid_d, mpc_d, ldc_d))
    legs.append(("hybrid delay<=baselines", fastest, "every cache size"))

    zipf_sweep = run_sweep(replace(cfg, variable="zipf_exponent",
                                   grid=(0.2, 0.6, 1.0, 1.4)))
    gaps = [h - m for h, m in zip(_curve(zipf_sweep, "hybrid", "stp"),
                                  _curve(zipf_sweep, "mpc", "stp"))]
    legs.append(("gap shrinks with skew", gaps[-1] < gaps[0],
                 f"{gaps[0]:.4f} -> {gaps[-1]:.4f}"))

    ok = all(passed for _, passed, _ in legs)
    elapsed = time.perf_counter() - start
    detail = "; ".join(f"{name} {_verdict(p)} ({msg})" for name, p, msg in legs)
    _announce(f"ACCEPTANCE 4/7 sweep trends: {_verdict(ok)} ({detail};"
              f" {elapsed:.0f}s)")
    for name, passed, msg in legs:
        assert passed, f"{name}: {msg}"
    assert elapsed < 900.0


# ---------------------------------------------------------------------------
# 5. interior peak of the simulated density sweep


def test_density_sweep_interior_peak():
    """Simulated optimized success over two decades of deployment
    density rises and then falls exactly once, up to CI noise."""
    start = time.perf_counter()
    cfg = load_config(CONFIG_DIR / "default.toml")
    params, content, cache = cfg.params, cfg.content, cfg.cache
    # 4000 geometries keep the conservative noise floor (summed maximal
    # half-widths) below the genuine drop on the dense side of the peak
    plan = TrialPlan(n_geometries=4000, n_fading_per_geometry=100, seed=3)

    values_list, halves = [], []
    for factor in (0.1, 0.25, 0.5, 1.0, 2.0, 4.0, 10.0):
        point = replace(params, bs_density=factor * params.bs_density)
        stp, hw = [0.0], [0.0]
        theta1 = threshold_for(point, content, 1)
        est = simulate_stp_jt(point, content, cache.sic_capability,
                              theta1, plan)
        stp.append(est.value)
        hw.append(est.half_width)
        for split in range(2, cache.sic_capability + 1):
            est = simulate_stp_pt(point, content, split, plan)
            stp.append(est.value)
            hw.append(est.half_width)
        values = StrategyValues(stp=tuple(stp),
                                delay=(0.0,) * (cache.sic_capability + 1),
                                engine="montecarlo")
        design = optimize(params=point, content=content, config=cache,
                          mode="stp", source="simulated", values=values)
        values_list.append(design.objective_stp)
        halves.append(max(hw))

    peak = int(np.argmax(values_list))
    last = len(values_list) - 1

    def noise(i: int, j: int) -> float:
        return 3.0 * (halves[i] + halves[j])

    interior = 0 < peak < last
    rises = values_list[peak] - values_list[0] > noise(0, peak)
    falls = values_list[peak] - values_list[last] > noise(peak, last)
    clean = all(values_list[i + 1] >= values_list[i] - noise(i, i + 1)
                for i in range(peak)) and \
        all(values_list[i + 1] <= values_list[i] + noise(i, i + 1)
            for i in range(peak, last))
    ok = interior and rises and falls and clean
    elapsed = time.perf_counter() - start
    shape = ", ".join(f"{v:.3f}" for v in values_list)
    _announce(f"ACCEPTANCE 5/7 density peak: {_verdict(ok)}"
              f" (objectives [{shape}], peak at index {peak};"
              f" {elapsed:.0f}s)")
    assert interior, (values_list, peak)
    assert rises and falls, (values_list, halves)
    assert clean, (values_list, halves)
    assert elapsed < 600.0


# ---------------------------------------------------------------------------
# 6. numerical kernels against independent references


def test_numerical_kernel_accuracy():
    start = time.perf_counter()
    errs = {}

    rng = np.random.default_rng(6)
    worst = 0.0
    for dim in (3, 8, 12):
        for scale in (0.1, 0.5, 2.0):
            # production coefficient shape: negative head, nonnegative
            # tail, which is what makes the column sum an L1 norm
            coeffs = scale * np.abs(rng.standard_normal(dim))
            coeffs[0] = -coeffs[0]
            dense = np.zeros((dim, dim))
            for i in range(dim):
                for j in range(i + 1):
                    dense[i, j] = coeffs[i - j]
            column = linalg.expm(dense)[:, 0]
            worst = max(worst, float(np.max(np.abs(
                toeplitz_exp_column(coeffs) - column))))
            worst = max(worst, abs(toeplitz_exp_l1(coeffs) -
                                   float(np.abs(column).sum())))
    errs["toeplitz"] = worst

    worst = 0.0
    for (alpha, t), expected in INTERFERENCE_REFERENCE.items():
        got = gauss_2f1(-2.0 / alpha, 1.0, 1.0 - 2.0 / alpha, -t)
        worst = max(worst, abs(got - expected) / max(1.0, abs(expected)))
    for (a, b, c, z), expected in GENERIC_REFERENCE.items():
        got = gauss_2f1(a, b, c, z)
        worst = max(worst, abs(got - expected) / max(1.0, abs(expected)))
    errs["gauss_2f1"] = worst

    params = default_params()
    support = float(intensity_inverse(40.0, params))
    # breakpoints where the order statistics carry their mass keep the
    # adaptive quadrature honest over twelve decades of path loss
    knots = [float(intensity_inverse(u, params))
             for u in (0.05, 0.2, 0.5, 1.0, 2.0, 5.0, 10.0, 25.0)]
    worst = 0.0
    for x in (support * 1e-4, support * 1e-2, support * 0.1, support):
        direct, _ = integrate.quad(
            lambda r: intensity_density(r, params), 0.0, x,
            points=[k for k in knots if k < x], limit=400)
        worst = max(worst, abs(intensity_measure(x, params) - direct)
                    / direct)
    errs["intensity"] = worst

    worst = 0.0
    for n in (1, 2, 3):
        mass, _ = integrate.quad(
            lambda x: nth_pathloss_pdf(x, n, params), 0.0, support,
            points=knots, limit=400)
        worst = max(worst, abs(mass - 1.0))
    errs["pdf mass"] = worst

    bounds = {"toeplitz": 1e-10, "gauss_2f1": 1e-10,
              "intensity": 1e-6, "pdf mass": 1e-3}
    ok = all(errs[k] <= bounds[k] for k in bounds)
    elapsed = time.perf_counter() - start
    detail = ", ".join(f"{k}={v:.1e}" for k, v in errs.items())
    _announce(f"ACCEPTANCE 6/7 numerical kernels: {_verdict(ok)}"
              f" ({detail}; {elapsed:.1f}s)")
    for key, bound in bounds.items():
        assert errs[key] <= bound, (key, errs[key])
    assert elapsed < 60.0


# ---------------------------------------------------------------------------
# 7. monotonicity suite


def test_monotonicity_suite():
    start = time.perf_counter()
    cfg = load_config(CONFIG_DIR / "default.toml")
    params, content = cfg.params, cfg.content

    thresholds = [sinr_threshold(content.file_size_bits, params.slot_length,
                                 params.bandwidth, s) for s in range(1, 7)]
    strict = all(a > b for a, b in zip(thresholds, thresholds[1:]))

    tables = {n: analytic_strategy_values(params, content, CacheConfig(35, n))
              for n in (1, 2, 3)}
    by_cache = [optimize(params, content, CacheConfig(c, 3),
                         values=tables[3]).objective_stp
                for c in (5, 15, 25, 35, 45, 50)]
    cache_mono = all(b >= a - 1e-12 for a, b in zip(by_cache, by_cache[1:]))
    by_coop = [optimize(params, content, CacheConfig(35, n),
                        values=tables[n]).objective_stp
               for n in (1, 2, 3)]
    coop_mono = all(b >= a - 1e-12 for a, b in zip(by_coop, by_coop[1:]))

    # Common random numbers: one plan, rising thresholds, so the success
    # indicator can only switch off and the estimate is exactly monotone.
    plan = TrialPlan(n_geometries=50, n_fading_per_geometry=100, seed=12)
    curve = [simulate_stp_jt(params, content, 1, theta, plan).value
             for theta in (0.25, 0.5, 1.0, 2.0, 4.0)]
    crn_mono = all(b <= a for a, b in zip(curve, curve[1:]))

    ok = strict and cache_mono and coop_mono and crn_mono
    elapsed = time.perf_counter() - start
    _announce(f"ACCEPTANCE 7/7 monotonicity: {_verdict(ok)}"
              f" (thresholds {_verdict(strict)}, cache {_verdict(cache_mono)},"
              f" cooperation {_verdict(coop_mono)}, CRN {_verdict(crn_mono)};"
              f" {elapsed:.0f}s)")
    assert strict, thresholds
    assert cache_mono, by_cache
    assert coop_mono, by_coop
    assert crn_mono, curve
    assert elapsed < 300.0
