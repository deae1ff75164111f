"""Cache allocation as a multiple-choice knapsack.

Each file is a class whose items are the split choices s = 0..N: item 0
leaves the file uncached (weight 0), item 1 caches it whole (weight 1,
served by joint transmission), and item s >= 2 caches one of s coded
parts (weight 1/s, served by parallel transmission). Exactly one item
per class is picked and the weights must fit the per-BS cache size.

The solver stack mirrors the classic treatment of this problem family:
per-class dominance and upper-hull reduction, a prune-and-search pass
for the critical efficiency, a slope-ordered greedy with the familiar
half-optimum guarantee, and a budgeted exhaustive reference. A separate
light-traffic closed form designs the whole-vs-partitioned split count
directly from the asymptotic success probabilities.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .analytic.engine import (
    DEFAULT_DELAY_CAP,
    UnsupportedRegimeError,
    analytic_strategy_values,
    objective_delay,
    objective_stp,
)
from .analytic.quadrature import QuadratureSpec, gauss_legendre_nodes
from .model import (
    CacheConfig,
    CachingVector,
    ContentModel,
    StrategyValues,
    SystemParams,
)
from .montecarlo import TrialPlan, montecarlo_strategy_values

#: Largest enumeration the exhaustive reference will attempt.
ORACLE_BUDGET = 10_000_000

#: Items-per-class times classes above which optimize() skips the oracle.
_AUTO_ORACLE_BUDGET = 100_000

#: Capacity comparisons tolerate this much float slack, matching the
#: caching-vector validator (an exact fill of 1/3-weights drifts in the
#: last bits).
_CAP_TOL = 1e-9


class InfeasibleInstanceError(ValueError):
    """Even the lightest choice in every class overflows the capacity."""


class OracleBudgetError(ValueError):
    """The exhaustive reference was asked to enumerate too many vectors."""


@dataclass(frozen=True)
class MckpInstance:
    """One knapsack class per file; item index = split choice.

    ``profits[f][s]`` and ``weights[f][s]`` describe item s of class f.
    Rows may have any length >= 1 (generic instances are allowed for
    testing the solvers), but ``build_instance`` always produces N+1
    items per class with the cache-fraction weights described in the
    module docstring.
    """

    profits: tuple[tuple[float, ...], ...]
    weights: tuple[tuple[float, ...], ...]
    capacity: float

    def __post_init__(self):
        if not self.profits or len(self.profits) != len(self.weights):
            raise ValueError("profits and weights must list the same classes")
        for a_row, w_row in zip(self.profits, self.weights):
            if not a_row or len(a_row) != len(w_row):
                raise ValueError("each class needs matching nonempty item rows")
            if any(not math.isfinite(a) for a in a_row):
                raise ValueError("profits must be finite")
            if any(w < 0.0 or w > 1.0 for w in w_row):
                raise ValueError("weights must lie in [0, 1]")
        if self.capacity < 0:
            raise ValueError("capacity must be nonnegative")

    @property
    def n_classes(self) -> int:
        return len(self.profits)


@dataclass(frozen=True)
class MckpSolution:
    """One chosen item per class with its profit and weight sums.

    ``tag`` names the guarantee attached to the profit: "exact" from
    enumeration, "greedy-half" for the half-optimum greedy family, and
    "closed-form" from the light-traffic design formula.
    """

    choices: tuple[int, ...]
    profit: float
    weight: float
    tag: str

    def __post_init__(self):
        if self.tag not in ("exact", "greedy-half", "closed-form"):
            raise ValueError(f"unknown optimality tag {self.tag!r}")


@dataclass(frozen=True)
class ReducedClass:
    """Hull survivors of one class, lightest first.

    ``slopes[k]`` is the incremental efficiency of moving from item
    ``items[k]`` to ``items[k+1]``; the upper-hull construction makes
    the sequence strictly decreasing.
    """

    class_index: int
    items: tuple[int, ...]
    slopes: tuple[float, ...]

    def __post_init__(self):
        if len(self.slopes) != max(len(self.items) - 1, 0):
            raise ValueError("need one slope per consecutive survivor pair")
        if any(b >= a for a, b in zip(self.slopes, self.slopes[1:])):
            raise ValueError("hull efficiencies must strictly decrease")


def dominance_reduce(class_index: int, profits, weights) -> ReducedClass:
    """Strip dominated and LP-dominated items from one class.

    An item loses to any lighter-or-equal item with at least its profit;
    no optimal solution ever needs such an item, so that step is lossless.
    The survivors are then swept into their upper convex hull, where a
    middle item whose right slope is >= its left slope is LP-dominated
    (the >= removes collinear middles too). Hull items are all the slope
    search and the greedy ever visit; discarding the rest keeps the
    fractional relaxation, and with it the greedy's half-optimum bound,
    intact. An LP-dominated item can still sit in the exact integer
    optimum, which is why the exhaustive path enumerates the unreduced
    instance.
    """
    profits = [float(a) for a in profits]
    weights = [float(w) for w in weights]
    if not profits:
        raise ValueError("class must contain at least one item")
    order = sorted(range(len(profits)), key=lambda i: (weights[i], -profits[i], i))
    kept: list[int] = []
    best = -math.inf
    for i in order:
        if profits[i] > best:
            kept.append(i)
            best = profits[i]
    hull: list[int] = []
    for i in kept:
        while len(hull) >= 2:
            j, k = hull[-2], hull[-1]
            left = (profits[k] - profits[j]) / (weights[k] - weights[j])
            right = (profits[i] - profits[k]) / (weights[i] - weights[k])
            if right >= left:
                hull.pop()
            else:
                break
        hull.append(i)
    slopes = tuple(
        (profits[b] - profits[a]) / (weights[b] - weights[a])
        for a, b in zip(hull, hull[1:])
    )
    return ReducedClass(class_index=class_index, items=tuple(hull), slopes=slopes)


def _reduced_classes(instance: MckpInstance, *,
                     drop_unusable: bool = False) -> list[ReducedClass]:
    """Hull reduction of every class, optionally feasibility-filtered.

    With ``drop_unusable`` an item whose weight plus the other classes'
    minimum weights overflows the capacity is removed before the hull
    sweep; no feasible solution can contain it. The greedy needs that
    filter so its half-optimum safeguard holds: the first rejected
    upgrade's target has to fit alongside everyone else's lightest
    item. The slope search keeps such items, because the fractional
    relaxation may park the critical efficiency on one of them.
    """
    mins = [min(row) for row in instance.weights]
    total_min = math.fsum(mins)
    cap = instance.capacity + _CAP_TOL
    if total_min > cap:
        raise InfeasibleInstanceError(
            f"lightest choices weigh {total_min:.6g}, "
            f"capacity is {instance.capacity:.6g}"
        )
    reduced = []
    for f in range(instance.n_classes):
        if drop_unusable:
            budget = cap - (total_min - mins[f])
            ids = [i for i, w in enumerate(instance.weights[f]) if w <= budget]
        else:
            ids = list(range(len(instance.weights[f])))
        sub = dominance_reduce(
            f,
            [instance.profits[f][i] for i in ids],
            [instance.weights[f][i] for i in ids],
        )
        reduced.append(ReducedClass(
            class_index=f,
            items=tuple(ids[j] for j in sub.items),
            slopes=sub.slopes,
        ))
    return reduced


def build_instance(popularity, values: StrategyValues, capacity: float,
                   n_coop: int, mode: str = "stp") -> MckpInstance:
    """Assemble the knapsack from per-split delivery values.

    STP mode scores item s of file f as p_f times the split-s success
    probability. Delay mode scores it as p_f times the delay saved
    relative to fetching over the backhaul, so the empty item is worth
    exactly 0 in both modes and maximization treats them uniformly.
    """
    if mode not in ("stp", "delay"):
        raise ValueError("mode must be 'stp' or 'delay'")
    if n_coop < 1 or int(n_coop) != n_coop:
        raise ValueError("n_coop must be a positive integer")
    if values.max_split < n_coop:
        raise ValueError(
            f"strategy table covers splits 0..{values.max_split}, need {n_coop}"
        )
    pop = [float(p) for p in popularity]
    if not pop or any(p < 0 for p in pop):
        raise ValueError("popularity must be a nonempty nonnegative sequence")
    weights = tuple(0.0 if s == 0 else 1.0 / s for s in range(n_coop + 1))
    profits = []
    for p in pop:
        if mode == "stp":
            row = tuple(p * values.stp[s] for s in range(n_coop + 1))
        else:
            row = (0.0,) + tuple(
                p * (values.delay[0] - values.delay[s]) for s in range(1, n_coop + 1)
            )
        profits.append(row)
    return MckpInstance(
        profits=tuple(profits),
        weights=tuple(weights for _ in pop),
        capacity=float(capacity),
    )


def _choice_sums(instance: MckpInstance, choices) -> tuple[float, float]:
    profit = math.fsum(instance.profits[f][c] for f, c in enumerate(choices))
    weight = math.fsum(instance.weights[f][c] for f, c in enumerate(choices))
    return profit, weight


def optimal_slope_partition(instance: MckpInstance) -> float:
    """Critical efficiency of the fractional relaxation.

    Prune-and-search over the multiset of hull slopes: test the median
    slope o by summing, per class, the lightest and heaviest items that
    maximize profit - o * weight. When the sums straddle the capacity
    (light side fits, heavy side does not) o is the efficiency at which
    the slope-ordered greedy runs out of room; otherwise half of the
    candidates are discarded and the search repeats. Expected linear
    time in the total item count.
    """
    reduced = _reduced_classes(instance)
    cap = instance.capacity + _CAP_TOL
    heaviest = math.fsum(
        instance.weights[r.class_index][r.items[-1]] for r in reduced
    )
    all_slopes = np.array([s for r in reduced for s in r.slopes])
    if heaviest <= cap:
        return float(all_slopes.min()) if all_slopes.size else math.inf
    per_class = [(np.asarray(r.slopes), np.asarray(
        [instance.weights[r.class_index][i] for i in r.items])) for r in reduced]
    candidates = all_slopes
    while candidates.size:
        mid = (candidates.size - 1) // 2
        o = float(np.partition(candidates, mid)[mid])
        w_min = 0.0
        w_max = 0.0
        for slopes, item_w in per_class:
            w_min += item_w[int(np.sum(slopes > o))]
            w_max += item_w[int(np.sum(slopes >= o))]
        if w_min <= cap < w_max:
            return o
        if w_min > cap:
            candidates = candidates[candidates > o]
        else:
            candidates = candidates[candidates < o]
    raise RuntimeError("slope search exhausted its candidates without a straddle")


def greedy_mckp(instance: MckpInstance) -> MckpSolution:
    """Slope-ordered greedy with the half-optimum safeguard.

    Every class starts at its lightest survivor; hull upgrades are then
    applied in order of decreasing efficiency until one no longer fits.
    If that walk does not fill the capacity exactly, the single-item
    alternative (the first rejected upgrade's target on its own, all
    other classes left at their lightest item) is also evaluated and
    the better of the two is returned. For nonnegative profits the
    winner is worth at least half the exact optimum.

    Ties in efficiency are drawn in ascending (class, item) order, so
    the output is deterministic.
    """
    reduced = _reduced_classes(instance, drop_unusable=True)
    cap = instance.capacity + _CAP_TOL
    choices = [r.items[0] for r in reduced]
    profit, weight = _choice_sums(instance, choices)
    steps = []
    for r in reduced:
        f = r.class_index
        for k, slope in enumerate(r.slopes):
            steps.append((-slope, f, r.items[k + 1], r.items[k]))
    steps.sort()
    broke_at = None
    for neg_slope, f, item, prev in steps:
        dw = instance.weights[f][item] - instance.weights[f][prev]
        if weight + dw > cap:
            broke_at = (f, item)
            break
        weight += dw
        profit += instance.profits[f][item] - instance.profits[f][prev]
        choices[f] = item
    greedy = MckpSolution(
        choices=tuple(choices), profit=profit, weight=weight, tag="greedy-half",
    )
    if broke_at is None or math.isclose(weight, instance.capacity, abs_tol=_CAP_TOL):
        return greedy
    f, item = broke_at
    alt = [r.items[0] for r in reduced]
    alt[f] = item
    alt_profit, alt_weight = _choice_sums(instance, alt)
    if alt_weight <= cap and alt_profit > greedy.profit:
        return MckpSolution(
            choices=tuple(alt), profit=alt_profit, weight=alt_weight,
            tag="greedy-half",
        )
    return greedy


def exhaustive_oracle(instance: MckpInstance) -> MckpSolution:
    """Exact optimum by full enumeration, for reference and testing.

    Refuses instances whose search space exceeds ORACLE_BUDGET vectors.
    Among equal-profit optima the lexicographically smallest choice
    vector wins, keeping the reference deterministic.
    """
    space = 1
    for row in instance.profits:
        space *= len(row)
        if space > ORACLE_BUDGET:
            raise OracleBudgetError(
                f"enumeration needs more than {ORACLE_BUDGET} vectors"
            )
    cap = instance.capacity + _CAP_TOL
    n = instance.n_classes
    best_profit = -math.inf
    best: tuple[int, ...] | None = None
    choices = [0] * n

    def walk(f: int, weight: float, profit: float):
        nonlocal best_profit, best
        if f == n:
            if profit > best_profit:
                best_profit = profit
                best = tuple(choices)
            return
        for c, (a, w) in enumerate(zip(instance.profits[f], instance.weights[f])):
            if weight + w > cap:
                continue
            choices[f] = c
            walk(f + 1, weight + w, profit + a)

    walk(0, 0.0, 0.0)
    if best is None:
        raise InfeasibleInstanceError("no choice vector fits the capacity")
    profit, weight = _choice_sums(instance, best)
    return MckpSolution(choices=best, profit=profit, weight=weight, tag="exact")


def baseline_mpc(popularity, cache_size: int) -> CachingVector:
    """Cache the most popular files whole until the cache is full."""
    ranks = np.argsort(-np.asarray(popularity, dtype=float), kind="stable")
    splits = [0] * len(ranks)
    for r in ranks[: min(cache_size, len(ranks))]:
        splits[int(r)] = 1
    return CachingVector(splits=tuple(splits))


def baseline_ldc(popularity, cache_size: int, n_coop: int) -> CachingVector:
    """Maximally partition: N-part code for the cache_size*N top files."""
    ranks = np.argsort(-np.asarray(popularity, dtype=float), kind="stable")
    splits = [0] * len(ranks)
    for r in ranks[: min(cache_size * n_coop, len(ranks))]:
        splits[int(r)] = n_coop
    return CachingVector(splits=tuple(splits))


def _ordered_cube_integral(dim: int, alpha: float) -> float:
    """Integral of 1/(1 + sum t_k^(-alpha/2)) over 0 < t_1 < ... < t_dim < 1.

    Mapped to the unit cube by t_k = prod(v_k..v_dim), whose Jacobian is
    prod v_i^(i-1); fixed Gauss-Legendre tensor rules suffice since the
    integrand is bounded and smooth away from the lower corner.
    """
    if dim == 0:
        return 1.0
    order = {1: 48, 2: 32, 3: 16, 4: 12}.get(dim, 8)
    nodes, wts = gauss_legendre_nodes(order)
    grids = np.meshgrid(*([nodes] * dim), indexing="ij")
    weight = np.ones_like(grids[0])
    for axis in range(dim):
        shape = [1] * dim
        shape[axis] = order
        weight = weight * wts.reshape(shape)
        weight = weight * grids[axis] ** axis
    t = [None] * dim
    running = np.ones_like(grids[0])
    for k in range(dim - 1, -1, -1):
        running = running * grids[k]
        t[k] = running
    denom = np.ones_like(grids[0])
    for tk in t:
        denom = denom + tk ** (-alpha / 2.0)
    return float(np.sum(weight / denom))


def jt_smallload_coefficient(n_coop: int, alpha: float) -> float:
    """Leading success-loss coefficient of whole-file delivery.

    For vanishing load the closed-form, unblocked success probability
    behaves as 1 - (2 * theta / (alpha - 2)) * K_N; this returns K_N,
    the factorial-weighted ordered integral that reduces to 1 for a
    single serving BS (where the closed form is exact).
    """
    if n_coop < 1:
        raise ValueError("need at least one cooperating BS")
    if alpha <= 2:
        raise UnsupportedRegimeError("tail exponent must exceed 2")
    return math.factorial(n_coop) * _ordered_cube_integral(n_coop - 1, alpha)


@dataclass(frozen=True)
class SmallFileDesign:
    """Output of the light-traffic closed form."""

    whole_count: int
    vector: CachingVector
    objective: float
    regime_bound: float


def smallfile_closed_form(popularity, cache_size: int, n_coop: int,
                          alpha_los: float, file_size_bits: float,
                          slot_length: float, bandwidth: float) -> SmallFileDesign:
    """Design the whole/partitioned split in the light-traffic regime.

    With negligible blockage and Rayleigh fading, the asymptotic success
    probabilities are linear in the spectral load, so the only freedom
    left is how many top files F_c to cache whole; the remaining budget
    maximally partitions the next (C - F_c) * N files. Every F_c in
    0..C is scored with the asymptotic objective and the best returned.

    Valid only for tail exponents above 2, C * N <= F, and file sizes
    below the regime bound T * W * (alpha - 2) / ((N + 1) * ln 2), where
    the partitioned asymptote stays positive and the exchange argument
    behind the design holds; the bound is reported in the result.
    """
    pop = np.asarray(popularity, dtype=float)
    file_count = pop.size
    if alpha_los <= 2:
        raise UnsupportedRegimeError(
            f"tail exponent {alpha_los} violates the bound alpha > 2"
        )
    if cache_size * n_coop > file_count:
        raise UnsupportedRegimeError(
            f"needs C*N <= F, got {cache_size}*{n_coop} > {file_count}"
        )
    tw = slot_length * bandwidth
    regime_bound = tw * (alpha_los - 2.0) / ((n_coop + 1) * math.log(2.0))
    if file_size_bits >= regime_bound:
        raise UnsupportedRegimeError(
            f"file size {file_size_bits:.4g} outside the light-traffic regime "
            f"bound {regime_bound:.4g} bits"
        )
    load = file_size_bits / tw
    theta_whole = 2.0 ** load - 1.0
    jt_factor = 1.0 - 2.0 * theta_whole / (alpha_los - 2.0) * jt_smallload_coefficient(
        n_coop, alpha_los
    )
    pt_factor = 1.0 - file_size_bits * math.log(2.0) * (n_coop + 1) / (
        tw * (alpha_los - 2.0)
    )
    ranks = np.argsort(-pop, kind="stable")
    sorted_pop = pop[ranks]
    prefix = np.concatenate([[0.0], np.cumsum(sorted_pop)])
    best_fc = 0
    best_obj = -math.inf
    for fc in range(cache_size + 1):
        part_count = (cache_size - fc) * n_coop
        whole_mass = prefix[fc]
        part_mass = prefix[min(fc + part_count, file_count)] - prefix[fc]
        obj = jt_factor * whole_mass + pt_factor * part_mass
        if obj > best_obj:
            best_obj = obj
            best_fc = fc
    splits = [0] * file_count
    for r in ranks[:best_fc]:
        splits[int(r)] = 1
    part_count = (cache_size - best_fc) * n_coop
    for r in ranks[best_fc: best_fc + part_count]:
        splits[int(r)] = n_coop
    return SmallFileDesign(
        whole_count=best_fc,
        vector=CachingVector(splits=tuple(splits)),
        objective=best_obj,
        regime_bound=regime_bound,
    )


@dataclass(frozen=True)
class OptimizeResult:
    """Chosen caching vector with both objectives and its provenance."""

    solution: MckpSolution
    vector: CachingVector
    objective_stp: float
    objective_delay: float
    values: StrategyValues


def optimize(params: SystemParams, content: ContentModel, config: CacheConfig,
             mode: str = "stp", source: str = "analytic",
             values: StrategyValues | None = None,
             plan: TrialPlan | None = None,
             spec: QuadratureSpec | None = None,
             cap: float = DEFAULT_DELAY_CAP) -> OptimizeResult:
    """End-to-end caching design for one configuration.

    Tabulates per-split values (or reuses ``values`` when given), builds
    the knapsack for the requested mode, and solves it exactly when the
    enumeration is small enough, by the guarded greedy otherwise. The
    whole-cache and partitioned baselines are always evaluated as
    candidate vectors, so the returned design never scores below either
    of them. Both objectives are reported for the chosen vector
    regardless of which one was optimized.
    """
    if source not in ("analytic", "simulated"):
        raise ValueError("source must be 'analytic' or 'simulated'")
    if values is None:
        if source == "analytic":
            values = analytic_strategy_values(params, content, config,
                                              spec=spec, cap=cap)
        else:
            values = montecarlo_strategy_values(params, content, config,
                                                plan or TrialPlan())
    n = config.sic_capability
    instance = build_instance(content.popularity, values,
                              config.cache_size, n, mode)
    space = (n + 1) ** content.file_count
    if space <= _AUTO_ORACLE_BUDGET:
        best = exhaustive_oracle(instance)
    else:
        best = greedy_mckp(instance)
    for baseline in (
        baseline_mpc(content.popularity, config.cache_size),
        baseline_ldc(content.popularity, config.cache_size, n),
    ):
        profit, weight = _choice_sums(instance, baseline.splits)
        if weight <= instance.capacity + _CAP_TOL and profit > best.profit:
            best = MckpSolution(
                choices=tuple(baseline.splits), profit=profit, weight=weight,
                tag=best.tag,
            )
    vector = CachingVector(splits=best.choices)
    return OptimizeResult(
        solution=best,
        vector=vector,
        objective_stp=objective_stp(vector.splits, content.popularity, values),
        objective_delay=objective_delay(vector.splits, content.popularity, values),
        values=values,
    )


def instance_to_table(instance: MckpInstance,
                      solution: MckpSolution | None = None) -> str:
    """Render an instance (and optionally a solution) as CSV text.

    Columns are class, item, profit, weight, chosen; without a solution
    the chosen column is all zeros.
    """
    lines = ["class,item,profit,weight,chosen"]
    for f, (a_row, w_row) in enumerate(zip(instance.profits, instance.weights)):
        for s, (a, w) in enumerate(zip(a_row, w_row)):
            chosen = int(solution is not None and solution.choices[f] == s)
            lines.append(f"{f},{s},{a:.12g},{w:.12g},{chosen}")
    return "\n".join(lines) + "\n"
