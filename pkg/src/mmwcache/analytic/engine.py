"""Success probabilities and delays for the cooperative delivery modes.

Conditioned on the serving path losses, the one-slot success probability
of a Nakagami-faded link bank is a finite sum of Laplace-transform
derivatives of the interference-plus-noise. Writing the log-transform
omega(s) and its scaled derivatives q_j = (-s)^j omega^(j)(s) / j!, that
sum equals the first-column sum of exp of a lower-triangular Toeplitz
matrix with column q, evaluated here by the power-series recurrence.

The remaining geometry average maps every ordered serving configuration
through u = Lambda(l); the joint density becomes exp(-u_N) on the
ordered cone, integrated adaptively for one or two serving links and by
scrambled Sobol points beyond that.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaincc

from ..model import AntennaGainLaw, CacheConfig, ContentModel, StrategyValues, SystemParams, threshold_for
from .intensity import intensity_density, intensity_inverse
from .quadrature import (
    QuadratureSpec,
    integrate_1d,
    integrate_2d,
    integrate_fixed_1d,
    integrate_fixed_2d,
    integrate_qmc,
)
from .special import gauss_2f1_vec, interference_hyp_factor
from .toeplitz import toeplitz_exp_l1_batch


class UnsupportedRegimeError(ValueError):
    """Parameter combination outside the model's validity region."""


DEFAULT_DELAY_CAP = 1e4

# Capped-delay integrands cost far more refinement per digit than the
# success probabilities (the cap kink, plus values spanning decades),
# and nothing downstream needs them beyond ~1e-4 relative. They get
# their own default tolerance; an explicit spec is honored as given.
_DELAY_SPEC = QuadratureSpec(rel_tol=1e-4, abs_tol=1e-6)


@dataclass(frozen=True)
class ToeplitzLogCoeffs:
    """Scaled log-Laplace derivatives q_0..q_{K-1} at the decode point.

    q_0 is the log of the no-fading-diversity success probability and is
    never positive; the higher coefficients are nonnegative.
    """

    coeffs: tuple[float, ...]
    laplace_arg: float

    def __post_init__(self):
        if not self.coeffs:
            raise ValueError("need at least one coefficient")
        if self.coeffs[0] > 1e-12:
            raise ValueError("q_0 must be nonpositive")


@dataclass(frozen=True)
class DelayResult:
    """Truncated mean local delay in slots.

    ``capped_mass`` is the geometry probability mass whose conditional
    delay hit the cap; ``diverged`` flags when that mass exceeds 1%,
    i.e. the uncapped mean is not trustworthy (likely infinite).
    """

    value: float
    capped_mass: float
    diverged: bool


def _tail_transform_power(params: SystemParams) -> float:
    """Exponent p for the far-field substitution x = l * w^(-p)."""
    alpha_tail = params.alpha_nlos if params.blockage > 0 else params.alpha_los
    if alpha_tail <= 2.0:
        state = "NLOS" if params.blockage > 0 else "LOS"
        raise UnsupportedRegimeError(
            f"aggregate interference diverges: far-field ({state}) path-loss "
            f"exponent {alpha_tail} must exceed 2"
        )
    return min(alpha_tail / (alpha_tail - 2.0), 8.0)


_INNER_PANELS = ((0.0, 0.12), (0.12, 0.35), (0.35, 0.68), (0.68, 1.0))
_INNER_ORDER = 24


def _inner_nodes(power: float) -> tuple[np.ndarray, np.ndarray]:
    from .quadrature import gauss_legendre_nodes

    xs, ws = gauss_legendre_nodes(_INNER_ORDER)
    nodes, weights = [], []
    for a, b in _INNER_PANELS:
        nodes.append(a + (b - a) * xs)
        weights.append((b - a) * ws)
    return np.concatenate(nodes), np.concatenate(weights)


def interference_log_coeffs(s, l_low, params: SystemParams, n_coeffs: int) -> np.ndarray:
    """Interference part of q_0..q_{n-1} for a batch of decode points.

    ``s`` is the Laplace argument and ``l_low`` the path loss of the
    decoded link: every BS with larger loss interferes. Gains follow the
    two-point sectored law. Shapes: s, l_low (B,) -> (B, n_coeffs).
    """
    s = np.atleast_1d(np.asarray(s, dtype=float))
    l_low = np.atleast_1d(np.asarray(l_low, dtype=float))
    m = params.nakagami_m
    law = AntennaGainLaw.from_params(params)
    p = _tail_transform_power(params)
    w, gw = _inner_nodes(p)
    x = l_low[:, None] * w[None, :] ** (-p)
    jac = p * l_low[:, None] * w[None, :] ** (-p - 1.0)
    base = np.asarray(intensity_density(x, params)) * jac * gw[None, :]
    q = np.zeros((s.shape[0], n_coeffs))
    for gain, prob in zip(law.gains, law.probabilities):
        t = (s * gain / m)[:, None] / x
        a = (1.0 + t) ** (-m)
        r = t / (1.0 + t)
        q[:, 0] -= prob * ((1.0 - a) * base).sum(axis=1)
        rj = a
        rising = 1.0
        for j in range(1, n_coeffs):
            rising *= m + j - 1
            rj = rj * r
            q[:, j] += prob * (rising / math.factorial(j)) * (rj * base).sum(axis=1)
    return q


def _conditional_success_jt(l_mat: np.ndarray, theta: float, params: SystemParams) -> np.ndarray:
    """Success probability given the N serving path losses, batched."""
    m = params.nakagami_m
    dim = m * l_mat.shape[1]
    s = m * theta / (params.serving_gain * (1.0 / l_mat).sum(axis=1))
    q = interference_log_coeffs(s, l_mat[:, -1], params, dim)
    snr_term = s * params.noise_power / params.tx_power
    q[:, 0] -= snr_term
    if dim >= 2:
        q[:, 1] += snr_term
    return np.clip(toeplitz_exp_l1_batch(q), 0.0, 1.0)


def _conditional_success_pt(l_vec: np.ndarray, theta: float, params: SystemParams) -> np.ndarray:
    m = params.nakagami_m
    s = m * theta * l_vec / params.serving_gain
    q = interference_log_coeffs(s, l_vec, params, m)
    snr_term = s * params.noise_power / params.tx_power
    q[:, 0] -= snr_term
    if m >= 2:
        q[:, 1] += snr_term
    return np.clip(toeplitz_exp_l1_batch(q), 0.0, 1.0)


def omega_jt(pathlosses, theta: float, params: SystemParams) -> ToeplitzLogCoeffs:
    """Toeplitz log-coefficients for joint transmission from given links.

    ``pathlosses`` are the ordered serving path losses l_1 <= ... <= l_N.
    The matrix dimension is nakagami_m * N; noise enters q_0 and q_1 only.
    """
    l = np.asarray(pathlosses, dtype=float)
    if l.ndim != 1 or l.size == 0:
        raise ValueError("expected a 1-D vector of serving path losses")
    if np.any(np.diff(l) < 0):
        raise ValueError("serving path losses must be sorted ascending")
    if theta < 0:
        raise ValueError("SINR threshold must be nonnegative")
    m = params.nakagami_m
    dim = m * l.size
    s = float(m * theta / (params.serving_gain * (1.0 / l).sum()))
    q = interference_log_coeffs(np.array([s]), np.array([l[-1]]), params, dim)[0]
    snr_term = s * params.noise_power / params.tx_power
    q[0] -= snr_term
    if dim >= 2:
        q[1] += snr_term
    return ToeplitzLogCoeffs(coeffs=tuple(float(v) for v in q), laplace_arg=s)


def _check_common(theta: float, n: int, what: str):
    if theta < 0:
        raise ValueError("SINR threshold must be nonnegative")
    if n < 1 or int(n) != n:
        raise ValueError(f"{what} must be a positive integer")


def stp_jt(params: SystemParams, n_coop: int, theta: float,
           spec: QuadratureSpec | None = None) -> float:
    """Success probability of whole-file joint transmission.

    The n_coop nearest (in path loss) BSs transmit the file coherently;
    the analytic value upper-bounds the true coherent-combining success
    probability (amplitude-sum replaced through Cauchy-Schwarz).
    """
    spec = spec or QuadratureSpec()
    _check_common(theta, n_coop, "n_coop")
    if theta == 0.0:
        return 1.0
    _tail_transform_power(params)

    if n_coop == 1:
        def f(u):
            l = np.asarray(intensity_inverse(u, params))
            g = _conditional_success_jt(l[:, None], theta, params)
            return g * np.exp(-u)

        val = integrate_1d(f, 0.0, spec.u_max, spec)[0]
    elif n_coop == 2:
        def f(x, y):
            u2 = spec.u_max * x
            u1 = y * u2
            l = np.column_stack([
                np.asarray(intensity_inverse(u1, params)),
                np.asarray(intensity_inverse(u2, params)),
            ])
            g = _conditional_success_jt(l, theta, params)
            return g * u2 * np.exp(-u2) * spec.u_max

        val = integrate_2d(f, spec)[0]
    else:
        scale = -math.expm1(-spec.u_max)

        def f(*coords):
            u = np.empty((coords[0].shape[0], n_coop))
            u[:, -1] = -np.log1p(-scale * coords[0])
            for k in range(n_coop - 2, -1, -1):
                u[:, k] = u[:, k + 1] * coords[n_coop - 1 - k]
            l = np.asarray(intensity_inverse(u.ravel(), params)).reshape(u.shape)
            g = _conditional_success_jt(l, theta, params)
            return g * u[:, 1:].prod(axis=1) * scale

        val = integrate_qmc(f, n_coop, spec)[0]
    return float(np.clip(val, 0.0, 1.0))


def stp_pt(params: SystemParams, split: int, theta: float,
           spec: QuadratureSpec | None = None) -> float:
    """Success probability of parallel coded-part delivery with SIC.

    The split parts come simultaneously from the split nearest BSs and
    are decoded nearest-first, cancelling each decoded part. Per-part
    successes are treated as independent across the serving ranks
    (split=1 degenerates to plain nearest-BS delivery).
    """
    spec = spec or QuadratureSpec()
    _check_common(theta, split, "split")
    if theta == 0.0:
        return 1.0
    _tail_transform_power(params)
    total = 1.0
    for rank in range(1, split + 1):
        def f(u, _rank=rank):
            l = np.asarray(intensity_inverse(u, params))
            g = _conditional_success_pt(l, theta, params)
            return g * u ** (_rank - 1) * np.exp(-u) / math.factorial(_rank - 1)

        total *= float(integrate_1d(f, 0.0, spec.u_max, spec)[0])
    return float(np.clip(total, 0.0, 1.0))


def delay_jt(params: SystemParams, n_coop: int, theta: float,
             spec: QuadratureSpec | None = None,
             cap: float = DEFAULT_DELAY_CAP) -> DelayResult:
    """Truncated mean slots until a joint transmission first succeeds.

    Retransmissions redraw fading each slot, so conditioned on geometry the
    delay is geometric with the conditional success probability; its
    reciprocal is averaged over geometry, capped at ``cap`` slots.
    """
    spec = spec or _DELAY_SPEC
    _check_common(theta, n_coop, "n_coop")
    if cap <= 1:
        raise ValueError("delay cap must exceed one slot")
    if theta == 0.0:
        return DelayResult(1.0, 0.0, False)
    _tail_transform_power(params)

    def capped(g):
        inv = 1.0 / np.maximum(g, 1.0 / (10.0 * cap))
        return np.minimum(inv, cap), (inv >= cap).astype(float)

    # The truncated mean has only a derivative kink at the cap and goes
    # through the adaptive panels; the capped-probability component is a
    # hard indicator that would defeat adaptive refinement, and it only
    # feeds the 1% divergence flag, so a single fixed-grid pass serves.
    if n_coop == 1:
        def f(u, pick):
            l = np.asarray(intensity_inverse(u, params))
            g = _conditional_success_jt(l[:, None], theta, params)
            return capped(g)[pick] * np.exp(-u)

        val = integrate_1d(lambda u: f(u, 0), 0.0, spec.u_max, spec)[0]
        mass = integrate_fixed_1d(lambda u: f(u, 1), 0.0, spec.u_max)[0]
    elif n_coop == 2:
        def f(x, y, pick):
            u2 = spec.u_max * x
            u1 = y * u2
            l = np.column_stack([
                np.asarray(intensity_inverse(u1, params)),
                np.asarray(intensity_inverse(u2, params)),
            ])
            g = _conditional_success_jt(l, theta, params)
            return capped(g)[pick] * u2 * np.exp(-u2) * spec.u_max

        val = integrate_2d(lambda x, y: f(x, y, 0), spec)[0]
        mass = integrate_fixed_2d(lambda x, y: f(x, y, 1))[0]
    else:
        scale = -math.expm1(-spec.u_max)

        def f(*coords):
            u = np.empty((coords[0].shape[0], n_coop))
            u[:, -1] = -np.log1p(-scale * coords[0])
            for k in range(n_coop - 2, -1, -1):
                u[:, k] = u[:, k + 1] * coords[n_coop - 1 - k]
            l = np.asarray(intensity_inverse(u.ravel(), params)).reshape(u.shape)
            g = _conditional_success_jt(l, theta, params)
            d, ind = capped(g)
            w = u[:, 1:].prod(axis=1) * scale
            return np.column_stack([d * w, ind * w])

        val, mass = integrate_qmc(f, n_coop, spec, n_components=2)

    tail = math.exp(-spec.u_max)  # far geometries counted as capped
    value = float(val + cap * tail)
    capped_mass = float(mass + tail)
    return DelayResult(max(value, 1.0), capped_mass, capped_mass >= 0.01)


def delay_pt(params: SystemParams, split: int, theta: float,
             spec: QuadratureSpec | None = None,
             cap: float = DEFAULT_DELAY_CAP) -> DelayResult:
    """Truncated mean slots until all coded parts are through.

    Per-rank truncated mean delays multiply under the same independence
    treatment as stp_pt; each factor carries its own cap.
    """
    spec = spec or _DELAY_SPEC
    _check_common(theta, split, "split")
    if cap <= 1:
        raise ValueError("delay cap must exceed one slot")
    if theta == 0.0:
        return DelayResult(1.0, 0.0, False)
    _tail_transform_power(params)
    total = 1.0
    worst_mass = 0.0
    for rank in range(1, split + 1):
        def f(u, pick, _rank=rank):
            l = np.asarray(intensity_inverse(u, params))
            g = _conditional_success_pt(l, theta, params)
            inv = np.minimum(1.0 / np.maximum(g, 1.0 / (10.0 * cap)), cap)
            w = u ** (_rank - 1) * np.exp(-u) / math.factorial(_rank - 1)
            if pick == 0:
                return inv * w
            return (inv >= cap).astype(float) * w

        val = integrate_1d(lambda u: f(u, 0), 0.0, spec.u_max, spec)[0]
        mass = integrate_fixed_1d(lambda u: f(u, 1), 0.0, spec.u_max)[0]
        tail = float(gammaincc(rank, spec.u_max))
        total *= max(float(val) + cap * tail, 1.0)
        worst_mass = max(worst_mass, float(mass) + tail)
    return DelayResult(total, worst_mass, worst_mass >= 0.01)


def backhaul_delay(params: SystemParams) -> float:
    """Mean slots for the gateway round trip of an uncached request.

    Scales with BS density over gateway density to the 3/2: denser
    gateways shorten the multihop route.
    """
    return 0.5 * params.backhaul_scale * params.bs_density * params.gateway_density ** (-1.5)


def delay_ut(params: SystemParams, theta: float,
             spec: QuadratureSpec | None = None,
             cap: float = DEFAULT_DELAY_CAP) -> DelayResult:
    """Mean slots to serve an uncached file over the backhaul.

    Gateway fetch plus single-BS radio delivery: the local term is the
    one-link instance of the joint-transmission delay.
    """
    local = delay_jt(params, 1, theta, spec, cap)
    return DelayResult(backhaul_delay(params) + local.value, local.capped_mass, local.diverged)


def stp_jt_smallbeta(n_coop: int, theta: float, alpha: float,
                     spec: QuadratureSpec | None = None) -> float:
    """No-blockage, Rayleigh-fading joint-transmission success probability.

    With the single power law the ordered-cone integral collapses to an
    (n_coop-1)-fold integral of the tail-interference hypergeometric
    factor raised to -n_coop.
    """
    spec = spec or QuadratureSpec()
    _check_common(theta, n_coop, "n_coop")
    if alpha <= 2.0:
        raise UnsupportedRegimeError("closed forms require a path-loss exponent above 2")
    if theta == 0.0:
        return 1.0
    half = alpha / 2.0

    if n_coop == 1:
        val = 1.0 / float(interference_hyp_factor(alpha, theta))
    elif n_coop == 2:
        def f(z):
            psi = interference_hyp_factor(alpha, theta / (1.0 + z ** (-half)))
            return psi ** (-2.0)

        val = float(integrate_1d(f, 0.0, 1.0, spec)[0])
    elif n_coop == 3:
        def f(z2, t):
            denom = 1.0 + z2 ** (-half) + (t * z2) ** (-half)
            psi = interference_hyp_factor(alpha, theta / denom)
            return psi ** (-3.0) * z2

        val = 2.0 * float(integrate_2d(f, spec)[0])
    else:
        def f(*coords):
            n = n_coop
            z = np.empty((coords[0].shape[0], n - 1))
            z[:, -1] = coords[0]
            for k in range(n - 3, -1, -1):
                z[:, k] = z[:, k + 1] * coords[n - 2 - k]
            denom = 1.0 + (z ** (-half)).sum(axis=1)
            psi = interference_hyp_factor(alpha, theta / denom)
            jac = z[:, 1:].prod(axis=1) if n > 2 else 1.0
            return psi ** (-float(n)) * jac

        val = math.factorial(n_coop - 1) * float(integrate_qmc(f, n_coop - 1, spec)[0])
    return float(np.clip(val, 0.0, 1.0))


def stp_pt_smallbeta(split: int, load: float, alpha: float) -> float:
    """No-blockage, Rayleigh-fading closed form for parallel delivery.

    ``load`` is the whole-file spectral load S/(T*W); each of the split
    ranks succeeds with the hypergeometric tail factor to the -rank, so
    the product closes to the exponent -split*(split+1)/2.
    """
    if split < 1 or int(split) != split:
        raise ValueError("split must be a positive integer")
    if load < 0:
        raise ValueError("spectral load must be nonnegative")
    if alpha <= 2.0:
        raise UnsupportedRegimeError("closed forms require a path-loss exponent above 2")
    theta = 2.0 ** (load / split) - 1.0
    psi = float(interference_hyp_factor(alpha, theta))
    return float(np.clip(psi ** (-split * (split + 1) / 2.0), 0.0, 1.0))


def objective_stp(splits, popularity, values: StrategyValues) -> float:
    """Request-weighted success probability of a caching vector."""
    return _objective(splits, popularity, values.stp)


def objective_delay(splits, popularity, values: StrategyValues) -> float:
    """Request-weighted mean delivery delay of a caching vector."""
    return _objective(splits, popularity, values.delay)


def _objective(splits, popularity, table) -> float:
    splits = tuple(splits)
    pop = tuple(popularity)
    if len(splits) != len(pop):
        raise ValueError("caching vector and popularity length mismatch")
    limit = len(table) - 1
    for s in splits:
        if s < 0 or s > limit or int(s) != s:
            raise ValueError(f"split {s} outside the tabulated range 0..{limit}")
    return math.fsum(p * table[s] for p, s in zip(pop, splits))


def analytic_strategy_values(params: SystemParams, content: ContentModel,
                             config: CacheConfig,
                             spec: QuadratureSpec | None = None,
                             cap: float = DEFAULT_DELAY_CAP) -> StrategyValues:
    """Tabulate STP and delay for every split choice 0..N analytically.

    With ``spec`` left as None, success probabilities run at the strict
    default tolerance and delays at their own relaxed one; an explicit
    spec applies to both families.
    """
    stp_spec = spec or QuadratureSpec()
    n = config.sic_capability
    stp = [0.0]
    delay = [0.0]
    diverged = [False]
    theta_whole = threshold_for(params, content, 1)
    ut = delay_ut(params, theta_whole, spec, cap)
    jt = delay_jt(params, n, theta_whole, spec, cap)
    stp.append(stp_jt(params, n, theta_whole, stp_spec))
    delay.append(jt.value)
    diverged.append(jt.diverged)
    for split in range(2, n + 1):
        theta = threshold_for(params, content, split)
        stp.append(stp_pt(params, split, theta, stp_spec))
        d = delay_pt(params, split, theta, spec, cap)
        delay.append(d.value)
        diverged.append(d.diverged)
    delay[0] = ut.value
    diverged[0] = ut.diverged
    return StrategyValues(
        stp=tuple(stp), delay=tuple(delay),
        delay_diverged=tuple(diverged), engine="analytic",
    )
