"""System model primitives for a blockage-prone mmWave caching network.

Base stations form a planar PPP. Each link is LOS with probability
exp(-beta*d) and suffers power-law path loss kappa * d^alpha with
state-dependent intercept and exponent. Content is requested by Zipf
popularity and cached in coded parts; a file split into s parts is
delivered by s cooperating BSs (s=1 means whole-file joint transmission
from the N nearest cachers, s=0 means fetch over backhaul).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

SPEED_OF_LIGHT = 299792458.0
BOLTZMANN = 1.380649e-23
REFERENCE_TEMP_K = 290.0


def dbm_to_watt(dbm: float) -> float:
    return 10.0 ** (dbm / 10.0) / 1000.0


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


def freespace_intercept(carrier_hz: float) -> float:
    """Free-space path-loss intercept (4*pi/wavelength)^2 at 1 m."""
    if carrier_hz <= 0:
        raise ValueError("carrier frequency must be positive")
    wavelength = SPEED_OF_LIGHT / carrier_hz
    return (4.0 * math.pi / wavelength) ** 2


def thermal_noise_watt(bandwidth_hz: float, noise_figure_db: float = 10.0) -> float:
    """Thermal noise power k*T0*W scaled by a receiver noise figure."""
    return BOLTZMANN * REFERENCE_TEMP_K * bandwidth_hz * db_to_linear(noise_figure_db)


@dataclass(frozen=True)
class SystemParams:
    """Physical-layer and deployment parameters.

    Powers are in watts (convert dBm at the config boundary, not here).
    Path-loss intercepts are the dimensionless loss at 1 m; exponents
    must satisfy alpha_nlos >= alpha_los >= 2. ``nakagami_m`` is the
    fading shape used by both the analytic engine and the simulator;
    ``nakagami_m_nlos`` is carried for completeness but the engines use
    the single serving-state shape so matrix dimensions stay fixed.
    """

    bs_density: float
    gateway_density: float
    tx_power: float
    bandwidth: float
    slot_length: float
    noise_power: float
    blockage: float
    kappa_los: float
    kappa_nlos: float
    alpha_los: float
    alpha_nlos: float
    nakagami_m: int = 3
    nakagami_m_nlos: int = 2
    mainlobe_gain: float = 10.0
    sidelobe_gain: float = 0.1
    beamwidth: float = math.pi / 6.0
    serving_gain: float | None = None
    backhaul_scale: float = 2e-3

    def __post_init__(self):
        if self.bs_density <= 0 or self.gateway_density <= 0:
            raise ValueError("densities must be positive")
        if self.tx_power <= 0:
            raise ValueError("tx_power must be positive (watts)")
        if self.bandwidth <= 0 or self.slot_length <= 0:
            raise ValueError("bandwidth and slot_length must be positive")
        if self.noise_power < 0:
            raise ValueError("noise_power must be nonnegative")
        if self.blockage < 0:
            raise ValueError("blockage rate must be nonnegative")
        if self.kappa_los <= 0 or self.kappa_nlos <= 0:
            raise ValueError("path-loss intercepts must be positive")
        if not (self.alpha_nlos >= self.alpha_los >= 2.0):
            raise ValueError("need alpha_nlos >= alpha_los >= 2")
        if int(self.nakagami_m) != self.nakagami_m or self.nakagami_m < 1:
            raise ValueError("nakagami_m must be a positive integer")
        if int(self.nakagami_m_nlos) != self.nakagami_m_nlos or self.nakagami_m_nlos < 1:
            raise ValueError("nakagami_m_nlos must be a positive integer")
        if not (self.mainlobe_gain >= self.sidelobe_gain > 0):
            raise ValueError("need mainlobe_gain >= sidelobe_gain > 0")
        if not (0 < self.beamwidth < 2 * math.pi):
            raise ValueError("beamwidth must lie in (0, 2*pi)")
        if self.serving_gain is None:
            object.__setattr__(self, "serving_gain", self.mainlobe_gain)
        if self.serving_gain <= 0:
            raise ValueError("serving_gain must be positive")
        if self.backhaul_scale < 0:
            raise ValueError("backhaul_scale must be nonnegative")


@dataclass(frozen=True)
class AntennaGainLaw:
    """Two-point sectored gain law seen by an interfering link.

    The mainlobe gain is intercepted with probability beamwidth/(2*pi),
    the sidelobe gain otherwise.
    """

    gains: tuple[float, float]
    probabilities: tuple[float, float]

    @classmethod
    def from_params(cls, params: SystemParams) -> "AntennaGainLaw":
        p_main = params.beamwidth / (2.0 * math.pi)
        return cls(
            gains=(params.mainlobe_gain, params.sidelobe_gain),
            probabilities=(p_main, 1.0 - p_main),
        )

    def __post_init__(self):
        if any(g <= 0 for g in self.gains):
            raise ValueError("gains must be positive")
        if any(p < 0 for p in self.probabilities):
            raise ValueError("probabilities must be nonnegative")
        if abs(sum(self.probabilities) - 1.0) > 1e-12:
            raise ValueError("gain probabilities must sum to one")

    def mean_gain(self) -> float:
        return sum(g * p for g, p in zip(self.gains, self.probabilities))


@dataclass(frozen=True)
class ContentModel:
    """Catalog of files with a request popularity profile."""

    file_count: int
    file_size_bits: float
    popularity: tuple[float, ...]
    zipf_exponent: float | None = None

    def __post_init__(self):
        if self.file_count < 1:
            raise ValueError("catalog must contain at least one file")
        if self.file_size_bits <= 0:
            raise ValueError("file size must be positive")
        if len(self.popularity) != self.file_count:
            raise ValueError("popularity length must equal file_count")
        if any(p < 0 for p in self.popularity):
            raise ValueError("popularity entries must be nonnegative")
        if abs(math.fsum(self.popularity) - 1.0) > 1e-9:
            raise ValueError("popularity must sum to one")

    @classmethod
    def zipf(cls, file_count: int, exponent: float, file_size_bits: float) -> "ContentModel":
        pop = zipf_popularity(file_count, exponent)
        return cls(
            file_count=file_count,
            file_size_bits=file_size_bits,
            popularity=tuple(pop),
            zipf_exponent=exponent,
        )

    def spectral_load(self, params: SystemParams) -> float:
        """Whole-file load S/(T*W): bits per slot per Hz of bandwidth."""
        return self.file_size_bits / (params.slot_length * params.bandwidth)


@dataclass(frozen=True)
class CacheConfig:
    """Per-BS cache size (in whole files) and SIC decode capability."""

    cache_size: int
    sic_capability: int

    def __post_init__(self):
        if int(self.cache_size) != self.cache_size or self.cache_size < 1:
            raise ValueError("cache_size must be a positive integer")
        if int(self.sic_capability) != self.sic_capability or self.sic_capability < 1:
            raise ValueError("sic_capability must be a positive integer")


@dataclass(frozen=True)
class CachingVector:
    """Split choice per file: 0 = uncached, 1 = whole, n = n coded parts."""

    splits: tuple[int, ...]

    def __post_init__(self):
        if any(int(s) != s or s < 0 for s in self.splits):
            raise ValueError("splits must be nonnegative integers")

    def cache_weight(self) -> float:
        return math.fsum(1.0 / s for s in self.splits if s >= 1)


@dataclass(frozen=True)
class Violation:
    constraint: str
    index: int | None
    slack: float | None
    message: str


@dataclass(frozen=True)
class ValidationReport:
    ok: bool
    violations: tuple[Violation, ...] = ()


def zipf_popularity(file_count: int, exponent: float) -> np.ndarray:
    """Zipf request probabilities p_f = f^-exponent / sum_k k^-exponent."""
    if file_count < 1:
        raise ValueError("catalog must contain at least one file")
    if exponent < 0:
        raise ValueError("zipf exponent must be nonnegative")
    ranks = np.arange(1, file_count + 1, dtype=float)
    weights = ranks ** (-float(exponent))
    return weights / math.fsum(weights)


def los_probability(distance, blockage):
    """Probability that a link of the given length is line-of-sight."""
    d = np.asarray(distance, dtype=float)
    if np.any(d < 0):
        raise ValueError("distance must be nonnegative")
    return np.exp(-blockage * d)


def path_loss(distance, params: SystemParams, los):
    """Propagation loss kappa * d^alpha for the given LOS state.

    ``los`` may be a bool or boolean array broadcastable against
    ``distance``. Zero distance is rejected: the power-law model has no
    finite loss there.
    """
    d = np.asarray(distance, dtype=float)
    if np.any(d < 0):
        raise ValueError("distance must be nonnegative")
    if np.any(d == 0):
        raise ValueError("path loss is singular at zero distance")
    los_mask = np.asarray(los, dtype=bool)
    loss = np.where(
        los_mask,
        params.kappa_los * d ** params.alpha_los,
        params.kappa_nlos * d ** params.alpha_nlos,
    )
    if np.isscalar(distance) and loss.ndim == 0:
        return float(loss)
    return loss


def sinr_threshold(file_size_bits: float, slot_length: float, bandwidth: float, split: int) -> float:
    """SINR needed to move 1/split of a file through one slot.

    Decoding a part succeeds when W*log2(1+SINR) >= S/(split*T), i.e.
    SINR >= 2^(S/(split*T*W)) - 1.
    """
    if split < 1 or int(split) != split:
        raise ValueError("split must be a positive integer")
    if file_size_bits <= 0 or slot_length <= 0 or bandwidth <= 0:
        raise ValueError("file size, slot length and bandwidth must be positive")
    return 2.0 ** (file_size_bits / (split * slot_length * bandwidth)) - 1.0


def threshold_for(params: SystemParams, content: ContentModel, split: int) -> float:
    return sinr_threshold(content.file_size_bits, params.slot_length, params.bandwidth, split)


def validate_caching_vector(vector: CachingVector | tuple, config: CacheConfig,
                            file_count: int) -> ValidationReport:
    """Check a caching vector against catalog, range and capacity limits.

    The capacity constraint is sum over cached files of 1/s_f <= C, with
    a small absolute tolerance so exact fills assembled from floats pass.
    """
    splits = vector.splits if isinstance(vector, CachingVector) else tuple(vector)
    violations: list[Violation] = []
    if len(splits) != file_count:
        violations.append(Violation(
            constraint="shape", index=None, slack=None,
            message=f"expected {file_count} entries, got {len(splits)}",
        ))
        return ValidationReport(ok=False, violations=tuple(violations))
    for f, s in enumerate(splits):
        if int(s) != s or s < 0 or s > config.sic_capability:
            violations.append(Violation(
                constraint="range", index=f, slack=None,
                message=f"split {s} at file {f} outside 0..{config.sic_capability}",
            ))
    weight = math.fsum(1.0 / s for s in splits if s >= 1)
    slack = config.cache_size - weight
    if slack < -1e-9:
        violations.append(Violation(
            constraint="capacity", index=None, slack=slack,
            message=f"cache weight {weight:.12g} exceeds size {config.cache_size}",
        ))
    return ValidationReport(ok=not violations, violations=tuple(violations))


@dataclass(frozen=True)
class StrategyValues:
    """Per-split delivery metrics, indexed by the split choice s=0..N.

    ``stp[s]`` is the one-slot success probability when a requested file
    is cached with split s (s=1: joint transmission from the N nearest
    cachers; s>=2: parallel parts with SIC; stp[0] = 0 since an uncached
    request cannot be served locally). ``delay[s]`` is the mean slots to
    deliver, with delay[0] the backhaul-assisted round trip. Half-widths
    are zero for the analytic engine.
    """

    stp: tuple[float, ...]
    delay: tuple[float, ...]
    stp_halfwidth: tuple[float, ...] = field(default=())
    delay_halfwidth: tuple[float, ...] = field(default=())
    delay_diverged: tuple[bool, ...] = field(default=())
    engine: str = "analytic"

    def __post_init__(self):
        n = len(self.stp)
        if len(self.delay) != n:
            raise ValueError("stp and delay tables must have equal length")
        if not self.stp_halfwidth:
            object.__setattr__(self, "stp_halfwidth", tuple(0.0 for _ in range(n)))
        if not self.delay_halfwidth:
            object.__setattr__(self, "delay_halfwidth", tuple(0.0 for _ in range(n)))
        if not self.delay_diverged:
            object.__setattr__(self, "delay_diverged", tuple(False for _ in range(n)))
        if self.stp[0] != 0.0:
            raise ValueError("stp[0] must be zero: uncached files are not served over the air")

    @property
    def max_split(self) -> int:
        return len(self.stp) - 1


def default_params(**overrides) -> SystemParams:
    """Baseline urban mmWave deployment used across examples and tests.

    50 BSs per 500 m-radius disk, 33 dBm transmit power, 1 GHz of
    bandwidth at 28 GHz carrier, blockage rate 0.01/m, square-law LOS
    and fourth-power NLOS attenuation, 10 dB/-10 dB sectored beams.
    """
    values = dict(
        bs_density=50.0 / (math.pi * 500.0 ** 2),
        gateway_density=50.0 / (math.pi * 500.0 ** 2) / 10.0,
        tx_power=dbm_to_watt(33.0),
        bandwidth=1e9,
        slot_length=0.01,
        noise_power=thermal_noise_watt(1e9, 10.0),
        blockage=0.01,
        kappa_los=freespace_intercept(28e9),
        kappa_nlos=freespace_intercept(28e9),
        alpha_los=2.0,
        alpha_nlos=4.0,
        nakagami_m=3,
        nakagami_m_nlos=2,
        mainlobe_gain=db_to_linear(10.0),
        sidelobe_gain=db_to_linear(-10.0),
        beamwidth=math.pi / 6.0,
        serving_gain=None,
        backhaul_scale=2e-3,
    )
    values.update(overrides)
    return SystemParams(**values)


def default_content(**overrides) -> ContentModel:
    values = dict(file_count=50, exponent=0.6, file_size_bits=1e7)
    values.update(overrides)
    return ContentModel.zipf(values["file_count"], values["exponent"], values["file_size_bits"])
