"""Physical system parameters, unit conversions, and user-population sampling.

All internal computation works in linear units (watts, linear power ratios).
dBm / dB values are converted once at the configuration boundary and back
only when reporting.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "DEFAULT_PATHLOSS",
    "PathlossModel",
    "PathlossPopulation",
    "SystemConfig",
    "dbm_to_watts",
    "edge_snr",
    "noise_power",
    "sample_population",
    "watts_to_dbm",
]


def dbm_to_watts(power_dbm: float) -> float:
    """Convert dBm to watts: 10**((p - 30)/10).  30 dBm is one watt."""
    return 10.0 ** ((power_dbm - 30.0) / 10.0)


def watts_to_dbm(power_watts: float) -> float:
    """Inverse of :func:`dbm_to_watts`; requires a strictly positive power."""
    if power_watts <= 0.0:
        raise ValueError("power must be strictly positive to express in dBm")
    return 10.0 * math.log10(power_watts) + 30.0


def noise_power(psd_dbm_hz: float, bandwidth_hz: float) -> float:
    """Receiver noise power in watts from a noise PSD (dBm/Hz) and a bandwidth."""
    if bandwidth_hz <= 0.0:
        raise ValueError("bandwidth must be positive")
    return dbm_to_watts(psd_dbm_hz) * bandwidth_hz


@dataclass(frozen=True)
class PathlossModel:
    """Log-distance pathloss, beta_dB(d) = intercept_db - slope_db*log10(d_km).

    Distances are drawn uniformly in distance over [d_min_km, d_max_km]; the
    sampling law is recorded so a different law can be swapped in without
    touching consumers.
    """

    d_min_km: float = 0.05
    d_max_km: float = 1.0
    intercept_db: float = -128.1
    slope_db: float = 36.7
    sampling: str = "uniform-distance"

    def gain(self, distance_km):
        """Linear power gain beta at the given distance(s) in km."""
        d = np.asarray(distance_km, dtype=float)
        out = 10.0 ** ((self.intercept_db - self.slope_db * np.log10(d)) / 10.0)
        return float(out) if np.isscalar(distance_km) else out

    def sample_distances(self, n: int, rng: np.random.Generator) -> np.ndarray:
        if self.sampling != "uniform-distance":
            raise ValueError(f"unsupported sampling law: {self.sampling!r}")
        return rng.uniform(self.d_min_km, self.d_max_km, n)


DEFAULT_PATHLOSS = PathlossModel()


@dataclass(frozen=True)
class SystemConfig:
    """Scalar system parameters, stored in linear units (watts).

    Exactly one of ``n_active`` (fixed active count K) and ``activity_prob``
    (per-user access probability epsilon) must be given.
    """

    n_users: int          # N, potential devices
    pilot_len: int        # L, symbols spent on pilots per coherence block
    coherence_len: int    # T, symbols per coherence block
    n_antennas: int       # M
    pilot_power: float    # watts
    data_power: float     # watts
    noise_power: float    # sigma^2, watts
    n_active: int | None = None
    activity_prob: float | None = None

    def __post_init__(self):
        if self.n_users <= 0:
            raise ValueError("n_users must be positive")
        if self.n_antennas <= 0:
            raise ValueError("n_antennas must be positive")
        if not 0 < self.pilot_len < self.coherence_len:
            raise ValueError("need 0 < pilot_len < coherence_len")
        for name in ("pilot_power", "data_power", "noise_power"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be strictly positive")
        if (self.n_active is None) == (self.activity_prob is None):
            raise ValueError("give exactly one of n_active and activity_prob")
        if self.n_active is not None and not 0 < self.n_active <= self.n_users:
            raise ValueError("n_active must lie in 1..n_users")
        if self.activity_prob is not None and not 0.0 < self.activity_prob < 1.0:
            raise ValueError("activity_prob must lie in (0, 1)")

    @classmethod
    def from_db_units(
        cls,
        *,
        n_users: int,
        pilot_len: int,
        coherence_len: int,
        n_antennas: int,
        pilot_power_dbm: float,
        data_power_dbm: float,
        noise_psd_dbm_hz: float,
        bandwidth_hz: float,
        n_active: int | None = None,
        activity_prob: float | None = None,
    ) -> "SystemConfig":
        """Build a config from dBm transmit powers and a noise PSD/bandwidth pair."""
        return cls(
            n_users=n_users,
            pilot_len=pilot_len,
            coherence_len=coherence_len,
            n_antennas=n_antennas,
            pilot_power=dbm_to_watts(pilot_power_dbm),
            data_power=dbm_to_watts(data_power_dbm),
            noise_power=noise_power(noise_psd_dbm_hz, bandwidth_hz),
            n_active=n_active,
            activity_prob=activity_prob,
        )

    @property
    def epsilon(self) -> float:
        """Activity probability; K/N when a fixed active count was given."""
        if self.activity_prob is not None:
            return self.activity_prob
        return self.n_active / self.n_users

    @property
    def n_active_nominal(self) -> int:
        """Nominal active count K; round(epsilon*N) when a probability was given."""
        if self.n_active is not None:
            return self.n_active
        return int(round(self.activity_prob * self.n_users))

    @property
    def omega(self) -> float:
        """Pilot load N/L."""
        return self.n_users / self.pilot_len

    @property
    def xi(self) -> float:
        """Total per-user pilot energy L * pilot_power (watt-symbols)."""
        return self.pilot_len * self.pilot_power


@dataclass(frozen=True, eq=False)
class PathlossPopulation:
    """Large-scale channel gains of one realized set of active users."""

    betas: np.ndarray
    model: PathlossModel
    distances_km: np.ndarray | None = None

    def __post_init__(self):
        betas = np.asarray(self.betas, dtype=float)
        object.__setattr__(self, "betas", betas)
        if betas.ndim != 1 or betas.size == 0:
            raise ValueError("betas must be a non-empty 1-D array")
        if np.any(betas <= 0.0):
            raise ValueError("every beta must be strictly positive")
        if self.distances_km is not None:
            d = np.asarray(self.distances_km, dtype=float)
            if d.shape != betas.shape:
                raise ValueError("distances_km must match betas in length")
            object.__setattr__(self, "distances_km", d)

    @property
    def n_active(self) -> int:
        return int(self.betas.size)

    @property
    def mean_beta(self) -> float:
        return float(self.betas.mean())


def sample_population(
    config: SystemConfig,
    seed,
    model: PathlossModel = DEFAULT_PATHLOSS,
) -> PathlossPopulation:
    """Draw the active users' large-scale gains for one experiment.

    A fixed active count is used as-is; an activity probability is realized
    as a single Binomial(N, epsilon) draw.  The same (config, seed) pair
    always yields the same population; distances stay fixed until a new seed
    is supplied.
    """
    rng = np.random.default_rng(seed)
    if config.n_active is not None:
        k = config.n_active
    else:
        k = int(rng.binomial(config.n_users, config.activity_prob))
        if k == 0:
            raise RuntimeError(
                "activity realization produced an empty active set; "
                "retry with a different seed or a larger activity_prob"
            )
    distances = model.sample_distances(k, rng)
    return PathlossPopulation(
        betas=model.gain(distances), model=model, distances_km=distances
    )


def edge_snr(config: SystemConfig, model: PathlossModel = DEFAULT_PATHLOSS) -> float:
    """Pilot SNR of a user at the far edge of the coverage range, in dB."""
    beta_edge = model.gain(model.d_max_km)
    return 10.0 * math.log10(config.pilot_power * beta_edge / config.noise_power)
