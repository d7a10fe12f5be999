"""Asymptotic per-user SINR and achievable rate under MRC and MMSE combining.

Two evaluation routes cover every consumer:

* the antenna-limit route (:func:`mrc_sinr_asymptotic`,
  :func:`mmse_sinr_asymptotic`, :func:`rate_report`) works on a
  :class:`RateQuery` holding an explicit load ratio mu and effective noise
  tau^2, with population expectations taken as arithmetic means over the
  active users' gains;

* the finite-system route (:func:`high_snr_rates`,
  :func:`known_activity_rates`) substitutes the worst-case estimation error
  sigma^2/(rho_pilot (L-K)) -- or sigma^2/(rho_pilot L) when activity is
  known and pilots are orthogonal -- and evaluates per-antenna empirical
  sums.  Its MMSE load factor keeps the receiver-noise term
  sigma^2/(M rho_data) that the antenna limit discards; at practical antenna
  counts that term is what keeps the interference-suppression gain finite,
  and dropping it overstates MMSE rates by large factors.

Rates are reported in bits/symbol and already include the training and
scheduling prelog (T - L)/(T J).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .params import PathlossPopulation, SystemConfig
from .state_evolution import ConvergenceError

__all__ = [
    "RateQuery",
    "RateReport",
    "finite_system_rates",
    "high_snr_rates",
    "known_activity_rates",
    "mmse_gamma_fixed_point",
    "mmse_sinr_asymptotic",
    "mrc_sinr_asymptotic",
    "rate_report",
]

BEAMFORMERS = ("mrc", "mmse")


def _as_betas(betas) -> np.ndarray:
    if isinstance(betas, PathlossPopulation):
        return betas.betas
    arr = np.asarray(betas, dtype=float)
    if arr.ndim != 1 or arr.size == 0 or np.any(arr <= 0.0):
        raise ValueError("betas must be a non-empty 1-D array of positive gains")
    return arr


@dataclass(frozen=True, eq=False)
class RateQuery:
    """One rate-analysis question: which users, how noisy, how loaded."""

    betas: object              # PathlossPopulation or 1-D array of gains
    tau2: float                # effective estimation noise; 0 = perfect CSI
    mu: float                  # load K/M
    frame: tuple[int, int]     # (L, T) symbols
    j_intervals: int = 1
    beamformer: str = "mrc"

    def __post_init__(self):
        object.__setattr__(self, "betas", _as_betas(self.betas))
        if self.tau2 < 0.0:
            raise ValueError("tau2 must be non-negative")
        if self.mu <= 0.0:
            raise ValueError("mu must be positive")
        if int(self.j_intervals) != self.j_intervals or self.j_intervals < 1:
            raise ValueError("j_intervals must be an integer >= 1")
        pilot_len, coherence_len = self.frame
        if not 0 < pilot_len < coherence_len:
            raise ValueError("frame must satisfy 0 < L < T")
        if self.beamformer not in BEAMFORMERS:
            raise ValueError(f"beamformer must be one of {BEAMFORMERS}")

    @property
    def prelog(self) -> float:
        pilot_len, coherence_len = self.frame
        return (coherence_len - pilot_len) / (coherence_len * self.j_intervals)


@dataclass(frozen=True, eq=False)
class RateReport:
    """Per-user SINRs and rates plus their sum, for one beamformer."""

    betas: np.ndarray
    per_user_sinr: np.ndarray
    per_user_rate: np.ndarray   # bits/symbol, prelog included
    sum_rate: float             # bits/symbol
    gamma_big: float | None = None   # MMSE common SINR factor; None under MRC
    notes: tuple[str, ...] = ()

    def to_csv(self) -> str:
        """Rows (user_index, beta, sinr, rate) with 17 significant digits."""
        lines = ["user_index,beta,sinr,rate"]
        for i in range(self.betas.size):
            lines.append(
                f"{i},{self.betas[i]:.17g},"
                f"{self.per_user_sinr[i]:.17g},{self.per_user_rate[i]:.17g}"
            )
        return "\n".join(lines) + "\n"

    def summary(self, config_echo: dict | None = None) -> dict:
        """JSON-ready summary; pass a config echo to make it self-contained."""
        out = {
            "n_users": int(self.betas.size),
            "gamma_big": self.gamma_big,
            "sum_rate": self.sum_rate,
            "notes": list(self.notes),
        }
        if config_echo is not None:
            out["config"] = dict(config_echo)
        return out


def _require(q: RateQuery, beamformer: str):
    if q.beamformer != beamformer:
        raise ValueError(f"query beamformer is {q.beamformer!r}, expected {beamformer!r}")


def mrc_sinr_asymptotic(q: RateQuery) -> np.ndarray:
    """Per-user MRC SINR, J*beta_k^2 / (mu E[beta] (beta_k + tau^2))."""
    _require(q, "mrc")
    b = q.betas
    return q.j_intervals * b * b / (q.mu * float(b.mean()) * (b + q.tau2))


def _gamma_fixed_point(
    betas: np.ndarray,
    tau2: float,
    mu: float,
    j_intervals: int,
    floor: float = 0.0,
    tol: float = 1e-12,
    max_iter: int = 200_000,
) -> float:
    """Common MMSE SINR factor from the damped fixed-point iteration.

    Solves Gamma = J / (mu E[beta^2/(beta+tau^2+beta^2 Gamma)]
                        + mu E[beta tau^2/(beta+tau^2)] + floor)
    with updates Gamma <- (Gamma + map(Gamma))/2; the undamped map can
    overshoot at small tau^2.  With floor == 0, tau^2 == 0 and mu <= J the
    equation has no finite solution and +inf is returned as a sentinel.
    """
    if tol <= 0.0:
        raise ValueError("tol must be positive")
    if tau2 == 0.0 and floor == 0.0 and mu <= j_intervals:
        return math.inf
    err_term = mu * float(np.mean(betas * tau2 / (betas + tau2))) + floor
    gamma = j_intervals / (mu * float(betas.mean()))
    b2 = betas * betas
    for _ in range(max_iter):
        mapped = j_intervals / (
            mu * float(np.mean(b2 / (betas + tau2 + b2 * gamma))) + err_term
        )
        nxt = 0.5 * gamma + 0.5 * mapped
        if abs(nxt - gamma) <= tol * gamma:
            return nxt
        gamma = nxt
    raise ConvergenceError(
        f"MMSE SINR factor did not reach tol={tol:g} within {max_iter} iterations "
        f"(mu={mu:.4g}, tau2={tau2:.4g}, J={j_intervals})"
    )


def mmse_gamma_fixed_point(
    q: RateQuery, tol: float = 1e-12, max_iter: int = 200_000
) -> float:
    """Antenna-limit MMSE SINR factor for the query's population and load.

    Returns +inf in the noiseless regime tau^2 == 0 with mu <= J, where the
    per-interval system is underloaded and the SINR is unbounded.
    """
    _require(q, "mmse")
    return _gamma_fixed_point(
        q.betas, q.tau2, q.mu, q.j_intervals, floor=0.0, tol=tol, max_iter=max_iter
    )


def mmse_sinr_asymptotic(q: RateQuery, tol: float = 1e-12) -> np.ndarray:
    """Per-user MMSE SINR, Gamma * beta_k^2/(beta_k + tau^2)."""
    _require(q, "mmse")
    gamma_big = mmse_gamma_fixed_point(q, tol=tol)
    b = q.betas
    return gamma_big * b * b / (b + q.tau2)


def _assemble(betas, sinr, prelog, gamma_big, notes=()) -> RateReport:
    rates = prelog * np.log2(1.0 + sinr)
    return RateReport(
        betas=betas,
        per_user_sinr=sinr,
        per_user_rate=rates,
        sum_rate=float(np.sum(rates)),
        gamma_big=gamma_big,
        notes=tuple(notes),
    )


def rate_report(q: RateQuery, tol: float = 1e-12) -> RateReport:
    """Per-user rates R_k = prelog * log2(1 + gamma_k) for the query."""
    if q.beamformer == "mrc":
        sinr = mrc_sinr_asymptotic(q)
        gamma_big = None
        notes = ()
    else:
        gamma_big = mmse_gamma_fixed_point(q, tol=tol)
        b = q.betas
        sinr = gamma_big * b * b / (b + q.tau2)
        notes = (
            ("unbounded SINR: perfect CSI with load mu <= J",)
            if math.isinf(gamma_big)
            else ()
        )
    return _assemble(q.betas, sinr, q.prelog, gamma_big, notes)


def finite_system_rates(
    config: SystemConfig,
    betas,
    beamformer: str,
    j_intervals: int = 1,
    tau2: float | None = None,
    tol: float = 1e-12,
) -> RateReport:
    """Rates with per-antenna empirical sums at the configured system size.

    ``tau2`` defaults to the worst-case estimation error
    sigma^2/(rho_pilot (L-K)).  Under MMSE the load factor keeps the
    receiver-noise term sigma^2/(M rho_data); under MRC that term is
    negligible against the aggregate interference and the plain form is
    used.
    """
    b = _as_betas(betas)
    k = b.size
    if tau2 is None:
        if config.pilot_len <= k:
            raise ValueError(
                f"worst-case estimation error needs L > K "
                f"(L={config.pilot_len}, K={k})"
            )
        tau2 = config.noise_power / (config.pilot_power * (config.pilot_len - k))
    if beamformer not in BEAMFORMERS:
        raise ValueError(f"beamformer must be one of {BEAMFORMERS}")
    mu = k / config.n_antennas
    frame = (config.pilot_len, config.coherence_len)
    q = RateQuery(b, tau2, mu, frame, j_intervals, beamformer)
    if beamformer == "mrc":
        return _assemble(b, mrc_sinr_asymptotic(q), q.prelog, None)
    floor = config.noise_power / (config.n_antennas * config.data_power)
    gamma_big = _gamma_fixed_point(b, tau2, mu, j_intervals, floor=floor, tol=tol)
    sinr = gamma_big * b * b / (b + tau2)
    return _assemble(b, sinr, q.prelog, gamma_big)


def high_snr_rates(
    config: SystemConfig, betas, beamformer: str, j_intervals: int = 1
) -> RateReport:
    """Finite-system rates at the worst-case error sigma^2/(rho_pilot (L-K))."""
    return finite_system_rates(config, betas, beamformer, j_intervals)


def known_activity_rates(config: SystemConfig, betas, beamformer: str) -> RateReport:
    """Baseline with the active set known and orthogonal pilots of length L >= K.

    Identical formulas with the smaller estimation error sigma^2/(rho_pilot L);
    the spread between this and :func:`high_snr_rates` prices the activity
    detection carried by non-orthogonal pilots.
    """
    b = _as_betas(betas)
    if config.pilot_len < b.size:
        raise ValueError(
            f"orthogonal pilots need L >= K (L={config.pilot_len}, K={b.size})"
        )
    tau2 = config.noise_power / (config.pilot_power * config.pilot_len)
    return finite_system_rates(config, b, beamformer, 1, tau2=tau2)
