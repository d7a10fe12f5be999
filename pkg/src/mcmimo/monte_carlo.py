"""Finite-antenna Monte Carlo oracle for the combining-rate formulas.

Draws Gaussian estimated channels with the per-user variances produced by
the estimation stage, applies the exact MRC/MMSE receivers to each draw,
and averages instantaneous SINRs and rates.  Estimation-error vectors are
never sampled; their aggregate power rho_data * sum(delta_upsilon) enters
as a deterministic noise term, matching the worst-case-uncorrelated-noise
rate bound and avoiding double counting.

Reproducibility contract: one master seed derives per-trial substreams by
counter (``default_rng([seed, trial])``), so any execution order of trials
reproduces the same numbers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve, solve

from .params import SystemConfig
from .state_evolution import ChannelEstimateStats

__all__ = [
    "ChannelRealization",
    "MonteCarloReport",
    "average_rates",
    "draw_realization",
    "sinr_from_mean_powers",
    "sinr_mmse_empirical",
    "sinr_mrc_empirical",
]


@dataclass(frozen=True, eq=False)
class ChannelRealization:
    """One draw of all users' estimated channels at a finite antenna count."""

    h_hat: np.ndarray            # (K, M) complex; rows are per-user estimates
    seed: object
    noise_floor: float | None = None  # rho_data*sum(delta_upsilon) + sigma^2

    @property
    def n_users(self) -> int:
        return self.h_hat.shape[0]

    @property
    def n_antennas(self) -> int:
        return self.h_hat.shape[1]


def draw_realization(
    stats: ChannelEstimateStats,
    n_antennas: int,
    seed,
    config: SystemConfig | None = None,
) -> ChannelRealization:
    """Sample each user's estimated channel as CN(0, upsilon_k I_M).

    Deterministic per seed.  When a config is supplied the realization also
    carries the effective interference-plus-noise constant.
    """
    if n_antennas < 1:
        raise ValueError("n_antennas must be >= 1")
    rng = np.random.default_rng(seed)
    shape = (stats.n_active, n_antennas)
    scale = np.sqrt(stats.upsilon / 2.0)[:, None]
    h = scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))
    floor = None
    if config is not None:
        floor = _noise_constant(stats, config)
    return ChannelRealization(h_hat=h, seed=seed, noise_floor=floor)


def _noise_constant(stats: ChannelEstimateStats, config: SystemConfig) -> float:
    return config.data_power * float(stats.delta_upsilon.sum()) + config.noise_power


def sinr_mrc_empirical(
    r: ChannelRealization, stats: ChannelEstimateStats, config: SystemConfig
) -> np.ndarray:
    """Exact matched-filter SINR of every user on this realization.

    gamma_k = rho |h_k|^4 / (rho sum_{n!=k} |h_k^H h_n|^2
                             + (rho sum(delta_upsilon) + sigma^2) |h_k|^2).
    A zero-norm estimate yields gamma_k = 0.
    """
    h = r.h_hat
    rho = config.data_power
    c = _noise_constant(stats, config)
    gram = h.conj() @ h.T                      # gram[k, n] = h_k^H h_n
    norms2 = gram.diagonal().real.copy()
    cross = (np.abs(gram) ** 2).sum(axis=1) - norms2**2
    out = np.zeros_like(norms2)
    nz = norms2 > 0.0
    out[nz] = rho * norms2[nz] ** 2 / (rho * cross[nz] + c * norms2[nz])
    return out


def sinr_mmse_empirical(
    r: ChannelRealization,
    stats: ChannelEstimateStats,
    config: SystemConfig,
    method: str = "downdate",
) -> np.ndarray:
    """Exact MMSE-receiver SINR of every user on this realization.

    gamma_k = rho h_k^H (sum_{n!=k} rho h_n h_n^H + c I)^{-1} h_k with
    c = rho sum(delta_upsilon) + sigma^2.  ``method='direct'`` performs one
    Hermitian positive-definite solve per user; ``'downdate'`` factors the
    common matrix once and removes each user's own rank-one term through
    the standard inverse identity.  Both agree to solver precision.
    """
    h = r.h_hat
    n_users, n_antennas = h.shape
    rho = config.data_power
    c = _noise_constant(stats, config)
    a_full = rho * (h.T @ h.conj()) + c * np.eye(n_antennas)

    if method == "downdate":
        factor = cho_factor(a_full, lower=False, check_finite=False)
        sol = cho_solve(factor, h.T, check_finite=False)       # columns A^{-1} h_k
        q = np.einsum("km,mk->k", h.conj(), sol).real
        return rho * q / (1.0 - rho * q)

    if method == "direct":
        out = np.empty(n_users)
        for k in range(n_users):
            a_k = a_full - rho * np.outer(h[k], h[k].conj())
            u = solve(a_k, h[k], assume_a="pos", check_finite=False)
            out[k] = rho * np.vdot(h[k], u).real
        return out

    raise ValueError("method must be 'downdate' or 'direct'")


def _blocks(n_users: int, j_intervals: int) -> list[np.ndarray]:
    """Index-order partition of the users into J near-equal blocks."""
    return np.array_split(np.arange(n_users), j_intervals)


def _subset_stats(stats: ChannelEstimateStats, idx: np.ndarray) -> ChannelEstimateStats:
    return ChannelEstimateStats(
        stats.betas[idx], stats.upsilon[idx], stats.delta_upsilon[idx]
    )


@dataclass(frozen=True, eq=False)
class MonteCarloReport:
    """Trial-averaged rates with confidence half-widths."""

    betas: np.ndarray
    per_user_sinr: np.ndarray        # mean instantaneous SINR per user
    per_user_rate: np.ndarray        # mean rate per user, bits/symbol
    rate_halfwidth: np.ndarray       # 95% half-width of each per-user mean
    sum_rate: float
    sum_rate_halfwidth: float
    n_trials: int
    j_intervals: int
    uneven_blocks: bool              # K not divisible by J; last blocks smaller
    trial_sinr: np.ndarray | None = None    # (trials, K) when keep_trials
    trial_rate: np.ndarray | None = None

    def to_trial_csv(self) -> str:
        """Per-trial rows (trial, user, gamma, rate); needs keep_trials=True."""
        if self.trial_sinr is None:
            raise ValueError("realization history was not kept; rerun with keep_trials=True")
        lines = ["trial,user,gamma,rate"]
        for t in range(self.n_trials):
            for k in range(self.betas.size):
                lines.append(
                    f"{t},{k},{self.trial_sinr[t, k]:.17g},{self.trial_rate[t, k]:.17g}"
                )
        return "\n".join(lines) + "\n"

    def summary(self, config_echo: dict | None = None) -> dict:
        out = {
            "n_users": int(self.betas.size),
            "n_trials": self.n_trials,
            "j_intervals": self.j_intervals,
            "uneven_blocks": self.uneven_blocks,
            "sum_rate": self.sum_rate,
            "sum_rate_halfwidth": self.sum_rate_halfwidth,
        }
        if config_echo is not None:
            out["config"] = dict(config_echo)
        return out


def average_rates(
    stats: ChannelEstimateStats,
    config: SystemConfig,
    beamformer: str,
    j_intervals: int = 1,
    n_trials: int = 200,
    seed: int = 0,
    keep_trials: bool = False,
) -> MonteCarloReport:
    """Monte Carlo mean of R_k = (T-L)/(TJ) log2(1 + gamma_k) over trials.

    Scheduling splits the users into J index-order blocks; in each interval
    only that block transmits, so both interference and the estimation-error
    noise constant are restricted to the block.  Half-widths are 1.96 times
    the standard error of each mean.
    """
    if n_trials < 2:
        raise ValueError("n_trials must be >= 2")
    if beamformer not in ("mrc", "mmse"):
        raise ValueError("beamformer must be 'mrc' or 'mmse'")
    k_users = stats.n_active
    if not 1 <= j_intervals <= k_users:
        raise ValueError("j_intervals must lie in 1..K")

    blocks = _blocks(k_users, j_intervals)
    uneven = len({b.size for b in blocks}) > 1
    block_stats = [_subset_stats(stats, idx) for idx in blocks]
    sinr_fn = sinr_mrc_empirical if beamformer == "mrc" else sinr_mmse_empirical

    pilot_len, coherence_len = config.pilot_len, config.coherence_len
    prelog = (coherence_len - pilot_len) / (coherence_len * j_intervals)

    gammas = np.empty((n_trials, k_users))
    for t in range(n_trials):
        full = draw_realization(stats, config.n_antennas, seed=[seed, t])
        for idx, sub_stats in zip(blocks, block_stats):
            sub = ChannelRealization(h_hat=full.h_hat[idx], seed=full.seed)
            gammas[t, idx] = sinr_fn(sub, sub_stats, config)
    rates = prelog * np.log2(1.0 + gammas)

    per_user_rate = rates.mean(axis=0)
    rate_se = rates.std(axis=0, ddof=1) / math.sqrt(n_trials)
    trial_sums = rates.sum(axis=1)
    sum_se = float(trial_sums.std(ddof=1)) / math.sqrt(n_trials)

    return MonteCarloReport(
        betas=stats.betas,
        per_user_sinr=gammas.mean(axis=0),
        per_user_rate=per_user_rate,
        rate_halfwidth=1.96 * rate_se,
        sum_rate=float(trial_sums.mean()),
        sum_rate_halfwidth=1.96 * sum_se,
        n_trials=n_trials,
        j_intervals=j_intervals,
        uneven_blocks=uneven,
        trial_sinr=gammas if keep_trials else None,
        trial_rate=rates if keep_trials else None,
    )


def sinr_from_mean_powers(
    stats: ChannelEstimateStats,
    config: SystemConfig,
    beamformer: str,
    n_trials: int = 200,
    seed: int = 0,
) -> np.ndarray:
    """Per-user SINR formed from trial-averaged receiver statistics.

    Averages the quadratic forms entering each receiver's SINR (signal and
    interference powers under MRC, the regularized-inverse form under MMSE)
    before taking the final ratio.  This is the quantity the
    large-system SINR formulas approximate; averaging the per-trial SINR
    ratio instead is biased upward whenever the interference is dominated
    by a few strong users and does not converge to the formula value.
    """
    if n_trials < 2:
        raise ValueError("n_trials must be >= 2")
    rho = config.data_power
    c = _noise_constant(stats, config)
    k_users = stats.n_active
    m = config.n_antennas

    if beamformer == "mrc":
        norm_acc = np.zeros(k_users)
        cross_acc = np.zeros(k_users)
        for t in range(n_trials):
            h = draw_realization(stats, m, seed=[seed, t]).h_hat
            gram = h.conj() @ h.T
            n2 = gram.diagonal().real.copy()
            norm_acc += n2
            cross_acc += (np.abs(gram) ** 2).sum(axis=1) - n2**2
        n2 = norm_acc / n_trials
        cross = cross_acc / n_trials
        return rho * n2**2 / (rho * cross + c * n2)

    if beamformer == "mmse":
        q_acc = np.zeros(k_users)
        eye = np.eye(m)
        for t in range(n_trials):
            h = draw_realization(stats, m, seed=[seed, t]).h_hat
            a_full = rho * (h.T @ h.conj()) + c * eye
            factor = cho_factor(a_full, lower=False, check_finite=False)
            sol = cho_solve(factor, h.T, check_finite=False)
            q_acc += np.einsum("km,mk->k", h.conj(), sol).real
        q = q_acc / n_trials
        return rho * q / (1.0 - rho * q)

    raise ValueError("beamformer must be 'mrc' or 'mmse'")
