"""Sum-rate maximizers over the pilot length and the scheduling split.

The MRC objective is concave in a real-relaxed pilot length, so golden
section plus integer rounding solves it globally; the MRC scheduling
objective is strictly decreasing in the interval count, so J* = 1 with a
numerically verified profile.  The MMSE counterparts have no usable
structure and run a coarse-then-fine integer grid search.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .params import SystemConfig
from .rates import _as_betas, high_snr_rates
from .state_evolution import ConvergenceError

__all__ = [
    "OptimizationResult",
    "optimize_pilot_length_mmse",
    "optimize_pilot_length_mrc",
    "optimize_scheduling_mmse",
    "optimize_scheduling_mrc",
]

_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class OptimizationResult:
    """Integer argmax with the evaluated (candidate, sum rate) profile."""

    argmax: int
    objective: float            # bits/symbol at argmax
    profile: tuple[tuple[int, float], ...]
    certificate: str            # "concave" | "monotone-decreasing" | "grid"
    notes: tuple[str, ...] = ()

    def __post_init__(self):
        lookup = dict(self.profile)
        if self.argmax not in lookup or lookup[self.argmax] != self.objective:
            raise ValueError("argmax must appear in the profile with its objective")

    def profile_csv(self) -> str:
        lines = ["candidate,sum_rate"]
        for cand, value in self.profile:
            lines.append(f"{cand},{value:.17g}")
        return "\n".join(lines) + "\n"


def _golden_section_max(fn, lo: float, hi: float, xtol: float) -> float:
    """Argmax of a unimodal function on [lo, hi] to within xtol."""
    c = hi - _INV_PHI * (hi - lo)
    d = lo + _INV_PHI * (hi - lo)
    fc, fd = fn(c), fn(d)
    while (hi - lo) > xtol:
        if fc >= fd:
            hi, d, fd = d, c, fc
            c = hi - _INV_PHI * (hi - lo)
            fc = fn(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + _INV_PHI * (hi - lo)
            fd = fn(d)
    return 0.5 * (lo + hi)


def _mrc_objective_relaxed(config: SystemConfig, betas: np.ndarray):
    """MRC sum rate as a function of a real-valued pilot length."""
    k = betas.size
    sum_b_over_m = float(betas.sum()) / config.n_antennas
    noise_over_power = config.noise_power / config.pilot_power
    t_len = config.coherence_len

    def objective(pilot_len: float) -> float:
        tau2 = noise_over_power / (pilot_len - k)
        gam = betas * betas / (sum_b_over_m * (betas + tau2))
        return (t_len - pilot_len) / t_len * float(np.log2(1.0 + gam).sum())

    return objective


def _eval_int(config: SystemConfig, betas, beamformer: str, pilot_len: int,
              j_intervals: int = 1) -> float:
    cfg = replace(config, pilot_len=int(pilot_len))
    return high_snr_rates(cfg, betas, beamformer, j_intervals).sum_rate


def optimize_pilot_length_mrc(config: SystemConfig, betas) -> OptimizationResult:
    """Globally optimal integer pilot length under MRC.

    Golden section on the real-relaxed concave objective over (K, T) down
    to a half-symbol bracket, then the neighboring integers are compared
    (with a final +-1 hill climb to make local optimality unconditional).
    """
    b = _as_betas(betas)
    k = b.size
    t_len = config.coherence_len
    if t_len <= k + 1:
        raise ValueError(f"no feasible pilot length: need T > K+1 (T={t_len}, K={k})")
    if t_len == k + 2:
        only = k + 1
        value = _eval_int(config, b, "mrc", only)
        return OptimizationResult(
            argmax=only,
            objective=value,
            profile=((only, value),),
            certificate="concave",
            notes=("degenerate frame: K+1 is the only feasible length",),
        )

    objective = _mrc_objective_relaxed(config, b)
    lo = k + 1e-6 * (t_len - k)
    x_star = _golden_section_max(objective, lo, float(t_len), xtol=0.5)

    evaluated: dict[int, float] = {}

    def value_at(length: int) -> float:
        if length not in evaluated:
            evaluated[length] = _eval_int(config, b, "mrc", length)
        return evaluated[length]

    lo_int, hi_int = k + 1, t_len - 1
    candidates = {
        min(max(int(math.floor(x_star)), lo_int), hi_int),
        min(max(int(math.ceil(x_star)), lo_int), hi_int),
    }
    best = max(candidates, key=value_at)
    while best + 1 <= hi_int and value_at(best + 1) > value_at(best):
        best += 1
    while best - 1 >= lo_int and value_at(best - 1) > value_at(best):
        best -= 1

    profile = tuple(sorted(evaluated.items()))
    return OptimizationResult(
        argmax=best,
        objective=evaluated[best],
        profile=profile,
        certificate="concave",
    )


def optimize_pilot_length_mmse(
    config: SystemConfig, betas, step: int = 10
) -> OptimizationResult:
    """Best integer pilot length under MMSE by coarse grid plus refinement.

    Evaluates K+1..T-1 at the given stride, then rescans the bracket around
    the coarse winner with stride 1.  Pilot lengths where the SINR-factor
    iteration fails are recorded and skipped.  Ties break toward the
    shorter pilot.
    """
    if step < 1:
        raise ValueError("step must be >= 1")
    b = _as_betas(betas)
    k = b.size
    t_len = config.coherence_len
    if t_len <= k + 1:
        raise ValueError(f"no feasible pilot length: need T > K+1 (T={t_len}, K={k})")

    lo_int, hi_int = k + 1, t_len - 1
    evaluated: dict[int, float] = {}
    notes: list[str] = []

    def scan(lengths):
        for length in lengths:
            if length in evaluated:
                continue
            try:
                evaluated[length] = _eval_int(config, b, "mmse", length)
            except ConvergenceError as exc:
                notes.append(f"skipped L={length}: {exc}")

    scan(range(lo_int, hi_int + 1, step))
    if not evaluated:
        raise ConvergenceError("MMSE objective failed at every coarse pilot length")
    coarse_best = min(best_candidates(evaluated))
    scan(range(max(lo_int, coarse_best - step + 1),
               min(hi_int, coarse_best + step - 1) + 1))

    best = min(best_candidates(evaluated))
    return OptimizationResult(
        argmax=best,
        objective=evaluated[best],
        profile=tuple(sorted(evaluated.items())),
        certificate="grid",
        notes=tuple(notes),
    )


def best_candidates(evaluated: dict[int, float]) -> list[int]:
    """Candidates attaining the maximum value (for smallest-wins tie-breaks)."""
    top = max(evaluated.values())
    return [cand for cand, val in evaluated.items() if val == top]


def optimize_scheduling_mrc(
    config: SystemConfig, betas, j_max: int = 10
) -> OptimizationResult:
    """J* = 1 under MRC; the profile over 1..j_max certifies the decrease.

    The sacrificed transmission time always outweighs the per-interval
    interference reduction for matched filtering, so any profile increase
    indicates a formula bug and raises instead of being reported.
    """
    b = _as_betas(betas)
    k = b.size
    if config.pilot_len <= k:
        raise ValueError(f"need L > K (L={config.pilot_len}, K={k})")
    if j_max < 1:
        raise ValueError("j_max must be >= 1")
    j_top = min(j_max, k)

    profile = tuple(
        (j, high_snr_rates(config, b, "mrc", j).sum_rate) for j in range(1, j_top + 1)
    )
    for (j_a, val_a), (j_b, val_b) in zip(profile, profile[1:]):
        if not val_a > val_b:
            raise RuntimeError(
                f"MRC scheduling profile must decrease strictly but "
                f"rate({j_a})={val_a!r} <= rate({j_b})={val_b!r}"
            )
    return OptimizationResult(
        argmax=1,
        objective=profile[0][1],
        profile=profile,
        certificate="monotone-decreasing",
    )


def optimize_scheduling_mmse(
    config: SystemConfig, betas, j_max: int = 10
) -> OptimizationResult:
    """Best interval count under MMSE by scanning J = 1..j_max.

    Interval counts where the SINR-factor iteration fails are recorded and
    skipped; ties break toward fewer intervals.
    """
    b = _as_betas(betas)
    k = b.size
    if config.pilot_len <= k:
        raise ValueError(f"need L > K (L={config.pilot_len}, K={k})")
    if j_max < 1:
        raise ValueError("j_max must be >= 1")

    evaluated: dict[int, float] = {}
    notes: list[str] = []
    for j in range(1, min(j_max, k) + 1):
        try:
            evaluated[j] = high_snr_rates(config, b, "mmse", j).sum_rate
        except ConvergenceError as exc:
            notes.append(f"skipped J={j}: {exc}")
    if not evaluated:
        raise ConvergenceError("MMSE objective failed at every interval count")

    best = min(best_candidates(evaluated))
    return OptimizationResult(
        argmax=best,
        objective=evaluated[best],
        profile=tuple(sorted(evaluated.items())),
        certificate="grid",
        notes=tuple(notes),
    )
