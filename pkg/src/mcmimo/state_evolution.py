"""Effective-noise fixed point of the large-antenna AMP state evolution.

The quality of joint activity detection and channel estimation from
non-orthogonal pilots is summarized by one scalar, the converged variance
tau_inf^2 of the recursion

    tau_{t+1}^2 = sigma^2/xi + omega*eps * E_beta[ beta tau_t^2 / (beta + tau_t^2) ],

started at tau_0^2 = sigma^2/xi + omega*eps*E_beta[beta].  For omega*eps < 1
the fixed point is unique and sandwiched between sigma^2/xi and
sigma^2/(xi(1-omega*eps)); the upper end is also the high-SNR limit and the
worst case over SNR.  Per-user estimated-channel and estimation-error
variances follow from tau_inf^2 alone.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .params import PathlossModel, PathlossPopulation, SystemConfig, DEFAULT_PATHLOSS

__all__ = [
    "AnalyticBetaLaw",
    "ChannelEstimateStats",
    "ConvergenceError",
    "FixedPointCheck",
    "NoiseStateResult",
    "StateEvolutionInput",
    "check_fixed_point_uniqueness",
    "estimation_stats",
    "high_snr_tau2",
    "solve_state_evolution",
]


class ConvergenceError(RuntimeError):
    """A fixed-point iteration failed to converge within its budget."""


@dataclass(frozen=True, eq=False)
class AnalyticBetaLaw:
    """Pathloss distribution with a Monte Carlo expectation rule.

    Expectations over the law are arithmetic means over ``n_samples`` gains
    drawn once with a private seeded generator, so repeated evaluations are
    identical.
    """

    model: PathlossModel = DEFAULT_PATHLOSS
    n_samples: int = 100_000
    seed: int = 0
    samples: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.n_samples < 1:
            raise ValueError("n_samples must be positive")
        rng = np.random.default_rng(self.seed)
        d = self.model.sample_distances(self.n_samples, rng)
        object.__setattr__(self, "samples", self.model.gain(d))


def _beta_samples(law) -> np.ndarray:
    """Samples to average over, for either beta-law flavor."""
    if isinstance(law, PathlossPopulation):
        return law.betas
    if isinstance(law, AnalyticBetaLaw):
        return law.samples
    arr = np.asarray(law, dtype=float)
    if arr.ndim != 1 or arr.size == 0 or np.any(arr <= 0.0):
        raise ValueError("beta law must be a population, an analytic law, "
                         "or a 1-D array of positive gains")
    return arr


@dataclass(frozen=True, eq=False)
class StateEvolutionInput:
    """Inputs of the effective-noise recursion, in linear units."""

    xi: float          # total per-user pilot energy L*rho_pilot (watt-symbols)
    omega: float       # pilot load N/L
    epsilon: float     # activity probability
    sigma2: float      # receiver noise power (watts)
    beta_law: object   # PathlossPopulation | AnalyticBetaLaw | 1-D array

    def __post_init__(self):
        if self.xi <= 0.0 or self.sigma2 <= 0.0:
            raise ValueError("xi and sigma2 must be strictly positive")
        if self.omega <= 0.0:
            raise ValueError("omega must be positive")
        if not 0.0 < self.epsilon < 1.0:
            raise ValueError("epsilon must lie in (0, 1)")
        _beta_samples(self.beta_law)  # validates eagerly

    @classmethod
    def from_config(cls, config: SystemConfig, beta_law) -> "StateEvolutionInput":
        return cls(
            xi=config.xi,
            omega=config.omega,
            epsilon=config.epsilon,
            sigma2=config.noise_power,
            beta_law=beta_law,
        )

    @property
    def omega_epsilon(self) -> float:
        return self.omega * self.epsilon


@dataclass(frozen=True, eq=False)
class NoiseStateResult:
    """Converged effective noise with its bounds and iteration history."""

    tau2: float
    lower_bound: float             # sigma^2/xi
    upper_bound: float | None      # sigma^2/(xi(1-omega*eps)); None outside the regime
    high_snr_approx: float | None  # same value as upper_bound, distinct role
    iterations: int
    trace: np.ndarray              # tau_t^2 including the starting point
    omega_epsilon: float

    @property
    def in_unique_regime(self) -> bool:
        """True when omega*epsilon < 1 and the fixed point is provably unique."""
        return self.omega_epsilon < 1.0

    def trace_rows(self):
        """(iteration, tau2) pairs, ready for CSV export."""
        return list(enumerate(self.trace.tolist()))


@dataclass(frozen=True, eq=False)
class ChannelEstimateStats:
    """Per-user estimated-channel and estimation-error variances."""

    betas: np.ndarray
    upsilon: np.ndarray        # variance of the channel estimate
    delta_upsilon: np.ndarray  # variance of the estimation error

    @property
    def n_active(self) -> int:
        return int(self.betas.size)


def solve_state_evolution(
    se_input: StateEvolutionInput,
    tol: float = 1e-10,
    max_iter: int = 10_000,
) -> NoiseStateResult:
    """Iterate the effective-noise recursion to its fixed point.

    Stops when the relative step |tau_{t+1}^2 - tau_t^2| / tau_t^2 falls
    below ``tol``.  Outside the omega*eps < 1 regime the iteration still
    converges (the map is monotone and bounded) but uniqueness is not
    guaranteed and no bounds are reported.

    Raises
    ------
    ConvergenceError
        If ``max_iter`` iterations do not reach ``tol``; this signals either
        a heavily overloaded regime or a broken expectation rule.
    """
    if tol <= 0.0:
        raise ValueError("tol must be positive")
    betas = _beta_samples(se_input.beta_law)
    we = se_input.omega_epsilon
    base = se_input.sigma2 / se_input.xi

    tau2 = base + we * float(betas.mean())
    trace = [tau2]
    converged = False
    for _ in range(max_iter):
        nxt = base + we * float(np.mean(betas * tau2 / (betas + tau2)))
        trace.append(nxt)
        step_ok = abs(nxt - tau2) / tau2 < tol
        tau2 = nxt
        if step_ok:
            converged = True
            break
    if not converged:
        raise ConvergenceError(
            f"state evolution did not reach tol={tol:g} within {max_iter} "
            f"iterations (omega*epsilon={we:.4g})"
        )

    upper = base / (1.0 - we) if we < 1.0 else None
    return NoiseStateResult(
        tau2=tau2,
        lower_bound=base,
        upper_bound=upper,
        high_snr_approx=upper,
        iterations=len(trace) - 1,
        trace=np.asarray(trace),
        omega_epsilon=we,
    )


def high_snr_tau2(config: SystemConfig) -> float:
    """Worst-case / high-SNR effective noise sigma^2 / (rho_pilot (L - K))."""
    k = config.n_active_nominal
    if config.pilot_len <= k:
        raise ValueError(
            f"high-SNR effective noise needs pilot_len > active count "
            f"(L={config.pilot_len}, K={k})"
        )
    return config.noise_power / (config.pilot_power * (config.pilot_len - k))


def estimation_stats(betas, tau2: float) -> ChannelEstimateStats:
    """Split each beta_k into estimate variance and error variance.

    upsilon_k = beta_k^2/(beta_k + tau2) and delta_upsilon_k =
    beta_k*tau2/(beta_k + tau2); they sum back to beta_k.
    """
    if tau2 < 0.0:
        raise ValueError("tau2 must be non-negative")
    b = _beta_samples(betas)
    if tau2 == 0.0:
        return ChannelEstimateStats(b, b.copy(), np.zeros_like(b))
    denom = b + tau2
    return ChannelEstimateStats(b, b * b / denom, b * tau2 / denom)


@dataclass(frozen=True)
class FixedPointCheck:
    """Evidence that the effective-noise fixed point is unique."""

    unique: bool
    monotone: bool
    sign_changes: int
    bracket: tuple[float, float] | None
    violation_x: float | None  # grid point where monotonicity first fails


def check_fixed_point_uniqueness(
    se_input: StateEvolutionInput, grid: int = 200
) -> FixedPointCheck:
    """Probe f(x) = x - omega*eps*E[beta x/(beta+x)] - sigma^2/xi on a log grid.

    Requires omega*epsilon < 1.  The grid spans [lower_bound/10,
    upper_bound*10]; uniqueness holds when f is monotone increasing there
    and crosses zero exactly once.  The returned bracket encloses the
    crossing.
    """
    we = se_input.omega_epsilon
    if we >= 1.0:
        raise ValueError("uniqueness check requires omega*epsilon < 1")
    if grid < 3:
        raise ValueError("grid must have at least 3 points")
    betas = _beta_samples(se_input.beta_law)
    base = se_input.sigma2 / se_input.xi
    lo = base / 10.0
    hi = base / (1.0 - we) * 10.0

    xs = np.logspace(np.log10(lo), np.log10(hi), grid)
    fs = np.empty(grid)
    for i, x in enumerate(xs):
        fs[i] = x - we * float(np.mean(betas * x / (betas + x))) - base

    diffs = np.diff(fs)
    monotone = bool(np.all(diffs >= 0.0))
    violation_x = None if monotone else float(xs[int(np.argmin(diffs)) + 1])

    neg = fs < 0.0
    flips = np.nonzero(neg[:-1] & ~neg[1:])[0]
    sign_changes = int(flips.size)
    bracket = None
    if sign_changes >= 1:
        i = int(flips[0])
        bracket = (float(xs[i]), float(xs[i + 1]))

    return FixedPointCheck(
        unique=monotone and sign_changes == 1,
        monotone=monotone,
        sign_changes=sign_changes,
        bracket=bracket,
        violation_x=violation_x,
    )
