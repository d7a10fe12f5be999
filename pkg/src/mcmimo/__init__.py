"""Achievable uplink rates for massive-connectivity massive MIMO.

The pieces, bottom to top: unit-safe system parameters and pathloss
populations (:mod:`.params`); the effective-noise fixed point and per-user
channel-estimation statistics (:mod:`.state_evolution`); asymptotic MRC and
MMSE SINR/rate formulas with scheduling and a known-activity baseline
(:mod:`.rates`); a finite-antenna Monte Carlo oracle (:mod:`.monte_carlo`);
pilot-length and scheduling optimizers (:mod:`.optimize`); and a scenario
runner with a CLI (:mod:`.scenario`, :mod:`.cli`).
"""

__version__ = "0.1.0"

from .params import (
    DEFAULT_PATHLOSS,
    PathlossModel,
    PathlossPopulation,
    SystemConfig,
    dbm_to_watts,
    edge_snr,
    noise_power,
    sample_population,
    watts_to_dbm,
)
from .state_evolution import (
    AnalyticBetaLaw,
    ChannelEstimateStats,
    ConvergenceError,
    FixedPointCheck,
    NoiseStateResult,
    StateEvolutionInput,
    check_fixed_point_uniqueness,
    estimation_stats,
    high_snr_tau2,
    solve_state_evolution,
)
from .rates import (
    RateQuery,
    RateReport,
    finite_system_rates,
    high_snr_rates,
    known_activity_rates,
    mmse_gamma_fixed_point,
    mmse_sinr_asymptotic,
    mrc_sinr_asymptotic,
    rate_report,
)
from .monte_carlo import (
    ChannelRealization,
    MonteCarloReport,
    average_rates,
    draw_realization,
    sinr_from_mean_powers,
    sinr_mmse_empirical,
    sinr_mrc_empirical,
)
from .optimize import (
    OptimizationResult,
    optimize_pilot_length_mmse,
    optimize_pilot_length_mrc,
    optimize_scheduling_mmse,
    optimize_scheduling_mrc,
)
from .scenario import (
    ConfigError,
    PRESET_NAMES,
    ScenarioSweep,
    ScenarioVariant,
    SweepPointError,
    load_scenario,
    preset,
    run_scenario,
)

__all__ = [name for name in dir() if not name.startswith("_")]
