"""Declarative scenario sweeps: parsing, presets, execution, artifacts.

A scenario is one base system, one sweep axis with explicit values, and a
set of variants (small config overrides such as a different antenna count
or the known-activity baseline).  Running it produces one CSV per variant
(and per beamformer for rate sweeps) plus a JSON manifest from which every
CSV number can be recomputed.  All randomness derives from the single
scenario seed, so re-running a scenario reproduces its CSVs byte for byte.

Scenario files are flat INI-style key-value files with one section per
concern::

    [system]
    n_users = 2000
    n_antennas = 128
    activity_prob = 0.05        # or: n_active = 100
    pilot_len = 200             # default 200
    coherence_len = 1000        # default 1000
    pilot_power_dbm = 23        # or: pilot_power_watts
    data_power_dbm = 23         # or: data_power_watts
    noise_psd_dbm_hz = -169     # or: noise_power_watts
    bandwidth_hz = 1e6

    [run]
    seed = 1
    mode = both                 # analytic | monte_carlo | both
    quantity = rates            # rates | fixed_point
    beamformers = mrc, mmse
    trials = 200
    j_intervals = 1

    [sweep]
    axis = pilot_len            # pilot_len | j_intervals | n_antennas | epsilon
    values = 120, 160, 200, 300, 400

    [output]
    directory = out
    formats = csv, json

Only n_users, n_antennas and one of n_active/activity_prob are mandatory.
"""

from __future__ import annotations

import configparser
import json
import sys
import time
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import __version__
from .monte_carlo import average_rates
from .params import (
    DEFAULT_PATHLOSS,
    PathlossPopulation,
    SystemConfig,
    sample_population,
)
from .rates import finite_system_rates, high_snr_rates, known_activity_rates
from .state_evolution import (
    AnalyticBetaLaw,
    ConvergenceError,
    StateEvolutionInput,
    estimation_stats,
    high_snr_tau2,
    solve_state_evolution,
)

__all__ = [
    "ConfigError",
    "PRESET_NAMES",
    "ScenarioSweep",
    "ScenarioVariant",
    "SweepPointError",
    "load_scenario",
    "preset",
    "run_scenario",
]

SWEEP_AXES = ("pilot_len", "j_intervals", "n_antennas", "epsilon")
MODES = ("analytic", "monte_carlo", "both")
QUANTITIES = ("rates", "fixed_point")
PRESET_NAMES = (
    "fig_fixed_point",
    "fig_mrc_sumrate",
    "fig_mmse_sumrate",
    "fig_scheduling",
)


class ConfigError(Exception):
    """A scenario cannot be built from its inputs (CLI exit code 1)."""


class SweepPointError(RuntimeError):
    """A numerical failure at a named sweep point (CLI exit code 2)."""


@dataclass(frozen=True, eq=False)
class ScenarioVariant:
    """A labeled override of the base system for one output curve."""

    label: str
    overrides: dict = field(default_factory=dict)
    activity_known: bool = False


def _apply_variant(config: SystemConfig, variant: ScenarioVariant) -> SystemConfig:
    overrides = dict(variant.overrides)
    if "activity_prob" in overrides:
        overrides.setdefault("n_active", None)
    if "n_active" in overrides and overrides["n_active"] is not None:
        overrides.setdefault("activity_prob", None)
    return replace(config, **overrides)


def _apply_axis(config: SystemConfig, axis: str, value) -> SystemConfig:
    if axis == "pilot_len":
        return replace(config, pilot_len=int(value))
    if axis == "n_antennas":
        return replace(config, n_antennas=int(value))
    if axis == "epsilon":
        return replace(config, activity_prob=float(value), n_active=None)
    if axis == "j_intervals":
        return config  # handled as the interval count, not a config field
    raise ValueError(f"unknown sweep axis {axis!r}")


@dataclass(frozen=True, eq=False)
class ScenarioSweep:
    """A validated, runnable sweep description."""

    name: str
    config: SystemConfig
    sweep_axis: str
    sweep_values: tuple
    seed: int = 1
    mode: str = "both"
    quantity: str = "rates"
    beamformers: tuple[str, ...] = ("mrc", "mmse")
    j_intervals: int = 1
    trials: int = 200
    output_dir: str = "out"
    formats: tuple[str, ...] = ("csv", "json")
    variants: tuple[ScenarioVariant, ...] = (ScenarioVariant("base"),)
    per_trial: bool = False

    def __post_init__(self):
        if self.sweep_axis not in SWEEP_AXES:
            raise ConfigError(
                f"[sweep] axis must be one of {SWEEP_AXES}, got {self.sweep_axis!r}"
            )
        if len(self.sweep_values) == 0:
            raise ConfigError("sweep_axis requires at least one value")
        if self.mode not in MODES:
            raise ConfigError(f"[run] mode must be one of {MODES}, got {self.mode!r}")
        if self.quantity not in QUANTITIES:
            raise ConfigError(
                f"[run] quantity must be one of {QUANTITIES}, got {self.quantity!r}"
            )
        if not self.beamformers:
            raise ConfigError("[run] beamformers must name at least one receiver")
        for bf in self.beamformers:
            if bf not in ("mrc", "mmse"):
                raise ConfigError(f"[run] unknown beamformer {bf!r}")
        if self.trials < 2:
            raise ConfigError("[run] trials must be >= 2")
        if self.j_intervals < 1:
            raise ConfigError("[run] j_intervals must be >= 1")
        known = any(v.activity_known for v in self.variants)
        if known and (self.sweep_axis == "j_intervals" or self.j_intervals != 1):
            raise ConfigError(
                "known-activity variants assume a single interval; "
                "drop them or set j_intervals = 1"
            )
        if self.sweep_axis == "j_intervals":
            for v in self.sweep_values:
                if int(v) != v or int(v) < 1:
                    raise ConfigError(f"[sweep] j_intervals value {v!r} must be an integer >= 1")
        else:
            for variant in self.variants:
                base = _apply_variant(self.config, variant)
                for v in self.sweep_values:
                    try:
                        _apply_axis(base, self.sweep_axis, v)
                    except (ValueError, TypeError) as exc:
                        raise ConfigError(
                            f"[sweep] value {v!r} invalid for variant "
                            f"{variant.label!r}: {exc}"
                        ) from exc


# ---------------------------------------------------------------------------
# Scenario files
# ---------------------------------------------------------------------------

_SYSTEM_KEYS = {
    "n_users", "n_active", "activity_prob", "pilot_len", "coherence_len",
    "n_antennas", "pilot_power_dbm", "pilot_power_watts", "data_power_dbm",
    "data_power_watts", "noise_psd_dbm_hz", "bandwidth_hz", "noise_power_watts",
}
_RUN_KEYS = {"seed", "mode", "quantity", "beamformers", "trials", "j_intervals",
             "per_trial"}
_SWEEP_KEYS = {"axis", "values"}
_OUTPUT_KEYS = {"directory", "formats"}


def _to_int(section: str, key: str, raw: str) -> int:
    try:
        value = float(raw)
    except ValueError as exc:
        raise ConfigError(f"[{section}] {key}: cannot parse {raw!r} as a number") from exc
    if value != int(value):
        raise ConfigError(f"[{section}] {key}: {raw!r} is not an integer")
    return int(value)


def _to_float(section: str, key: str, raw: str) -> float:
    try:
        return float(raw)
    except ValueError as exc:
        raise ConfigError(f"[{section}] {key}: cannot parse {raw!r} as a number") from exc


def _to_list(raw: str) -> list[str]:
    return [tok for tok in raw.replace(",", " ").split() if tok]


def load_scenario(path) -> ScenarioSweep:
    """Parse a scenario file; raises ConfigError with field diagnostics."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read scenario file {path}: {exc}") from exc
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string(text, source=str(path))
    except configparser.Error as exc:
        raise ConfigError(f"scenario file does not parse: {exc}") from exc

    known_sections = {"system": _SYSTEM_KEYS, "run": _RUN_KEYS,
                      "sweep": _SWEEP_KEYS, "output": _OUTPUT_KEYS}
    for section in parser.sections():
        if section not in known_sections:
            raise ConfigError(f"unknown section [{section}]")
        extra = set(parser[section]) - known_sections[section]
        if extra:
            raise ConfigError(f"unknown keys in [{section}]: {sorted(extra)}")

    def get(section, key, default=None):
        if parser.has_option(section, key):
            return parser.get(section, key)
        return default

    if "system" not in parser:
        raise ConfigError("missing required section [system]")
    n_users_raw = get("system", "n_users")
    n_antennas_raw = get("system", "n_antennas")
    if n_users_raw is None or n_antennas_raw is None:
        raise ConfigError("[system] n_users and n_antennas are required")
    n_active_raw = get("system", "n_active")
    activity_raw = get("system", "activity_prob")
    if (n_active_raw is None) == (activity_raw is None):
        raise ConfigError("[system] give exactly one of n_active and activity_prob")

    if get("system", "pilot_power_watts") is not None:
        pilot_power = _to_float("system", "pilot_power_watts",
                                get("system", "pilot_power_watts"))
    else:
        from .params import dbm_to_watts
        pilot_power = dbm_to_watts(
            _to_float("system", "pilot_power_dbm", get("system", "pilot_power_dbm", "23"))
        )
    if get("system", "data_power_watts") is not None:
        data_power = _to_float("system", "data_power_watts",
                               get("system", "data_power_watts"))
    else:
        from .params import dbm_to_watts
        data_power = dbm_to_watts(
            _to_float("system", "data_power_dbm", get("system", "data_power_dbm", "23"))
        )
    if get("system", "noise_power_watts") is not None:
        sigma2 = _to_float("system", "noise_power_watts",
                           get("system", "noise_power_watts"))
    else:
        from .params import noise_power
        sigma2 = noise_power(
            _to_float("system", "noise_psd_dbm_hz",
                      get("system", "noise_psd_dbm_hz", "-169")),
            _to_float("system", "bandwidth_hz", get("system", "bandwidth_hz", "1e6")),
        )

    try:
        config = SystemConfig(
            n_users=_to_int("system", "n_users", n_users_raw),
            pilot_len=_to_int("system", "pilot_len", get("system", "pilot_len", "200")),
            coherence_len=_to_int("system", "coherence_len",
                                  get("system", "coherence_len", "1000")),
            n_antennas=_to_int("system", "n_antennas", n_antennas_raw),
            pilot_power=pilot_power,
            data_power=data_power,
            noise_power=sigma2,
            n_active=(None if n_active_raw is None
                      else _to_int("system", "n_active", n_active_raw)),
            activity_prob=(None if activity_raw is None
                           else _to_float("system", "activity_prob", activity_raw)),
        )
    except ValueError as exc:
        raise ConfigError(f"[system] {exc}") from exc

    axis = get("sweep", "axis", "pilot_len") if "sweep" in parser else "pilot_len"
    values_raw = get("sweep", "values") if "sweep" in parser else None
    if values_raw is None:
        values = (config.pilot_len,) if axis == "pilot_len" else ()
    else:
        tokens = _to_list(values_raw)
        if axis == "epsilon":
            values = tuple(_to_float("sweep", "values", tok) for tok in tokens)
        else:
            values = tuple(_to_int("sweep", "values", tok) for tok in tokens)

    beamformers = tuple(_to_list(get("run", "beamformers", "mrc mmse")
                                 if "run" in parser else "mrc mmse"))

    def run_get(key, default):
        return get("run", key, default) if "run" in parser else default

    def out_get(key, default):
        return get("output", key, default) if "output" in parser else default

    per_trial_raw = str(run_get("per_trial", "false")).strip().lower()
    if per_trial_raw not in ("true", "false", "yes", "no", "1", "0"):
        raise ConfigError(f"[run] per_trial: cannot parse {per_trial_raw!r} as a boolean")

    return ScenarioSweep(
        name=path.stem,
        config=config,
        sweep_axis=axis,
        sweep_values=values,
        seed=_to_int("run", "seed", run_get("seed", "1")),
        mode=run_get("mode", "both"),
        quantity=run_get("quantity", "rates"),
        beamformers=beamformers,
        j_intervals=_to_int("run", "j_intervals", run_get("j_intervals", "1")),
        trials=_to_int("run", "trials", run_get("trials", "200")),
        output_dir=out_get("directory", "out"),
        formats=tuple(_to_list(out_get("formats", "csv json"))),
        per_trial=per_trial_raw in ("true", "yes", "1"),
    )


# ---------------------------------------------------------------------------
# Presets
# ---------------------------------------------------------------------------

_BASE_DB = dict(
    n_users=2000,
    coherence_len=1000,
    pilot_power_dbm=23.0,
    data_power_dbm=23.0,
    noise_psd_dbm_hz=-169.0,
    bandwidth_hz=1e6,
)

# Seeds under which the Binomial(N, eps) activity draw lands exactly on
# round(eps*N), keeping the realized populations at the nominal sizes.
_PRESET_SEEDS = {0.05: 1, 0.075: 20, 0.15: 48}


def preset(name: str, output_dir: str = "out") -> ScenarioSweep:
    """A bundled reference scenario; see PRESET_NAMES for the choices."""
    if name == "fig_fixed_point":
        config = SystemConfig.from_db_units(
            pilot_len=200, n_antennas=128, activity_prob=0.05, **_BASE_DB
        )
        return ScenarioSweep(
            name=name,
            config=config,
            sweep_axis="pilot_len",
            sweep_values=(120, 160, 200, 240, 280, 320, 360, 400),
            seed=_PRESET_SEEDS[0.05],
            mode="analytic",
            quantity="fixed_point",
            beamformers=("mrc",),
            output_dir=output_dir,
            variants=(
                ScenarioVariant("eps0.05"),
                ScenarioVariant("eps0.075", {"activity_prob": 0.075}),
            ),
        )
    if name in ("fig_mrc_sumrate", "fig_mmse_sumrate"):
        config = SystemConfig.from_db_units(
            pilot_len=200, n_antennas=128, activity_prob=0.05, **_BASE_DB
        )
        return ScenarioSweep(
            name=name,
            config=config,
            sweep_axis="pilot_len",
            sweep_values=tuple(range(110, 401, 10)),
            seed=_PRESET_SEEDS[0.05],
            mode="both",
            quantity="rates",
            beamformers=("mrc",) if name == "fig_mrc_sumrate" else ("mmse",),
            output_dir=output_dir,
            variants=(
                ScenarioVariant("m128"),
                ScenarioVariant("m128_known", activity_known=True),
                ScenarioVariant("m256", {"n_antennas": 256}),
                ScenarioVariant("m256_known", {"n_antennas": 256}, activity_known=True),
            ),
        )
    if name == "fig_scheduling":
        config = SystemConfig.from_db_units(
            pilot_len=400, n_antennas=64, activity_prob=0.15, **_BASE_DB
        )
        return ScenarioSweep(
            name=name,
            config=config,
            sweep_axis="j_intervals",
            sweep_values=tuple(range(1, 11)),
            seed=_PRESET_SEEDS[0.15],
            mode="both",
            quantity="rates",
            beamformers=("mrc", "mmse"),
            output_dir=output_dir,
        )
    raise ConfigError(f"unknown preset {name!r}; choose from {PRESET_NAMES}")


# ---------------------------------------------------------------------------
# Execution
# ---------------------------------------------------------------------------

def _fmt(value) -> str:
    if isinstance(value, float):
        return f"{value:.17g}"
    return str(value)


def _config_echo(config: SystemConfig) -> dict:
    return {
        "n_users": config.n_users,
        "pilot_len": config.pilot_len,
        "coherence_len": config.coherence_len,
        "n_antennas": config.n_antennas,
        "pilot_power_watts": config.pilot_power,
        "data_power_watts": config.data_power,
        "noise_power_watts": config.noise_power,
        "n_active": config.n_active,
        "activity_prob": config.activity_prob,
        "pathloss": {
            "d_min_km": DEFAULT_PATHLOSS.d_min_km,
            "d_max_km": DEFAULT_PATHLOSS.d_max_km,
            "intercept_db": DEFAULT_PATHLOSS.intercept_db,
            "slope_db": DEFAULT_PATHLOSS.slope_db,
            "sampling": DEFAULT_PATHLOSS.sampling,
        },
    }


def _population_for(config: SystemConfig, seed: int, cache: dict) -> PathlossPopulation:
    key = (config.n_users, config.n_active, config.activity_prob, seed)
    if key not in cache:
        cache[key] = sample_population(config, seed)
    return cache[key]


def _fixed_point_rows(sweep: ScenarioSweep, variant: ScenarioVariant):
    base = _apply_variant(sweep.config, variant)
    law = AnalyticBetaLaw(model=DEFAULT_PATHLOSS)
    rows, traces = [], []
    for value in sweep.sweep_values:
        cfg = _apply_axis(base, sweep.sweep_axis, value)
        try:
            result = solve_state_evolution(StateEvolutionInput.from_config(cfg, law))
        except (ConvergenceError, ValueError) as exc:
            raise SweepPointError(
                f"variant {variant.label!r} at {sweep.sweep_axis}={value}: {exc}"
            ) from exc
        try:
            approx = high_snr_tau2(cfg)
        except ValueError:
            approx = float("nan")  # undefined where L <= K
        rows.append((value, result.tau2, approx))
        traces.append((value, result))
    return rows, traces


def _rates_row(sweep, variant, cfg, population, beamformer, j_intervals, value):
    analytic = high = mc_rate = mc_halfwidth = float("nan")
    trial_csv = None
    try:
        if variant.activity_known:
            report = known_activity_rates(cfg, population, beamformer)
            analytic = high = report.sum_rate
            tau_stats = cfg.noise_power / (cfg.pilot_power * cfg.pilot_len)
        else:
            se_input = StateEvolutionInput.from_config(cfg, population)
            se = solve_state_evolution(se_input)
            tau_stats = se.tau2
            analytic = finite_system_rates(
                cfg, population, beamformer, j_intervals, tau2=se.tau2
            ).sum_rate
            high = high_snr_rates(cfg, population, beamformer, j_intervals).sum_rate
        if sweep.mode != "analytic":
            stats = estimation_stats(population, tau_stats)
            mc = average_rates(
                stats, cfg, beamformer, j_intervals,
                n_trials=sweep.trials, seed=sweep.seed,
                keep_trials=sweep.per_trial,
            )
            mc_rate, mc_halfwidth = mc.sum_rate, mc.sum_rate_halfwidth
            if sweep.per_trial:
                trial_csv = mc.to_trial_csv()
    except (ConvergenceError, ValueError) as exc:
        raise SweepPointError(
            f"variant {variant.label!r}/{beamformer} at "
            f"{sweep.sweep_axis}={value}: {exc}"
        ) from exc
    if sweep.mode == "monte_carlo":
        analytic = high = float("nan")
    return (value, analytic, high, mc_rate, mc_halfwidth), trial_csv


def run_scenario(sweep: ScenarioSweep) -> dict:
    """Execute every sweep point, then write all artifacts in one pass.

    Returns the manifest.  Raises ConfigError for unusable inputs and
    SweepPointError (naming the offending point) for numerical failures;
    nothing is written unless every point succeeded.
    """
    start = time.perf_counter()
    files: dict[str, str] = {}
    population_cache: dict = {}

    for variant in sweep.variants:
        if sweep.quantity == "fixed_point":
            rows, traces = _fixed_point_rows(sweep, variant)
            lines = ["sweep_value,tau2_state_evolution,tau2_high_snr"]
            lines += [f"{_fmt(v)},{t:.17g},{a:.17g}" for v, t, a in rows]
            files[f"{sweep.name}_{variant.label}.csv"] = "\n".join(lines) + "\n"
            for value, result in traces:
                tl = ["iteration,tau2"]
                tl += [f"{i},{t:.17g}" for i, t in result.trace_rows()]
                files[f"{sweep.name}_{variant.label}_trace_{sweep.sweep_axis}"
                      f"{_fmt(value)}.csv"] = "\n".join(tl) + "\n"
            continue

        base = _apply_variant(sweep.config, variant)
        for beamformer in sweep.beamformers:
            rows = []
            for value in sweep.sweep_values:
                cfg = _apply_axis(base, sweep.sweep_axis, value)
                j_intervals = (int(value) if sweep.sweep_axis == "j_intervals"
                               else sweep.j_intervals)
                try:
                    population = _population_for(cfg, sweep.seed, population_cache)
                except (RuntimeError, ValueError) as exc:
                    raise SweepPointError(
                        f"variant {variant.label!r} at "
                        f"{sweep.sweep_axis}={value}: {exc}"
                    ) from exc
                row, trial_csv = _rates_row(
                    sweep, variant, cfg, population, beamformer, j_intervals, value
                )
                rows.append(row)
                if trial_csv is not None:
                    files[f"{sweep.name}_{variant.label}_{beamformer}_trials_"
                          f"{sweep.sweep_axis}{_fmt(value)}.csv"] = trial_csv
            lines = ["sweep_value,sum_rate_analytic,sum_rate_high_snr,"
                     "sum_rate_monte_carlo,mc_halfwidth"]
            for value, analytic, high, mc_rate, mc_hw in rows:
                lines.append(f"{_fmt(value)},{analytic:.17g},{high:.17g},"
                             f"{mc_rate:.17g},{mc_hw:.17g}")
            files[f"{sweep.name}_{variant.label}_{beamformer}.csv"] = (
                "\n".join(lines) + "\n"
            )

    manifest = {
        "scenario": sweep.name,
        "seed": sweep.seed,
        "mode": sweep.mode,
        "quantity": sweep.quantity,
        "trials": sweep.trials,
        "j_intervals": sweep.j_intervals,
        "beamformers": list(sweep.beamformers),
        "sweep": {"axis": sweep.sweep_axis, "values": list(sweep.sweep_values)},
        "variants": [
            {"label": v.label, "overrides": dict(v.overrides),
             "activity_known": v.activity_known}
            for v in sweep.variants
        ],
        "config": _config_echo(sweep.config),
        "outputs": sorted(files),
        "versions": {
            "mcmimo": __version__,
            "numpy": np.__version__,
            "python": sys.version.split()[0],
        },
        "wall_time_s": None,  # filled just before writing
    }

    out_dir = Path(sweep.output_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        if "csv" in sweep.formats:
            for filename, text in files.items():
                (out_dir / filename).write_text(text)
        manifest["wall_time_s"] = time.perf_counter() - start
        if "json" in sweep.formats:
            (out_dir / f"{sweep.name}_manifest.json").write_text(
                json.dumps(manifest, indent=2, sort_keys=True) + "\n"
            )
    except OSError as exc:
        raise ConfigError(f"cannot write outputs under {out_dir}: {exc}") from exc
    return manifest
