"""Mean-field, fluctuation and quantum tools for Kerr parametric oscillator networks."""

from ._kpo import (
    ConfigError,
    FluctuationSpectrum,
    NetworkParams,
    NormalModeBasis,
    NumericalError,
    SteadyState,
    all_to_all_coupling,
    chain_coupling,
    find_steady_states,
    fluctuation_spectrum,
    integrated_power,
    load_config,
    lobe_threshold,
    normal_modes,
    origin_instability_drive,
    run,
    subcommands,
)

__all__ = [
    "ConfigError",
    "FluctuationSpectrum",
    "NetworkParams",
    "NormalModeBasis",
    "NumericalError",
    "SteadyState",
    "all_to_all_coupling",
    "chain_coupling",
    "find_steady_states",
    "fluctuation_spectrum",
    "integrated_power",
    "load_config",
    "lobe_threshold",
    "normal_modes",
    "origin_instability_drive",
    "run",
    "subcommands",
]
