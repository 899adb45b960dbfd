"""Evanescent-field mode solver and two-mode optical trap analysis.

The subpackages layer bottom-up: numerics (special functions, roots,
quadrature), modes (guided-mode eigenproblem and vector fields),
superposition (two-mode interference), potential (light shift plus surface
attraction), trapanalysis (minima, depths, frequencies, extents, heating),
and config/cli (presets, config files, command surface). The names below
cover the common workflow; the submodules stay importable for the rest.
"""

from .config import (RunConfig, load_config, make_field, preset,
                     PRESET_NAMES, save_config)
from .errors import (ConfigError, ConvergenceError, CutoffError,
                     FibertrapError, IntegrationError, NoTrapError,
                     SaddleError)
from .modes import (FiberSpec, LightSpec, ModeId, ModeSolution, cutoff_v,
                    dispersion_sweep, e_field, h_field, mode_power,
                    normalize_power, parse_mode_name, solve_mode,
                    supported_modes, v_parameter)
from .potential import (AtomSpec, PotentialField, SpectralLine,
                        as_millikelvin, cesium, dipole_potential,
                        from_millikelvin, intensity, local_scattering_rate,
                        potential_gradient, total_potential, vdw_potential)
from .superposition import (ModePair, beat_length, make_pair, mean_intensity,
                            total_e_field)
from .trapanalysis import (EscapeResult, SeedRegion, ThermalState, TrapReport,
                           characterize_trap, escape_barrier, find_minimum,
                           harmonic_extents, lifetime,
                           orbit_averaged_scattering, power_split_sigma,
                           tau_sensitivity, thermal_extents,
                           trap_frequencies, turning_points)

__version__ = "0.1.0"

__all__ = [
    "AtomSpec", "ConfigError", "ConvergenceError", "CutoffError",
    "EscapeResult", "FiberSpec", "FibertrapError", "IntegrationError",
    "LightSpec", "ModeId", "ModePair", "ModeSolution", "NoTrapError",
    "PRESET_NAMES", "PotentialField", "RunConfig", "SaddleError",
    "SeedRegion", "SpectralLine", "ThermalState", "TrapReport",
    "as_millikelvin", "beat_length", "cesium", "characterize_trap",
    "cutoff_v", "dipole_potential", "dispersion_sweep", "e_field",
    "escape_barrier", "find_minimum", "from_millikelvin", "h_field",
    "harmonic_extents", "intensity", "lifetime", "load_config",
    "local_scattering_rate", "make_field", "make_pair", "mean_intensity",
    "mode_power", "normalize_power", "orbit_averaged_scattering",
    "parse_mode_name", "potential_gradient", "power_split_sigma", "preset",
    "save_config", "solve_mode", "supported_modes", "tau_sensitivity",
    "thermal_extents", "total_e_field", "total_potential", "trap_frequencies",
    "turning_points", "v_parameter", "vdw_potential", "__version__",
]
