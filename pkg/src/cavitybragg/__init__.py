"""Collective scattering of tweezer atom arrays into a two-mode ring cavity."""

from .cavity import (
    CavityParams,
    DriveParams,
    EffectiveParams,
    chiral_scattering_spectrum,
    effective_params,
    empty_cavity_spectrum,
    mode_photon_numbers,
)
from .geometry import (
    AtomArray,
    Mode,
    ProbeGeometry,
    angle_from_period_ratio,
    bragg_scan,
    debye_waller,
    ideal_scaling,
    interference_period,
    structure_factor,
    thermal_bragg_scaling,
)
from .multilevel import (
    LevelData,
    ZeemanDistribution,
    cg_squared,
    clebsch_gordan,
    interference_contrast,
    multilevel_scaling,
    rayleigh_amplitudes,
)
from .scenario import Scenario, format_scenario, parse_scenario
from .series import SpectrumSeries, add_noise
from .tables import DataTable, read_table, write_table
from .thermal import (
    ThermalMode,
    cavity_spectrum,
    cooling_limit,
    franck_condon_oracle,
    ground_state_probability,
    phonon_from_sidebands,
    phonon_to_temperature,
    sideband_fraction,
)

__version__ = "0.1.0"
