"""Translational states and optical spectra of an atom near a dielectric surface."""

from .errors import (
    CacheCorruptionError,
    CapacityError,
    ConfigError,
    ConsistencyError,
    DegeneratePotentialError,
    DomainError,
    NumericalError,
    ParameterError,
    ProfileFormatError,
    SurfatomError,
)
from .model import (
    AtomParams,
    FieldParams,
    PotentialParams,
    UnitSystem,
    boltzmann_energy_hz,
    cesium_silica,
    kinetic_coefficient,
    reflection_coefficient,
)
from .potential import SurfacePotential, centrifugal_radius
from .eigensolver import (
    Channel,
    Grid,
    GridPolicy,
    LevelSet,
    TranslationalState,
    capacity,
    channel_capacity,
    count_levels,
    make_channel,
    make_channels,
    solve_bound,
    solve_free,
    solve_free_state,
    solve_level,
)

from .cache import EigenstateCache, default_cache_dir
from .config import (
    CONFIG_SCHEMA,
    RunConfig,
    build_profile,
    build_runconfig,
    load_config,
    resolve_config,
    validate_config,
)
from .dynamics import (
    ReducedSystem,
    Trajectory,
    compare_adiabatic,
    integrate,
    standard_checks,
    toy_system,
    two_level_system,
)
from .franck_condon import FranckCondonMatrix, build_matrix, overlap
from .rates import (
    LevelRates,
    RateProfile,
    level_rates,
    load_profile,
    make_evanescent_profile,
    make_guided_profile,
    uniform_profile,
)
from .spectrum import (
    InitialMixture,
    SpectrumRequest,
    SpectrumResult,
    combine_mixtures,
    custom_mixture,
    excited_populations,
    flat_bound_mixture,
    scattering_rate,
    sweep,
    thermal_mixture,
)

__version__ = "0.1.0"
