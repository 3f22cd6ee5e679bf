"""Cavity cooling of a one-dimensional array of trapped atoms.

Linearized light-motion dynamics of N harmonically trapped atoms coupled to a
single pumped cavity mode: polaritonic decay rates, steady-state phonon
occupations, closed-form rate estimates and array-periodicity sweeps.
All rates and frequencies are expressed in units of the cavity decay rate.
"""

from .errors import (
    ApproximationBreakdown,
    CavityCoolError,
    ConfigInvalid,
    DimensionMismatch,
    EigenFailure,
    InvalidStep,
    NegativeOccupation,
    NoConvergence,
    NonPositiveRate,
    NotHurwitz,
    OutputUnwritable,
    SolverSingular,
    StepSizeUnderflow,
    StructureViolation,
    TrapDestabilized,
    WrongGeometry,
)
from .geometry import (
    ArrayGeometry,
    base_lattice,
    explicit_lattice,
    optimized_lattice,
    spacing_ratio,
)
from .model import (
    DerivedModel,
    SystemParams,
    ValidityReport,
    check_validity,
    derive_model,
    mean_field_residual,
    solve_mean_field,
)
from .dynamics import (
    LinearSystem,
    SteadyReport,
    build_linear_system,
    eigen_rates,
    integrate_moments,
    lyapunov_residual,
    phonon_numbers,
    steady_covariance,
    steady_report,
    thermal_covariance,
)
from .analytics import (
    CollectiveModel,
    SidebandSpectra,
    collective_predictions,
    feasibility_report,
    independent_rates,
    phonon_predictions,
    regime_classify,
    sideband_spectra,
)
from .modes import ModeTransform, build_transform, transformed_coupling_structure
from .sweep import RunConfig, emit_report, load_config, run_sweep

__version__ = "0.1.0"
