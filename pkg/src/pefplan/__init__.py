"""Floorplanning with a Poisson-energy overlap penalty."""

from .energy import (
    OverlapCertificate,
    SpectralReport,
    module_energies,
    mollified_energy,
    overlap_certificate,
    poisson_energy,
    spectral_report,
)
from .errors import (
    DensityInfeasible,
    ErosionTooLarge,
    InfeasibleBox,
    InsufficientData,
    InvalidPinIndex,
    NegativeDensity,
    NonFiniteObjective,
    NonZeroMeanInput,
    PefError,
    PremiseNotMet,
)
from .field import Grid, ScalarField, density, mollified_indicator, residual, variance
from .flow import FlowConfig, FlowState, heat_flow_compare, wgf_run, wgf_step
from .geometry import AxisRect, Design, ModuleShape, eroded_overlap_area, overlap_area
from .optimize import (
    ObjectiveConfig,
    RunDiagnostics,
    StepSchedule,
    StopCriteria,
    evaluate,
    gradient,
    lipschitz_estimate,
    objective,
    pgd_run,
    project,
)
from .spectral import cosine_forward, cosine_inverse, neumann_eigenvalues, solve_poisson
from .wirelength import Net, Netlist, SmoothingConfig, hpwl, smooth_wl, smooth_wl_grad

__version__ = "0.1.0"
