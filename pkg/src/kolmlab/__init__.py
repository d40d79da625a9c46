"""kolmlab: a verification lab for kinetic transport-diffusion estimates.

The library evaluates the free kinetic equation

    (d/dt + v . grad_x - Lap_v) g = 0        on R^d_x x R^d_v

through its exact frequency-side flow, and measures quantitative
unique-continuation statements against that flow: frequency-band decay,
spectral inequalities on thick observation sets, an interpolation bound
between a restricted norm and the initial norm, and a telescoping
observability estimate over measurable time sets.

Layout:

- :mod:`kolmlab.grid`        periodic phase-space grids, transforms, norms
- :mod:`kolmlab.mixtures`    closed-form Gaussian mixture states
- :mod:`kolmlab.propagator`  exact, pseudo-spectral, and FD evolution; decay
- :mod:`kolmlab.thickness`   observation-set geometry and thickness checks
- :mod:`kolmlab.inequality`  spectral ratios, fitted constants, interpolation
- :mod:`kolmlab.telescope`   time-set sequences and observability constants
- :mod:`kolmlab.snapshots`   deterministic on-disk field format
- :mod:`kolmlab.config`      experiment config schema
- :mod:`kolmlab.cli`         `kolmlab` command-line front end
"""

__version__ = "0.1.0"

from .errors import (
    AliasingGuardError,
    BoundaryGuardError,
    CflError,
    ConfigError,
    DataError,
    GeometryError,
    GridMismatchError,
    GuardError,
    KolmlabError,
    MeasureConditionError,
    QuadratureGuardError,
    RestrictedNormZeroError,
)
from .grid import (
    NormReport,
    PhaseField,
    PhaseGrid,
    SpectralField,
    band_mass,
    band_project,
    boundary_energy_fraction,
    fourier_forward,
    fourier_inverse,
    l2_norm,
    norm_report,
    parseval_inner,
    require_resolved,
)
from .mixtures import (
    GaussianMixtureState,
    GaussianTerm,
    evaluate_mixture,
    fitting_grid,
    mixture_norm,
    mixture_to_phase,
    mixture_to_spectral,
    physical_norm,
    random_mixture_state,
    scale_state,
    state_difference,
)
from .propagator import (
    DecayConstants,
    SymbolEvaluation,
    decay_bound,
    fd_solve,
    pointwise_decay_ok,
    propagate_grid,
    propagate_mixture,
    spectral_trajectory_norms,
    symbol,
    tail_mass,
    time_scale,
)
from .thickness import (
    FullSpace,
    GridMask,
    HalfSpace,
    PeriodicBalls,
    PeriodicMask,
    ThicknessVerdict,
    UnionBoxes,
    check_thickness,
    from_text,
    grid_mask,
    minimal_delta,
    scale_descriptor,
    to_text,
)
from .inequality import (
    ConstantLedger,
    EpsilonMinimum,
    InterpolationBound,
    InterpolationReport,
    SpectralTestReport,
    assemble_interpolation_bound,
    balance_constant,
    epsilon_minimize,
    epsilon_objective,
    fit_spectral_constant,
    ledger_from_fit,
    restricted_state_norm,
    spectral_ratio,
    verify_interpolation,
    young_gap,
)
from .telescope import (
    AuxiliaryChainRow,
    IntervalConstant,
    ObservabilityReport,
    TelescopeConstants,
    TelescopeSequence,
    TimeSet,
    assemble_constants,
    auxiliary_chain,
    build_sequence,
    cobs_interval,
    containment_index,
    find_density_point,
    interval_scaling_residual,
    select_l1,
    verify_observability,
)
from .snapshots import load_field, save_field
