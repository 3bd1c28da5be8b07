"""Classical harmonic oscillator whose trajectories are captured on the
half-integer energy levels of the quantum oscillator."""

from .errors import (
    DegenerateInput,
    EmptySeries,
    NonFiniteState,
    NoTransitions,
    QfoscError,
    SignChange,
)
from .model import (
    DimensionalParams,
    Level,
    ModelParams,
    OscState,
    alpha_from_dimensional,
    deriv,
    energy_rate,
    friction_accel,
    nearest_level,
    stationary_level_energy,
    total_energy,
)
from .integrator import (
    IntegratorConfig,
    NoiseSpec,
    ResidenceSegment,
    ResidenceTracker,
    Trajectory,
    TrajectorySample,
    integrate,
    rk4_step,
    track_residences,
)
from .experiments import (
    LifetimeRecord,
    PowerLawFit,
    SettleRow,
    fit_A_vs_alpha,
    fit_power_law,
    ground_asymptote_exponent,
    lifetime_study,
    relax_trace,
    settle_sweep,
)
from .franckhertz import (
    InteractionWindow,
    ScatterConfig,
    ScatterResult,
    SweepRow,
    collide,
    electron_energy_rate,
    fh_sweep,
    ground_state_at_phase,
    scatter_ensemble,
    scatter_once,
)

__version__ = "0.1.0"
