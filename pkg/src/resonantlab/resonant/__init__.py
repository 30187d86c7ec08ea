"""Truncated quintic resonant system: state, nonlinearity, stepping, diagnostics."""
from .plan import DirectPlan, FactoredPlan
from .system import (
    CONSERVED_NAMES,
    ConservedSet,
    DriftReport,
    StepMonitor,
    Trajectory,
    VecState,
    boundary_mode_fraction,
    conjugate,
    conserved_set,
    constant_state,
    dealias_mask,
    direct_plan,
    evolve,
    factored_plan,
    galilean_boost,
    gauge,
    multimode_gaussian,
    nonlinearity_direct,
    nonlinearity_factored,
    relative_drift,
    scalar_gaussian,
    step_count,
    step_strang,
    w_norm,
    zero_state,
)
