"""Hybrid and smooth gradient observers for SLAM on SE_{1+n}(3)."""

from slamobs.lie import (
    AlgebraElement,
    GroupElement,
    adjoint,
    algebra_exp,
    canonical_r,
    compose_psi,
    frobenius_inner,
    group_inverse,
    group_mul,
    project_upsilon,
    rodrigues,
    skew,
    vex,
)
from slamobs.kinematics import (
    BiasVector,
    MeasurementSet,
    NoiseModel,
    TrajectoryPreset,
    TrueState,
    measure_landmarks,
    measure_velocity,
    propagate_true,
    true_velocity,
)
from slamobs.observer import (
    BiasEstimate,
    HybridObserver,
    HybridObserverState,
    ObserverGains,
    build_cost_matrix,
    cost_U,
    cost_from_measurements,
    extract_bias,
    flow_map,
    gradient_U,
    in_jump_set,
    innovation_delta,
    jump_candidates,
    jump_map,
    lyapunov_V,
)
from slamobs.hybrid import HybridRunConfig, HybridTime, HybridTrace, ZenoError, run, step

__version__ = "0.1.0"
