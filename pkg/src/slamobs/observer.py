"""Gradient-based SLAM observer on SE_{1+n}(3), smooth and hybrid.

The observer state is ``(X_hat, Vb_hat, q)``. During flows::

    X_hat_dot  = X_hat (Vm - Vb_hat - Delta)
    Vb_hat_dot = -k_o * Upsilon(X_hat^T M X_hat^{-T})
    Delta      = -Ad_{X_hat^{-1}} Upsilon(M)
    M          = sum_i k_i (r_i - X_hat beta_i) r_i^T

and when the measured cost can be lowered by at least ``delta`` through one
of the candidates ``X_q`` the estimate jumps to the best candidate. The
smooth observer is the same flow with jumps disabled.

Everything needed online is computed from measurements only. The cost in
terms of the true error ``X_tilde = X_hat X^{-1}`` (:func:`cost_U`,
:func:`lyapunov_V`) is provided for diagnostics and tests.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from slamobs.constants import ROTATION_TOL, UNIT_AXIS_TOL
from slamobs.kinematics import BiasVector, MeasurementSet, TrueState
from slamobs.lie import (
    AlgebraElement,
    DimensionError,
    GroupElement,
    ValidationError,
    adjoint,
    canonical_r_matrix,
    group_inverse,
    group_mul,
    project_upsilon,
    rodrigues,
    vex,
)

log = logging.getLogger(__name__)


class InvalidMeasurementError(ValueError):
    """A landmark reading flagged invalid was used with ``on_invalid='raise'``."""


@dataclass(frozen=True)
class ObserverGains:
    """Observer tuning.

    ``theta`` and ``q_max`` define the jump candidates: candidate ``q`` rotates
    by ``0.2 * q * theta`` about ``ell``. With the defaults the candidates cover
    ``[0, pi]`` in steps of ``0.1 pi``.
    """

    k: tuple[float, ...] = (1.0, 1.0, 1.0, 1.0)
    k_o: float = 0.5
    delta: float = 0.1
    theta: float = math.pi / 2
    ell: tuple[float, float, float] = (0.0, 0.0, 1.0)
    q_max: int = 10

    def __post_init__(self):
        object.__setattr__(self, "k", tuple(float(x) for x in self.k))
        object.__setattr__(self, "ell", tuple(float(x) for x in self.ell))
        if any(not ki > 0 for ki in self.k):
            raise ValidationError("landmark weights k_i must be positive")
        if not 0.0 < self.k_o < 1.0:
            raise ValidationError("k_o must lie in (0, 1)")
        if not self.delta > 0 or not self.theta > 0:
            raise ValidationError("delta and theta must be positive")
        if abs(np.linalg.norm(self.ell) - 1.0) > UNIT_AXIS_TOL:
            raise ValidationError("ell must be a unit vector")
        if int(self.q_max) != self.q_max or self.q_max < 1:
            raise ValidationError("q_max must be a positive integer")

    @property
    def n(self) -> int:
        return len(self.k)

    @cached_property
    def k_array(self) -> np.ndarray:
        return np.asarray(self.k)

    @cached_property
    def candidate_rotations(self) -> np.ndarray:
        """Stack of ``Rodrigues(0.2 q theta, ell)`` for ``q = 0..q_max``."""
        return np.stack([rodrigues(0.2 * q * self.theta, self.ell)
                         for q in range(self.q_max + 1)])


@dataclass(frozen=True)
class HybridObserverState:
    Xhat: GroupElement
    Vbhat: AlgebraElement
    q: int = 0

    def __post_init__(self):
        if self.Xhat.n != self.Vbhat.n:
            raise DimensionError("Xhat and Vbhat disagree on the landmark count")


@dataclass(frozen=True)
class BiasEstimate:
    b_omega_hat: np.ndarray
    b_v_hat: np.ndarray


def _check_gains(gains: ObserverGains, n: int) -> None:
    if gains.n != n:
        raise DimensionError(f"{gains.n} landmark weights for {n} landmarks")


def build_cost_matrix(gains: ObserverGains, n: int) -> np.ndarray:
    """``A = sum_i k_i r_i r_i^T``."""
    _check_gains(gains, n)
    Rm = canonical_r_matrix(n)
    return (Rm * gains.k_array) @ Rm.T


def cost_U(Xtilde: GroupElement, A: np.ndarray) -> float:
    """``0.5 tr((I - X) A (I - X)^T)`` on the dense matrix."""
    E = np.eye(4 + Xtilde.n) - Xtilde.as_matrix()
    if A.shape != E.shape:
        raise DimensionError(f"cost matrix {A.shape} does not match group size {E.shape}")
    return 0.5 * float(np.sum((E @ A) * E))


def _residual_heads(Xhat: GroupElement, meas: MeasurementSet) -> np.ndarray:
    # first three entries of r_i - X_hat beta_i; the remaining entries vanish
    return Xhat.eta - Xhat.p[:, None] - Xhat.R @ meas.heads


def _weights(gains: ObserverGains, meas: MeasurementSet, on_invalid: str) -> np.ndarray:
    _check_gains(gains, meas.n)
    k = gains.k_array
    if meas.valid is None:
        return k
    bad = np.flatnonzero(~meas.valid)
    if on_invalid == "raise":
        raise InvalidMeasurementError(f"invalid landmark reading(s) {bad.tolist()} at t={meas.t}")
    log.warning("t=%.6f: skipping invalid landmark reading(s) %s", meas.t, bad.tolist())
    return np.where(meas.valid, k, 0.0)


def cost_from_measurements(Xhat: GroupElement, meas: MeasurementSet, gains: ObserverGains,
                           on_invalid: str = "skip") -> float:
    """``0.5 sum_i k_i ||r_i - X_hat beta_i||^2`` (no true state needed)."""
    k = _weights(gains, meas, on_invalid)
    D = _residual_heads(Xhat, meas)
    return 0.5 * float(np.sum(k * np.sum(D * D, axis=0)))


def gradient_U(Xtilde: GroupElement, A: np.ndarray) -> AlgebraElement:
    """Algebra part ``Upsilon((I - X^{-1}) A)`` of the gradient; the full
    Riemannian gradient is ``X`` times this element."""
    Xi = group_inverse(Xtilde).as_matrix()
    return project_upsilon((np.eye(Xi.shape[0]) - Xi) @ A)


def residual_matrix(Xhat: GroupElement, meas: MeasurementSet, gains: ObserverGains,
                    on_invalid: str = "skip") -> np.ndarray:
    """Dense ``M = sum_i k_i (r_i - X_hat beta_i) r_i^T``."""
    k = _weights(gains, meas, on_invalid)
    n = meas.n
    D = _residual_heads(Xhat, meas) * k
    M = np.zeros((4 + n, 4 + n))
    M[:3, 3] = D.sum(axis=1)
    M[:3, 4:] = -D
    return M


def innovation_delta(Xhat: GroupElement, meas: MeasurementSet, gains: ObserverGains,
                     on_invalid: str = "skip") -> AlgebraElement:
    """``Delta = -Ad_{X_hat^{-1}} Upsilon(M)``."""
    M = residual_matrix(Xhat, meas, gains, on_invalid)
    return -adjoint(group_inverse(Xhat), project_upsilon(M))


def _bias_rate(Xhat: GroupElement, M: np.ndarray, k_o: float) -> AlgebraElement:
    Xm = Xhat.as_matrix()
    Xinv = group_inverse(Xhat).as_matrix()
    P = project_upsilon(Xm.T @ M @ Xinv.T)
    # the bias only has angular and linear parts; the landmark block is dropped
    return AlgebraElement(-k_o * P.omega, -k_o * P.v, np.zeros_like(P.xi))


def flow_map(s: HybridObserverState, Vm: AlgebraElement, meas: MeasurementSet,
             gains: ObserverGains, on_invalid: str = "skip"):
    """Return ``(W, Vb_dot)`` with ``X_hat_dot = X_hat W``; ``q`` is constant."""
    M = residual_matrix(s.Xhat, meas, gains, on_invalid)
    delta = -adjoint(group_inverse(s.Xhat), project_upsilon(M))
    W = Vm - s.Vbhat - delta
    return W, _bias_rate(s.Xhat, M, gains.k_o)


def jump_candidates(s: HybridObserverState, gains: ObserverGains,
                    literal: bool = False) -> list[GroupElement]:
    """Candidates ``X_q`` for ``q = 0..q_max``.

    Candidate ``q`` has rotation ``Rq^T R_hat`` and position ``Rq p_hat`` with
    ``Rq = Rodrigues(0.2 q theta, ell)``. Landmarks are kept unless ``literal``
    is set, in which case they are scaled by ``2 q`` (which wipes the map
    estimate for ``q = 0``).
    """
    X = s.Xhat
    out = []
    for q, Rq in enumerate(gains.candidate_rotations):
        eta = 2.0 * q * X.eta if literal else X.eta
        out.append(GroupElement(Rq.T @ X.R, Rq @ X.p, eta))
    return out


def candidate_costs(s: HybridObserverState, meas: MeasurementSet, gains: ObserverGains,
                    literal: bool = False, on_invalid: str = "skip") -> np.ndarray:
    """Measured cost of every jump candidate (vectorized over ``q``)."""
    k = _weights(gains, meas, on_invalid)
    X = s.Xhat
    Rq = gains.candidate_rotations
    RH = X.R @ meas.heads
    qs = np.arange(Rq.shape[0])
    eta = (2.0 * qs)[:, None, None] * X.eta if literal else X.eta[None]
    D = eta - (Rq @ X.p)[:, :, None] - np.swapaxes(Rq, 1, 2) @ RH
    return 0.5 * np.einsum("qji,i->q", D * D, k)


def in_jump_set(s: HybridObserverState, meas: MeasurementSet, gains: ObserverGains,
                literal: bool = False, on_invalid: str = "skip"):
    """Return ``(in_D, argmin_q, u0, u_min)``.

    ``in_D`` is ``u0 - min_q u_q >= delta`` with ``u0`` the measured cost of the
    current estimate. Ties in the argmin go to the smallest ``q``.
    """
    u0 = cost_from_measurements(s.Xhat, meas, gains, on_invalid)
    uq = candidate_costs(s, meas, gains, literal, on_invalid)
    q = int(np.argmin(uq))
    return bool(u0 - uq[q] >= gains.delta), q, u0, float(uq[q])


def jump_map(s: HybridObserverState, argmin_q: int, gains: ObserverGains,
             literal: bool = False) -> HybridObserverState:
    X = s.Xhat
    Rq = gains.candidate_rotations[argmin_q]
    eta = 2.0 * argmin_q * X.eta if literal else X.eta
    return HybridObserverState(GroupElement(Rq.T @ X.R, Rq @ X.p, eta), s.Vbhat, argmin_q)


def bias_error(s: HybridObserverState, b: BiasVector) -> AlgebraElement:
    return b.as_algebra(s.Vbhat.n) - s.Vbhat


def lyapunov_V(s: HybridObserverState, true_state: TrueState, b: BiasVector,
               gains: ObserverGains, A: np.ndarray | None = None) -> float:
    """``U(X_hat X^{-1}) + 0.5 tr(Vb_err Vb_err^T)`` using the true state."""
    if A is None:
        A = build_cost_matrix(gains, s.Xhat.n)
    Xtilde = group_mul(s.Xhat, group_inverse(true_state.X))
    return cost_U(Xtilde, A) + 0.5 * bias_error(s, b).norm_sq()


def extract_bias(s: HybridObserverState) -> BiasEstimate:
    V = s.Vbhat.as_matrix()
    return BiasEstimate(vex(V[:3, :3]), V[:3, 3].copy())


@dataclass
class HybridObserver:
    """Hybrid system wrapper driven by :mod:`slamobs.hybrid`.

    ``mode='smooth'`` empties the jump set, which turns the hybrid observer
    into the underlying smooth gradient observer.
    """

    gains: ObserverGains
    mode: str = "hybrid"
    literal_jump_map: bool = False
    on_invalid: str = "skip"

    def __post_init__(self):
        if self.mode not in ("hybrid", "smooth"):
            raise ValueError(f"unknown observer mode {self.mode!r}")

    def flow(self, s: HybridObserverState, meas: MeasurementSet):
        return flow_map(s, meas.Vm, meas, self.gains, self.on_invalid)

    def jump_check(self, s: HybridObserverState, meas: MeasurementSet):
        if self.mode == "smooth":
            return False, True, None
        in_d, q, u0, umin = in_jump_set(s, meas, self.gains, self.literal_jump_map,
                                        self.on_invalid)
        return in_d, u0 - umin <= self.gains.delta, (q, u0, umin)

    def jump(self, s: HybridObserverState, info) -> HybridObserverState:
        q, u0, umin = info
        return jump_map(s, q, self.gains, self.literal_jump_map)

    def measured_cost(self, s: HybridObserverState, meas: MeasurementSet) -> float:
        return cost_from_measurements(s.Xhat, meas, self.gains, self.on_invalid)


def initial_state(Xhat: GroupElement, bias_guess: BiasVector | None = None) -> HybridObserverState:
    bias_guess = bias_guess or BiasVector.zero()
    if not np.allclose(Xhat.R.T @ Xhat.R, np.eye(3), atol=ROTATION_TOL):
        raise ValidationError("initial attitude estimate is not a rotation")
    return HybridObserverState(Xhat, bias_guess.as_algebra(Xhat.n), 0)


__all__ = [
    "BiasEstimate", "HybridObserver", "HybridObserverState", "InvalidMeasurementError",
    "ObserverGains", "bias_error", "build_cost_matrix", "candidate_costs", "cost_U",
    "cost_from_measurements", "extract_bias", "flow_map", "gradient_U", "in_jump_set",
    "initial_state", "innovation_delta", "jump_candidates", "jump_map", "lyapunov_V",
    "residual_matrix",
]
