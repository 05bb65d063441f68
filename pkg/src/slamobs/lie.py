"""Matrix Lie group arithmetic for SO(3), SE_{1+n}(3) and its Lie algebra.

Group elements are stored block-wise as ``(R, p, eta)`` and algebra elements as
``(omega, v, xi)``. The dense ``(4+n) x (4+n)`` matrices are only built on
request (``as_matrix``), which the projection and the tests use.

Layout of a group element with ``n`` landmarks::

    [ R  p  eta ]
    [ 0  1   0  ]
    [ 0  0   I  ]
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from slamobs.constants import (
    JACOBIAN_TAYLOR_TOL,
    REORTHO_TOL,
    ROTATION_TOL,
    UNIT_AXIS_TOL,
)


class ValidationError(ValueError):
    """Input violates a structural invariant (non-rotation, non-unit axis, ...)."""


class DimensionError(ValueError):
    """Operands have incompatible sizes or landmark counts."""


def skew(y) -> np.ndarray:
    """Return the 3x3 matrix ``S`` with ``S @ z == cross(y, z)``."""
    y1, y2, y3 = np.asarray(y, dtype=float).reshape(3)
    return np.array([[0.0, -y3, y2], [y3, 0.0, -y1], [-y2, y1, 0.0]])


def vex(A) -> np.ndarray:
    """Inverse of :func:`skew`, applied to the skew-symmetric part of ``A``."""
    A = np.asarray(A, dtype=float)
    return 0.5 * np.array([A[2, 1] - A[1, 2], A[0, 2] - A[2, 0], A[1, 0] - A[0, 1]])


def is_rotation(R, tol: float = ROTATION_TOL) -> bool:
    R = np.asarray(R, dtype=float)
    if R.shape != (3, 3) or not np.all(np.isfinite(R)):
        return False
    return (np.linalg.norm(R.T @ R - np.eye(3)) <= tol
            and abs(np.linalg.det(R) - 1.0) <= tol)


def nearest_rotation(R) -> np.ndarray:
    """Symmetric orthogonalization ``R (R^T R)^{-1/2}`` computed through the SVD."""
    U, _, Vt = np.linalg.svd(np.asarray(R, dtype=float))
    D = np.diag([1.0, 1.0, np.sign(np.linalg.det(U @ Vt))])
    return U @ D @ Vt


def reorthonormalize(R, tol: float = REORTHO_TOL) -> np.ndarray:
    """Project ``R`` back onto SO(3) only if its drift exceeds ``tol``."""
    if np.linalg.norm(R.T @ R - np.eye(3)) > tol:
        return nearest_rotation(R)
    return R


def rodrigues(theta: float, axis) -> np.ndarray:
    """Rotation by ``theta`` radians about the unit vector ``axis``."""
    axis = np.asarray(axis, dtype=float).reshape(3)
    if abs(np.linalg.norm(axis) - 1.0) > UNIT_AXIS_TOL:
        raise ValidationError(f"rotation axis must be unit length, got norm {np.linalg.norm(axis)!r}")
    K = skew(axis)
    return np.eye(3) + np.sin(theta) * K + (1.0 - np.cos(theta)) * (K @ K)


def rotation_angle(R) -> float:
    """Angle in ``[0, pi]`` of the rotation ``R``."""
    c = 0.5 * (np.trace(R) - 1.0)
    return float(np.arccos(np.clip(c, -1.0, 1.0)))


@dataclass(frozen=True)
class GroupElement:
    """Element ``Psi(R, p, eta)`` of SE_{1+n}(3)."""

    R: np.ndarray
    p: np.ndarray
    eta: np.ndarray

    @property
    def n(self) -> int:
        return self.eta.shape[1]

    @classmethod
    def identity(cls, n: int) -> GroupElement:
        return cls(np.eye(3), np.zeros(3), np.zeros((3, n)))

    def as_matrix(self) -> np.ndarray:
        n = self.n
        M = np.eye(4 + n)
        M[:3, :3] = self.R
        M[:3, 3] = self.p
        M[:3, 4:] = self.eta
        return M

    @classmethod
    def from_matrix(cls, M) -> GroupElement:
        M = np.asarray(M, dtype=float)
        return compose_psi(M[:3, :3], M[:3, 3], M[:3, 4:])

    def inverse(self) -> GroupElement:
        return group_inverse(self)

    def __matmul__(self, other: GroupElement) -> GroupElement:
        return group_mul(self, other)


@dataclass(frozen=True)
class AlgebraElement:
    """Element ``V(omega, v, xi)`` of se_{1+n}(3)."""

    omega: np.ndarray
    v: np.ndarray
    xi: np.ndarray

    @property
    def n(self) -> int:
        return self.xi.shape[1]

    @classmethod
    def zero(cls, n: int) -> AlgebraElement:
        return cls(np.zeros(3), np.zeros(3), np.zeros((3, n)))

    @classmethod
    def from_vectors(cls, omega, v, n: int = 0, xi=None) -> AlgebraElement:
        xi = np.zeros((3, n)) if xi is None else np.asarray(xi, dtype=float).reshape(3, -1)
        return cls(np.asarray(omega, dtype=float).reshape(3),
                   np.asarray(v, dtype=float).reshape(3), xi)

    def as_matrix(self) -> np.ndarray:
        n = self.n
        M = np.zeros((4 + n, 4 + n))
        M[:3, :3] = skew(self.omega)
        M[:3, 3] = self.v
        M[:3, 4:] = self.xi
        return M

    def __add__(self, other: AlgebraElement) -> AlgebraElement:
        _check_n(self, other)
        return AlgebraElement(self.omega + other.omega, self.v + other.v, self.xi + other.xi)

    def __sub__(self, other: AlgebraElement) -> AlgebraElement:
        _check_n(self, other)
        return AlgebraElement(self.omega - other.omega, self.v - other.v, self.xi - other.xi)

    def __neg__(self) -> AlgebraElement:
        return AlgebraElement(-self.omega, -self.v, -self.xi)

    def __mul__(self, s: float) -> AlgebraElement:
        return AlgebraElement(s * self.omega, s * self.v, s * self.xi)

    __rmul__ = __mul__

    def norm_sq(self) -> float:
        """Squared Frobenius norm of the dense matrix, ``tr(V V^T)``."""
        return float(2.0 * self.omega @ self.omega + self.v @ self.v + np.sum(self.xi * self.xi))


def _check_n(a, b) -> None:
    if a.n != b.n:
        raise DimensionError(f"landmark count mismatch: {a.n} vs {b.n}")


def compose_psi(R, p, eta) -> GroupElement:
    """Build ``Psi(R, p, eta)``, validating that ``R`` is a rotation."""
    R = np.array(R, dtype=float)
    if not is_rotation(R):
        raise ValidationError("R is not a rotation matrix within tolerance")
    p = np.array(p, dtype=float).reshape(3)
    eta = np.array(eta, dtype=float).reshape(3, -1) if np.size(eta) else np.zeros((3, 0))
    return GroupElement(R, p, eta)


def group_inverse(X: GroupElement) -> GroupElement:
    Rt = X.R.T
    return GroupElement(Rt, -Rt @ X.p, -Rt @ X.eta)


def group_mul(X1: GroupElement, X2: GroupElement) -> GroupElement:
    _check_n(X1, X2)
    return GroupElement(X1.R @ X2.R, X1.R @ X2.p + X1.p, X1.R @ X2.eta + X1.eta)


def project_upsilon(B) -> AlgebraElement:
    """Orthogonal projection of a square ``(4+n) x (4+n)`` matrix onto se_{1+n}(3).

    Keeps the skew part of the top-left 3x3 block and the top-right
    ``3 x (n+1)`` block; everything below row 3 is dropped.
    """
    B = np.asarray(B, dtype=float)
    if B.ndim != 2 or B.shape[0] != B.shape[1] or B.shape[0] < 4:
        raise DimensionError(f"expected a square (4+n)x(4+n) matrix, got shape {B.shape}")
    return AlgebraElement(vex(B[:3, :3]), B[:3, 3].copy(), B[:3, 4:].copy())


def left_jacobian(phi) -> np.ndarray:
    """SO(3) left Jacobian ``sum_k Gamma(phi)^k / (k+1)!``."""
    theta = float(np.linalg.norm(phi))
    K = skew(phi)
    if theta < JACOBIAN_TAYLOR_TOL:
        return np.eye(3) + 0.5 * K + (K @ K) / 6.0
    # cancellation-free coefficients: 1 - cos via sin^2, theta - sin via its series
    a = 2.0 * (np.sin(0.5 * theta) / theta) ** 2
    if theta < 1e-2:
        t2 = theta * theta
        b = 1.0 / 6.0 - t2 / 120.0 + t2 * t2 / 5040.0
    else:
        b = (theta - np.sin(theta)) / theta**3
    return np.eye(3) + a * K + b * (K @ K)


def algebra_exp(V: AlgebraElement, dt: float = 1.0) -> GroupElement:
    """Closed-form ``expm(dt * V)``."""
    phi = dt * V.omega
    theta = float(np.linalg.norm(phi))
    R = rodrigues(theta, phi / theta) if theta > 0.0 else np.eye(3)
    J = left_jacobian(phi)
    return GroupElement(R, J @ (dt * V.v), J @ (dt * V.xi))


def adjoint(X: GroupElement, V: AlgebraElement) -> AlgebraElement:
    """``Ad_X V = X V X^{-1}``, evaluated block-wise."""
    _check_n(X, V)
    w = X.R @ V.omega
    W = skew(w)
    return AlgebraElement(w, X.R @ V.v - W @ X.p, X.R @ V.xi - W @ X.eta)


def frobenius_inner(A, B) -> float:
    """``tr(A^T B)``; accepts arrays or group/algebra elements."""
    A = A.as_matrix() if hasattr(A, "as_matrix") else np.asarray(A, dtype=float)
    B = B.as_matrix() if hasattr(B, "as_matrix") else np.asarray(B, dtype=float)
    if A.shape != B.shape:
        raise DimensionError(f"shape mismatch: {A.shape} vs {B.shape}")
    return float(np.sum(A * B))


def canonical_r(i: int, n: int) -> np.ndarray:
    """The vector ``[0, 0, 0, 1, -e_i]`` of length ``4 + n`` (``i`` is 1-based)."""
    if not 1 <= i <= n:
        raise IndexError(f"landmark index {i} outside 1..{n}")
    r = np.zeros(4 + n)
    r[3] = 1.0
    r[3 + i] = -1.0
    return r


def canonical_r_matrix(n: int) -> np.ndarray:
    """All ``r_i`` stacked as columns, shape ``(4+n, n)``."""
    Rm = np.zeros((4 + n, n))
    Rm[3, :] = 1.0
    Rm[4:, :] = -np.eye(n)
    return Rm


def commutator(U: AlgebraElement, W: AlgebraElement) -> AlgebraElement:
    """Matrix commutator ``[U, W] = UW - WU`` (closed in the algebra)."""
    _check_n(U, W)
    Su = skew(U.omega)
    Sw = skew(W.omega)
    return AlgebraElement(np.cross(U.omega, W.omega),
                          Su @ W.v - Sw @ U.v,
                          Su @ W.xi - Sw @ U.xi)
