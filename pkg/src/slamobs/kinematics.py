"""Ground-truth rigid body and landmark simulation.

The robot follows ``X_dot = X V`` with piecewise-constant body velocities, so
the truth is propagated with the exact exponential map. Landmarks are
stationary. Velocity readings carry a constant bias; landmark readings are
range/bearing pairs packed into ``beta_i = X^{-1} r_i``.

Random numbers come from numpy's PCG64. A run seed is expanded with
``SeedSequence(seed).spawn(n)``, giving landmark ``i`` its own stream, so the
noise on one landmark does not depend on how many others are simulated.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from slamobs.lie import AlgebraElement, GroupElement, ValidationError, algebra_exp

log = logging.getLogger(__name__)

NOISE_KINDS_RANGE = ("none", "uniform")
NOISE_KINDS_BEARING = ("none", "gaussian")
TRAJECTORY_KINDS = ("circle", "figure_eight", "custom")


@dataclass(frozen=True)
class TrueState:
    X: GroupElement
    t: float = 0.0


@dataclass(frozen=True)
class BiasVector:
    b_omega: np.ndarray
    b_v: np.ndarray

    @classmethod
    def zero(cls) -> BiasVector:
        return cls(np.zeros(3), np.zeros(3))

    def as_algebra(self, n: int) -> AlgebraElement:
        return AlgebraElement.from_vectors(self.b_omega, self.b_v, n)


@dataclass(frozen=True)
class NoiseModel:
    range_noise_kind: str = "none"
    range_lo: float = 0.0
    range_hi: float = 0.4
    bearing_noise_kind: str = "none"
    bearing_sigma: float = 0.05
    seed: int = 0

    def __post_init__(self):
        if self.range_noise_kind not in NOISE_KINDS_RANGE:
            raise ValidationError(f"unknown range noise kind {self.range_noise_kind!r}")
        if self.bearing_noise_kind not in NOISE_KINDS_BEARING:
            raise ValidationError(f"unknown bearing noise kind {self.bearing_noise_kind!r}")
        if self.range_lo > self.range_hi:
            raise ValidationError("range_lo must not exceed range_hi")
        if self.bearing_sigma < 0:
            raise ValidationError("bearing_sigma must be nonnegative")

    @property
    def enabled(self) -> bool:
        return self.range_noise_kind != "none" or self.bearing_noise_kind != "none"

    def streams(self, n: int) -> list[np.random.Generator]:
        """One independent generator per landmark."""
        return [np.random.Generator(np.random.PCG64(s))
                for s in np.random.SeedSequence(self.seed).spawn(n)]


@dataclass(frozen=True)
class TrajectoryPreset:
    """Body-frame velocity profile plus the initial pose.

    ``figure_eight`` flips the sign of the yaw rate every ``switch_period``
    seconds (one full turn at the default period), which traces two tangent
    circles of opposite orientation.
    """

    kind: str
    omega_body: np.ndarray
    v_body: np.ndarray
    switch_period: float = math.inf
    R0: np.ndarray = field(default_factory=lambda: np.eye(3))
    p0: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        if self.kind not in TRAJECTORY_KINDS:
            raise ValidationError(f"unknown trajectory kind {self.kind!r}")
        if self.kind == "figure_eight" and not self.switch_period > 0:
            raise ValidationError("figure_eight needs a positive switch_period")

    def segment(self, t: float) -> int:
        if self.kind != "figure_eight":
            return 0
        return int(math.floor(t / self.switch_period + 1e-12))

    def next_switch(self, t: float) -> float:
        if self.kind != "figure_eight":
            return math.inf
        return (self.segment(t) + 1) * self.switch_period


@dataclass(frozen=True)
class MeasurementSet:
    """Biased velocity plus landmark readings at time ``t``.

    Only the 3-vector head of each ``beta_i`` is stored (``heads[:, i]``); the
    structural tail ``(1, -e_i)`` is exact and rebuilt by :attr:`betas`.
    """

    Vm: AlgebraElement
    heads: np.ndarray
    t: float = 0.0
    valid: np.ndarray | None = None

    @property
    def n(self) -> int:
        return self.heads.shape[1]

    @property
    def betas(self) -> np.ndarray:
        """Columns ``beta_i`` of length ``4 + n``."""
        n = self.n
        B = np.zeros((4 + n, n))
        B[:3] = self.heads
        B[3] = 1.0
        B[4:] = -np.eye(n)
        return B

    @property
    def valid_mask(self) -> np.ndarray:
        return np.ones(self.n, dtype=bool) if self.valid is None else self.valid


def true_velocity(preset: TrajectoryPreset, t: float, n: int = 0) -> AlgebraElement:
    omega = np.array(preset.omega_body, dtype=float)
    if preset.kind == "figure_eight" and preset.segment(t) % 2 == 1:
        omega = -omega
    return AlgebraElement.from_vectors(omega, preset.v_body, n)


def propagate_true(state: TrueState, preset: TrajectoryPreset, dt: float) -> TrueState:
    """Advance the truth by ``dt``, splitting the step at velocity switches."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    X, t, t_end = state.X, state.t, state.t + dt
    while t < t_end:
        h = min(t_end, preset.next_switch(t)) - t
        if h <= 0:
            h = t_end - t
        V = true_velocity(preset, t, X.n)
        E = algebra_exp(V, h)
        # landmarks are stationary: only pose blocks move
        X = GroupElement(X.R @ E.R, X.R @ E.p + X.p, X.eta)
        t += h
    return TrueState(X, t_end)


def measure_velocity(V: AlgebraElement, b: BiasVector) -> AlgebraElement:
    return AlgebraElement.from_vectors(V.omega + b.b_omega, V.v + b.b_v, V.n)


def measure_landmarks(state: TrueState, noise: NoiseModel | None = None,
                      rngs: list[np.random.Generator] | None = None,
                      Vm: AlgebraElement | None = None) -> MeasurementSet:
    """Range/bearing readings of every landmark, packed as ``beta_i`` heads.

    With noise, the range gets ``Uniform[range_lo, range_hi]`` and the bearing
    gets isotropic Gaussian noise followed by renormalization. A landmark
    coinciding with the robot has no bearing and is flagged invalid.
    """
    X = state.X
    n = X.n
    rel = X.eta - X.p[:, None]
    rng_ = np.linalg.norm(rel, axis=0)
    valid = rng_ > 0.0
    bearing = np.zeros((3, n))
    bearing[:, valid] = X.R.T @ (rel[:, valid] / rng_[valid])
    if noise is not None and noise.enabled:
        if rngs is None or len(rngs) != n:
            raise ValueError("noise enabled: need one generator per landmark")
        for i in range(n):
            g = rngs[i]
            if noise.range_noise_kind == "uniform":
                rng_[i] += g.uniform(noise.range_lo, noise.range_hi)
            if noise.bearing_noise_kind == "gaussian":
                bearing[:, i] += noise.bearing_sigma * g.standard_normal(3)
                nb = np.linalg.norm(bearing[:, i])
                if nb > 0:
                    bearing[:, i] /= nb
    if not valid.all():
        log.warning("t=%.6f: landmark(s) %s coincide with the robot", state.t,
                    np.flatnonzero(~valid).tolist())
    if Vm is None:
        Vm = AlgebraElement.zero(n)
    return MeasurementSet(Vm, bearing * rng_, state.t, valid if not valid.all() else None)


class Simulator:
    """Truth generator producing the observer inputs on a time grid.

    Intermediate times (Runge-Kutta stages) are served by exact propagation
    from the last grid state. Noise is drawn only on grid samples; with noise
    enabled, stage evaluations hold the last noisy landmark sample so the noise
    sequence does not depend on the integrator.
    """

    def __init__(self, preset: TrajectoryPreset, landmarks, bias: BiasVector,
                 noise: NoiseModel | None = None):
        self.preset = preset
        self.bias = bias
        self.noise = noise or NoiseModel()
        eta = np.asarray(landmarks, dtype=float).reshape(3, -1)
        X0 = GroupElement(np.array(preset.R0, dtype=float),
                          np.array(preset.p0, dtype=float), eta)
        self._grid = TrueState(X0, 0.0)
        self._rngs = self.noise.streams(eta.shape[1])
        self._last: MeasurementSet | None = None

    @property
    def n(self) -> int:
        return self._grid.X.n

    def state_at(self, t: float) -> TrueState:
        if t < self._grid.t - 1e-12:
            raise ValueError("simulator only moves forward in time")
        if t - self._grid.t > 1e-12:
            return propagate_true(self._grid, self.preset, t - self._grid.t)
        return self._grid

    def advance_to(self, t: float) -> TrueState:
        st = self.state_at(t)
        self._grid = TrueState(st.X, t)
        return self._grid

    def inputs(self, t: float, sample: bool = True) -> MeasurementSet:
        """Observer inputs at ``t``.

        ``sample`` marks a grid point: the truth is committed there and fresh
        noise is drawn once; repeated grid queries at the same ``t`` return the
        cached sample.
        """
        if sample:
            if self._last is not None and self._last.t == t:
                return self._last
            st = self.advance_to(t)
            Vm = measure_velocity(true_velocity(self.preset, t, self.n), self.bias)
            self._last = measure_landmarks(st, self.noise, self._rngs, Vm)
            return self._last
        Vm = measure_velocity(true_velocity(self.preset, t, self.n), self.bias)
        if not self.noise.enabled or self._last is None:
            return measure_landmarks(self.state_at(t), None, None, Vm)
        return MeasurementSet(Vm, self._last.heads, t, self._last.valid)

    __call__ = inputs
