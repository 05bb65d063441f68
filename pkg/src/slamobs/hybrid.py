"""Executor for hybrid systems ``x_dot = f(x, u)`` on C, ``x+ = g(x, u)`` on D.

The executor is written against a small duck-typed interface; any object
with ``flow(s, u) -> (W, b_dot)``, ``jump_check(s, u) -> (in_D, in_C, info)``
and ``jump(s, info)`` methods can be run (see
:class:`slamobs.observer.HybridObserver`). States carry a group part
``Xhat`` integrated with the exponential map and a vector part ``Vbhat``
integrated with explicit Euler or classical RK4.

Solutions are recorded on a hybrid time domain: flow steps advance ``t`` by
``dt`` at fixed ``j``; a jump keeps ``t`` and increments ``j``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from slamobs.lie import GroupElement, algebra_exp, commutator, reorthonormalize
from slamobs.observer import HybridObserverState


class ZenoError(RuntimeError):
    """Too many consecutive jumps at one instant."""

    def __init__(self, message: str, dump: dict):
        super().__init__(message)
        self.dump = dump


class NumericalAbort(RuntimeError):
    """A non-finite value appeared in the state or diagnostics."""

    def __init__(self, message: str, step_index: int):
        super().__init__(message)
        self.step_index = step_index


@dataclass(frozen=True, order=True)
class HybridTime:
    t: float = 0.0
    j: int = 0


@dataclass(frozen=True)
class HybridRunConfig:
    dt: float = 0.01
    t_end: float = 60.0
    max_jumps_per_instant: int = 5
    jump_priority: str = "jump_first"
    integrator: str = "euler"

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.t_end < 0:
            raise ValueError("t_end must be nonnegative")
        if self.t_end > 0 and self.dt > self.t_end:
            raise ValueError("dt must not exceed t_end")
        if self.max_jumps_per_instant < 1:
            raise ValueError("max_jumps_per_instant must be >= 1")
        if self.jump_priority not in ("jump_first", "flow_first"):
            raise ValueError(f"unknown jump priority {self.jump_priority!r}")
        if self.integrator not in ("euler", "rkmk4"):
            raise ValueError(f"unknown integrator {self.integrator!r}")

    @property
    def n_steps(self) -> int:
        return int(math.floor(self.t_end / self.dt + 1e-9))


@dataclass
class TraceRecord:
    time: HybridTime
    state: HybridObserverState
    diagnostics: dict = field(default_factory=dict)
    event: str = "flow"


@dataclass
class HybridTrace:
    records: list[TraceRecord] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def __getitem__(self, i):
        return self.records[i]

    @property
    def jump_count(self) -> int:
        return self.records[-1].time.j if self.records else 0

    def column(self, key: str) -> np.ndarray:
        return np.array([r.diagnostics[key] for r in self.records])

    @property
    def times(self) -> np.ndarray:
        return np.array([r.time.t for r in self.records])


def _advance(X: GroupElement, W, dt: float) -> GroupElement:
    E = algebra_exp(W, dt)
    R = reorthonormalize(X.R @ E.R)
    return GroupElement(R, X.R @ E.p + X.p, X.R @ E.eta + X.eta)


def _dexpinv(u, w):
    # right-trivialized: u_dot = w + [u, w]/2 + [u, [u, w]]/12 for Y_dot = Y w
    c = commutator(u, w)
    return w + 0.5 * c + (1.0 / 12.0) * commutator(u, c)


def flow_step(system, s: HybridObserverState, source: Callable, t: float, dt: float,
              integrator: str = "euler", meas=None) -> HybridObserverState:
    """Integrate the flow map over ``[t, t + dt]``."""
    if meas is None:
        meas = source(t, True)
    W1, b1 = system.flow(s, meas)
    if integrator == "euler":
        return HybridObserverState(_advance(s.Xhat, W1, dt), s.Vbhat + dt * b1, s.q)

    # Runge-Kutta-Munthe-Kaas, classical fourth-order tableau
    X0, B0 = s.Xhat, s.Vbhat
    mid = source(t + 0.5 * dt, False)
    k1 = W1
    u2 = 0.5 * dt * k1
    W2, b2 = system.flow(HybridObserverState(_advance(X0, u2, 1.0), B0 + 0.5 * dt * b1, s.q), mid)
    k2 = _dexpinv(u2, W2)
    u3 = 0.5 * dt * k2
    W3, b3 = system.flow(HybridObserverState(_advance(X0, u3, 1.0), B0 + 0.5 * dt * b2, s.q), mid)
    k3 = _dexpinv(u3, W3)
    u4 = dt * k3
    W4, b4 = system.flow(HybridObserverState(_advance(X0, u4, 1.0), B0 + dt * b3, s.q),
                         source(t + dt, False))
    k4 = _dexpinv(u4, W4)
    u = (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    B = B0 + (dt / 6.0) * (b1 + 2.0 * b2 + 2.0 * b3 + b4)
    return HybridObserverState(_advance(X0, u, 1.0), B, s.q)


def step(system, s: HybridObserverState, source: Callable, config: HybridRunConfig,
         time: HybridTime, jumps_at_instant: int = 0):
    """One hybrid step: a single jump if in D, otherwise a flow over ``dt``.

    Returns ``(state, time, event)`` with ``event`` one of ``"jump"`` or
    ``"flow"``. Raises :class:`ZenoError` when a jump would exceed
    ``config.max_jumps_per_instant`` at the current instant.
    """
    meas = source(time.t, True)
    in_d, in_c, info = system.jump_check(s, meas)
    # on the overlap of C and D the priority decides
    take_jump = in_d and (config.jump_priority == "jump_first" or not in_c)
    if take_jump:
        if jumps_at_instant >= config.max_jumps_per_instant:
            raise ZenoError(
                f"more than {config.max_jumps_per_instant} jumps at t={time.t}",
                {"time": time, "state": s, "jump_info": info},
            )
        return system.jump(s, info), HybridTime(time.t, time.j + 1), "jump"
    s_new = flow_step(system, s, source, time.t, config.dt, config.integrator, meas)
    return s_new, HybridTime(time.t + config.dt, time.j), "flow"


def run(system, initial: HybridObserverState, source: Callable, config: HybridRunConfig,
        diagnostics: Callable[[float, HybridObserverState, Any], dict] | None = None,
        ) -> HybridTrace:
    """Simulate from ``initial`` over ``[0, t_end]``.

    ``source(t, sample)`` returns the inputs at ``t``. ``sample`` is true on grid
    points, which are visited in nondecreasing order; repeated grid queries at
    the same ``t`` must return the same sample. Runge-Kutta stages query
    off-grid times with ``sample=False``. The grid time of flow step ``k`` is
    ``k * dt`` (not an accumulated sum) so long runs do not drift.
    """
    def diag(t, s, meas):
        d = diagnostics(t, s, meas) if diagnostics else {}
        for key, val in d.items():
            if isinstance(val, float) and not math.isfinite(val):
                raise NumericalAbort(f"non-finite {key} at t={t}", len(trace.records))
        return d

    trace = HybridTrace()
    s, time = initial, HybridTime(0.0, 0)
    trace.records.append(TraceRecord(time, s, diag(0.0, s, source(0.0, True)), "init"))
    k, at_instant = 0, 0
    n_steps = config.n_steps
    while k < n_steps:
        s, new_time, event = step(system, s, source, config, time, at_instant)
        if event == "jump":
            at_instant += 1
            time = new_time
        else:
            k += 1
            at_instant = 0
            time = HybridTime(k * config.dt, new_time.j)
        if not (np.all(np.isfinite(s.Xhat.as_matrix())) and np.all(np.isfinite(s.Vbhat.as_matrix()))):
            raise NumericalAbort(f"non-finite estimate at t={time.t}", len(trace.records))
        trace.records.append(TraceRecord(time, s, diag(time.t, s, source(time.t, True)), event))
    return trace
