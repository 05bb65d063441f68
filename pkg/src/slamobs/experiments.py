"""Experiment configuration, presets, metrics and the run driver."""

from __future__ import annotations

import csv
import json
import logging
import math
import os
import time
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from slamobs.hybrid import HybridRunConfig, HybridTrace, run
from slamobs.kinematics import BiasVector, NoiseModel, Simulator, TrajectoryPreset, TrueState
from slamobs.lie import GroupElement, ValidationError, rodrigues, rotation_angle
from slamobs.observer import (
    HybridObserver,
    HybridObserverState,
    ObserverGains,
    build_cost_matrix,
    cost_U,
    cost_from_measurements,
    extract_bias,
)

log = logging.getLogger(__name__)

LANDMARKS = np.array([[10.0, 0.0, -10.0, 0.0],
                      [0.0, 15.0, 0.0, -10.0],
                      [0.0, 0.0, 0.0, 0.0]])
BIAS_OMEGA = (-0.02, 0.05, 0.03)
BIAS_V = (0.2, 0.05, 0.1)

CSV_HEADER = ["t", "j", "q", "att_err_rad", "pos_err_m", "lmk_err_m", "bias_w_err",
              "bias_v_err", "lyapunov", "measured_cost"]
EXPERIMENTS = ("exp1_circle", "exp2_eight", "custom")
OBSERVERS = ("hybrid", "smooth", "both")
DEFAULT_BEARING_SIGMA = 0.05
LITERAL_BEARING_SIGMA = 1.0


@dataclass(frozen=True)
class InitialEstimate:
    """Initial observer estimate: attitude as axis-angle, position, landmark scale.

    The landmark estimate is ``eta_scale * eta`` (the true map scaled about the
    origin), which is how both preset scenarios start.
    """

    angle: float = 0.0
    axis: tuple[float, float, float] = (1.0, 0.0, 0.0)
    p_hat0: tuple[float, float, float] = (0.0, 0.0, 0.0)
    eta_scale: float = 1.0


@dataclass(frozen=True)
class ErrorMetrics:
    attitude_error: float
    position_error: float
    landmark_error: float
    bias_omega_error: float
    bias_v_error: float
    lyapunov: float
    measured_cost: float


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str = "exp1_circle"
    observer: str = "both"
    gains: ObserverGains = field(default_factory=ObserverGains)
    noise: NoiseModel = field(default_factory=NoiseModel)
    run: HybridRunConfig = field(default_factory=HybridRunConfig)
    initial_estimate: InitialEstimate = field(default_factory=InitialEstimate)
    bias: BiasVector = field(default_factory=lambda: BiasVector(np.array(BIAS_OMEGA),
                                                                np.array(BIAS_V)))
    literal_jump_map: bool = False
    literal_noise: bool = False
    seed: int = 0
    output_dir: str = "results"
    trajectory: TrajectoryPreset | None = None
    landmarks: np.ndarray = field(default_factory=lambda: LANDMARKS.copy())

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ValidationError(f"unknown experiment {self.experiment!r}")
        if self.observer not in OBSERVERS:
            raise ValidationError(f"unknown observer {self.observer!r}")
        if self.trajectory is None:
            if self.experiment == "custom":
                raise ValidationError("custom experiments need an explicit trajectory")
            object.__setattr__(self, "trajectory", _trajectory_for(self.experiment))
        lm = np.asarray(self.landmarks, dtype=float)
        if lm.ndim != 2 or lm.shape[0] != 3:
            raise ValidationError("landmarks must be a 3 x n array")
        if self.gains.n != lm.shape[1]:
            raise ValidationError(f"{self.gains.n} gains for {lm.shape[1]} landmarks")

    @property
    def observers(self) -> tuple[str, ...]:
        return ("hybrid", "smooth") if self.observer == "both" else (self.observer,)

    @property
    def effective_noise(self) -> NoiseModel:
        noise = replace(self.noise, seed=self.seed)
        if self.literal_noise and noise.bearing_noise_kind != "none":
            noise = replace(noise, bearing_sigma=LITERAL_BEARING_SIGMA)
        return noise

    # JSON serialization ------------------------------------------------------------

    def to_dict(self) -> dict:
        return _plain(asdict(self))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> ExperimentConfig:
        d = dict(d)
        unknown = set(d) - {f for f in cls.__dataclass_fields__}
        if unknown:
            raise ValidationError(f"unknown config field(s): {sorted(unknown)}")
        if "gains" in d:
            d["gains"] = ObserverGains(**d["gains"])
        if "noise" in d:
            d["noise"] = NoiseModel(**d["noise"])
        if "run" in d:
            d["run"] = HybridRunConfig(**d["run"])
        if "initial_estimate" in d:
            ie = dict(d["initial_estimate"])
            ie["axis"] = tuple(ie.get("axis", (1.0, 0.0, 0.0)))
            ie["p_hat0"] = tuple(ie.get("p_hat0", (0.0, 0.0, 0.0)))
            d["initial_estimate"] = InitialEstimate(**ie)
        if "bias" in d:
            d["bias"] = BiasVector(np.asarray(d["bias"]["b_omega"], dtype=float),
                                   np.asarray(d["bias"]["b_v"], dtype=float))
        if d.get("trajectory") is not None:
            tr = dict(d["trajectory"])
            tr["omega_body"] = np.asarray(tr["omega_body"], dtype=float)
            tr["v_body"] = np.asarray(tr["v_body"], dtype=float)
            tr["R0"] = np.asarray(tr.get("R0", np.eye(3)), dtype=float)
            tr["p0"] = np.asarray(tr.get("p0", np.zeros(3)), dtype=float)
            tr["switch_period"] = float(tr.get("switch_period", math.inf))
            d["trajectory"] = TrajectoryPreset(**tr)
        if "landmarks" in d:
            d["landmarks"] = np.asarray(d["landmarks"], dtype=float)
        return cls(**d)

    @classmethod
    def from_json(cls, text: str) -> ExperimentConfig:
        return cls.from_dict(json.loads(text))


def _plain(x):
    if isinstance(x, dict):
        return {k: _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, np.ndarray):
        return _plain(x.tolist())
    if isinstance(x, (np.floating, float)):
        x = float(x)
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    if isinstance(x, np.integer):
        return int(x)
    return x


def _trajectory_for(experiment: str) -> TrajectoryPreset:
    if experiment == "exp1_circle":
        return TrajectoryPreset("circle", np.array([0.0, 0.0, 0.3]), np.array([2.0, 0.0, 0.0]),
                                R0=rodrigues(0.0, (1.0, 0.0, 0.0)), p0=np.zeros(3))
    return TrajectoryPreset("figure_eight", np.array([0.0, 0.0, 0.4]), np.array([2.0, 0.0, 0.0]),
                            switch_period=2 * math.pi / 0.4,
                            R0=rodrigues(0.0, (1.0, 0.0, 0.0)), p0=np.array([0.0, 0.0, 4.0]))


def _default_noise() -> NoiseModel:
    return NoiseModel("uniform", 0.0, 0.4, "gaussian", DEFAULT_BEARING_SIGMA)


def preset_experiment1(**overrides) -> ExperimentConfig:
    """Circle at constant altitude, estimate starts tilted by pi/4 about e1."""
    cfg = ExperimentConfig(
        experiment="exp1_circle",
        noise=_default_noise(),
        initial_estimate=InitialEstimate(math.pi / 4, (1.0, 0.0, 0.0), (-2.0, 0.0, 7.0), 0.4),
    )
    return replace(cfg, **overrides)


def preset_experiment2(**overrides) -> ExperimentConfig:
    """Figure-eight at 4 m height, estimate starts tilted by pi/3 about e1."""
    cfg = ExperimentConfig(
        experiment="exp2_eight",
        noise=_default_noise(),
        initial_estimate=InitialEstimate(math.pi / 3, (1.0, 0.0, 0.0), (0.0, 0.0, 0.0), 0.4),
    )
    return replace(cfg, **overrides)


def without_noise(cfg: ExperimentConfig) -> ExperimentConfig:
    return replace(cfg, noise=replace(cfg.noise, range_noise_kind="none",
                                      bearing_noise_kind="none"))


def initial_estimate(cfg: ExperimentConfig) -> HybridObserverState:
    ie = cfg.initial_estimate
    axis = np.asarray(ie.axis, dtype=float)
    X = GroupElement(rodrigues(ie.angle, axis / np.linalg.norm(axis)),
                     np.asarray(ie.p_hat0, dtype=float),
                     ie.eta_scale * np.asarray(cfg.landmarks, dtype=float))
    return HybridObserverState(X, BiasVector.zero().as_algebra(X.n), 0)


def compute_metrics(true_state: TrueState, s: HybridObserverState, b: BiasVector,
                    gains: ObserverGains, meas=None, A: np.ndarray | None = None) -> ErrorMetrics:
    """Error metrics with ``R_err = R R_hat^T``, ``p_err = p - R_err p_hat``,
    ``eta_err = eta - R_err eta_hat``."""
    X, Xh = true_state.X, s.Xhat
    Rt = X.R @ Xh.R.T
    p_err = X.p - Rt @ Xh.p
    eta_err = X.eta - Rt @ Xh.eta
    bh = extract_bias(s)
    if A is None:
        A = build_cost_matrix(gains, X.n)
    Xtilde = Xh @ X.inverse()
    bias_part = 0.5 * (b.as_algebra(X.n) - s.Vbhat).norm_sq()
    return ErrorMetrics(
        attitude_error=rotation_angle(Rt),
        position_error=float(np.linalg.norm(p_err)),
        landmark_error=float(np.linalg.norm(eta_err)),
        bias_omega_error=float(np.linalg.norm(b.b_omega - bh.b_omega_hat)),
        bias_v_error=float(np.linalg.norm(b.b_v - bh.b_v_hat)),
        lyapunov=cost_U(Xtilde, A) + bias_part,
        measured_cost=(cost_from_measurements(Xh, meas, gains) if meas is not None
                       else float("nan")),
    )


def relative_map_error(true_state: TrueState, s: HybridObserverState) -> float:
    """Frobenius error of landmark positions relative to the robot, in body frame.

    Unlike the absolute errors this quantity is invariant under a common
    rotation and translation of the whole estimate.
    """
    X, Xh = true_state.X, s.Xhat
    rel = X.R.T @ (X.eta - X.p[:, None])
    rel_hat = Xh.R.T @ (Xh.eta - Xh.p[:, None])
    return float(np.linalg.norm(rel - rel_hat))


@dataclass
class ObserverRun:
    name: str
    trace: HybridTrace
    wall_time: float

    def rows(self) -> list[list]:
        out = []
        for r in self.trace:
            d = r.diagnostics
            out.append([r.time.t, r.time.j, r.state.q] + [d[k] for k in CSV_HEADER[3:]])
        return out


def simulate(cfg: ExperimentConfig, observer: str) -> ObserverRun:
    """Run one observer on the configured scenario; no files written."""
    sim = Simulator(cfg.trajectory, cfg.landmarks, cfg.bias, cfg.effective_noise)
    system = HybridObserver(cfg.gains, observer, cfg.literal_jump_map)
    A = build_cost_matrix(cfg.gains, sim.n)

    def diagnostics(t, s, meas):
        truth = sim.state_at(t)
        m = compute_metrics(truth, s, cfg.bias, cfg.gains, meas, A)
        d = {
            "att_err_rad": m.attitude_error, "pos_err_m": m.position_error,
            "lmk_err_m": m.landmark_error, "bias_w_err": m.bias_omega_error,
            "bias_v_err": m.bias_v_error, "lyapunov": m.lyapunov,
            "measured_cost": m.measured_cost,
            "rel_map_err": relative_map_error(truth, s),
        }
        d["p_true"] = truth.X.p.copy()
        return d

    start = time.perf_counter()
    trace = run(system, initial_estimate(cfg), sim, cfg.run, diagnostics)
    return ObserverRun(observer, trace, time.perf_counter() - start)


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def write_csv(path: Path, result: ObserverRun) -> None:
    try:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(CSV_HEADER)
            for row in result.rows():
                w.writerow([_fmt(v) for v in row])
    except OSError as exc:
        raise OSError(f"cannot write trace {path}: {exc}") from exc


def summarize(result: ObserverRun) -> dict:
    tr = result.trace
    t = tr.times
    tail = t >= 0.8 * t[-1] if t[-1] > 0 else np.ones_like(t, dtype=bool)
    keys = CSV_HEADER[3:] + ["rel_map_err"]
    final = {k: float(tr[-1].diagnostics[k]) for k in keys}
    steady = {k: float(np.mean(tr.column(k)[tail])) for k in keys}
    jump_times = [r.time.t for r in tr if r.event == "jump"]
    return {
        "observer": result.name,
        "final": final,
        "steady_state_mean_last_20pct": steady,
        "jump_count": tr.jump_count,
        "jump_times": jump_times,
        "records": len(tr),
        "wall_time_s": result.wall_time,
    }


def default_output_dir() -> str:
    return os.environ.get("SLAMOBS_OUT", "results")


def run_experiment(cfg: ExperimentConfig, plots: bool = True) -> dict:
    """Run every requested observer and write CSV traces, a JSON summary and SVGs.

    Returns a bundle with the in-memory results and the written paths.
    """
    from slamobs import plotting

    out = Path(cfg.output_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out}: {exc}") from exc
    results = {name: simulate(cfg, name) for name in cfg.observers}
    paths = {}
    for name, res in results.items():
        p = out / f"trace_{name}.csv"
        write_csv(p, res)
        paths[f"csv_{name}"] = p
    summary = {
        "experiment": cfg.experiment,
        "seed": cfg.seed,
        "observers": {name: summarize(res) for name, res in results.items()},
    }
    p = out / "summary.json"
    try:
        p.write_text(json.dumps(summary, indent=2) + "\n", encoding="utf-8")
        (out / "config.json").write_text(cfg.to_json(), encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot write {p}: {exc}") from exc
    paths["summary"] = p
    if plots:
        paths.update(plotting.write_experiment_plots(out, cfg, results))
    return {"results": results, "summary": summary, "paths": paths}


def sweep(base: ExperimentConfig, angles, observers=("hybrid", "smooth"),
          t_end: float | None = None) -> list[dict]:
    """Vary the initial attitude error about the jump axis ``ell``.

    The initial estimate is ``R_hat(0) = Rodrigues(a, ell) R(0)`` with the
    position and map estimates of ``base`` left unchanged. Returns one row per
    (angle, observer).
    """
    ell = np.asarray(base.gains.ell, dtype=float)
    R0 = np.asarray(base.trajectory.R0, dtype=float)
    rows = []
    for a in angles:
        Rh = rodrigues(float(a), ell) @ R0
        ang, axis = _axis_angle(Rh)
        cfg = replace(base, initial_estimate=replace(base.initial_estimate, angle=ang, axis=axis))
        if t_end is not None:
            cfg = replace(cfg, run=replace(cfg.run, t_end=t_end))
        for obs in observers:
            res = simulate(cfg, obs)
            tr = res.trace
            jumps = [r for r in tr if r.event == "jump"]
            rows.append({
                "initial_angle_rad": float(a),
                "observer": obs,
                "jumps": tr.jump_count,
                "first_jump_t": jumps[0].time.t if jumps else float("nan"),
                "final_att_err_rad": float(tr[-1].diagnostics["att_err_rad"]),
                "final_lyapunov": float(tr[-1].diagnostics["lyapunov"]),
                "final_measured_cost": float(tr[-1].diagnostics["measured_cost"]),
                "final_rel_map_err": float(tr[-1].diagnostics["rel_map_err"]),
                "trace": tr,
            })
    return rows


SWEEP_HEADER = ["initial_angle_rad", "observer", "jumps", "first_jump_t", "final_att_err_rad",
                "final_lyapunov", "final_measured_cost", "final_rel_map_err"]


def write_sweep_csv(path: Path, rows: list[dict]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SWEEP_HEADER)
        for r in rows:
            w.writerow([r[k] if isinstance(r[k], str) else _fmt(r[k]) for k in SWEEP_HEADER])


def _axis_angle(R: np.ndarray) -> tuple[float, tuple[float, float, float]]:
    ang = rotation_angle(R)
    if ang < 1e-12:
        return 0.0, (1.0, 0.0, 0.0)
    if math.pi - ang < 1e-6:
        # near pi the skew part vanishes; read the axis off R + I
        M = R + np.eye(3)
        col = M[:, int(np.argmax(np.linalg.norm(M, axis=0)))]
        axis = col / np.linalg.norm(col)
    else:
        axis = np.array([R[2, 1] - R[1, 2], R[0, 2] - R[2, 0], R[1, 0] - R[0, 1]])
        axis /= np.linalg.norm(axis)
    return ang, tuple(float(x) for x in axis)
