import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from slamobs.checks import fd_directional, noise_free_measurements, random_algebra, random_group
from slamobs.experiments import BIAS_OMEGA, BIAS_V, LANDMARKS
from slamobs.kinematics import BiasVector, MeasurementSet, TrueState
from slamobs.lie import (
    AlgebraElement,
    GroupElement,
    ValidationError,
    adjoint,
    algebra_exp,
    canonical_r,
    frobenius_inner,
    group_inverse,
    group_mul,
    project_upsilon,
    rodrigues,
)
from slamobs.observer import (
    HybridObserver,
    HybridObserverState,
    InvalidMeasurementError,
    ObserverGains,
    build_cost_matrix,
    candidate_costs,
    cost_U,
    cost_from_measurements,
    extract_bias,
    flow_map,
    gradient_U,
    in_jump_set,
    initial_state,
    innovation_delta,
    jump_candidates,
    jump_map,
    lyapunov_V,
    residual_matrix,
)

seeds = st.integers(0, 2 ** 32 - 1)
G4 = ObserverGains()


def state(Xhat, Vb=None, q=0):
    return HybridObserverState(Xhat, Vb if Vb is not None else AlgebraElement.zero(Xhat.n), q)


def error(Xhat, X):
    return group_mul(Xhat, group_inverse(X))


def dense_cost(Xt, k):
    # direct summation oracle: 0.5 sum k_i |r_i - Xt r_i|^2
    n = len(k)
    M = Xt.as_matrix()
    return 0.5 * sum(k[i] * np.sum((canonical_r(i + 1, n) - M @ canonical_r(i + 1, n)) ** 2)
                     for i in range(n))


# --- gains ------------------------------------------------------------------------

@pytest.mark.parametrize("kwargs", [
    {"k": (1.0, 0.0)},
    {"k_o": 1.0},
    {"k_o": 0.0},
    {"delta": 0.0},
    {"theta": -1.0},
    {"ell": (1.0, 1.0, 0.0)},
    {"q_max": 0},
])
def test_gain_validation(kwargs):
    with pytest.raises(ValidationError):
        ObserverGains(**kwargs)


def test_default_candidates_span_half_turn_in_tenths():
    R = G4.candidate_rotations
    assert R.shape == (11, 3, 3)
    angles = [math.acos(np.clip((np.trace(r) - 1) / 2, -1, 1)) for r in R]
    np.testing.assert_allclose(angles, 0.1 * math.pi * np.arange(11), atol=1e-7)


# --- cost matrix --------------------------------------------------------------------

def test_cost_matrix_single_landmark():
    A = build_cost_matrix(ObserverGains(k=(1.0,)), 1)
    expected = np.zeros((5, 5))
    expected[3, 3] = expected[4, 4] = 1
    expected[3, 4] = expected[4, 3] = -1
    np.testing.assert_array_equal(A, expected)


def test_cost_matrix_corner_sums_weights():
    assert build_cost_matrix(G4, 4)[3, 3] == 4.0


@given(seeds, st.integers(1, 6))
def test_cost_matrix_loop_oracle_symmetric_psd(seed, n):
    rng = np.random.default_rng(seed)
    k = rng.uniform(0.1, 5.0, n)
    A = build_cost_matrix(ObserverGains(k=tuple(k)), n)
    ref = np.zeros((4 + n, 4 + n))
    for i in range(n):
        r = canonical_r(i + 1, n)
        ref += k[i] * np.outer(r, r)
    assert np.abs(A - ref).max() < 1e-14
    assert np.abs(A - A.T).max() < 1e-14
    assert np.linalg.eigvalsh(A).min() >= -1e-12


def test_cost_matrix_length_mismatch():
    with pytest.raises(ValueError):
        build_cost_matrix(G4, 3)


# --- cost ----------------------------------------------------------------------------

def test_cost_zero_at_identity():
    assert cost_U(GroupElement.identity(4), build_cost_matrix(G4, 4)) == 0.0


@settings(max_examples=200)
@given(seeds, st.sampled_from([1, 2, 4]))
def test_cost_trace_form_equals_residual_sum(seed, n):
    rng = np.random.default_rng(seed)
    k = rng.uniform(0.5, 2.0, n)
    Xt = random_group(rng, n, 3.0)
    A = build_cost_matrix(ObserverGains(k=tuple(k)), n)
    u = cost_U(Xt, A)
    assert u >= 0
    assert abs(u - dense_cost(Xt, k)) < 1e-12 * max(1.0, u)


def test_cost_half_turn_about_vertical():
    # rotating the pose by pi about e3 with the true landmark block
    Xt = GroupElement(rodrigues(math.pi, [0, 0, 1]), np.zeros(3), LANDMARKS)
    A = build_cost_matrix(G4, 4)
    E = np.eye(8) - Xt.as_matrix()
    assert cost_U(Xt, A) == pytest.approx(0.5 * np.trace(E @ A @ E.T), abs=1e-12)
    assert cost_U(Xt, A) == pytest.approx(dense_cost(Xt, [1, 1, 1, 1]), abs=1e-12)


def test_measured_cost_zero_for_perfect_estimate():
    X = random_group(np.random.default_rng(1), 4, 5.0)
    assert cost_from_measurements(X, noise_free_measurements(X), G4) == pytest.approx(0, abs=1e-24)


@settings(max_examples=300)
@given(seeds, st.sampled_from([1, 2, 4]))
def test_measured_cost_equals_trace_form(seed, n):
    rng = np.random.default_rng(seed)
    gains = ObserverGains(k=tuple(rng.uniform(0.5, 2.0, n)))
    X, Xh = random_group(rng, n, 3.0), random_group(rng, n, 3.0)
    lhs = cost_from_measurements(Xh, noise_free_measurements(X), gains)
    assert abs(lhs - cost_U(error(Xh, X), build_cost_matrix(gains, n))) < 1e-10


def test_measured_cost_position_offset():
    X = GroupElement(np.eye(3), np.zeros(3), LANDMARKS)
    Xh = GroupElement(np.eye(3), np.array([1.0, 0, 0]), LANDMARKS)
    # every residual is -(1,0,0): 0.5 * 4 * 1
    assert cost_from_measurements(Xh, noise_free_measurements(X), G4) == pytest.approx(2.0, abs=1e-12)


def test_invalid_reading_skip_or_raise(caplog):
    X = GroupElement(np.eye(3), np.zeros(3), LANDMARKS)
    meas = noise_free_measurements(X)
    bad = MeasurementSet(meas.Vm, meas.heads + 1.0, 0.0, np.array([False, True, True, True]))
    Xh = GroupElement(np.eye(3), np.zeros(3), LANDMARKS)
    # only the three valid readings contribute, each with |(1,1,1)|^2 = 3
    assert cost_from_measurements(Xh, bad, G4) == pytest.approx(4.5)
    assert "skipping" in caplog.text
    with pytest.raises(InvalidMeasurementError):
        cost_from_measurements(Xh, bad, G4, on_invalid="raise")


# --- gradient ---------------------------------------------------------------------------

def test_gradient_zero_at_identity():
    g = gradient_U(GroupElement.identity(4), build_cost_matrix(G4, 4))
    assert g.norm_sq() == 0


@settings(max_examples=100)
@given(seeds, st.sampled_from([1, 4]))
def test_gradient_matches_central_differences(seed, n):
    rng = np.random.default_rng(seed)
    A = build_cost_matrix(ObserverGains(k=tuple(rng.uniform(0.5, 2.0, n))), n)
    Xt, V = random_group(rng, n), random_algebra(rng, n)
    g = frobenius_inner(gradient_U(Xt, A), V)
    fd = fd_directional(Xt, V, A)
    assert abs(fd - g) / (1 + abs(g)) < 1e-6


def test_descent_along_negative_gradient():
    rng = np.random.default_rng(3)
    A = build_cost_matrix(G4, 4)
    Xt = random_group(rng, 4)
    g = gradient_U(Xt, A)
    for eps in (1e-3, 1e-4, 1e-5):
        assert cost_U(group_mul(Xt, algebra_exp(g, -eps)), A) < cost_U(Xt, A)


# --- innovation ---------------------------------------------------------------------------

def test_innovation_zero_for_perfect_estimate():
    X = random_group(np.random.default_rng(4), 4, 5.0)
    d = innovation_delta(X, noise_free_measurements(X), G4)
    assert np.abs(d.as_matrix()).max() < 1e-12


@settings(max_examples=200)
@given(seeds, st.sampled_from([1, 2, 4]))
def test_residual_projection_equals_left_error_form(seed, n):
    # Ups(sum k (r - X_hat beta) r^T) = Ups((I - X_err) A), X_err = X_hat X^-1
    rng = np.random.default_rng(seed)
    gains = ObserverGains(k=tuple(rng.uniform(0.5, 2.0, n)))
    X, Xh = random_group(rng, n, 3.0), random_group(rng, n, 3.0)
    A = build_cost_matrix(gains, n)
    M = residual_matrix(Xh, noise_free_measurements(X), gains)
    oracle = project_upsilon((np.eye(4 + n) - error(Xh, X).as_matrix()) @ A)
    np.testing.assert_allclose(project_upsilon(M).as_matrix(), oracle.as_matrix(), atol=1e-10)
    d = innovation_delta(Xh, noise_free_measurements(X), gains)
    np.testing.assert_allclose(d.as_matrix(), -adjoint(group_inverse(Xh), oracle).as_matrix(), atol=1e-10)


def test_residual_projection_is_not_the_inverse_error_form():
    # the variant with (I - X_err^-1) A does not match the measured residual
    rng = np.random.default_rng(7)
    X, Xh = random_group(rng, 4), random_group(rng, 4)
    A = build_cost_matrix(G4, 4)
    M = residual_matrix(Xh, noise_free_measurements(X), G4)
    wrong = project_upsilon((np.eye(8) - group_inverse(error(Xh, X)).as_matrix()) @ A)
    assert np.linalg.norm(project_upsilon(M).as_matrix() - wrong.as_matrix()) > 1.0


def test_residual_projection_has_no_rotation_part():
    rng = np.random.default_rng(8)
    X, Xh = random_group(rng, 4), random_group(rng, 4)
    M = residual_matrix(Xh, noise_free_measurements(X), G4)
    np.testing.assert_array_equal(project_upsilon(M).omega, 0)


def test_innovation_linear_in_weights():
    rng = np.random.default_rng(9)
    X, Xh = random_group(rng, 4), random_group(rng, 4)
    meas = noise_free_measurements(X)
    k = rng.uniform(0.5, 2.0, 4)
    d1 = innovation_delta(Xh, meas, ObserverGains(k=tuple(k)))
    d2 = innovation_delta(Xh, meas, ObserverGains(k=tuple(2 * k)))
    np.testing.assert_array_equal(d2.as_matrix(), 2 * d1.as_matrix())


# --- flow map -------------------------------------------------------------------------------

def true_bias():
    return BiasVector(np.array(BIAS_OMEGA), np.array(BIAS_V))


def test_flow_at_equilibrium_is_drift_free():
    rng = np.random.default_rng(10)
    X = random_group(rng, 4, 5.0)
    V = AlgebraElement.from_vectors([0, 0, 0.3], [2, 0, 0], 4)
    b = true_bias()
    Vm = V + b.as_algebra(4)
    W, bd = flow_map(state(X, b.as_algebra(4)), Vm, noise_free_measurements(X), G4)
    assert np.abs((W - V).as_matrix()).max() < 1e-12
    assert np.abs(bd.as_matrix()).max() < 1e-12


def test_flow_perfect_estimate_no_bias_follows_velocity():
    X = random_group(np.random.default_rng(11), 4, 5.0)
    V = random_algebra(np.random.default_rng(12), 4)
    V = AlgebraElement(V.omega, V.v, np.zeros((3, 4)))
    W, bd = flow_map(state(X), V, noise_free_measurements(X), G4)
    assert np.abs((W - V).as_matrix()).max() < 1e-12
    assert np.abs(bd.as_matrix()).max() < 1e-12


@settings(max_examples=200)
@given(seeds, st.sampled_from([1, 2, 4]), st.floats(0.05, 0.95))
def test_bias_rate_matches_true_state_oracle(seed, n, k_o):
    rng = np.random.default_rng(seed)
    gains = ObserverGains(k=tuple(rng.uniform(0.5, 2.0, n)), k_o=k_o)
    X, Xh = random_group(rng, n, 3.0), random_group(rng, n, 3.0)
    A = build_cost_matrix(gains, n)
    Xm = Xh.as_matrix()
    B = Xm.T @ (np.eye(4 + n) - error(Xh, X).as_matrix()) @ A @ np.linalg.inv(Xm).T
    oracle = project_upsilon(B)
    _, bd = flow_map(state(Xh), AlgebraElement.zero(n), noise_free_measurements(X), gains)
    np.testing.assert_allclose(bd.omega, -k_o * oracle.omega, atol=1e-10)
    np.testing.assert_allclose(bd.v, -k_o * oracle.v, atol=1e-10)
    np.testing.assert_array_equal(bd.xi, 0)


def test_bias_rate_ignores_symmetric_correction():
    # replacing M by M X_err^T changes the projection only by a symmetric block
    rng = np.random.default_rng(13)
    X, Xh = random_group(rng, 4), random_group(rng, 4)
    A = build_cost_matrix(G4, 4)
    Xm = Xh.as_matrix()
    Et = error(Xh, X).as_matrix()
    M = residual_matrix(Xh, noise_free_measurements(X), G4)
    a = project_upsilon(Xm.T @ M @ np.linalg.inv(Xm).T)
    b = project_upsilon(Xm.T @ M @ Et.T @ np.linalg.inv(Xm).T)
    np.testing.assert_allclose(a.as_matrix(), b.as_matrix(), atol=1e-10)
    assert np.linalg.norm(M - (np.eye(8) - Et) @ A) < 1e-10


def test_flow_decreases_cost_with_true_bias_frozen():
    # with the true bias fed in and frozen, Euler flow steps do not raise U
    from slamobs.experiments import preset_experiment1
    from slamobs.kinematics import Simulator

    cfg = preset_experiment1()
    sim = Simulator(cfg.trajectory, cfg.landmarks, cfg.bias)
    A = build_cost_matrix(G4, 4)
    Xh = GroupElement(rodrigues(math.pi / 4, [1, 0, 0]), np.array([-2.0, 0, 7]), 0.4 * LANDMARKS)
    Vb = cfg.bias.as_algebra(4)
    dt, worst = 0.01, -np.inf
    u_prev = None
    for k in range(3000):
        meas = sim(k * dt)
        truth = sim.state_at(k * dt)
        u = cost_U(error(Xh, truth.X), A)
        if u_prev is not None:
            worst = max(worst, u - u_prev)
        u_prev = u
        W, _ = flow_map(state(Xh, Vb), meas.Vm, meas, G4)
        E = algebra_exp(W, dt)
        Xh = GroupElement(Xh.R @ E.R, Xh.R @ E.p + Xh.p, Xh.R @ E.eta + Xh.eta)
    assert worst <= 1e-8


# --- jumps ----------------------------------------------------------------------------------

def test_candidate_zero_is_current_estimate():
    X = random_group(np.random.default_rng(14), 4)
    c0 = jump_candidates(state(X), G4)[0]
    np.testing.assert_array_equal(c0.as_matrix(), X.as_matrix())


def test_candidate_one_half_turn_step():
    X = random_group(np.random.default_rng(15), 4)
    gains = ObserverGains(theta=math.pi)
    c1 = jump_candidates(state(X), gains)[1]
    Rq = rodrigues(0.2 * math.pi, [0, 0, 1])
    np.testing.assert_allclose(c1.R, Rq.T @ X.R, atol=1e-15)
    np.testing.assert_allclose(c1.p, Rq @ X.p, atol=1e-15)
    np.testing.assert_array_equal(c1.eta, X.eta)


def test_literal_candidates_scale_landmarks():
    X = random_group(np.random.default_rng(16), 4)
    cands = jump_candidates(state(X), G4, literal=True)
    np.testing.assert_array_equal(cands[1].eta, 2 * X.eta)
    np.testing.assert_array_equal(cands[0].eta, 0 * X.eta)


@pytest.mark.parametrize("literal", [False, True])
def test_vectorized_candidate_costs_match_loop(literal):
    rng = np.random.default_rng(17)
    X, Xh = random_group(rng, 4, 3.0), random_group(rng, 4, 3.0)
    meas = noise_free_measurements(X)
    s = state(Xh)
    loop = [cost_from_measurements(c, meas, G4) for c in jump_candidates(s, G4, literal)]
    np.testing.assert_allclose(candidate_costs(s, meas, G4, literal), loop, rtol=1e-12, atol=1e-12)


def test_perfect_estimate_not_in_jump_set():
    X = random_group(np.random.default_rng(18), 4, 5.0)
    in_d, q, u0, umin = in_jump_set(state(X), noise_free_measurements(X), G4)
    assert not in_d and q == 0 and u0 == pytest.approx(0, abs=1e-20)


def antipodal_instance():
    # estimate whose last candidate lands exactly on the truth
    rng = np.random.default_rng(19)
    X = random_group(rng, 4, 5.0)
    Rq = G4.candidate_rotations[-1]
    Xh = GroupElement(Rq @ X.R, Rq.T @ X.p, X.eta)
    return X, Xh


def test_antipodal_estimate_in_jump_set():
    X, Xh = antipodal_instance()
    meas = noise_free_measurements(X)
    in_d, q, u0, umin = in_jump_set(state(Xh), meas, G4)
    assert in_d and q == G4.q_max
    assert umin == pytest.approx(0, abs=1e-20)
    assert u0 == pytest.approx(cost_from_measurements(Xh, meas, G4))
    assert u0 - umin >= G4.delta


def test_huge_hysteresis_never_jumps():
    X, Xh = antipodal_instance()
    gains = ObserverGains(delta=1e9)
    assert not in_jump_set(state(Xh), noise_free_measurements(X), gains)[0]


def test_jump_map_properties():
    X, Xh = antipodal_instance()
    meas = noise_free_measurements(X)
    Vb = random_algebra(np.random.default_rng(20), 4)
    Vb = AlgebraElement(Vb.omega, Vb.v, np.zeros((3, 4)))
    s = state(Xh, Vb)
    in_d, q, u0, umin = in_jump_set(s, meas, G4)
    s2 = jump_map(s, q, G4)
    assert s2.Vbhat is s.Vbhat
    np.testing.assert_array_equal(s2.Vbhat.as_matrix(), s.Vbhat.as_matrix())
    assert s2.q == q
    u_after = cost_from_measurements(s2.Xhat, meas, G4)
    assert u_after == pytest.approx(umin, abs=1e-12)
    assert u0 - u_after >= G4.delta - 1e-12
    np.testing.assert_allclose(s2.Xhat.as_matrix(), X.as_matrix(), atol=1e-12)


def test_smooth_wrapper_never_jumps():
    X, Xh = antipodal_instance()
    obs = HybridObserver(G4, "smooth")
    assert obs.jump_check(state(Xh), noise_free_measurements(X)) == (False, True, None)
    with pytest.raises(ValueError):
        HybridObserver(G4, "fast")


# --- Lyapunov and bias readout -----------------------------------------------------------------

def test_lyapunov_zero_and_half():
    X = random_group(np.random.default_rng(21), 4, 5.0)
    b = true_bias()
    assert lyapunov_V(state(X, b.as_algebra(4)), TrueState(X), b, G4) == pytest.approx(0, abs=1e-20)
    # unit-Frobenius bias error: v = (1,0,0) only
    e = BiasVector(np.zeros(3), np.array([1.0, 0, 0]))
    assert lyapunov_V(state(X), TrueState(X), e, G4) == pytest.approx(0.5, abs=1e-12)


@given(seeds)
def test_lyapunov_cost_part_matches_measurements(seed):
    rng = np.random.default_rng(seed)
    X, Xh = random_group(rng, 4, 3.0), random_group(rng, 4, 3.0)
    v = lyapunov_V(state(Xh), TrueState(X), BiasVector.zero(), G4)
    assert v >= 0
    assert abs(v - cost_from_measurements(Xh, noise_free_measurements(X), G4)) < 1e-10


def test_extract_bias_roundtrip():
    assert np.all(extract_bias(state(GroupElement.identity(4))).b_omega_hat == 0)
    b = true_bias()
    est = extract_bias(state(GroupElement.identity(4), b.as_algebra(4)))
    np.testing.assert_array_equal(est.b_omega_hat, BIAS_OMEGA)
    np.testing.assert_array_equal(est.b_v_hat, BIAS_V)


@given(st.lists(st.floats(-10, 10), min_size=6, max_size=6))
def test_extract_bias_inverts_construction(vals):
    b = BiasVector(np.array(vals[:3]), np.array(vals[3:]))
    est = extract_bias(state(GroupElement.identity(2), b.as_algebra(2)))
    np.testing.assert_array_equal(est.b_omega_hat, b.b_omega)
    np.testing.assert_array_equal(est.b_v_hat, b.b_v)


def test_initial_state_validates_rotation():
    with pytest.raises(ValidationError):
        initial_state(GroupElement(2 * np.eye(3), np.zeros(3), np.zeros((3, 1))))
    s = initial_state(GroupElement.identity(2))
    assert s.q == 0 and s.Vbhat.norm_sq() == 0


@given(seeds)
def test_measurements_blind_to_common_rigid_motion(seed):
    # Q = (R_q, c, c 1^T) fixes every r_i, so X and Q X yield identical readings
    rng = np.random.default_rng(seed)
    X = random_group(rng, 4, 5.0)
    c = 5.0 * rng.standard_normal(3)
    Q = GroupElement(random_group(rng, 0).R, c, np.repeat(c[:, None], 4, axis=1))
    for i in range(4):
        np.testing.assert_allclose(Q.as_matrix() @ canonical_r(i + 1, 4), canonical_r(i + 1, 4), atol=1e-12)
    a = noise_free_measurements(X).heads
    b = noise_free_measurements(group_mul(Q, X)).heads
    np.testing.assert_allclose(a, b, atol=1e-10)
