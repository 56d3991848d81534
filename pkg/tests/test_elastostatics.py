import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import one_link, random_chain
from robomill.errors import NonConvergence, SingularJacobian
from robomill.elastostatics import (
    LoadedState,
    SolverSettings,
    cartesian_stiffness,
    solve_equilibrium_for_force,
    solve_equilibrium_for_pose,
)
from robomill.robot_model import JointConfig, forward_kinematics, gravity_loading, kinematics

seeds = st.integers(0, 2**32 - 1)


def _residual(m, state):
    _, jacs = kinematics(m, state.cfg)
    JG = jacs[1:].reshape(-1, m.n_theta)
    return np.linalg.norm(state.cfg.theta / m.joint_compliances - JG.T @ state.G
                          - jacs[m.n].T @ state.F)


def _loaded_case(rng):
    m = random_chain(rng)
    q = rng.uniform(-3, 3, 6)
    F = np.r_[rng.normal(0, 500, 3), rng.normal(0, 100, 3)]
    return m, q, F


def test_settings_validation():
    with pytest.raises(ValueError):
        SolverSettings(max_iterations=0)
    with pytest.raises(ValueError):
        SolverSettings(torque_tolerance=0.0)
    with pytest.raises(ValueError):
        SolverSettings(pose_tolerance=-1.0)


def test_pose_solver_unloaded_fixed_point(rng):
    m = random_chain(rng, gravity=False)
    q = rng.uniform(-3, 3, 6)
    t0 = forward_kinematics(m, JointConfig.rigid(q))
    s = solve_equilibrium_for_pose(m, q, t0)
    assert np.all(s.cfg.theta == 0.0)
    assert np.all(s.F == 0.0)


def test_pose_solver_one_link():
    L, c, d = 0.9, 2e-6, 1e-6
    m = one_link(L, c)
    s = solve_equilibrium_for_pose(m, [0.0], [L, d, 0, 0, 0, 0], components=[1])
    assert s.cfg.theta[0] == pytest.approx(d / L, rel=1e-9)
    assert s.F[1] == pytest.approx(d / (c * L * L), rel=1e-9)


def test_pose_solver_random_chain_with_gravity(rng):
    m, q, _ = _loaded_case(rng)
    t0 = forward_kinematics(m, JointConfig.rigid(q))
    target = t0 + np.r_[rng.normal(0, 1e-4, 3), rng.normal(0, 1e-4, 3)]
    s = solve_equilibrium_for_pose(m, q, target)
    assert s.residual < 1e-9
    assert _residual(m, s) < 1e-9
    np.testing.assert_allclose(s.t, target, atol=1e-9)


def test_force_solver_unloaded(rng):
    m = random_chain(rng, gravity=False)
    q = rng.uniform(-3, 3, 6)
    s = solve_equilibrium_for_force(m, q, np.zeros(6))
    np.testing.assert_array_equal(s.t, forward_kinematics(m, JointConfig.rigid(q)))


def test_force_solver_one_link():
    L, c, Fy = 0.9, 2e-6, 50.0
    s = solve_equilibrium_for_force(one_link(L, c), [0.0], [0, Fy, 0, 0, 0, 0])
    # exact: theta = c L cos(theta) Fy
    assert s.cfg.theta[0] == pytest.approx(c * L * np.cos(s.cfg.theta[0]) * Fy, rel=1e-12)
    assert s.t[1] == pytest.approx(c * L * L * Fy, rel=1e-6)


def test_force_solver_linearisation(rng):
    m, q, _ = _loaded_case(rng)
    s0 = solve_equilibrium_for_force(m, q, np.zeros(6))
    K = cartesian_stiffness(m, s0)
    F = np.r_[rng.normal(0, 20, 3), rng.normal(0, 2, 3)]
    s = solve_equilibrium_for_force(m, q, F)
    d = s.t - s0.t
    pred = np.linalg.solve(K, F)
    assert np.linalg.norm(d - pred) < 1e-2 * np.linalg.norm(pred)


def test_stiffness_unloaded_reduces_to_compliance_form(rng):
    m = random_chain(rng, gravity=False)
    q = rng.uniform(-3, 3, 6)
    s = solve_equilibrium_for_force(m, q, np.zeros(6))
    J = kinematics(m, s.cfg)[1][m.n]
    K0 = np.linalg.inv(J @ np.diag(m.joint_compliances) @ J.T)
    K = cartesian_stiffness(m, s)
    assert np.linalg.norm(K - K0) < 1e-9 * np.linalg.norm(K0)
    assert np.all(np.linalg.eigvalsh(K) > 0)


def test_stiffness_one_link():
    L, c = 0.9, 2e-6
    m = one_link(L, c)
    s = solve_equilibrium_for_force(m, [0.0], np.zeros(6))
    K = cartesian_stiffness(m, s, components=[1])
    assert K[0, 0] == pytest.approx(1.0 / (c * L * L), rel=1e-12)


def _fd_compliance_error(m, q, F, h=1.0):
    """Relative error of ``K^-1`` against a central-difference compliance."""
    s = solve_equilibrium_for_force(m, q, F)
    K = cartesian_stiffness(m, s)
    C = np.empty((6, 6))
    for k in range(6):
        e = np.zeros(6)
        e[k] = h if k < 3 else 0.1 * h
        tp = solve_equilibrium_for_force(m, q, F + e, theta0=s.cfg.theta).t
        tm = solve_equilibrium_for_force(m, q, F - e, theta0=s.cfg.theta).t
        C[:, k] = (tp - tm) / (2 * e[k])
    C_model = np.linalg.inv(K)
    return np.linalg.norm(C - C_model) / np.linalg.norm(C_model), K


@settings(max_examples=10, deadline=None)
@given(seeds)
def test_stiffness_matches_force_deflection_map(seed):
    rng = np.random.default_rng(seed)
    m, q, F = _loaded_case(rng)
    err, K = _fd_compliance_error(m, q, F)
    assert err < 1e-3
    assert np.linalg.norm(K - K.T) <= 1e-9 * np.linalg.norm(K)


@pytest.mark.parametrize("seed", [5532, 1875])
def test_near_singular_cases(seed):
    rng = np.random.default_rng(seed)
    m, q, F = _loaded_case(rng)
    assert _fd_compliance_error(m, q, F)[0] < 1e-3
    s = solve_equilibrium_for_force(m, q, F)
    back = solve_equilibrium_for_pose(m, q, s.t)
    assert back.residual < 1e-9


@settings(max_examples=10, deadline=None)
@given(seeds)
def test_pose_and_force_solvers_are_inverse(seed):
    rng = np.random.default_rng(seed)
    m, q, F = _loaded_case(rng)
    s = solve_equilibrium_for_force(m, q, F)
    back = solve_equilibrium_for_pose(m, q, s.t, theta0=np.zeros(6))
    # the wrench is fixed only to about |K_c| times the pose tolerance
    tol = 10 * np.linalg.norm(cartesian_stiffness(m, s)) * 1e-9
    np.testing.assert_allclose(back.F, F, atol=tol)
    again = solve_equilibrium_for_force(m, q, back.F)
    assert np.linalg.norm(again.t[:3] - s.t[:3]) < 1e-8


def test_residual_decreases_near_solution(rng):
    m, q, F = _loaded_case(rng)
    G = gravity_loading(m)
    norms = []
    for n in range(1, 4):
        try:
            solve_equilibrium_for_force(m, q, 20 * F, SolverSettings(max_iterations=n,
                                                                      torque_tolerance=1e-14))
        except NonConvergence as exc:
            norms.append(exc.residual)
    assert len(norms) >= 2
    assert all(b < a for a, b in zip(norms, norms[1:]))
    assert G.shape == (36,)


def test_nonconvergence_carries_residual(rng):
    m, q, F = _loaded_case(rng)
    with pytest.raises(NonConvergence) as info:
        solve_equilibrium_for_pose(m, q, forward_kinematics(m, JointConfig.rigid(q)) + 1e-3,
                                   SolverSettings(max_iterations=1))
    assert info.value.iterations == 1
    assert info.value.residual > 0


def test_singular_jacobian_detected():
    m = one_link()
    with pytest.raises(SingularJacobian):
        solve_equilibrium_for_pose(m, [0.0], [0.8, 1e-6, 0, 0, 0, 0])


def test_loaded_state_fields(rng):
    m, q, F = _loaded_case(rng)
    s = solve_equilibrium_for_force(m, q, F)
    assert isinstance(s, LoadedState)
    assert s.residual <= 1e-9
    assert s.G.shape == (36,)


@settings(max_examples=10, deadline=None)
@given(seeds)
def test_position_only_pose_solve(seed):
    rng = np.random.default_rng(seed)
    m, q, F = _loaded_case(rng)
    F[3:] = 0.0
    s = solve_equilibrium_for_force(m, q, F)
    back = solve_equilibrium_for_pose(m, q, s.t, components=[0, 1, 2])
    assert np.all(back.F[3:] == 0.0)
    np.testing.assert_allclose(back.t[:3], s.t[:3], atol=1e-9)
    assert _residual(m, back) < 1e-8
