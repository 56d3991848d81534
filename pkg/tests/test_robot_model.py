import dataclasses

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import KR270_COMPLIANCES, one_link, random_chain
from robomill.robot_model import (
    TCP,
    JointConfig,
    forward_kinematics,
    gravity_loading,
    inverse_kinematics,
    kinematics,
    loading_hessian,
    log_so3,
    node_jacobian,
    _torque_map,
)
from scipy.spatial.transform import Rotation

seeds = st.integers(0, 2**32 - 1)


def test_zero_deflection_is_rigid_pose(kr270, kr270_scenario):
    cfg = JointConfig.rigid(kr270_scenario.q0)
    t = forward_kinematics(kr270, cfg)
    softer = dataclasses.replace(kr270, joint_compliances=10 * KR270_COMPLIANCES)
    np.testing.assert_array_equal(t, forward_kinematics(softer, cfg))
    np.testing.assert_allclose(t[3:], 0.0, atol=1e-15)


def test_one_link_pose():
    L = 0.8
    m = one_link(L)
    t = forward_kinematics(m, JointConfig([0.0], [0.0]))
    np.testing.assert_allclose(t, [L, 0, 0, 0, 0, 0], atol=1e-15)


def test_one_link_small_deflection():
    L, d = 0.8, 1e-5
    t = forward_kinematics(one_link(L), JointConfig([0.0], [d]))
    assert t[1] == pytest.approx(L * d, rel=1e-9)
    assert t[5] == pytest.approx(d, rel=1e-12)
    # first-order expansion of the exact rotation
    assert t[0] - L == pytest.approx(-0.5 * L * d * d, rel=1e-6)


def test_node_out_of_range(kr270):
    cfg = JointConfig.rigid(np.zeros(6))
    for bad in (-1, 7, 2.5, "base"):
        with pytest.raises(IndexError):
            forward_kinematics(kr270, cfg, bad)
        with pytest.raises(IndexError):
            node_jacobian(kr270, cfg, bad)


def test_downstream_columns_are_zero(rng):
    m = random_chain(rng)
    cfg = JointConfig(rng.uniform(-3, 3, 6), rng.normal(0, 1e-3, 6))
    for j in range(1, 6):
        J = node_jacobian(m, cfg, j)
        assert np.all(J[:, j:] == 0.0)
        assert np.any(J[:, :j] != 0.0)


def _fd_jacobian(m, cfg, node, h=1e-7):
    cols = []
    for k in range(m.n_theta):
        e = np.zeros(m.n_theta)
        e[k] = h
        tp = forward_kinematics(m, JointConfig(cfg.q, cfg.theta + e), node)
        tm = forward_kinematics(m, JointConfig(cfg.q, cfg.theta - e), node)
        cols.append((tp - tm) / (2 * h))
    return np.column_stack(cols)


@settings(max_examples=25, deadline=None)
@given(seeds)
def test_jacobian_matches_finite_differences(seed):
    rng = np.random.default_rng(seed)
    m = random_chain(rng)
    cfg = JointConfig(rng.uniform(-3, 3, 6), rng.normal(0, 0.05, 6))
    for node in (1, 3, TCP):
        J = node_jacobian(m, cfg, node)
        Jfd = _fd_jacobian(m, cfg, node)
        assert np.linalg.norm(J - Jfd) <= 1e-6 * np.linalg.norm(J)


@pytest.mark.parametrize("theta", [0.0, 0.3, -1.2])
def test_one_link_jacobian(theta):
    L = 0.7
    J = node_jacobian(one_link(L), JointConfig([0.0], [theta]))
    np.testing.assert_allclose(J[[0, 1, 5], 0], [-L * np.sin(theta), L * np.cos(theta), 1.0],
                               atol=1e-14)
    np.testing.assert_allclose(J[[2, 3, 4], 0], 0.0, atol=1e-15)


def test_hessian_vanishes_without_loading(rng):
    m = random_chain(rng)
    cfg = JointConfig(rng.uniform(-3, 3, 6), np.zeros(6))
    H = loading_hessian(m, cfg, np.zeros(6), np.zeros(36))
    assert np.all(H == 0.0)


def test_hessian_dimension_check(kr270):
    cfg = JointConfig.rigid(np.zeros(6))
    with pytest.raises(ValueError):
        loading_hessian(kr270, cfg, np.zeros(5), np.zeros(36))
    with pytest.raises(ValueError):
        loading_hessian(kr270, cfg, np.zeros(6), np.zeros(30))


@settings(max_examples=20, deadline=None)
@given(seeds)
def test_hessian_symmetric_and_matches_torque_map(seed):
    rng = np.random.default_rng(seed)
    m = random_chain(rng)
    cfg = JointConfig(rng.uniform(-3, 3, 6), rng.normal(0, 1e-3, 6))
    F = np.r_[rng.normal(0, 1000, 3), rng.normal(0, 200, 3)]
    G = gravity_loading(m)
    H = loading_hessian(m, cfg, F, G)
    assert np.linalg.norm(H - H.T) < 1e-10 * np.linalg.norm(H)
    # external-force part against a coarser independent difference
    HF = loading_hessian(m, cfg, F, np.zeros(36))
    h = 1e-5
    cols = []
    for k in range(6):
        e = np.zeros(6)
        e[k] = h
        tp = _torque_map(m, JointConfig(cfg.q, cfg.theta + e), F, np.zeros(36))
        tm = _torque_map(m, JointConfig(cfg.q, cfg.theta - e), F, np.zeros(36))
        cols.append((tp - tm) / (2 * h))
    Hfd = np.column_stack(cols)
    assert np.linalg.norm(HF - 0.5 * (Hfd + Hfd.T)) <= 1e-5 * np.linalg.norm(HF)


def test_gravity_zero_masses(rng):
    m = random_chain(rng, masses=False)
    assert np.all(gravity_loading(m) == 0.0)


def test_gravity_one_link_midpoint():
    m = one_link(1.0, mass=10.0, gravity=(0, 0, -9.81))
    G = gravity_loading(m, include_base=True).reshape(2, 6)
    np.testing.assert_allclose(G[:, 2], [-49.05, -49.05])
    np.testing.assert_array_equal(G[:, 3:], 0.0)


@settings(max_examples=30, deadline=None)
@given(seeds, st.floats(0.05, 0.95))
def test_gravity_total_weight(seed, centre):
    rng = np.random.default_rng(seed)
    m = dataclasses.replace(random_chain(rng), mass_centres=np.full(6, centre))
    cfg = JointConfig(rng.uniform(-3, 3, 6), rng.normal(0, 0.1, 6))
    G = gravity_loading(m, cfg, include_base=True).reshape(-1, 6)
    total = m.link_masses.sum() * m.gravity
    np.testing.assert_allclose(G[:, :3].sum(axis=0), total, rtol=1e-12, atol=1e-12)
    np.testing.assert_array_equal(G[:, 3:], 0.0)


def test_kinematics_consistent_with_node_calls(rng):
    m = random_chain(rng)
    cfg = JointConfig(rng.uniform(-3, 3, 6), rng.normal(0, 0.01, 6))
    poses, jacs = kinematics(m, cfg)
    for j in range(1, 7):
        np.testing.assert_array_equal(poses[j], forward_kinematics(m, cfg, j))
        np.testing.assert_array_equal(jacs[j], node_jacobian(m, cfg, j))


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-1, 1), min_size=3, max_size=3), st.floats(0, np.pi - 1e-6))
def test_log_so3_matches_scipy(axis, angle):
    a = np.asarray(axis)
    if np.linalg.norm(a) < 1e-3:
        return
    rv = a / np.linalg.norm(a) * angle
    np.testing.assert_allclose(log_so3(Rotation.from_rotvec(rv).as_matrix()), rv, atol=1e-9)


def test_inverse_kinematics_round_trip(kr270, kr270_scenario):
    q0 = kr270_scenario.q0
    target = forward_kinematics(kr270, JointConfig.rigid(q0)) + np.array([2e-3, -1e-3, 5e-4, 0, 0, 0])
    q = inverse_kinematics(kr270, target, q0)
    np.testing.assert_allclose(forward_kinematics(kr270, JointConfig.rigid(q)), target, atol=1e-10)


def test_description_validation():
    from robomill.robot_model import LinkDescription, ManipulatorDescription

    link = LinkDescription()
    with pytest.raises(ValueError):
        ManipulatorDescription([], [])
    with pytest.raises(ValueError):
        ManipulatorDescription([link], [1e-6, 1e-6])
    with pytest.raises(ValueError):
        ManipulatorDescription([link], [0.0])
    with pytest.raises(ValueError):
        ManipulatorDescription([link], [1e-6], link_masses=[-1.0])
