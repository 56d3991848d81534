"""Static equilibrium of the loaded manipulator and its Cartesian stiffness."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NonConvergence, SingularJacobian, SingularMatrix
from .robot_model import JointConfig, gravity_loading, kinematics, loading_hessian

COND_LIMIT = 1e12
MAX_HALVINGS = 10
MAX_DEFLECTION_STEP = 0.05  # rad


@dataclass(frozen=True)
class SolverSettings:
    max_iterations: int = 100
    torque_tolerance: float = 1e-9
    pose_tolerance: float = 1e-9

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.torque_tolerance <= 0 or self.pose_tolerance <= 0:
            raise ValueError("tolerances must be positive")


@dataclass
class LoadedState:
    """Converged equilibrium ``(theta, F)`` with its loading and pose."""

    cfg: JointConfig
    F: np.ndarray
    G: np.ndarray
    t: np.ndarray
    residual: float
    iterations: int = 0


def _residuals(model, q, theta, F, G):
    poses, jacs = kinematics(model, JointConfig(q, theta))
    JG = jacs[1:].reshape(-1, model.n_theta)
    J = jacs[model.n]
    r = theta / model.joint_compliances - JG.T @ G - J.T @ F
    return r, poses[model.n], J, JG


def _components(components):
    return np.arange(6) if components is None else np.asarray(components, dtype=int)


def solve_equilibrium_for_pose(model, q, target, settings=None, components=None,
                               theta0=None):
    """Deflections and end-point wrench that hold the TCP at ``target``.

    With as many prescribed pose coordinates as virtual joints the
    deflections follow from the kinematics alone (Newton on
    ``t(q, theta) = target``) and the wrench from the spring balance
    ``J^T F = K theta - J_G^T G``. With fewer coordinates a Newton
    iteration on the wrench is used instead, each iterate being an exact
    force equilibrium. ``components`` restricts the prescribed pose
    coordinates (and the non-zero wrench entries) to a subset of the six,
    which is needed for chains with fewer than six virtual joints.
    """
    settings = settings or SolverSettings()
    q = np.asarray(q, float)
    comp = _components(components)
    target = np.asarray(target, float)
    if len(comp) > model.n_theta:
        raise SingularJacobian(
            f"{len(comp)} pose coordinates cannot be held by {model.n_theta} virtual joints")
    if len(comp) == model.n_theta:
        return _pose_by_kinematics(model, q, target, comp, settings, theta0)
    return _pose_by_wrench(model, q, target, comp, settings, theta0)


def _pose_by_kinematics(model, q, target, comp, settings, theta0):
    G = gravity_loading(model)
    if theta0 is None:
        theta = solve_equilibrium_for_force(model, q, np.zeros(6), settings).cfg.theta
    else:
        theta = np.array(theta0, float)
    F = np.zeros(6)
    _, t, J, _ = _residuals(model, q, theta, F, G)
    err = np.linalg.norm(target[comp] - t[comp])
    for it in range(1, settings.max_iterations + 1):
        Js = J[comp]
        if np.linalg.cond(Js) > COND_LIMIT:
            raise SingularJacobian("tool Jacobian is singular at this configuration")
        d = np.linalg.solve(Js, target[comp] - t[comp])
        # deflections are small: keep clear of distant kinematic branches
        big = np.max(np.abs(d))
        if big > MAX_DEFLECTION_STEP:
            d *= MAX_DEFLECTION_STEP / big
        step = 1.0
        for _ in range(MAX_HALVINGS + 1):
            th = theta + step * d
            _, t1, J1, _ = _residuals(model, q, th, F, G)
            e1 = np.linalg.norm(target[comp] - t1[comp])
            if e1 < err or step < 2.0**-MAX_HALVINGS:
                break
            step *= 0.5
        theta, t, J, err = th, t1, J1, e1
        if err <= settings.pose_tolerance:
            r, t, J, JG = _residuals(model, q, theta, F, G)
            Js = J[comp]
            F[comp] = np.linalg.solve(Js.T, theta / model.joint_compliances - JG.T @ G)
            r = theta / model.joint_compliances - JG.T @ G - J.T @ F
            return LoadedState(JointConfig(q, theta), F, G, t, float(np.linalg.norm(r)), it)
    raise NonConvergence("pose equilibrium did not converge", residual=float(err),
                         iterations=settings.max_iterations)


def _pose_by_wrench(model, q, target, comp, settings, theta0):
    F = np.zeros(6)
    state = solve_equilibrium_for_force(model, q, F, settings, theta0)
    err = np.linalg.norm(target[comp] - state.t[comp])
    for it in range(1, settings.max_iterations + 1):
        if err <= settings.pose_tolerance:
            return LoadedState(state.cfg, F, state.G, state.t, state.residual, it - 1)
        T, J = tangent_matrices(model, state)
        Js = J[comp]
        A = Js @ np.linalg.solve(T, Js.T)
        if np.linalg.cond(A) > COND_LIMIT:
            raise SingularJacobian("J (K - H)^-1 J^T is singular at this configuration")
        dF = np.zeros(6)
        dF[comp] = np.linalg.solve(0.5 * (A + A.T), target[comp] - state.t[comp])
        step = 1.0
        while True:
            try:
                trial = solve_equilibrium_for_force(model, q, F + step * dF, settings,
                                                    state.cfg.theta)
                trial_err = np.linalg.norm(target[comp] - trial.t[comp])
            except (NonConvergence, SingularMatrix):
                trial, trial_err = None, np.inf
            if trial_err < err or step < 2.0**-MAX_HALVINGS:
                break
            step *= 0.5
        if trial is None:
            break
        F, state, err = F + step * dF, trial, trial_err
    if err <= settings.pose_tolerance:
        return LoadedState(state.cfg, F, state.G, state.t, state.residual,
                           settings.max_iterations)
    raise NonConvergence("pose equilibrium did not converge", residual=float(err),
                         iterations=settings.max_iterations)


def solve_equilibrium_for_force(model, q, F, settings=None, theta0=None):
    """Deflected configuration under the wrench ``F`` plus gravity.

    Newton iteration on ``K theta - J_G^T G - J^T F = 0`` with tangent
    ``K - H``; falls back to step halving when the residual grows.
    """
    settings = settings or SolverSettings()
    q = np.asarray(q, float)
    F = np.asarray(F, float)
    G = gravity_loading(model)
    K = model.stiffness
    if theta0 is None:
        _, _, J, JG = _residuals(model, q, np.zeros(model.n_theta), F, G)
        theta = model.joint_compliances * (JG.T @ G + J.T @ F)
    else:
        theta = np.array(theta0, float)

    r, t, _, _ = _residuals(model, q, theta, F, G)
    for it in range(1, settings.max_iterations + 1):
        if np.linalg.norm(r) <= settings.torque_tolerance:
            return LoadedState(JointConfig(q, theta), F, G, t, float(np.linalg.norm(r)), it - 1)
        H = loading_hessian(model, JointConfig(q, theta), F, G)
        T = K - H
        if np.linalg.cond(T) > COND_LIMIT:
            raise SingularMatrix("K_theta - H is singular (loss of stability)")
        d = np.linalg.solve(T, r)
        n0 = np.linalg.norm(r)
        step = 1.0
        for _ in range(MAX_HALVINGS + 1):
            th = theta - step * d
            r1, t1, _, _ = _residuals(model, q, th, F, G)
            if np.linalg.norm(r1) <= n0 or step < 2.0**-MAX_HALVINGS:
                break
            step *= 0.5
        theta, r, t = th, r1, t1
    if np.linalg.norm(r) <= settings.torque_tolerance:
        return LoadedState(JointConfig(q, theta), F, G, t, float(np.linalg.norm(r)),
                           settings.max_iterations)
    raise NonConvergence(
        "force equilibrium did not converge", residual=float(np.linalg.norm(r)),
        iterations=settings.max_iterations,
    )


def tangent_matrices(model, state):
    """``(K_theta - H, J_F)`` at an equilibrium."""
    H = loading_hessian(model, state.cfg, state.F, state.G)
    _, jacs = kinematics(model, state.cfg)
    return model.stiffness - H, jacs[model.n]


def cartesian_stiffness(model, state, components=None):
    """``K_c = (J (K_theta - H)^-1 J^T)^-1`` at a converged equilibrium.

    With ``components`` the compliance is restricted to those pose
    coordinates before inversion.
    """
    T, J = tangent_matrices(model, state)
    if np.linalg.cond(T) > COND_LIMIT:
        raise SingularMatrix("K_theta - H is singular (loss of stability)")
    Js = J[_components(components)]
    C = Js @ np.linalg.solve(T, Js.T)
    C = 0.5 * (C + C.T)
    if np.linalg.cond(C) > COND_LIMIT:
        raise SingularMatrix("Cartesian compliance is singular (kinematic singularity)")
    K = np.linalg.inv(C)
    return 0.5 * (K + K.T)
