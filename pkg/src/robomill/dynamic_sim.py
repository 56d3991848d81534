"""Time-stepped co-simulation of robot structural dynamics and milling.

Each step advances the commanded tool centre along its path, adds the
current dynamic displacement, sweeps every tooth over the workpiece grid,
turns the removed areas into chip thicknesses and forces, and integrates
``M dt'' + C dt' + K dt = F`` over the step with the force held constant.
Everything is expressed in the tool frame fixed at the start
configuration: x along the feed, y across it, z along the tool axis.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from . import cutting_force as cf
from .elastodynamics import cartesian_mass, damping_matrix, natural_frequencies
from .elastostatics import SolverSettings, cartesian_stiffness, solve_equilibrium_for_force
from .errors import SimulationDiverged, SingularMass
from .robot_model import JointConfig, _joint_frames, inverse_kinematics
from .workpiece_grid import chip_thickness, init_grid, sweep_teeth

log = logging.getLogger(__name__)


@dataclass
class DynamicState:
    dt: np.ndarray
    dv: np.ndarray
    da: np.ndarray
    tau: float = 0.0

    @classmethod
    def zero(cls, ndof=2):
        return cls(np.zeros(ndof), np.zeros(ndof), np.zeros(ndof), 0.0)


def integrate_step(state, M, C, K, F, dt_step, beta=0.25, gamma=0.5):
    """One Newmark step (average acceleration by default)."""
    M = np.atleast_2d(M)
    if np.linalg.cond(M) > 1e14:
        raise SingularMass("mass matrix is singular")
    u, v, a = state.dt, state.dv, state.da
    a0 = 1.0 / (beta * dt_step**2)
    a1 = gamma / (beta * dt_step)
    a2 = 1.0 / (beta * dt_step)
    a3 = 1.0 / (2.0 * beta) - 1.0
    a4 = gamma / beta - 1.0
    a5 = 0.5 * dt_step * (gamma / beta - 2.0)
    K_eff = K + a0 * M + a1 * C
    rhs = F + M @ (a0 * u + a2 * v + a3 * a) + C @ (a1 * u + a4 * v + a5 * a)
    u1 = np.linalg.solve(K_eff, rhs)
    a_new = a0 * (u1 - u) - a2 * v - a3 * a
    v1 = v + dt_step * ((1.0 - gamma) * a + gamma * a_new)
    return DynamicState(u1, v1, a_new, state.tau + dt_step)


class NewmarkIntegrator:
    """Newmark stepping with matrices held fixed between refreshes."""

    def __init__(self, M, C, K, dt_step, beta=0.25, gamma=0.5):
        self.dt = dt_step
        self.beta, self.gamma = beta, gamma
        self.set_matrices(M, C, K)

    def set_matrices(self, M, C, K):
        if np.linalg.cond(M) > 1e14:
            raise SingularMass("mass matrix is singular")
        b, g, h = self.beta, self.gamma, self.dt
        self.M, self.C, self.K = M, C, K
        self.c = (1.0 / (b * h * h), g / (b * h), 1.0 / (b * h), 1.0 / (2.0 * b) - 1.0,
                  g / b - 1.0, 0.5 * h * (g / b - 2.0))
        self.K_eff_inv = np.linalg.inv(K + self.c[0] * M + self.c[1] * C)
        self.M_inv = np.linalg.inv(M)

    def consistent_acceleration(self, u, v, F):
        return self.M_inv @ (F - self.C @ v - self.K @ u)

    def step(self, u, v, a, F):
        a0, a1, a2, a3, a4, a5 = self.c
        rhs = F + self.M @ (a0 * u + a2 * v + a3 * a) + self.C @ (a1 * u + a4 * v + a5 * a)
        u1 = self.K_eff_inv @ rhs
        a_new = a0 * (u1 - u) - a2 * v - a3 * a
        v1 = v + self.dt * ((1.0 - self.gamma) * a + self.gamma * a_new)
        return u1, v1, a_new


@dataclass
class TimedPath:
    """Piecewise-linear tool-centre path in tool-plane coordinates."""

    times: np.ndarray
    points: np.ndarray

    def __post_init__(self):
        self.times = np.asarray(self.times, float)
        self.points = np.atleast_2d(np.asarray(self.points, float))
        if self.points.shape[0] != self.times.shape[0] or self.points.shape[1] != 2:
            raise ValueError("path needs one (x, y) point per time stamp")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("path time stamps must be strictly increasing")

    @classmethod
    def from_waypoints(cls, waypoints, speed):
        """Constant-speed traversal of a polyline (speed in m/s)."""
        pts = np.asarray(waypoints, float)
        seg = np.linalg.norm(np.diff(pts, axis=0), axis=1)
        times = np.concatenate([[0.0], np.cumsum(seg) / speed])
        return cls(times, pts)

    @property
    def duration(self):
        return float(self.times[-1] - self.times[0])

    def position(self, t):
        t = np.asarray(t, float)
        return np.stack([np.interp(t, self.times, self.points[:, 0]),
                         np.interp(t, self.times, self.points[:, 1])], axis=-1)

    def segment_velocities(self):
        return np.diff(self.points, axis=0) / np.diff(self.times)[:, None]

    def x_crossing(self, x):
        """First time the path reaches abscissa ``x`` (linear interpolation)."""
        xs = self.points[:, 0]
        for i in range(len(xs) - 1):
            lo, hi = sorted((xs[i], xs[i + 1]))
            if lo <= x <= hi and xs[i + 1] != xs[i]:
                s = (x - xs[i]) / (xs[i + 1] - xs[i])
                return float(self.times[i] + s * (self.times[i + 1] - self.times[i]))
        return float(self.times[0] if x <= xs[0] else self.times[-1])


@dataclass
class WorkpieceSpec:
    """Material block (tool-plane coordinates) and grid steps."""

    x_range: tuple
    y_range: tuple
    dsx: float | None = None
    dsy: float | None = None

    def steps(self, cutting):
        fz = cutting.feed_per_tooth
        return (self.dsx or fz / 8.0, self.dsy or fz / 8.0)

    def make_grid(self, cutting):
        dsx, dsy = self.steps(cutting)
        (x0, x1), (y0, y1) = self.x_range, self.y_range
        return init_grid((x0, x1, y0, y1), dsx, dsy)


@dataclass
class Scenario:
    robot: object
    q0: np.ndarray
    cutting: cf.CuttingParams
    path: TimedPath
    workpiece: WorkpieceSpec
    dt_step: float = 2e-5
    duration: float | None = None
    damping: tuple = (5.0, 1e-5)
    refresh_period: float = 0.01
    dofs: int = 2
    sanity_bound: float = 0.01
    settings: SolverSettings = field(default_factory=SolverSettings)
    compensation: dict = field(default_factory=dict)
    report_window: tuple | None = None
    config_hash: str = ""

    def __post_init__(self):
        self.q0 = np.asarray(self.q0, float)
        if self.dofs not in (2, 6):
            raise ValueError("dofs must be 2 or 6")
        if self.dt_step <= 0:
            raise ValueError("dt_step must be positive")

    @property
    def sim_duration(self):
        return self.path.duration if self.duration is None else self.duration

    def check_resolution(self):
        """Spindle advance per step must stay below grid step / R."""
        dsx, dsy = self.workpiece.steps(self.cutting)
        adv = self.cutting.spindle_rate * self.dt_step
        limit = max(dsx, dsy) / self.cutting.R
        return adv, limit

    def engaged_window(self):
        """Times over which the tool front is fully in the material."""
        if self.report_window is not None:
            return tuple(self.report_window)
        x0, x1 = self.workpiece.x_range
        t0 = self.path.x_crossing(x0)
        t1 = self.path.x_crossing(x1 - self.cutting.R)
        return t0, min(t1, self.sim_duration)


@dataclass
class ToolFrame:
    """Tool-plane coordinates <-> base frame."""

    origin: np.ndarray  # base position of tool-plane point (0, 0)
    R: np.ndarray

    def to_base(self, p2):
        return self.origin + self.R[:, 0] * p2[0] + self.R[:, 1] * p2[1]

    def pose(self, p2):
        return np.concatenate([self.to_base(p2), np.zeros(3)])

    def wrench_to_base(self, w):
        w = np.asarray(w, float)
        return np.concatenate([self.R @ w[:3], self.R @ w[3:]])

    def matrix_to_tool(self, A):
        B = np.zeros((6, 6))
        B[:3, :3] = self.R
        B[3:, 3:] = self.R
        return B.T @ A @ B


def tool_frame(scenario):
    """Frame fixed at the rigid TCP pose of ``q0``; path start maps to it."""
    model = scenario.robot
    cfg = JointConfig.rigid(scenario.q0)
    _, _, pos, rot = _joint_frames(model, cfg.q, cfg.theta)
    R = rot[model.n]
    p_start = scenario.path.position(scenario.path.times[0])
    origin = pos[model.n] - R[:, 0] * p_start[0] - R[:, 1] * p_start[1]
    return ToolFrame(origin, R)


def condense(K, M, keep=(0, 1)):
    """Static (Guyan) condensation of ``(K, M)`` onto ``keep``."""
    keep = list(keep)
    rest = [i for i in range(K.shape[0]) if i not in keep]
    if not rest:
        return K.copy(), M.copy()
    Kbb = K[np.ix_(rest, rest)]
    Kba = K[np.ix_(rest, keep)]
    T = np.zeros((K.shape[0], len(keep)))
    T[keep, np.arange(len(keep))] = 1.0
    T[rest] = -np.linalg.solve(Kbb, Kba)
    Kr = T.T @ K @ T
    Mr = T.T @ M @ T
    return 0.5 * (Kr + Kr.T), 0.5 * (Mr + Mr.T)


@dataclass
class StructuralMatrices:
    tau: float
    q: np.ndarray
    K: np.ndarray  # tool frame, integrated DOFs
    M: np.ndarray
    C: np.ndarray
    K6: np.ndarray  # tool frame, full 6x6
    M6: np.ndarray
    frequencies: np.ndarray
    theta: np.ndarray = None


def structural_matrices(scenario, frame, p2, F_tool, q_guess, theta_guess=None, tau=0.0):
    """Loaded-equilibrium ``K_c``, ``M_c``, ``C_c`` at a tool-plane point."""
    model = scenario.robot
    q = inverse_kinematics(model, frame.pose(p2), q_guess)
    F_base = frame.wrench_to_base(cf.wrench(*F_tool)) if len(F_tool) == 2 else \
        frame.wrench_to_base(F_tool)
    state = solve_equilibrium_for_force(model, q, F_base, scenario.settings, theta0=theta_guess)
    K6 = frame.matrix_to_tool(cartesian_stiffness(model, state))
    M6 = frame.matrix_to_tool(cartesian_mass(model, state))
    if scenario.dofs == 2:
        K, M = condense(K6, M6, keep=(0, 1))
    else:
        K, M = K6, M6
    alpha, beta = scenario.damping
    C = damping_matrix(M, K, alpha, beta)
    return StructuralMatrices(tau, q, K, M, C, K6, M6, natural_frequencies(M, K),
                              state.cfg.theta)


@dataclass
class SimulationTrace:
    """Uniformly sampled record of one run."""

    tau: np.ndarray
    x_nom: np.ndarray
    y_nom: np.ndarray
    dx: np.ndarray
    dy: np.ndarray
    Fx: np.ndarray
    Fy: np.ndarray
    h: np.ndarray
    engaged: np.ndarray
    dt_step: float
    refreshes: list = field(default_factory=list)
    grid: object = None
    removed_area: float = 0.0

    @property
    def n_steps(self):
        return len(self.tau)

    def engaged_mask(self):
        """Per-step bit mask of engaged teeth (bit i = tooth i)."""
        bits = 1 << np.arange(self.engaged.shape[1])
        return (self.engaged.astype(np.int64) * bits).sum(axis=1)

    def first_mode(self):
        freqs = [r.frequencies[0] for r in self.refreshes]
        return float(np.median(freqs)) if freqs else float("nan")


def run_simulation(scenario, commanded=None, backend=None, progress=None):
    """Simulate the milling pass; returns a :class:`SimulationTrace`.

    ``commanded`` replaces the scenario path as the trajectory sent to the
    robot (the desired path used for reporting stays the scenario path).
    """
    p = scenario.cutting
    path = commanded if commanded is not None else scenario.path
    frame = tool_frame(scenario)
    grid = scenario.workpiece.make_grid(p)
    adv, limit = scenario.check_resolution()
    if adv >= limit:
        log.warning("spindle advance per step %.3g rad exceeds grid step / R = %.3g", adv, limit)

    h_step = scenario.dt_step
    n = int(round(scenario.sim_duration / h_step))
    t0 = path.times[0]
    taus = t0 + h_step * np.arange(1, n + 1)
    centres = path.position(taus)
    phis = np.mod(p.spindle_rate * (taus - t0)[:, None]
                  + 2.0 * np.pi * np.arange(p.Nz) / p.Nz, 2.0 * np.pi)

    ndof = scenario.dofs
    u = np.zeros(ndof)
    v = np.zeros(ndof)
    a = np.zeros(ndof)
    F = np.zeros(ndof)

    dx = np.empty(n)
    dy = np.empty(n)
    Fx = np.empty(n)
    Fy = np.empty(n)
    hh = np.empty((n, p.Nz))
    eng = np.empty((n, p.Nz), dtype=bool)

    q_guess = scenario.q0.copy()
    theta_guess = None
    mats = structural_matrices(scenario, frame, path.position(t0), np.zeros(2), q_guess, tau=t0)
    refreshes = [mats]
    q_guess, theta_guess = mats.q, mats.theta
    integ = NewmarkIntegrator(mats.M, mats.C, mats.K, h_step)
    refresh_every = max(1, int(round(scenario.refresh_period / h_step)))
    F_sum = np.zeros(2)
    F_cnt = 0

    c_prev = path.position(t0)
    phi_prev = np.mod(2.0 * np.pi * np.arange(p.Nz) / p.Nz, 2.0 * np.pi)
    removed = 0.0
    bound = scenario.sanity_bound
    for k in range(n):
        centre = centres[k] + u[:2]
        areas, dphi = sweep_teeth(grid, c_prev, centre, phi_prev, phis[k], p.R, backend)
        removed += areas.sum()
        hk = chip_thickness(areas, p.R, dphi)
        engaged = areas > 0
        Ft = cf.fractional_force(hk, p)
        fx, fy = cf.resolve_forces(phis[k], Ft, p.kr * Ft, engaged)
        F[0], F[1] = fx, fy

        dx[k], dy[k] = u[0], u[1]
        Fx[k], Fy[k] = fx, fy
        hh[k] = hk
        eng[k] = engaged
        F_sum[0] += fx
        F_sum[1] += fy
        F_cnt += 1

        u, v, a = integ.step(u, v, a, F)
        if not np.all(np.abs(u[:2]) < bound):
            raise SimulationDiverged(
                f"dynamic displacement exceeded {bound} m at t = {taus[k]:.5f} s")
        c_prev = centre
        phi_prev = phis[k]

        if (k + 1) % refresh_every == 0 and k + 1 < n:
            F_mean = F_sum / F_cnt
            F_sum[:] = 0.0
            F_cnt = 0
            mats = structural_matrices(scenario, frame, centres[k], F_mean, q_guess,
                                       theta_guess, tau=taus[k])
            refreshes.append(mats)
            q_guess, theta_guess = mats.q, mats.theta
            integ.set_matrices(mats.M, mats.C, mats.K)
            a = integ.consistent_acceleration(u, v, F)
        if progress is not None and k % 5000 == 0:
            progress(k, n)

    return SimulationTrace(taus, centres[:, 0], centres[:, 1], dx, dy, Fx, Fy, hh, eng,
                           h_step, refreshes, grid, removed)
