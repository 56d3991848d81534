"""Off-line compliance error compensation of the target trajectory.

The robot is sent a modified target ``t0_mod`` chosen so that, under the
predicted machining load ``F``, the loaded tool lands on the desired
pose ``t0``. The fixed point is found by the relaxed iteration
``t0_mod <- t0_mod + alpha (t0 - f(F | t0_mod))`` where ``f`` gives the
loaded pose reached when ``t0_mod`` is commanded.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import butter, sosfiltfilt

from . import cutting_force as cf
from .dynamic_sim import TimedPath, condense, structural_matrices, tool_frame
from .elastostatics import SolverSettings, solve_equilibrium_for_force
from .errors import NonConvergence
from .robot_model import inverse_kinematics

log = logging.getLogger(__name__)


class UndersamplingWarning(UserWarning):
    """Controller period too long to follow the first structural mode."""


@dataclass
class TargetPoint:
    t0: np.ndarray
    F: np.ndarray
    t0_mod: np.ndarray
    iterations: int
    residual: float
    q: np.ndarray = None
    history: list = field(default_factory=list)  # residual per iteration


def loaded_pose(model, t_cmd, F, q_guess, settings=None):
    """Pose reached under ``F`` when the rigid target ``t_cmd`` is commanded.

    Only the deflection caused by ``F`` is added: the gravity sag of the
    commanded posture is part of the robot's ordinary calibration and is
    not compensated here.
    """
    q = inverse_kinematics(model, t_cmd, q_guess)
    if not np.any(F):
        return t_cmd.copy(), q
    loaded = solve_equilibrium_for_force(model, q, F, settings)
    unloaded = solve_equilibrium_for_force(model, q, np.zeros(6), settings)
    return t_cmd + (loaded.t - unloaded.t), q


def solve_modified_target(model, q, t0, F, alpha=0.5, settings=None, tol=1e-8, max_iter=50):
    """Modified target whose loaded pose under ``F`` equals ``t0``.

    ``q`` seeds the inverse kinematics. Stops when the update norm drops
    below ``tol``; raises :class:`NonConvergence` otherwise (a smaller
    ``alpha`` usually helps).
    """
    if not 0.0 < alpha <= 1.0:
        raise ValueError("alpha must lie in (0, 1]")
    t0 = np.asarray(t0, float)
    F = np.asarray(F, float)
    t_mod = t0.copy()
    q = np.asarray(q, float)
    res = np.inf
    history = []
    for it in range(1, max_iter + 1):
        reached, q = loaded_pose(model, t_mod, F, q, settings)
        step = alpha * (t0 - reached)
        res = float(np.linalg.norm(t0 - reached))
        history.append(res)
        t_mod = t_mod + step
        if np.linalg.norm(step) < tol:
            return TargetPoint(t0, F, t_mod, it, res, q, history)
    raise NonConvergence(
        f"modified target did not converge (alpha = {alpha}); try a smaller alpha",
        residual=res, iterations=max_iter,
    )


@dataclass
class CompensatedTrajectory:
    """Modified tool-plane path sampled at the controller period."""

    times: np.ndarray
    points: np.ndarray  # (k, 2) tool-plane x, y
    z: np.ndarray  # tool-axis offset of the modified target
    period: float
    nominal: np.ndarray = None
    deflection: np.ndarray = None  # predicted quasi-static (dx, dy)
    entry: np.ndarray = None  # samples inside the entry transient
    log: list = field(default_factory=list)

    @property
    def feed_rates(self):
        """Per-segment feed rates ``(vfx, vfy)``, m/s."""
        return np.diff(self.points, axis=0) / np.diff(self.times)[:, None]

    def rows(self):
        """``(t, x, y, z, vfx, vfy)`` rows; the last row repeats the last rate."""
        v = self.feed_rates
        v = np.vstack([v, v[-1:]]) if len(v) else np.zeros((1, 2))
        return np.column_stack([self.times, self.points, self.z, v])

    def as_path(self):
        return TimedPath(self.times, self.points)


def _sample_matrices(scenario, trace, frame, times, nominal):
    """Structural matrices at the controller samples.

    Taken from the trace refreshes when present; a trace read back from
    disk has none, so they are rebuilt from the recorded forces.
    """
    if trace.refreshes:
        rt = np.array([r.tau for r in trace.refreshes])
        return [trace.refreshes[int(np.argmin(np.abs(rt - t)))] for t in times]
    out = []
    q, theta = scenario.q0, None
    half = 0.5 * scenario.refresh_period
    for t, p in zip(times, nominal):
        m = np.abs(trace.tau - t) <= half
        F = np.array([trace.Fx[m].mean(), trace.Fy[m].mean()]) if m.any() else np.zeros(2)
        mats = structural_matrices(scenario, frame, p, F, q, theta, tau=t)
        q, theta = mats.q, mats.theta
        out.append(mats)
    return out


def controller_times(t_start, t_end, period):
    """Sample times ``t_start + k period`` covering ``[t_start, t_end]``."""
    n = int(np.ceil((t_end - t_start) / period - 1e-9))
    return t_start + period * np.arange(n + 1)


def quasi_static_deflection(trace, cutoff):
    """Zero-phase low-pass of the dynamic displacement ``(dx, dy)``."""
    nyq = 0.5 / trace.dt_step
    d = np.column_stack([trace.dx, trace.dy])
    if cutoff >= nyq:
        return d
    sos = butter(2, cutoff / nyq, output="sos")
    return sosfiltfilt(sos, d, axis=0)


def predictor_cutoff(f_low, period, factor=2.0, nyquist_fraction=0.75):
    """Low-pass cutoff of the deflection predictor, Hz.

    ``factor`` times the first structural mode, but never above
    ``nyquist_fraction`` of the controller Nyquist rate: content the
    controller cannot reproduce would only alias into the modified path.
    """
    return min(factor * f_low, nyquist_fraction * 0.5 / period)


def compensate_trajectory(scenario, trace, controller_period=None, mode="model",
                          alpha=None, progress=None):
    """Modified trajectory from a predicted trace.

    ``mode="model"`` solves the compensation problem with the
    elastostatic model at every controller sample; ``mode="mirror"``
    simply subtracts the predicted quasi-static deflection.
    """
    comp = scenario.compensation
    period = float(controller_period or comp["controller_period"])
    alpha = float(alpha or comp["alpha"])
    if period < trace.dt_step:
        raise ValueError("controller period shorter than the simulation step")
    frame = tool_frame(scenario)
    path = scenario.path
    t0 = path.times[0]
    times = controller_times(t0, t0 + scenario.sim_duration, period)
    nominal = path.position(times)
    mats = _sample_matrices(scenario, trace, frame, times, nominal)
    f_low = trace.first_mode() if trace.refreshes else float(
        np.median([m.frequencies[0] for m in mats]))
    messages = []
    if period > 1.0 / (10.0 * f_low):
        msg = (f"controller period {period:g} s undersamples the first structural mode "
               f"({f_low:.2f} Hz); only the quasi-static deflection is compensated")
        warnings.warn(msg, UndersamplingWarning, stacklevel=2)
        messages.append("warning: " + msg)
    ratio = period / trace.dt_step
    if abs(ratio - round(ratio)) > 1e-6:
        messages.append(f"controller period is {ratio:.4f} simulation steps; "
                        "deflection resampled by linear interpolation")

    cutoff = predictor_cutoff(f_low, period, comp.get("cutoff_factor", 2.0),
                              comp.get("nyquist_fraction", 0.75))
    defl = quasi_static_deflection(trace, cutoff)
    tau = np.concatenate([[t0], trace.tau])
    dxy = np.vstack([[0.0, 0.0], defl])
    d_s = np.column_stack([np.interp(times, tau, dxy[:, 0]), np.interp(times, tau, dxy[:, 1])])
    messages.append(f"low-pass cutoff {cutoff:.3f} Hz, {len(times)} samples every {period:g} s")

    points = np.empty_like(nominal)
    z = np.zeros(len(times))
    q = scenario.q0.copy()
    settings = scenario.settings or SolverSettings()
    for k, t in enumerate(times):
        d = d_s[k]
        if mode == "mirror" or not np.any(d):
            points[k] = nominal[k] - d
            messages.append(f"t={t:.4f} mirror offset ({-d[0]:.6e}, {-d[1]:.6e})")
            continue
        if mode != "model":
            raise ValueError("mode must be 'model' or 'mirror'")
        # quasi-static tool force that produces the predicted deflection
        F2 = condense(mats[k].K6, mats[k].M6)[0] @ d
        F_base = frame.wrench_to_base(cf.wrench(*F2))
        target = frame.pose(nominal[k])
        tp = solve_modified_target(scenario.robot, q, target, F_base, alpha, settings,
                                   comp.get("tolerance", 1e-8), comp.get("max_iterations", 50))
        q = tp.q
        off = tp.t0_mod[:3] - target[:3]
        points[k] = nominal[k] + frame.R[:, :2].T @ off
        z[k] = frame.R[:, 2] @ off
        messages.append(f"t={t:.4f} iterations={tp.iterations} residual={tp.residual:.3e} "
                        f"offset=({points[k, 0] - nominal[k, 0]:.6e}, "
                        f"{points[k, 1] - nominal[k, 1]:.6e}, {z[k]:.6e})")
        if progress is not None:
            progress(k, len(times))
    entry = times < scenario.engaged_window()[0]
    return CompensatedTrajectory(times, points, z, period, nominal, d_s, entry, messages)
