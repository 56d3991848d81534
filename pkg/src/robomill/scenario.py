"""Robot description and scenario files (YAML).

Units are SI except where the key says otherwise: ``*_deg`` keys are in
degrees, ``omega_rpm`` in rev/min and ``vf_m_min`` in m/min. They are
converted on load.
"""

from __future__ import annotations

import copy
import dataclasses
import hashlib
import json
from importlib import resources
from pathlib import Path

import numpy as np
import yaml

from .cutting_force import CuttingParams
from .dynamic_sim import Scenario, TimedPath, WorkpieceSpec
from .elastodynamics import STEEL_DENSITY, BeamParams, tube_beam
from .elastostatics import SolverSettings
from .errors import ScenarioError
from .robot_model import LinkDescription, ManipulatorDescription, _joint_frames

COMPENSATION_DEFAULTS = {
    "controller_period": 0.05,
    "alpha": 0.5,
    "tolerance": 1e-8,
    "max_iterations": 50,
    "cutoff_factor": 2.0,
    "nyquist_fraction": 0.75,
}


def _get(d, key, where, default=...):
    if not isinstance(d, dict):
        raise ScenarioError(f"{where}: expected a mapping")
    if key in d:
        return d[key]
    if default is ...:
        raise ScenarioError(f"missing required field '{where}.{key}'" if where else
                            f"missing required field '{key}'")
    return default


def _angles(d, key, where, default=...):
    """Value of ``key`` (rad) or ``key_deg`` (deg)."""
    if isinstance(d, dict) and key + "_deg" in d:
        return np.radians(np.asarray(d[key + "_deg"], float))
    val = _get(d, key, where, default)
    return None if val is None else np.asarray(val, float)


def _floats(value, n, field):
    try:
        arr = np.asarray(value, float)
    except (TypeError, ValueError) as exc:
        raise ScenarioError(f"field '{field}' must be numeric") from exc
    if n is not None and arr.shape != (n,):
        raise ScenarioError(f"field '{field}' must have {n} entries, got {arr.size}")
    return arr


def load_yaml(path):
    try:
        with open(path) as fh:
            data = yaml.safe_load(fh)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f" (line {mark.line + 1}, column {mark.column + 1})" if mark else ""
        raise ScenarioError(f"{path}: YAML syntax error{where}: {exc}") from exc
    except OSError as exc:
        raise ScenarioError(f"cannot read {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ScenarioError(f"{path}: top level must be a mapping")
    return data


def robot_from_dict(d, where="robot"):
    links_raw = _get(d, "links", where)
    if not isinstance(links_raw, list) or not links_raw:
        raise ScenarioError(f"field '{where}.links' must be a non-empty list")
    links = []
    for i, l in enumerate(links_raw):
        w = f"{where}.links[{i}]"
        links.append(LinkDescription(
            tuple(_floats(_get(l, "xyz", w, (0, 0, 0)), 3, w + ".xyz")),
            tuple(_angles(l, "rpy", w, (0, 0, 0))),
            tuple(_floats(_get(l, "axis", w), 3, w + ".axis")),
        ))
    n = len(links)
    tool_d = _get(d, "tool", where, {}) or {}
    tool = LinkDescription(
        tuple(_floats(_get(tool_d, "xyz", where + ".tool", (0, 0, 0)), 3, where + ".tool.xyz")),
        tuple(_angles(tool_d, "rpy", where + ".tool", (0, 0, 0))),
    )
    comp = _floats(_get(d, "joint_compliances", where), n, where + ".joint_compliances")
    masses = _get(d, "link_masses", where, None)
    masses = None if masses is None else _floats(masses, n, where + ".link_masses")
    centres = _get(d, "mass_centres", where, None)
    centres = None if centres is None else _floats(centres, n, where + ".mass_centres")
    gravity = _floats(_get(d, "gravity", where, (0.0, 0.0, -9.81)), 3, where + ".gravity")
    try:
        model = ManipulatorDescription(links, comp, masses, None, centres, gravity, tool)
    except ValueError as exc:
        raise ScenarioError(f"{where}: {exc}") from exc

    beams_raw = _get(d, "link_beams", where, None)
    if beams_raw is not None:
        if len(beams_raw) != n:
            raise ScenarioError(f"field '{where}.link_beams' must have {n} entries")
        model.link_beams = [_beam(b, i, model, f"{where}.link_beams[{i}]")
                            for i, b in enumerate(beams_raw)]
    return model


def link_lengths(model):
    """Distances between consecutive node points (configuration independent)."""
    _, _, pos, _ = _joint_frames(model, np.zeros(model.n), np.zeros(model.n))
    return np.linalg.norm(np.diff(pos, axis=0), axis=1)


def _beam(b, i, model, where):
    try:
        if "outer_radius" in b:
            L = float(b.get("L", link_lengths(model)[i]))
            mass = float(b.get("mass", model.link_masses[i]))
            return tube_beam(mass, L, float(b["outer_radius"]), float(b.get("rho", STEEL_DENSITY)))
        return BeamParams(*(float(_get(b, k, where)) for k in ("L", "rho", "A", "Ip", "Iy", "Iz")))
    except ValueError as exc:
        raise ScenarioError(f"{where}: {exc}") from exc


def load_robot(path):
    return robot_from_dict(load_yaml(path), "robot")


def builtin_path(name):
    """Path of a data file shipped with the package."""
    return Path(resources.files("robomill") / "data" / name)


def cutting_from_dict(d, where="cutting"):
    if "R" in d:
        R = float(d["R"])
    else:
        R = 0.5 * float(_get(d, "D", where))
    omega = float(d["omega_rpm"]) if "omega_rpm" in d else float(_get(d, "omega", where)) * 60.0 / (2 * np.pi)
    vf = float(d["vf_m_min"]) if "vf_m_min" in d else float(_get(d, "vf", where)) * 60.0
    try:
        return CuttingParams(
            k0=float(_get(d, "k0", where)), hs=float(_get(d, "hs", where)),
            r=float(_get(d, "r", where)), kr=float(_get(d, "kr", where)),
            ap=float(_get(d, "ap", where)), R=R, Nz=int(_get(d, "Nz", where)),
            omega=omega, vf=vf,
        )
    except ValueError as exc:
        raise ScenarioError(f"{where}: {exc}") from exc


def config_hash(cfg):
    """Stable short hash of a resolved configuration mapping."""
    blob = json.dumps(cfg, sort_keys=True, separators=(",", ":"), default=_jsonable)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _jsonable(x):
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    raise TypeError(type(x).__name__)


def load_scenario(path, dt=None, duration=None, grid_step=None):
    """Parse a scenario file; command-line overrides win over file values."""
    path = Path(path)
    raw = load_yaml(path)
    return scenario_from_dict(raw, base_dir=path.parent, dt=dt, duration=duration,
                              grid_step=grid_step)


def scenario_from_dict(raw, base_dir=".", dt=None, duration=None, grid_step=None):
    cfg = copy.deepcopy(raw)
    robot_d = _get(cfg, "robot", "")
    if isinstance(robot_d, str):
        rpath = Path(base_dir) / robot_d
        if not rpath.exists():
            rpath = builtin_path(robot_d)
        robot_d = load_yaml(rpath)
        cfg["robot"] = robot_d
    model = robot_from_dict(robot_d)

    q0 = _angles(cfg, "q0", "")
    if q0.shape != (model.n,):
        raise ScenarioError(f"field 'q0' must have {model.n} entries")
    cutting = cutting_from_dict(_get(cfg, "cutting", ""))

    sim = cfg.setdefault("sim", {})
    if dt is not None:
        sim["dt"] = dt
    if duration is not None:
        sim["duration"] = duration
    wp = _get(cfg, "workpiece", "")
    if grid_step is not None:
        wp["grid_step"] = grid_step
    steps = wp.get("grid_step")
    if steps is None:
        dsx = dsy = None
    elif np.isscalar(steps):
        dsx = dsy = float(steps)
    else:
        dsx, dsy = _floats(steps, 2, "workpiece.grid_step")
    workpiece = WorkpieceSpec(
        tuple(_floats(_get(wp, "x_range", "workpiece"), 2, "workpiece.x_range")),
        tuple(_floats(_get(wp, "y_range", "workpiece"), 2, "workpiece.y_range")),
        dsx, dsy,
    )

    path_d = _get(cfg, "path", "")
    pts = np.asarray(_get(path_d, "waypoints", "path"), float)
    if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < 2:
        raise ScenarioError("field 'path.waypoints' must be a list of at least two (x, y) points")
    if "times" in path_d:
        path = TimedPath(_floats(path_d["times"], len(pts), "path.times"), pts)
    else:
        path = TimedPath.from_waypoints(pts, float(path_d.get("speed", cutting.feed_speed)))

    damping = sim.get("damping", {})
    settings_d = sim.get("solver", {})
    comp = dict(COMPENSATION_DEFAULTS)
    comp.update(cfg.get("compensation", {}) or {})
    window = sim.get("report_window")
    # orientations are measured from the start posture
    model = dataclasses.replace(model, q_ref=np.asarray(q0, float))
    try:
        scenario = Scenario(
            robot=model, q0=q0, cutting=cutting, path=path, workpiece=workpiece,
            dt_step=float(sim.get("dt", 2e-5)),
            duration=None if sim.get("duration") is None else float(sim["duration"]),
            damping=(float(damping.get("alpha", 5.0)), float(damping.get("beta", 1e-5))),
            refresh_period=float(sim.get("refresh_period", 0.01)),
            dofs=int(sim.get("dofs", 2)),
            sanity_bound=float(sim.get("sanity_bound", 0.01)),
            settings=SolverSettings(**settings_d),
            compensation=comp,
            report_window=None if window is None else tuple(map(float, window)),
        )
    except (TypeError, ValueError) as exc:
        raise ScenarioError(f"sim: {exc}") from exc
    scenario.config_hash = config_hash(cfg)
    return scenario


def rigid_tcp(model, q):
    """Rigid TCP position of ``q`` (convenience for scripts)."""
    _, _, pos, _ = _joint_frames(model, q, np.zeros(model.n))
    return pos[-1]


__all__ = [
    "load_scenario", "scenario_from_dict", "load_robot", "robot_from_dict",
    "cutting_from_dict", "config_hash", "builtin_path",
]
