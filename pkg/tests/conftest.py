import numpy as np
import pytest

from robomill.cutting_force import tooth_positions
from robomill.robot_model import LinkDescription, ManipulatorDescription
import copy

from robomill.scenario import builtin_path, load_scenario, load_yaml, scenario_from_dict
from robomill.workpiece_grid import chip_thickness, init_grid, sweep_teeth

KR270_Q0_DEG = (90.0, -50.0, 120.0, 180.0, 25.0, 180.0)
KR270_COMPLIANCES = np.array([0.26, 0.15, 0.26, 1.79, 1.52, 2.13]) * 1e-6
KR270_MASSES = np.array([336.8, 259.4, 85.2, 54.5, 36.3, 18.2])

_acceptance = {}


def one_link(L=0.8, c=2e-6, mass=0.0, gravity=(0.0, 0.0, 0.0)):
    """Planar link along x turning about z; node 1 is the tool point."""
    return ManipulatorDescription(
        [LinkDescription((0, 0, 0), (0, 0, 0), (0, 0, 1))], [c],
        link_masses=[mass], gravity=gravity, tool=LinkDescription((L, 0, 0)),
    )


def random_chain(rng, n=6, gravity=True, masses=True):
    links = []
    for _ in range(n):
        axis = rng.normal(size=3)
        links.append(LinkDescription(tuple(rng.uniform(-0.6, 0.6, 3)),
                                     tuple(rng.uniform(-np.pi, np.pi, 3)), tuple(axis)))
    return ManipulatorDescription(
        links,
        rng.uniform(0.2e-6, 3e-6, n),
        link_masses=rng.uniform(10, 200, n) if masses else None,
        gravity=(0.0, 0.0, -9.81) if gravity else (0.0, 0.0, 0.0),
        tool=LinkDescription(tuple(rng.uniform(-0.3, 0.3, 3)), tuple(rng.uniform(-1, 1, 3))),
        q_ref=rng.uniform(-np.pi, np.pi, n),
    )


def rigid_slot_chips(p, ds, dt=2e-5, revs=4, backend=None):
    """Chip thickness of a rigid slot cut at constant feed.

    The tool enters a half-plane of material; samples start one spindle
    revolution after the tool centre crosses the material edge. Returns
    flat ``(h, phi)`` arrays over all teeth.
    """
    R, v = p.R, p.feed_speed
    T = 60.0 / p.omega
    g = init_grid((-0.002, R + v * (revs + 1) * T + 0.002, -R - 1e-3, R + 1e-3), ds, ds,
                  material_region=(0.0, 1.0, -1.0, 1.0))
    n = int(round((R / v + revs * T) / dt))
    x0 = -R
    H, P = [], []
    for k in range(1, n + 1):
        t0, t1 = (k - 1) * dt, k * dt
        ph1 = tooth_positions(p, t1)
        A, dphi = sweep_teeth(g, (x0 + v * t0, 0.0), (x0 + v * t1, 0.0),
                              tooth_positions(p, t0), ph1, R, backend)
        if t1 > R / v + T:
            H.append(chip_thickness(A, R, dphi))
            P.append(ph1)
    return np.ravel(H), np.ravel(P)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def kr270_scenario():
    return load_scenario(builtin_path("scenario_kr270_slot.yaml"))


@pytest.fixture(scope="session")
def kr270(kr270_scenario):
    return kr270_scenario.robot


@pytest.fixture(scope="session")
def kr270_raw():
    return load_yaml(builtin_path("scenario_kr270_slot.yaml"))


def short_scenario(raw, end_x=0.004, grid_step=3e-5, **sim):
    """Shortened, coarser copy of the slot scenario for quick runs."""
    d = copy.deepcopy(raw)
    d["path"]["waypoints"] = [[-0.010, 0.0], [end_x, 0.0]]
    d["workpiece"]["grid_step"] = grid_step
    d["sim"].update(sim)
    return scenario_from_dict(d, base_dir=builtin_path("."))


@pytest.fixture(scope="session")
def acceptance_log():
    return _acceptance


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_acceptance):
        name, ok, detail = _acceptance[n]
        terminalreporter.write_line(f"ACCEPTANCE {n} {name}: {'PASS' if ok else 'FAIL'} ({detail})")
