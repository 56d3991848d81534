import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import rigid_slot_chips
from robomill import kernels
from robomill.cutting_force import CuttingParams
from robomill.workpiece_grid import (
    ToothSweep,
    chip_thickness,
    init_grid,
    machined_profile,
    read_snapshot,
    sweep_and_remove,
    sweep_teeth,
    write_snapshot,
)

P = CuttingParams(k0=5e6, hs=1.8e-5, r=0.1, kr=0.3, ap=1e-3, R=0.01, Nz=4, omega=8000, vf=4)


def _brute_wedge(grid, c, R, a0, a1):
    """Nodes inside the disc sector ``a0 <= angle <= a1`` (ccw)."""
    X, Y = np.meshgrid(grid.x_coords(), grid.y_coords())
    dx, dy = X - c[0], Y - c[1]
    inside = dx * dx + dy * dy <= R * R
    ang = np.mod(np.arctan2(dy, dx) - a0, 2 * np.pi)
    return inside & ((ang <= a1 - a0) | (np.hypot(dx, dy) == 0))


def test_init_grid_counts():
    g = init_grid((0, 1e-3, 0, 2e-3), 1e-4, 1e-4)
    assert (g.nx, g.ny) == (11, 21)
    assert g.count() == g.n_nodes
    half = init_grid((0, 1e-3, 0, 2e-3), 1e-4, 1e-4, material_region=(0, 0.5e-3, -1, 1))
    assert half.count() == 6 * 21
    f = init_grid((0, 1e-3, 0, 2e-3), 1e-4, 1e-4, material_region=lambda X, Y: Y > 1e-3)
    assert f.count() == 11 * 10
    with pytest.raises(ValueError):
        init_grid((0, 1, 0, 1), 0.0, 0.1)


def test_full_turn_clears_disc():
    g = init_grid((-0.02, 0.02, -0.02, 0.02), 5e-4, 5e-4)
    n0 = g.count()
    A = sweep_and_remove(g, ToothSweep((0, 0), (0, 0), 0.0, 2 * np.pi - 1e-9, 0.01))
    assert g.count() == n0 - round(A / g.node_area)
    assert A == pytest.approx(np.pi * 0.01**2, rel=0.02)
    # idempotent: nothing left to remove
    assert sweep_and_remove(g, ToothSweep((0, 0), (0, 0), 0.0, 2 * np.pi - 1e-9, 0.01)) == 0.0


@settings(max_examples=40, deadline=None)
@given(st.floats(0, 2 * np.pi), st.floats(0.01, 3.0), st.floats(-3e-3, 3e-3),
       st.floats(-3e-3, 3e-3))
def test_sweep_matches_brute_force_and_backends_agree(a0, span, cx, cy):
    base = init_grid((-0.015, 0.015, -0.015, 0.015), 2.5e-4, 3e-4)
    ref = _brute_wedge(base, (cx, cy), 0.01, a0, a0 + span)
    counts = []
    for name in kernels.BACKENDS:
        g = base.copy()
        n = kernels.get_backend(name).sweep_wedge(g.occupancy, g.nx, g.ny, g.origin[0],
                                                  g.origin[1], g.dsx, g.dsy, cx, cy, 0.01,
                                                  a0, a0 + span)
        removed = g.as_array() == 0
        counts.append(n)
        # boundary nodes may differ only by round-off in the angle test
        assert np.count_nonzero(removed ^ ref) <= 2
        assert n == np.count_nonzero(removed)
    assert len(set(counts)) == 1


def test_removal_is_monotone(rng):
    g = init_grid((-0.02, 0.05, -0.012, 0.012), 1e-4, 1e-4)
    prev = g.occupancy.copy()
    phi = np.arange(4) * np.pi / 2
    for k in range(200):
        c0, c1 = (1e-4 * k, 0.0), (1e-4 * (k + 1), 0.0)
        sweep_teeth(g, c0, c1, phi, phi + 0.1, 0.01)
        phi = phi + 0.1
        assert np.all(g.occupancy <= prev)
        prev = g.occupancy.copy()


def test_sweep_teeth_backends_identical():
    if len(kernels.BACKENDS) < 2:
        pytest.skip("compiled kernel not built")
    results = {}
    for name in kernels.BACKENDS:
        h, phi = rigid_slot_chips(P, P.feed_per_tooth / 4, revs=1, backend=name)
        results[name] = h
    a, b = results.values()
    np.testing.assert_array_equal(a, b)


def test_chip_thickness():
    assert chip_thickness(0.0, 0.01, 0.02) == 0.0
    assert chip_thickness(2e-8, 0.01, 0.02) == pytest.approx(1e-4)
    with pytest.raises(ValueError):
        chip_thickness(1e-8, 0.01, 0.0)


def test_slot_chip_thickness_follows_feed():
    fz = P.feed_per_tooth
    h, phi = rigid_slot_chips(P, fz / 8, revs=2)
    assert abs(h.max() - fz) < 0.05 * fz
    ref = fz * np.maximum(np.cos(phi), 0.0)
    assert np.sqrt(np.mean((h - ref) ** 2)) < 0.1 * fz
    # the trailing half of the cutter never cuts
    assert np.all(h[np.cos(phi) < -0.2] == 0.0)


def test_machined_profile_of_slot():
    g = init_grid((0, 0.01, -0.005, 0.005), 1e-4, 1e-4)
    occ = g.as_array()
    y = g.y_coords()
    occ[(y > -0.002) & (y < 0.003), :] = 0
    x, lo = machined_profile(g, "x", "lower")
    _, up = machined_profile(g, "x", "upper")
    # last material node -0.002, first removed -0.0019 (and 0.003 / 0.0029 above)
    assert np.allclose(lo, -0.00195) and np.allclose(up, 0.00295)
    occ[:, 3] = 1
    _, lo = machined_profile(g, "x", "lower")
    assert np.isnan(lo[3])
    with pytest.raises(ValueError):
        machined_profile(g, "z")
    with pytest.raises(ValueError):
        machined_profile(g, "x", "left")


def test_snapshot_round_trip(tmp_path, rng):
    g = init_grid((0, 0.003, 0, 0.002), 1e-4, 1e-4)
    g.occupancy[rng.random(g.n_nodes) < 0.3] = 0
    write_snapshot(g, tmp_path / "g.txt", header=["config_hash=abc"])
    back = read_snapshot(tmp_path / "g.txt")
    np.testing.assert_array_equal(back.occupancy, g.occupancy)
    assert (back.nx, back.ny, back.dsx, back.dsy) == (g.nx, g.ny, g.dsx, g.dsy)
    np.testing.assert_array_equal(back.origin, g.origin)
