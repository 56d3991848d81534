"""Occupancy grid of the workpiece and per-tooth material removal.

Nodes are stored row-major (rows along y, columns along x) in a flat
``uint8`` array: 1 = material, 0 = removed. Occupancy only ever goes
from 1 to 0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels

TWO_PI = 2.0 * np.pi


@dataclass
class WorkpieceGrid:
    origin: np.ndarray
    dsx: float
    dsy: float
    nx: int
    ny: int
    occupancy: np.ndarray

    @property
    def n_nodes(self):
        return self.nx * self.ny

    @property
    def node_area(self):
        return self.dsx * self.dsy

    def count(self):
        return int(np.count_nonzero(self.occupancy))

    def as_array(self):
        """``(ny, nx)`` view of the occupancy."""
        return self.occupancy.reshape(self.ny, self.nx)

    def x_coords(self):
        return self.origin[0] + self.dsx * np.arange(self.nx)

    def y_coords(self):
        return self.origin[1] + self.dsy * np.arange(self.ny)

    def copy(self):
        return WorkpieceGrid(self.origin.copy(), self.dsx, self.dsy, self.nx, self.ny,
                             self.occupancy.copy())


def init_grid(bounds, dsx, dsy, material_region=None):
    """Grid over ``bounds = (xmin, xmax, ymin, ymax)``.

    ``material_region`` is ``None`` (all material), a rectangle
    ``(x0, x1, y0, y1)`` or a callable ``f(X, Y) -> bool array``.
    """
    if dsx <= 0 or dsy <= 0:
        raise ValueError("grid steps must be positive")
    xmin, xmax, ymin, ymax = map(float, bounds)
    nx = int(np.floor((xmax - xmin) / dsx + 1e-9)) + 1
    ny = int(np.floor((ymax - ymin) / dsy + 1e-9)) + 1
    if xmax < xmin or ymax < ymin or nx < 1 or ny < 1:
        raise ValueError("empty grid")
    origin = np.array([xmin, ymin])
    x = xmin + dsx * np.arange(nx)
    y = ymin + dsy * np.arange(ny)
    if material_region is None:
        occ = np.ones((ny, nx), dtype=np.uint8)
    elif callable(material_region):
        X, Y = np.meshgrid(x, y)
        occ = np.asarray(material_region(X, Y), dtype=bool).astype(np.uint8)
    else:
        x0, x1, y0, y1 = material_region
        occ = np.outer((y >= y0) & (y <= y1), (x >= x0) & (x <= x1)).astype(np.uint8)
    return WorkpieceGrid(origin, float(dsx), float(dsy), nx, ny, np.ascontiguousarray(occ.ravel()))


@dataclass(frozen=True)
class ToothSweep:
    """Tooth motion over one time step.

    The swept wedge is centred on ``tcp_now``; it starts at the previous
    tooth tip (``tcp_prev`` + radius at ``phi_prev``) seen from the
    current centre and ends at ``phi_now``.
    """

    tcp_prev: tuple
    tcp_now: tuple
    phi_prev: float
    phi_now: float
    R: float

    @property
    def start_angle(self):
        px = self.tcp_prev[0] + self.R * np.cos(self.phi_prev) - self.tcp_now[0]
        py = self.tcp_prev[1] - self.R * np.sin(self.phi_prev) - self.tcp_now[1]
        return float(np.arctan2(-py, px))

    @property
    def dphi(self):
        """Swept angle in (0, 2 pi)."""
        return float(np.mod(self.phi_now - self.start_angle, TWO_PI))

    def wedge(self):
        """Counter-clockwise polar angle range ``(a0, a1)`` of the wedge."""
        a0 = float(np.mod(-self.phi_now, TWO_PI))
        return a0, a0 + self.dphi


def sweep_and_remove(grid, sweep, backend=None):
    """Clear the material inside the swept wedge; return the removed area."""
    k = kernels.get_backend(backend)
    a0, a1 = sweep.wedge()
    n = k.sweep_wedge(grid.occupancy, grid.nx, grid.ny, grid.origin[0], grid.origin[1],
                      grid.dsx, grid.dsy, sweep.tcp_now[0], sweep.tcp_now[1], sweep.R, a0, a1)
    return n * grid.node_area


def sweep_teeth(grid, tcp_prev, tcp_now, phi_prev, phi_now, R, backend=None):
    """Sweep all teeth of one step (in tooth order).

    Returns ``(areas, dphi)`` arrays.
    """
    k = kernels.get_backend(backend)
    px = tcp_prev[0] + R * np.cos(phi_prev) - tcp_now[0]
    py = tcp_prev[1] - R * np.sin(phi_prev) - tcp_now[1]
    start = np.arctan2(-py, px)
    dphi = np.mod(phi_now - start, TWO_PI)
    a0 = np.mod(-phi_now, TWO_PI)
    a1 = a0 + dphi
    counts = np.zeros(len(a0), dtype=np.int64)
    k.sweep_teeth(grid.occupancy, grid.nx, grid.ny, grid.origin[0], grid.origin[1],
                  grid.dsx, grid.dsy, float(tcp_now[0]), float(tcp_now[1]), float(R),
                  np.ascontiguousarray(a0), np.ascontiguousarray(a1), counts)
    return counts * grid.node_area, dphi


def chip_thickness(A, R, dphi):
    """``h = A / (R dphi)``; zero for no removed area."""
    dphi = np.asarray(dphi, dtype=float)
    if np.any(dphi <= 0):
        raise ValueError("degenerate step: dphi must be positive")
    A = np.asarray(A, dtype=float)
    h = np.where(A > 0, A / (R * dphi), 0.0)
    return h if h.ndim else float(h)


def machined_profile(grid, axis="x", side="lower"):
    """Material surface along ``axis``.

    For each column along ``axis`` the surface is the first 1 -> 0
    transition scanned from the ``side`` edge ("lower" scans from the
    minimum coordinate upwards, "upper" from the maximum downwards). The
    value is the midpoint between the last material node and the first
    removed node; NaN where the column has no such transition.
    Returns ``(coords, values)``.
    """
    occ = grid.as_array()
    if axis == "x":
        cols, coords, start, step = occ, grid.x_coords(), grid.origin[1], grid.dsy
    elif axis == "y":
        cols, coords, start, step = occ.T, grid.y_coords(), grid.origin[0], grid.dsx
    else:
        raise ValueError("axis must be 'x' or 'y'")
    # cols[k, i]: node k across the profile, column i along the axis
    if side == "upper":
        cols = cols[::-1]
    elif side != "lower":
        raise ValueError("side must be 'lower' or 'upper'")
    mat = cols.astype(bool)
    n = mat.shape[0]
    first_empty = np.argmax(~mat, axis=0)
    has_empty = (~mat).any(axis=0)
    valid = has_empty & mat[0]
    k = np.where(valid, first_empty, 0)
    idx = k - 0.5
    if side == "upper":
        idx = (n - 1) - idx
    values = np.where(valid, start + step * idx, np.nan)
    return coords, values


def to_rle(grid):
    """Run-length encoding of the occupancy: (first value, run lengths)."""
    occ = grid.occupancy
    if occ.size == 0:
        return 0, np.zeros(0, dtype=np.int64)
    change = np.flatnonzero(np.diff(occ)) + 1
    bounds = np.concatenate([[0], change, [occ.size]])
    return int(occ[0]), np.diff(bounds)


def from_rle(first, runs, nx, ny, origin, dsx, dsy):
    vals = (np.arange(len(runs)) + first) % 2
    occ = np.repeat(vals.astype(np.uint8), runs)
    if occ.size != nx * ny:
        raise ValueError("run lengths do not match grid dimensions")
    return WorkpieceGrid(np.asarray(origin, float), dsx, dsy, nx, ny, occ)


def write_snapshot(grid, path, header=()):
    first, runs = to_rle(grid)
    with open(path, "w") as fh:
        fh.write("# robomill grid snapshot v1\n")
        for line in header:
            fh.write(f"# {line}\n")
        fh.write(f"origin={float(grid.origin[0])!r},{float(grid.origin[1])!r}\n")
        fh.write(f"steps={float(grid.dsx)!r},{float(grid.dsy)!r}\n")
        fh.write(f"dims={grid.nx},{grid.ny}\n")
        fh.write(f"first={first}\n")
        fh.write("runs=" + " ".join(map(str, runs.tolist())) + "\n")


def read_snapshot(path):
    fields = {}
    with open(path) as fh:
        for line in fh:
            if line.startswith("#") or "=" not in line:
                continue
            key, value = line.rstrip("\n").split("=", 1)
            fields[key] = value
    ox, oy = map(float, fields["origin"].split(","))
    dsx, dsy = map(float, fields["steps"].split(","))
    nx, ny = map(int, fields["dims"].split(","))
    runs = np.array(fields["runs"].split(), dtype=np.int64)
    return from_rle(int(fields["first"]), runs, nx, ny, (ox, oy), dsx, dsy)
