"""Reduced link mass matrices, Cartesian mass matrix and damping.

Each link is a Bernoulli beam whose cross-section displacement is the
rigid carry-over of the proximal node displacement plus the deformation
of a tip-loaded cantilever. Integrating the beam kinetic energy over the
length gives a 12 x 12 mass matrix on the end-node displacements
``[dt_{j-1}; dt_j]`` (translations then rotations, local link axes with
x along the link).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SingularJacobian
from .elastostatics import LoadedState, cartesian_stiffness, tangent_matrices
from .robot_model import JointConfig, kinematics

STEEL_DENSITY = 7850.0


@dataclass(frozen=True)
class BeamParams:
    L: float
    rho: float
    A: float
    Ip: float
    Iy: float
    Iz: float

    def __post_init__(self):
        for name in ("L", "rho", "A", "Ip", "Iy", "Iz"):
            if not getattr(self, name) > 0:
                raise ValueError(f"beam parameter {name} must be positive")

    @property
    def mass(self):
        return self.rho * self.A * self.L

    def scaled_density(self, factor):
        return BeamParams(self.L, self.rho * factor, self.A, self.Ip, self.Iy, self.Iz)


def tube_beam(mass, length, outer_radius, density=STEEL_DENSITY):
    """Uniform circular tube of given mass, length and outer radius.

    The wall thickness follows from the mass; a solid bar is used when the
    mass does not fit in a tube of that radius.
    """
    A = mass / (density * length)
    ro2 = outer_radius**2
    ri2 = ro2 - A / np.pi
    if ri2 < 0.0:
        ro2, ri2 = A / np.pi, 0.0
    Ip = 0.5 * np.pi * (ro2**2 - ri2**2)
    return BeamParams(length, density, A, Ip, 0.5 * Ip, 0.5 * Ip)


def shape_functions(x, L):
    """Tip-loaded beam interpolation ``(f, g, h)`` at position ``x``."""
    if L <= 0:
        raise ValueError("beam length must be positive")
    if np.any(np.asarray(x) < 0) or np.any(np.asarray(x) > L):
        raise ValueError("x must lie in [0, L]")
    f = x / L
    g = 0.5 * x**2 * (3.0 * L - x) / L**3
    h = 2.0 * x * (L - 0.5 * x) / L**2
    return f, g, h


def _carry(x):
    """Rigid transport of a node displacement over a distance ``x``.

    Translation picks up ``omega x (x, 0, 0)``.
    """
    T = np.eye(6)
    T[1, 5] = x
    T[2, 4] = -x
    return T


def _interpolation(x, L):
    """6 x 12 matrix mapping ``[dt_{j-1}; dt_j]`` to the section at ``x``."""
    f, g, h = shape_functions(x, L)
    E = np.diag([f, g, g, f, h, h])
    Tx = _carry(x)
    return np.hstack([Tx - E @ _carry(L), E])


def reduced_link_mass(beam, order=8):
    """12 x 12 reduced mass matrix of one link by Gauss-Legendre quadrature."""
    nodes, weights = np.polynomial.legendre.leggauss(order)
    L = beam.L
    Q = np.diag([beam.A, beam.A, beam.A, beam.Ip, beam.Iy, beam.Iz])
    M = np.zeros((12, 12))
    for xi, wi in zip(nodes, weights):
        x = 0.5 * L * (xi + 1.0)
        S = _interpolation(x, L)
        M += (0.5 * L * wi) * (S.T @ Q @ S)
    M *= beam.rho
    return 0.5 * (M + M.T)


def link_frame(p0, p1, hint=None):
    """Rotation whose x axis points from ``p0`` to ``p1``."""
    x = np.asarray(p1, float) - np.asarray(p0, float)
    n = np.linalg.norm(x)
    if n == 0.0:
        raise ValueError("link end nodes coincide")
    x = x / n
    ref = np.array([0.0, 0.0, 1.0]) if hint is None else np.asarray(hint, float)
    if abs(ref @ x) > 0.9:
        ref = np.array([1.0, 0.0, 0.0]) if abs(x[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    y = np.cross(ref, x)
    y /= np.linalg.norm(y)
    z = np.cross(x, y)
    return np.column_stack([x, y, z])


def cartesian_mass(model, state, link_masses=None):
    """6 x 6 Cartesian mass matrix at the tool end-point.

    Node displacements follow the static deformation shape of a TCP load:
    ``dt_j = J_j (K - H)^-1 J^T K_c dt``. The block-diagonal assembly of
    the reduced link matrices is projected through that map. ``state``
    may be a plain ``JointConfig`` (unloaded).
    """
    if isinstance(state, JointConfig):
        state = LoadedState(state, np.zeros(6), np.zeros(6 * model.n), None, 0.0)
    if link_masses is None:
        if model.link_beams is None:
            raise ValueError("model has no link_beams")
        link_masses = [reduced_link_mass(b) for b in model.link_beams]
    T, J = tangent_matrices(model, state)
    try:
        Kc = cartesian_stiffness(model, state)
    except Exception as exc:
        raise SingularJacobian(str(exc)) from exc
    shape = np.linalg.solve(T, J.T @ Kc)  # d theta per unit TCP displacement
    poses, jacs = kinematics(model, state.cfg)
    phis = [jacs[j] @ shape for j in range(model.n + 1)]
    Mc = np.zeros((6, 6))
    for j in range(1, model.n + 1):
        R = link_frame(poses[j - 1, :3], poses[j, :3])
        B = np.zeros((12, 12))
        for k in range(4):
            B[3 * k:3 * k + 3, 3 * k:3 * k + 3] = R.T
        P = B @ np.vstack([phis[j - 1], phis[j]])
        Mc += P.T @ link_masses[j - 1] @ P
    return 0.5 * (Mc + Mc.T)


def damping_matrix(Mc, Kc, alpha, beta):
    """Rayleigh damping ``alpha M + beta K``."""
    return alpha * np.asarray(Mc) + beta * np.asarray(Kc)


def natural_frequencies(Mc, Kc):
    """Undamped natural frequencies in Hz, ascending."""
    from scipy.linalg import eigh

    w2 = eigh(Kc, Mc, eigvals_only=True)
    return np.sqrt(np.clip(w2, 0.0, None)) / (2.0 * np.pi)
