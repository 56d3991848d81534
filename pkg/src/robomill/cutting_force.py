"""Fractional cutting-force law and its resolution into the tool frame.

Tooth angles are measured from the tool-frame x axis (the feed
direction) towards -y; the cutter turns in the direction of increasing
angle. In that convention the tooth tip sits at ``c + R (cos phi, -sin phi)``
and the tool-frame force components read
``Fx = sum(-Fr cos phi + Ft sin phi)``, ``Fy = sum(Fr sin phi + Ft cos phi)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class CuttingParams:
    """Force-law constants, tool geometry and process settings (SI).

    ``omega`` is the spindle speed in rev/min and ``vf`` the feed rate in
    m/min, as they are usually quoted; everything else is SI.
    """

    k0: float
    hs: float
    r: float
    kr: float
    ap: float
    R: float
    Nz: int
    omega: float
    vf: float

    def __post_init__(self):
        if not 0.0 < self.r < 1.0:
            raise ValueError("r = k_inf/k0 must lie in (0, 1)")
        if self.k0 < 0 or self.hs <= 0 or self.ap <= 0 or self.R <= 0:
            raise ValueError("k0 >= 0 and hs, ap, R > 0 required")
        if self.Nz < 1 or self.omega <= 0:
            raise ValueError("Nz >= 1 and omega > 0 required")

    @property
    def k_inf(self):
        return self.r * self.k0

    @property
    def feed_per_tooth(self):
        """``v_f / (N_z Omega)`` in m."""
        return self.vf / (self.Nz * self.omega)

    @property
    def feed_speed(self):
        """Feed rate in m/s."""
        return self.vf / 60.0

    @property
    def spindle_rate(self):
        """Spindle angular rate in rad/s."""
        return TWO_PI * self.omega / 60.0

    @property
    def tooth_passing_frequency(self):
        return self.Nz * self.omega / 60.0


def fractional_force(h, p):
    """Tangential force for chip thickness ``h``; zero when ``h < 0``."""
    h = np.asarray(h, dtype=float)
    u = np.maximum(h, 0.0) / p.hs
    F = p.k0 * p.ap * (u + p.r * u * u) / (1.0 + u)
    return F if F.ndim else float(F)


def radial_force(Ft, p):
    return p.kr * Ft


@dataclass
class ToothState:
    index: int
    phi: float
    h: float = 0.0
    engaged: bool = False


def resolve_forces(phi, Ft, Fr, engaged=None):
    """``(Fx, Fy)`` from per-tooth arrays, summed over engaged teeth."""
    phi = np.asarray(phi, float)
    Ft = np.asarray(Ft, float)
    Fr = np.asarray(Fr, float)
    if engaged is not None:
        m = np.asarray(engaged, bool)
        phi, Ft, Fr = phi[m], Ft[m], Fr[m]
    s, c = np.sin(phi), np.cos(phi)
    Fx = float(np.sum(-Fr * c + Ft * s))
    Fy = float(np.sum(Fr * s + Ft * c))
    return Fx, Fy


def tool_frame_force(teeth, p):
    """Tool-frame ``(Fx, Fy)`` of the engaged teeth in ``teeth``."""
    engaged = [t for t in teeth if t.engaged]
    if not engaged:
        return 0.0, 0.0
    phi = np.array([t.phi for t in engaged])
    Ft = fractional_force(np.array([t.h for t in engaged]), p)
    return resolve_forces(phi, Ft, radial_force(Ft, p))


def wrench(Fx, Fy):
    """Tool-frame 6-vector ``[Fx, Fy, 0, 0, 0, 0]``."""
    return np.array([Fx, Fy, 0.0, 0.0, 0.0, 0.0])


def tooth_positions(p, tau):
    """Angles of all teeth at time ``tau``, reduced to [0, 2 pi)."""
    if tau < 0:
        raise ValueError("tau must be non-negative")
    i = np.arange(p.Nz)
    return np.mod(p.spindle_rate * tau + TWO_PI * i / p.Nz, TWO_PI)
