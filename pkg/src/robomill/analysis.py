"""Spectra and accuracy measures of a simulated milling pass."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .workpiece_grid import machined_profile


def amplitude_spectrum(signal, dt, detrend=True):
    """One-sided Hann-windowed amplitude spectrum.

    Returns ``(freqs, amps)``; the bin spacing is ``1 / (len(signal) dt)``.
    Amplitudes are scaled so a pure sine of amplitude ``a`` on a bin
    centre reads ``a``.
    """
    x = np.asarray(signal, float)
    n = x.size
    if n < 4:
        raise ValueError("signal too short for a spectrum")
    if detrend:
        t = np.arange(n)
        x = x - np.polyval(np.polyfit(t, x, 1), t)
    w = np.hanning(n)
    amps = 2.0 * np.abs(np.fft.rfft(x * w)) / w.sum()
    return np.fft.rfftfreq(n, dt), amps


def peak_frequency(freqs, amps, band):
    """Frequency of the largest bin inside ``band = (fmin, fmax)``."""
    lo, hi = band
    m = (freqs >= lo) & (freqs <= hi)
    if not np.any(m):
        raise ValueError("no spectral bins inside the band")
    idx = np.flatnonzero(m)
    return float(freqs[idx[np.argmax(amps[idx])]])


def window_mask(tau, window):
    return (tau >= window[0]) & (tau <= window[1])


@dataclass
class RunReport:
    low_frequency: float
    tooth_frequency: float
    first_mode: float
    static_deviation: float
    max_deviation: float
    bin_width: float
    window: tuple
    runtime: float = 0.0
    diagnostics: dict = field(default_factory=dict)

    def as_dict(self):
        d = asdict(self)
        d["window"] = list(self.window)
        return d


def tool_error(scenario, trace):
    """Actual tool centre minus desired path, ``(ex, ey)`` per step."""
    des = scenario.path.position(trace.tau)
    return trace.x_nom + trace.dx - des[:, 0], trace.y_nom + trace.dy - des[:, 1]


def profile_deviation(scenario, trace, window=None):
    """Wall errors of the machined slot over the engaged window.

    Returns ``(x, lower_err, upper_err)``: for each grid column swept by
    the tool centre during the window, the machined wall position minus
    the nominal wall (desired centre line offset by the tool radius).
    """
    window = window or scenario.engaged_window()
    grid = trace.grid
    x, lower = machined_profile(grid, "x", "lower")
    _, upper = machined_profile(grid, "x", "upper")
    xs = scenario.path.position(np.asarray(window))[:, 0]
    m = (x >= xs.min()) & (x <= xs.max())
    x = x[m]
    y_des = _desired_y_at_x(scenario.path, x)
    R = scenario.cutting.R
    return x, lower[m] - (y_des - R), upper[m] - (y_des + R)


def _desired_y_at_x(path, x):
    pts = path.points
    order = np.argsort(pts[:, 0])
    return np.interp(x, pts[order, 0], pts[order, 1])


def run_report(scenario, trace, window=None, runtime=0.0):
    """Low frequency, static deviation and max profile deviation."""
    window = window or scenario.engaged_window()
    m = window_mask(trace.tau, window)
    if m.sum() < 16:
        raise ValueError("engaged window holds too few samples")
    freqs, amps = amplitude_spectrum(trace.dy[m], trace.dt_step)
    bin_width = float(freqs[1] - freqs[0])
    f_tooth = scenario.cutting.tooth_passing_frequency
    low = peak_frequency(freqs, amps, (2.0 * bin_width, 0.25 * f_tooth))
    ff, fa = amplitude_spectrum(trace.Fy[m], trace.dt_step)
    tooth = peak_frequency(ff, fa, (0.5 * f_tooth, 1.5 * f_tooth))
    _, ey = tool_error(scenario, trace)
    x, lo, up = profile_deviation(scenario, trace, window)
    both = np.concatenate([lo, up])
    both = both[np.isfinite(both)]
    max_dev = float(np.max(np.abs(both))) if both.size else float("nan")
    diag = {
        "samples": int(m.sum()),
        "mean_dy": float(trace.dy[m].mean()),
        "mean_dx": float(trace.dx[m].mean()),
        "mean_Fx": float(trace.Fx[m].mean()),
        "mean_Fy": float(trace.Fy[m].mean()),
        "max_abs_tool_error_y": float(np.max(np.abs(ey[m]))),
        "profile_columns": int(x.size),
        "refreshes": len(trace.refreshes),
    }
    return RunReport(low, tooth, trace.first_mode(), float(abs(ey[m].mean())), max_dev,
                     bin_width, tuple(map(float, window)), runtime, diag)
