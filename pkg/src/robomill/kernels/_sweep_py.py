"""Vectorised numpy grid-sweep kernel (fallback for ``_sweep_cy``)."""

import math

import numpy as np


def _wedge(occ, nx, ny, ox, oy, dsx, dsy, cx, cy, R, a0, a1):
    # scalar libm trig, as in the compiled kernel, so both agree bit for bit
    uax, uay = math.cos(a0), math.sin(a0)
    ubx, uby = math.cos(a1), math.sin(a1)
    ys = [0.0, R * uay, R * uby]
    for k in range(-2, 8):
        ang = 0.5 * np.pi + k * np.pi
        if a0 <= ang <= a1:
            ys.append(R * math.sin(ang))
    iy0 = max(int(np.ceil((cy + min(ys) - oy) / dsy)), 0)
    iy1 = min(int(np.floor((cy + max(ys) - oy) / dsy)), ny - 1)
    if iy1 < iy0:
        return 0
    iy = np.arange(iy0, iy1 + 1)
    dy = oy + iy * dsy - cy
    w2 = R * R - dy * dy
    ok = w2 >= 0.0
    hi = np.sqrt(np.where(ok, w2, 0.0))
    lo = -hi
    with np.errstate(over="ignore", divide="ignore"):
        for A, B in ((-uay, uax * dy), (uby, -dy * ubx)):
            if A > 0.0:
                lo = np.maximum(lo, -B / A)
            elif A < 0.0:
                hi = np.minimum(hi, -B / A)
            else:
                ok &= B >= 0.0
    ok &= lo <= hi
    # an edge with a vanishing sine gives infinite bounds; the disc limits them
    lo, hi = np.clip(lo, -R, R), np.clip(hi, -R, R)
    ix0 = np.maximum(np.ceil((cx + lo - ox) / dsx), 0).astype(np.int64)
    ix1 = np.minimum(np.floor((cx + hi - ox) / dsx), nx - 1).astype(np.int64)
    ok &= ix1 >= ix0
    if not ok.any():
        return 0
    iy, ix0, ix1 = iy[ok], ix0[ok], ix1[ok]
    lengths = ix1 - ix0 + 1
    starts = iy * nx + ix0
    # flat indices of all candidate nodes, row by row
    offsets = np.arange(lengths.sum()) - np.repeat(np.cumsum(lengths) - lengths, lengths)
    idx = np.repeat(starts, lengths) + offsets
    hit = idx[occ[idx] != 0]
    occ[hit] = 0
    return int(hit.size)


def sweep_wedge(occ, nx, ny, ox, oy, dsx, dsy, cx, cy, R, a0, a1):
    span = a1 - a0
    if span <= 0.0:
        return 0
    if span > np.pi:
        mid = a0 + 0.5 * span
        return _wedge(occ, nx, ny, ox, oy, dsx, dsy, cx, cy, R, a0, mid) + _wedge(
            occ, nx, ny, ox, oy, dsx, dsy, cx, cy, R, mid, a1
        )
    return _wedge(occ, nx, ny, ox, oy, dsx, dsy, cx, cy, R, a0, a1)


def sweep_teeth(occ, nx, ny, ox, oy, dsx, dsy, cx, cy, R, a0, a1, counts):
    for i in range(len(a0)):
        counts[i] = sweep_wedge(occ, nx, ny, ox, oy, dsx, dsy, cx, cy, R, a0[i], a1[i])
