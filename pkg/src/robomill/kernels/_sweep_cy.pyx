# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled grid-sweep kernel.

Same contract as ``_sweep_py``: clear every material node inside the
disk of radius ``R`` about ``(cx, cy)`` whose counter-clockwise polar
angle lies in ``[a0, a1]`` and return the number of cleared nodes.
"""

from libc.math cimport sqrt, ceil, floor, cos, sin, M_PI


cdef inline long _wedge(unsigned char[::1] occ, Py_ssize_t nx, Py_ssize_t ny,
                        double ox, double oy, double dsx, double dsy,
                        double cx, double cy, double R, double a0, double a1) nogil:
    cdef double uax = cos(a0), uay = sin(a0)
    cdef double ubx = cos(a1), uby = sin(a1)
    cdef double ymin = 0.0, ymax = 0.0, t
    cdef double ang
    cdef int k
    # bounding box in y of the wedge: centre, both arc ends, arc extremes
    ymin = min(ymin, R * uay)
    ymin = min(ymin, R * uby)
    ymax = max(ymax, R * uay)
    ymax = max(ymax, R * uby)
    for k in range(-2, 8):
        ang = 0.5 * M_PI + k * M_PI
        if ang >= a0 and ang <= a1:
            t = R * sin(ang)
            ymin = min(ymin, t)
            ymax = max(ymax, t)

    cdef Py_ssize_t iy0 = <Py_ssize_t>ceil((cy + ymin - oy) / dsy)
    cdef Py_ssize_t iy1 = <Py_ssize_t>floor((cy + ymax - oy) / dsy)
    if iy0 < 0:
        iy0 = 0
    if iy1 > ny - 1:
        iy1 = ny - 1

    cdef long count = 0
    cdef Py_ssize_t iy, ix, ix0, ix1, row
    cdef double dy, w2, lo, hi, A, B
    for iy in range(iy0, iy1 + 1):
        dy = oy + iy * dsy - cy
        w2 = R * R - dy * dy
        if w2 < 0.0:
            continue
        hi = sqrt(w2)
        lo = -hi
        # cross(u_a, d) >= 0
        A = -uay
        B = uax * dy
        if A > 0.0:
            lo = max(lo, -B / A)
        elif A < 0.0:
            hi = min(hi, -B / A)
        elif B < 0.0:
            continue
        # cross(d, u_b) >= 0
        A = uby
        B = -dy * ubx
        if A > 0.0:
            lo = max(lo, -B / A)
        elif A < 0.0:
            hi = min(hi, -B / A)
        elif B < 0.0:
            continue
        if lo > hi:
            continue
        ix0 = <Py_ssize_t>ceil((cx + lo - ox) / dsx)
        ix1 = <Py_ssize_t>floor((cx + hi - ox) / dsx)
        if ix0 < 0:
            ix0 = 0
        if ix1 > nx - 1:
            ix1 = nx - 1
        row = iy * nx
        for ix in range(ix0, ix1 + 1):
            if occ[row + ix]:
                occ[row + ix] = 0
                count += 1
    return count


def sweep_wedge(unsigned char[::1] occ, Py_ssize_t nx, Py_ssize_t ny,
                double ox, double oy, double dsx, double dsy,
                double cx, double cy, double R, double a0, double a1):
    cdef double span = a1 - a0
    cdef long count
    if span <= 0.0:
        return 0
    with nogil:
        if span > M_PI:
            count = _wedge(occ, nx, ny, ox, oy, dsx, dsy, cx, cy, R, a0, a0 + 0.5 * span)
            count += _wedge(occ, nx, ny, ox, oy, dsx, dsy, cx, cy, R, a0 + 0.5 * span, a1)
        else:
            count = _wedge(occ, nx, ny, ox, oy, dsx, dsy, cx, cy, R, a0, a1)
    return count


def sweep_teeth(unsigned char[::1] occ, Py_ssize_t nx, Py_ssize_t ny,
                double ox, double oy, double dsx, double dsy,
                double cx, double cy, double R,
                double[::1] a0, double[::1] a1, long[::1] counts):
    """Sweep several wedges about one centre, in order; counts per wedge."""
    cdef Py_ssize_t i
    cdef double span
    with nogil:
        for i in range(a0.shape[0]):
            span = a1[i] - a0[i]
            if span <= 0.0:
                counts[i] = 0
            elif span > M_PI:
                counts[i] = _wedge(occ, nx, ny, ox, oy, dsx, dsy, cx, cy, R,
                                   a0[i], a0[i] + 0.5 * span)
                counts[i] += _wedge(occ, nx, ny, ox, oy, dsx, dsy, cx, cy, R,
                                    a0[i] + 0.5 * span, a1[i])
            else:
                counts[i] = _wedge(occ, nx, ny, ox, oy, dsx, dsy, cx, cy, R, a0[i], a1[i])
