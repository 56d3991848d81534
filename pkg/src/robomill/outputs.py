"""CSV and JSON output files.

Every file opens with a ``# robomill <kind> config_hash=<hash>`` comment
line so results can be matched to the exact configuration that produced
them. Numbers are written with a fixed format, so identical runs give
byte-identical files.
"""

from __future__ import annotations

import io
import json

import numpy as np

from .dynamic_sim import SimulationTrace, TimedPath

FMT = "%.10g"


class OutputMismatch(ValueError):
    """A file does not belong to the scenario it is used with."""


def _header(kind, config_hash, extra=()):
    lines = [f"# robomill {kind} config_hash={config_hash}"]
    lines += [f"# {e}" for e in extra]
    return "\n".join(lines) + "\n"


def _write_table(path, kind, config_hash, columns, data, extra=(), fmt=FMT):
    buf = io.StringIO()
    buf.write(_header(kind, config_hash, extra))
    buf.write(",".join(columns) + "\n")
    np.savetxt(buf, data, delimiter=",", fmt=fmt)
    with open(path, "w", newline="\n") as fh:
        fh.write(buf.getvalue())


def read_table(path):
    """``(meta, columns, data)`` of a file written by this module."""
    meta = {}
    with open(path) as fh:
        line = fh.readline()
        while line.startswith("#"):
            for tok in line[1:].split():
                if "=" in tok:
                    k, v = tok.split("=", 1)
                    meta[k] = v
            if line.startswith("# robomill "):
                meta["kind"] = line.split()[2]
            line = fh.readline()
        columns = line.strip().split(",")
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    return meta, columns, data


def trace_columns(nz):
    return (["tau", "x_nom", "y_nom", "dx", "dy", "Fx", "Fy"]
            + [f"h_{i + 1}" for i in range(nz)] + ["engaged_mask"])


def write_trace(path, trace, config_hash):
    nz = trace.h.shape[1]
    data = np.column_stack([trace.tau, trace.x_nom, trace.y_nom, trace.dx, trace.dy,
                            trace.Fx, trace.Fy, trace.h, trace.engaged_mask()])
    fmt = [FMT] * (7 + nz) + ["%d"]
    _write_table(path, "trace", config_hash, trace_columns(nz), data,
                 extra=[f"dt_step={trace.dt_step!r}"], fmt=fmt)


def read_trace(path, expected_hash=None):
    meta, cols, data = read_table(path)
    if meta.get("kind") != "trace" or cols[:7] != trace_columns(0)[:7]:
        raise OutputMismatch(f"{path} is not a trace file")
    if expected_hash is not None and meta.get("config_hash") != expected_hash:
        raise OutputMismatch(
            f"trace {path} was produced by configuration {meta.get('config_hash')}, "
            f"not {expected_hash}")
    nz = len(cols) - 8
    mask = data[:, -1].astype(np.int64)
    engaged = ((mask[:, None] >> np.arange(nz)) & 1).astype(bool)
    dt = float(meta.get("dt_step", data[1, 0] - data[0, 0]))
    return SimulationTrace(data[:, 0], data[:, 1], data[:, 2], data[:, 3], data[:, 4],
                           data[:, 5], data[:, 6], data[:, 7:7 + nz], engaged, dt)


def write_spectrum(path, freqs, amp_dy, amp_fy, config_hash, window):
    _write_table(path, "spectrum", config_hash, ["freq", "amp_dy", "amp_Fy"],
                 np.column_stack([freqs, amp_dy, amp_fy]),
                 extra=[f"window={window[0]!r},{window[1]!r}"])


def write_profile(path, x, lower, upper, lower_err, upper_err, config_hash):
    _write_table(path, "profile", config_hash,
                 ["x", "y_lower", "y_upper", "err_lower", "err_upper"],
                 np.column_stack([x, lower, upper, lower_err, upper_err]))


def write_trajectory(path, traj, config_hash):
    _write_table(path, "trajectory", config_hash, ["t", "x", "y", "z", "vfx", "vfy"],
                 traj.rows(), extra=[f"controller_period={traj.period!r}"])


def read_trajectory(path, expected_hash=None):
    """Commanded path from a trajectory CSV."""
    meta, cols, data = read_table(path)
    if cols[:3] != ["t", "x", "y"]:
        raise OutputMismatch(f"{path} is not a trajectory file")
    if expected_hash is not None and meta.get("config_hash") not in (None, expected_hash):
        raise OutputMismatch(
            f"trajectory {path} was produced by configuration {meta.get('config_hash')}, "
            f"not {expected_hash}")
    return TimedPath(data[:, 0], data[:, 1:3])


def write_json(path, obj, config_hash):
    out = {"config_hash": config_hash, **obj}
    with open(path, "w") as fh:
        json.dump(out, fh, indent=2, sort_keys=True, default=_plain)
        fh.write("\n")


def _plain(x):
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, (np.floating, np.integer, np.bool_)):
        return x.item()
    raise TypeError(type(x).__name__)
