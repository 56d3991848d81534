"""Command-line front end: ``robomill simulate|compensate|verify``.

Exit codes: 0 success, 2 usage, 3 scenario/config error, 4 input files do
not match the scenario, 5 numerical failure (non-convergence or a
singular matrix), 6 simulation diverged, 1 anything else.
"""

from __future__ import annotations

import argparse
import logging
import sys
import time
import warnings
from pathlib import Path

from . import analysis, outputs
from .compensation import compensate_trajectory
from .dynamic_sim import run_simulation
from .errors import (
    NonConvergence,
    ScenarioError,
    SimulationDiverged,
    SingularJacobian,
    SingularMass,
    SingularMatrix,
)
from .scenario import load_scenario

log = logging.getLogger("robomill")

EXIT_OK, EXIT_ERROR, EXIT_USAGE, EXIT_CONFIG, EXIT_MISMATCH, EXIT_NUMERIC, EXIT_DIVERGED = (
    0, 1, 2, 3, 4, 5, 6)


def _scenario(args):
    return load_scenario(args.scenario, dt=args.dt, duration=args.duration,
                         grid_step=args.grid_step)


def _progress(label):
    def report(k, n):
        log.info("%s: %d / %d", label, k, n)
    return report


def _simulate(scenario, commanded=None, label="simulate"):
    t = time.perf_counter()
    trace = run_simulation(scenario, commanded=commanded, progress=_progress(label))
    elapsed = time.perf_counter() - t
    return trace, analysis.run_report(scenario, trace, runtime=elapsed)


def _write_run(out, scenario, trace, report, prefix=""):
    h = scenario.config_hash
    outputs.write_trace(out / f"{prefix}trace.csv", trace, h)
    m = analysis.window_mask(trace.tau, report.window)
    freqs, ady = analysis.amplitude_spectrum(trace.dy[m], trace.dt_step)
    _, afy = analysis.amplitude_spectrum(trace.Fy[m], trace.dt_step)
    outputs.write_spectrum(out / f"{prefix}spectrum.csv", freqs, ady, afy, h, report.window)
    x, lo_err, up_err = analysis.profile_deviation(scenario, trace, report.window)
    R = scenario.cutting.R
    y_des = analysis._desired_y_at_x(scenario.path, x)
    outputs.write_profile(out / f"{prefix}profile.csv", x, lo_err + y_des - R,
                          up_err + y_des + R, lo_err, up_err, h)


def cmd_simulate(args):
    scenario = _scenario(args)
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    trace, report = _simulate(scenario)
    _write_run(out, scenario, trace, report)
    outputs.write_json(out / "report.json", report.as_dict(), scenario.config_hash)
    _print_report(report)
    return report


def cmd_compensate(args):
    scenario = _scenario(args)
    trace = outputs.read_trace(args.trace, scenario.config_hash)
    n = int(round(scenario.sim_duration / scenario.dt_step))
    if trace.n_steps != n or abs(trace.dt_step - scenario.dt_step) > 1e-15:
        raise outputs.OutputMismatch(
            f"trace has {trace.n_steps} steps of {trace.dt_step} s; scenario expects "
            f"{n} steps of {scenario.dt_step} s")
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        traj = compensate_trajectory(scenario, trace, args.period, mode=args.mode,
                                     alpha=args.alpha)
    for w in caught:
        log.warning("%s", w.message)
    outputs.write_trajectory(out / "trajectory.csv", traj, scenario.config_hash)
    with open(out / "compensation.log", "w") as fh:
        fh.write(f"# robomill compensation config_hash={scenario.config_hash}\n")
        fh.write(f"mode={args.mode}\n")
        for i, t in enumerate(traj.times):
            if traj.entry[i]:
                fh.write(f"t={t:.4f} entry transient (tool not fully engaged)\n")
        fh.write("\n".join(traj.log) + "\n")
    print(f"wrote {len(traj.times)} trajectory points every {traj.period:g} s to "
          f"{out / 'trajectory.csv'}")
    return traj


def cmd_verify(args):
    scenario = _scenario(args)
    commanded = outputs.read_trajectory(args.trajectory, scenario.config_hash)
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    _, before = _simulate(scenario, label="before")
    trace, after = _simulate(scenario, commanded=commanded, label="after")
    _write_run(out, scenario, trace, after, prefix="after_")
    result = {"before": before.as_dict(), "after": after.as_dict(),
              "reduction": reductions(before, after)}
    outputs.write_json(out / "verify.json", result, scenario.config_hash)
    table = format_table(before, after)
    with open(out / "verify.txt", "w") as fh:
        fh.write(f"# robomill verify config_hash={scenario.config_hash}\n{table}")
    print(table, end="")
    return before, after


def reductions(before, after):
    def red(b, a):
        return float(1.0 - a / b) if b > 0 else float("nan")
    return {
        "static_deviation": red(before.static_deviation, after.static_deviation),
        "max_deviation": red(before.max_deviation, after.max_deviation),
        "low_frequency_shift": float(after.low_frequency - before.low_frequency),
        "bin_width": before.bin_width,
    }


def format_table(before, after):
    r = reductions(before, after)
    rows = [
        ("measure", "before", "after", "change"),
        ("low frequency [Hz]", f"{before.low_frequency:.3f}", f"{after.low_frequency:.3f}",
         f"{r['low_frequency_shift']:+.3f}"),
        ("static deviation y_s [mm]", f"{before.static_deviation * 1e3:.4e}",
         f"{after.static_deviation * 1e3:.4e}", f"-{100 * r['static_deviation']:.1f}%"),
        ("max deviation y_max [mm]", f"{before.max_deviation * 1e3:.4e}",
         f"{after.max_deviation * 1e3:.4e}", f"-{100 * r['max_deviation']:.1f}%"),
    ]
    return "".join(f"{a:<28}{b:>14}{c:>14}{d:>10}\n" for a, b, c, d in rows)


def _print_report(r):
    print(f"low frequency      {r.low_frequency:10.3f} Hz (first mode {r.first_mode:.3f} Hz)")
    print(f"tooth frequency    {r.tooth_frequency:10.3f} Hz")
    print(f"static deviation   {r.static_deviation * 1e3:10.4e} mm")
    print(f"max deviation      {r.max_deviation * 1e3:10.4e} mm")
    print(f"runtime            {r.runtime:10.1f} s")


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-o", "--output", default="out", help="output directory")
    common.add_argument("--dt", type=float, help="simulation step, s")
    common.add_argument("--duration", type=float, help="simulated time, s")
    common.add_argument("--grid-step", type=float, help="workpiece grid step (both axes), m")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="robomill", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    s = sub.add_parser("simulate", parents=[common], help="simulate a milling pass")
    s.add_argument("scenario")
    s.set_defaults(func=cmd_simulate)
    c = sub.add_parser("compensate", parents=[common], help="compute a compensated trajectory")
    c.add_argument("scenario")
    c.add_argument("trace")
    c.add_argument("--period", type=float, help="controller period, s")
    c.add_argument("--alpha", type=float, help="relaxation factor in (0, 1]")
    c.add_argument("--mode", choices=("model", "mirror"), default="model")
    c.set_defaults(func=cmd_compensate)
    v = sub.add_parser("verify", parents=[common],
                       help="re-simulate with a compensated trajectory and compare")
    v.add_argument("scenario")
    v.add_argument("trajectory")
    v.set_defaults(func=cmd_verify)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except ScenarioError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except outputs.OutputMismatch as exc:
        print(f"input mismatch: {exc}", file=sys.stderr)
        return EXIT_MISMATCH
    except (NonConvergence, SingularJacobian, SingularMatrix, SingularMass) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except SimulationDiverged as exc:
        print(f"simulation diverged: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
