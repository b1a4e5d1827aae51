"""Command-line front end: ``clockwork {simulate,asymptotic,compare,predict,fit}``.

Exit codes: 0 success, 2 usage or input error, 3 numerical failure.
CLOCKWORK_SEED is accepted in the environment but ignored; nothing here is random.
"""
from __future__ import annotations

import argparse
import contextlib
import csv
import sys
import warnings

import numpy as np

from . import asymptotics as asy
from . import calibration as cal
from .kinetics import DimensionlessGroups, DomainError, InitialConcentrations, RateConstants
from .solver import SolverConfig, SolverError, detect_switchover, integrate, integrate_dimensional

EXIT_USAGE = 2
EXIT_NUMERIC = 3


class UsageError(Exception):
    pass


def _g(x) -> str:
    return format(float(x), ".17g")


@contextlib.contextmanager
def _output(path):
    if path is None or path == "-":
        yield sys.stdout
    else:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            yield fh


def _note(msg: str) -> None:
    print(msg, file=sys.stderr)


def _groups(args) -> DimensionlessGroups:
    missing = [f"--{n}" for n in ("eps", "rho", "phi") if getattr(args, n) is None]
    if missing:
        raise UsageError(f"missing required flag(s): {' '.join(missing)}")
    return DimensionlessGroups(args.eps, args.rho, args.phi)


def _solver_config(args, t_end=None, n_samples=None) -> SolverConfig:
    return SolverConfig(rel_tol=args.rel_tol, abs_tol=args.abs_tol, max_steps=args.max_steps,
                        t_end=t_end, n_samples=n_samples)


DIMENSIONAL_FLAGS = ("k0", "k1", "a0", "b0", "c0")


def cmd_simulate(args) -> int:
    dimensional = [n for n in DIMENSIONAL_FLAGS if getattr(args, n) is not None]
    if dimensional:
        missing = [f"--{n}" for n in DIMENSIONAL_FLAGS if getattr(args, n) is None]
        if missing:
            raise UsageError(f"dimensional run needs {' '.join(missing)}")
        rates = RateConstants(args.k0, args.k1)
        init = InitialConcentrations(args.a0, args.b0, args.c0)
        run = lambda: integrate_dimensional(rates, init, _solver_config(args, args.t_end, args.samples))
        header = ["t_s", "a_mol_l", "b_mol_l", "c_mol_l"]
    else:
        groups = _groups(args)
        run = lambda: integrate(groups, _solver_config(args, args.t_end, args.samples))
        header = ["tau", "beta", "gamma"]

    status = 0
    try:
        traj = run()
    except SolverError as exc:
        _note(f"error: {exc}")
        traj = exc.trajectory
        status = EXIT_NUMERIC
    event = detect_switchover(traj, args.threshold) if traj is not None and traj.dense else None

    with _output(args.out) as fh:
        if args.format == "csv":
            if traj is not None:
                writer = csv.writer(fh, lineterminator="\n")
                writer.writerow(header)
                # round-off negatives are clamped for reporting only
                values = np.maximum(traj.states, 0.0)
                for t, row in zip(traj.times, values):
                    writer.writerow([_g(t)] + [_g(v) for v in row])
        else:
            g = traj.groups if traj is not None else None
            fh.write("clock simulation\n")
            if g is not None:
                fh.write(f"  eps={g.eps:.6g} rho={g.rho:.6g} phi={g.phi:.6g}\n")
                fh.write(f"  steps={traj.n_steps} samples={len(traj.times)} "
                         f"t_end={traj.times[-1]:.6g}\n")
                fh.write(f"  leading-order switchover tau={g.tau_switch:.6g}\n")
            fh.write(_event_line(event) + "\n")
    if args.format == "csv":
        _note(_event_line(event))
    return status


def _event_line(event) -> str:
    if event is None:
        return "switchover: none detected"
    return (f"switchover: tau={event.tau_event:.10g} t={event.t_event:.10g} "
            f"threshold={event.threshold:.6g}")


def _tau_grid(groups, t_end, samples):
    if t_end is None:
        t_end = max(3.0 * groups.tau_switch, 20.0)
    return np.linspace(0.0, t_end, samples)


def _pointwise(region, taus, groups):
    keep, betas, gammas = [], [], []
    for t in taus:
        try:
            b, g = asy.REGION_FORMULAS[region](t, groups)
        except DomainError:
            continue
        keep.append(t)
        betas.append(b)
        gammas.append(g)
    return keep, betas, gammas


def cmd_asymptotic(args) -> int:
    groups = _groups(args)
    if not groups.valid:
        raise UsageError("rho*phi must be < 1 for the asymptotic solution")
    bounds = asy.RegionBounds(t_initial=args.t_initial, width=args.width)
    taus = _tau_grid(groups, args.t_end, args.samples)
    if args.region:
        region = asy.RegionLabel(args.region)
        taus, betas, gammas = _pointwise(region, taus, groups)
        labels = [region] * len(taus)
    else:
        labels = asy.classify_region(taus, groups, bounds)
        betas, gammas = asy.composite_eval(taus, groups, bounds)

    with _output(args.out) as fh:
        if args.format == "csv":
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["tau", "region", "beta", "gamma"])
            for t, lab, b, g in zip(taus, labels, betas, gammas):
                writer.writerow([_g(t), lab.value, _g(b), _g(g)])
        else:
            sol = asy.AsymptoticSolution(groups)
            fh.write("asymptotic solution\n")
            fh.write(f"  c1={sol.c1:.6g} c2={sol.c2:.6g} c3={sol.c3:.6g} c4={sol.c4:.6g}\n")
            fh.write(f"  switchover tau={groups.tau_switch:.10g}\n")
            for t, lab, b, g in zip(taus, labels, betas, gammas):
                fh.write(f"  {t:12.6g} {lab.value:>3} {b:14.8g} {g:14.8g}\n")
    return 0


def _engine(name, groups, taus, args, bounds):
    if name == "asymptotic":
        return asy.composite_eval(taus, groups, bounds)
    traj = integrate(groups, _solver_config(args, t_end=float(taus[-1])))
    y = traj.at(taus)
    return y[0], y[1]


def _rel(err, ref):
    with np.errstate(divide="ignore", invalid="ignore"):
        rel = err / np.abs(ref)
    return np.where(err == 0, 0.0, rel)


def cmd_compare(args) -> int:
    groups = _groups(args)
    if not groups.valid:
        raise UsageError("rho*phi must be < 1 to compare against the asymptotic solution")
    bounds = asy.RegionBounds(t_initial=args.t_initial, width=args.width)
    taus = _tau_grid(groups, args.t_end, args.samples)
    labels = asy.classify_region(taus, groups, bounds)
    try:
        b_ref, g_ref = _engine(args.reference, groups, taus, args, bounds)
        b_cand, g_cand = _engine(args.candidate, groups, taus, args, bounds)
    except SolverError as exc:
        _note(f"error: {exc}")
        return EXIT_NUMERIC
    eb = np.abs(b_cand - b_ref)
    eg = np.abs(g_cand - g_ref)
    rb, rg = _rel(eb, b_ref), _rel(eg, g_ref)

    summary = [f"max errors by region ({args.candidate} vs {args.reference})"]
    for region in asy.RegionLabel:
        mask = np.array([lab is region for lab in labels])
        if not mask.any():
            continue
        summary.append(
            f"  {region.value:>3}: n={int(mask.sum())} abs_beta={eb[mask].max():.4g} "
            f"abs_gamma={eg[mask].max():.4g} rel_beta={rb[mask].max():.4g} "
            f"rel_gamma={rg[mask].max():.4g}")
    text = "\n".join(summary) + "\n"

    with _output(args.out) as fh:
        if args.format == "csv":
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["tau", "region", "beta_ref", "gamma_ref", "beta_cand", "gamma_cand",
                             "abs_err_beta", "abs_err_gamma", "rel_err_beta", "rel_err_gamma"])
            for i, t in enumerate(taus):
                writer.writerow([_g(t), labels[i].value, _g(b_ref[i]), _g(g_ref[i]),
                                 _g(b_cand[i]), _g(g_cand[i]), _g(eb[i]), _g(eg[i]),
                                 _g(rb[i]), _g(rg[i])])
        else:
            fh.write(text)
    if args.format == "csv":
        sys.stderr.write(text)
    return 0


def cmd_predict(args) -> int:
    if args.table:
        rows = cal.read_measurements(args.table)
    else:
        missing = [f"--{n}" for n in ("c0", "m0") if getattr(args, n) is None]
        if missing:
            raise UsageError(f"missing {' '.join(missing)} (or pass --table)")
        rows = [None]
    if args.k0 is None:
        raise UsageError("missing --k0")
    if not args.k0 > 0:
        raise UsageError("--k0 must be positive")

    out = []
    for m in rows:
        c0, m0 = (args.c0, args.m0) if m is None else (m.c0, m.m0)
        if not (c0 > 0 and m0 > 0):
            raise UsageError("--c0 and --m0 must be positive")
        if c0 < args.phi * m0:
            raise DomainError(f"c0={c0:g} < phi*m0={args.phi * m0:g}: no induction period")
        t = asy.switchover_time_from(c0, m0, args.k0, args.phi)
        if t == 0:
            _note(f"warning: c0 = phi*m0 for c0={c0:g}, m0={m0:g}; "
                  "switchover is immediate (edge of validity)")
        out.append((m, c0, m0, t))

    with _output(args.out) as fh:
        if args.format == "csv":
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["series_id", "c0_mol_l", "m0_mol_l", "t_sw_observed_s", "t_sw_predicted_s"])
            for m, c0, m0, t in out:
                writer.writerow([m.series_id if m else "", _g(c0), _g(m0),
                                 _g(m.t_sw_observed) if m else "", _g(t)])
        else:
            for m, c0, m0, t in out:
                obs = f" (observed {m.t_sw_observed:g} s)" if m else ""
                fh.write(f"c0={c0:g} m0={m0:g}: t_sw = {t:.6g} s{obs}\n")
    return 0


def cmd_fit(args) -> int:
    rows = cal.read_measurements(args.data) if args.data else cal.table1()
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        result = cal.fit(rows, k0_init=args.k0_init, phi_init=args.phi_init)
    for w in caught:
        _note(f"warning: {w.message}")
    report = cal.fit_report(result, rows)
    with _output(args.out) as fh:
        if args.format == "csv":
            report.write_csv(fh)
        else:
            fh.write(report.summary())
            fh.write("\n")
            fh.write(f"{'series':>6} {'var':>3} {'value':>12} {'observed':>10} "
                     f"{'predicted':>10} {'residual':>10}\n")
            for row in report.rows:
                fh.write(f"{row.series_id:>6} {row.variable:>3} {row.value:12.6g} "
                         f"{row.observed:10.5g} {row.predicted:10.5g} {row.residual:10.4g}\n")
    if args.format == "csv":
        sys.stderr.write(report.summary())
    if not result.converged:
        _note("error: fit did not converge")
        return EXIT_NUMERIC
    return 0


def _positive_int(text):
    value = int(text)
    if value < 2:
        raise argparse.ArgumentTypeError("must be at least 2")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="clockwork",
                                     description="Vitamin C iodine clock reaction model.")
    sub = parser.add_subparsers(dest="command", required=True)

    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("--out", help="output path (default: stdout)")
    shared.add_argument("--format", choices=("csv", "text"), default="csv")

    dimless = argparse.ArgumentParser(add_help=False)
    dimless.add_argument("--eps", type=float, help="k0/k1")
    dimless.add_argument("--rho", type=float, help="m0/c0")
    dimless.add_argument("--phi", type=float, help="b0/m0")
    dimless.add_argument("--t-end", type=float, help="final time (tau, or s for dimensional runs)")

    solver = argparse.ArgumentParser(add_help=False)
    solver.add_argument("--rel-tol", type=float, default=1e-8)
    solver.add_argument("--abs-tol", type=float, default=1e-12)
    solver.add_argument("--max-steps", type=int, default=100_000)

    regions = argparse.ArgumentParser(add_help=False)
    regions.add_argument("--samples", type=_positive_int, default=801)
    regions.add_argument("--t-initial", type=float, help="end of region I (default 10/(1-rho*phi))")
    regions.add_argument("--width", type=float, default=3.0,
                         help="region III half-width in units of eps^-1/2/rho")

    p = sub.add_parser("simulate", parents=[shared, dimless, solver],
                       help="integrate the model and report the switchover")
    for name in DIMENSIONAL_FLAGS:
        p.add_argument(f"--{name}", type=float)
    p.add_argument("--threshold", type=float,
                   help="beta level for the switchover event (default sqrt(2 eps/pi))")
    p.add_argument("--samples", type=_positive_int,
                   help="uniform output samples (default: every solver step)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("asymptotic", parents=[shared, dimless, regions],
                       help="evaluate the piecewise asymptotic solution")
    p.add_argument("--region", choices=[r.value for r in asy.RegionLabel],
                   help="evaluate one region's formula only")
    p.set_defaults(func=cmd_asymptotic)

    p = sub.add_parser("compare", parents=[shared, dimless, solver, regions],
                       help="numeric against asymptotic, per-sample errors")
    p.add_argument("--reference", choices=("numeric", "asymptotic"), default="numeric")
    p.add_argument("--candidate", choices=("numeric", "asymptotic"), default="asymptotic")
    p.set_defaults(func=cmd_compare, rel_tol=1e-10, abs_tol=1e-13)

    p = sub.add_parser("predict", parents=[shared], help="switchover time from concentrations")
    p.add_argument("--c0", type=float, help="ascorbic acid, mol/l")
    p.add_argument("--m0", type=float, help="total iodine a0 + 2 b0, mol/l")
    p.add_argument("--k0", type=float, help="slow rate constant, l/mol/s")
    p.add_argument("--phi", type=float, default=0.0, help="b0/m0")
    p.add_argument("--table", help="measurement CSV for batch prediction")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("fit", parents=[shared], help="fit k0 and phi to switchover times")
    p.add_argument("--data", help="measurement CSV (default: bundled kitchen-experiment table)")
    p.add_argument("--k0-init", type=float, default=1.0)
    p.add_argument("--phi-init", type=float, default=0.1)
    p.set_defaults(func=cmd_fit)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        parser.error(str(exc))  # exits with status 2
    except (cal.ParseError, DomainError, ValueError, OSError) as exc:
        _note(f"error: {exc}")
        return EXIT_USAGE
    except SolverError as exc:
        _note(f"error: {exc}")
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
