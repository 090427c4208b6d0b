"""Batch front-end: level sweeps, resonances, diagnostics and verification.

Subcommands
-----------
levels       solve E_n(Omega) over an Omega grid in one frame
resonance    solve complex dilated-frame levels
diagnostics  translated/real/dilated comparison: shift ratios, gap curves
sweep        cartesian (Omega, level, frame) driver with row parallelism
verify       run the acceptance criteria (quick or full tier)

Values are written as full-precision decimal strings (CSV or JSON); the
report path also renders matplotlib figures next to the delimited output
unless --no-plot is given.  Configuration precedence: command-line flags
override the optional JSON config file; environment variables are ignored
by design.  Exit codes: 0 success, 1 solver failure or failed criterion,
2 usage error.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict
from pathlib import Path

from . import diagnostics, levels, moments, report, verify
from .levels import LevelConfig
from .operators import DIRAC, KLEIN_GORDON, Frame, ModelParams, \
    build_frame_operator
from .scalars import make_context

_FRAME_ALIASES = {"t": "translated", "r": "real", "d": "dilated",
                  "real": "real", "translated": "translated",
                  "dilated": "dilated"}


def _parse_list(text, cast=str):
    return [cast(tok) for tok in str(text).split(",") if tok != ""]


def _add_common(parser):
    parser.add_argument("--omega", help="comma-separated Omega values "
                        "(decimal strings, e.g. 0.002,0.0025)")
    parser.add_argument("--levels", default="0",
                        help="comma-separated level indices (default 0)")
    parser.add_argument("--digits", type=int, default=30,
                        help="reported significant digits (>= 30)")
    parser.add_argument("--blocks", type=int, default=40,
                        help="recurrence depth; basis size is 4*blocks")
    parser.add_argument("--sigma", default="1.3",
                        help="variational basis frequency")
    parser.add_argument("--y", default="2", help="imaginary translation")
    parser.add_argument("--theta", default="0.30", help="dilation angle")
    parser.add_argument("--variant", choices=[DIRAC, KLEIN_GORDON],
                        default=DIRAC)
    parser.add_argument("--format", choices=["csv", "json"], default="csv")
    parser.add_argument("--out", help="output file (default: stdout table)")
    parser.add_argument("--jobs", type=int, default=1,
                        help="parallel row workers (results are sorted, so "
                        "output is independent of this)")
    parser.add_argument("--config", help="optional JSON config file; flags "
                        "given explicitly override it")
    parser.add_argument("--no-theta-check", action="store_true",
                        help="skip the dilation-angle plateau re-solve")
    plot = parser.add_mutually_exclusive_group()
    plot.add_argument("--plot", dest="plot", action="store_true",
                      default=None, help="render figures next to the output")
    plot.add_argument("--no-plot", dest="plot", action="store_false")


def _apply_config(args, parser, argv):
    """Layer: defaults < config file < explicitly passed flags."""
    if not args.config:
        return args
    try:
        loaded = json.loads(Path(args.config).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        parser.error(f"cannot read config {args.config}: {exc}")
    explicit = {a.lstrip("-").split("=")[0].replace("-", "_")
                for a in argv if a.startswith("--")}
    for key, value in loaded.items():
        attr = key.replace("-", "_")
        if not hasattr(args, attr):
            parser.error(f"unknown config key {key!r}")
        if attr not in explicit:
            setattr(args, attr, value)
    return args


def _cfg_from_args(args) -> LevelConfig:
    return LevelConfig(sigma=args.sigma, y=args.y, theta=args.theta,
                       blocks=args.blocks,
                       theta_plateau_check=not args.no_theta_check)


def _solve_row(task):
    """One (omega, n, frame) solve; returns a ResultRow (worker-safe)."""
    omega, n, frame, variant, digits, cfg_fields, seed = task
    ctx = make_context(digits)
    cfg = LevelConfig(**cfg_fields)
    start = time.perf_counter()
    try:
        if frame == "dilated":
            res = levels.solve_resonance(omega, n, cfg.theta, ctx, cfg,
                                         variant=variant, e_seed=seed)
        else:
            res = levels.solve_level(omega, n, frame, ctx, cfg,
                                     variant=variant, e_seed=seed)
        return report.row_from_level(res, ctx, omega, variant,
                                     time.perf_counter() - start)
    except (moments.MomentSolverError, ValueError) as exc:
        return report.error_row(omega, n, frame, variant, exc, digits,
                                time.perf_counter() - start)


def _run_tasks(tasks, jobs):
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_solve_row, tasks))
    return [_solve_row(t) for t in tasks]


def _emit_rows(rows, args, default_stem):
    rows = report.sort_rows(rows)
    if args.out:
        out = Path(args.out)
        report.write_rows(rows, out, args.format)
        print(f"wrote {len(rows)} rows to {out}")
    else:
        out = Path(f"{default_stem}.{args.format}")
        report.write_rows(rows, out, args.format)
        for row in rows:
            rec = row.as_record()
            print(f"omega={rec['omega']} n={rec['n']} frame={rec['frame']} "
                  f"E={rec['E']} Im_E={rec['Im_E']} err={rec['error'] or '-'}")
        print(f"wrote {len(rows)} rows to {out}")
    if args.plot is not False and len(rows) > 1:
        from . import plotting
        fig = out.with_suffix("").as_posix() + "_levels.png"
        plotting.plot_levels(rows, fig)
        print(f"wrote figure {fig}")
    return 1 if any(r.error for r in rows) else 0


def _require_omegas(args, parser):
    if not args.omega:
        parser.error("--omega is required (comma-separated list)")
    return _parse_list(args.omega)


def cmd_levels(args, parser, frame_override=None):
    omegas = _parse_list(args.omega) if args.omega else []
    level_list = _parse_list(args.levels, int)
    frame = frame_override or _FRAME_ALIASES.get(args.frame)
    if frame is None:
        parser.error(f"unknown frame {args.frame!r}")
    cfg = _cfg_from_args(args)
    tasks = [(om, n, frame, args.variant, args.digits, asdict(cfg), None)
             for om in omegas for n in level_list]
    rows = _run_tasks(tasks, args.jobs)
    return _emit_rows(rows, args, "levels")


def cmd_resonance(args, parser):
    _require_omegas(args, parser)
    return cmd_levels(args, parser, frame_override="dilated")


def cmd_sweep(args, parser):
    omegas = _require_omegas(args, parser)
    level_list = _parse_list(args.levels, int)
    frames = []
    for tok in _parse_list(args.frames):
        if tok not in _FRAME_ALIASES:
            parser.error(f"unknown frame {tok!r}")
        frames.append(_FRAME_ALIASES[tok])
    cfg = _cfg_from_args(args)
    tasks = []
    for om in omegas:
        for n in level_list:
            for frame in frames:
                variant = KLEIN_GORDON if frame == "real" else args.variant
                tasks.append((om, n, frame, variant, args.digits,
                              asdict(cfg), None))
    rows = _run_tasks(tasks, args.jobs)
    return _emit_rows(rows, args, "sweep")


def cmd_diagnostics(args, parser):
    omegas = _require_omegas(args, parser)
    ctx = make_context(args.digits)
    m = ctx.mp
    cfg = _cfg_from_args(args)
    depths = _parse_list(args.depths, int) if args.depths else []
    stem = Path(args.out).with_suffix("") if args.out else Path("diagnostics")
    rows = []
    kappas = []
    ratios = []
    curves = []
    seed_t = None
    for om in omegas:
        rec = {"omega": om}
        try:
            rt0 = levels.solve_level(om, 0, "translated", ctx, cfg,
                                     e_seed=seed_t)
            seed_t = rt0.energy
            rt1 = levels.solve_level(om, 1, "translated", ctx, cfg)
            rd0 = levels.solve_resonance(om, 0, cfg.theta, ctx, cfg,
                                         e_seed=rt0.energy)
            params = ModelParams(omega_rel=om, energy=rt0.energy,
                                 variant=KLEIN_GORDON, frame=Frame.real())
            op = build_frame_operator(params, ctx)
            sizes = diagnostics.real_frame_scan_sizes(float(om),
                                                      float(cfg.sigma))
            scan0 = moments.stabilization_scan(op, sizes, 0, ctx, cfg)
            scan1 = moments.stabilization_scan(op, sizes, 1, ctx, cfg)
            kappa = (rt0.energy - scan0.value) / m.mpf(om)
            delta = ((rt1.energy - rt0.energy)
                     - (scan1.value - scan0.value)) / m.mpf(om)
            rec.update(E_t0=m.nstr(rt0.energy, ctx.digits),
                       E_t1=m.nstr(rt1.energy, ctx.digits),
                       E_r0=m.nstr(scan0.value, ctx.digits),
                       E_r1=m.nstr(scan1.value, ctx.digits),
                       Re_E_d0=m.nstr(m.re(rd0.energy), ctx.digits),
                       Im_E_d0=m.nstr(m.im(rd0.energy), 12),
                       kappa=m.nstr(kappa, 12), delta=m.nstr(delta, 12))
            kappas.append((m.mpf(om), kappa))
            try:
                gap = diagnostics.lambda_gap(rt0.energy, rd0.energy, ctx)
                rec["Lambda"] = m.nstr(gap.value, 12)
                if gap.im_reference is not None:
                    rec["ratio_Lambda"] = m.nstr(gap.value /
                                                 gap.im_reference, 12)
                    ratios.append((m.mpf(om), gap.value / gap.im_reference))
            except diagnostics.NonpositiveGapError as exc:
                rec["Lambda"] = f"unresolved ({exc})"
            if depths:
                curve = diagnostics.saturation_curve(om, depths, ctx, cfg)
                curves.append(curve)
                cpath = Path(f"{stem}_gapcurve_{om}.csv")
                with open(cpath, "w") as fh:
                    fh.write("depth,Lambda\n")
                    for p in curve.points:
                        val = m.nstr(p.gap_log, 12) if p.gap_log is not None \
                            else ""
                        fh.write(f"{p.depth},{val}\n")
                print(f"wrote {cpath}")
        except (moments.MomentSolverError, ValueError) as exc:
            rec["error"] = f"{type(exc).__name__}: {exc}"
        rows.append(rec)
    fit = None
    if len(kappas) >= 2:
        fit = diagnostics.fit_line([k[0] for k in kappas],
                                   [k[1] for k in kappas], ctx)
        print(f"kappa fit: intercept {m.nstr(fit[0], 10)} "
              f"slope {m.nstr(fit[1], 8)}")
    else:
        print("single Omega: shift-ratio fit skipped")
    if len(ratios) == 5:
        limit = diagnostics.lagrange_extrapolate(
            [r[0] for r in ratios], [r[1] for r in ratios], 0, ctx)
        print(f"gap-to-width ratio limit (quartic extrapolation): "
              f"{m.nstr(limit, 8)}")
    out = Path(args.out) if args.out else Path(f"diagnostics.{args.format}")
    keys = ["omega", "E_t0", "E_t1", "E_r0", "E_r1", "Re_E_d0", "Im_E_d0",
            "kappa", "delta", "Lambda", "ratio_Lambda", "error"]
    if args.format == "json":
        payload = {"schema_version": report.SCHEMA_VERSION, "rows": rows}
        if fit:
            payload["kappa_fit"] = {"intercept": m.nstr(fit[0], 12),
                                    "slope": m.nstr(fit[1], 12)}
        out.write_text(json.dumps(payload, indent=2) + "\n")
    else:
        import csv as _csv
        with open(out, "w", newline="") as fh:
            writer = _csv.DictWriter(fh, fieldnames=keys, extrasaction="ignore",
                                     quoting=_csv.QUOTE_MINIMAL)
            writer.writeheader()
            for rec in rows:
                writer.writerow(rec)
    print(f"wrote {out}")
    if args.plot is not False:
        from . import plotting
        if curves:
            path = f"{stem}_saturation.png"
            plotting.plot_saturation(curves, path)
            print(f"wrote figure {path}")
        if len(kappas) >= 2:
            path = f"{stem}_shift_ratio.png"
            plotting.plot_shift_ratio([k[0] for k in kappas],
                                      [k[1] for k in kappas], fit, path)
            print(f"wrote figure {path}")
    return 1 if any("error" in r for r in rows) else 0


def cmd_verify(args, parser):
    if args.criteria:
        cids = _parse_list(args.criteria, int)
        unknown = [c for c in cids if c not in verify.CRITERIA]
        if unknown:
            parser.error(f"unknown criteria {unknown}")
    elif args.level in verify.TIERS:
        cids = verify.TIERS[args.level]
    else:
        parser.error(f"unknown verification level {args.level!r} "
                     f"(expected quick or full)")
    results = verify.run_suite(cids, stream=sys.stdout)
    if args.out:
        payload = [{"criterion": r.cid, "name": r.name,
                    "passed": r.passed, "details": r.details,
                    "seconds": round(r.seconds, 2)} for r in results]
        Path(args.out).write_text(json.dumps(payload, indent=2) + "\n")
        print(f"wrote {args.out}")
    failed = [r.cid for r in results if not r.passed]
    if failed:
        print(f"FAILED criteria: {failed}")
        return 1
    print(f"all {len(results)} criteria passed")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="relosc",
        description="Metastable levels and resonances of the 1D "
                    "relativistic oscillators via PT-symmetric quartic "
                    "operators and the block matrix-moment method.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_levels = sub.add_parser("levels", help="real levels over an Omega grid")
    _add_common(p_levels)
    p_levels.add_argument("--frame", default="translated",
                          help="real | translated | dilated (or t/r/d)")
    p_levels.set_defaults(func=cmd_levels)

    p_res = sub.add_parser("resonance", help="dilated-frame complex levels")
    _add_common(p_res)
    p_res.set_defaults(func=cmd_resonance)

    p_diag = sub.add_parser("diagnostics",
                            help="t/r/d comparison, shift ratios, gap curves")
    _add_common(p_diag)
    p_diag.add_argument("--depths",
                        help="comma-separated recurrence depths for the "
                             "gap-saturation curve")
    p_diag.set_defaults(func=cmd_diagnostics)

    p_sweep = sub.add_parser("sweep", help="cartesian Omega x level x frame")
    _add_common(p_sweep)
    p_sweep.add_argument("--frames", default="t,r,d",
                         help="comma-separated frame list (t, r, d)")
    p_sweep.set_defaults(func=cmd_sweep)

    p_verify = sub.add_parser("verify", help="run acceptance criteria")
    p_verify.add_argument("--level", default="quick",
                          help="quick | full (full includes the slow "
                               "reproduction suites; expect an hour or more)")
    p_verify.add_argument("--criteria",
                          help="explicit comma-separated criterion ids")
    p_verify.add_argument("--out", help="write a JSON report here")
    p_verify.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    if hasattr(args, "config"):
        args = _apply_config(args, parser, argv)
    if hasattr(args, "digits") and args.digits < 30:
        parser.error("digits below minimum: need >= 30")
    try:
        return args.func(args, parser)
    except KeyboardInterrupt:
        return 1


if __name__ == "__main__":
    sys.exit(main())
