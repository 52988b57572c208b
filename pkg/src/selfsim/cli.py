"""Command-line front end.

Every subcommand reads a JSON measure document (where one is needed),
runs the corresponding pipeline, and writes CSV with a header row and
17-significant-digit floats. Identical arguments and seed give byte
identical output; worker counts change wall time only.

Exit codes: 0 success, 1 usage, 2 bad spec or parameters, 3 budget
exceeded, 4 precision exhausted.
"""

from __future__ import annotations

import argparse
import math
import os
import sys

import numpy as np

from .dimension import estimate_D1, estimate_Dq, table_from_histograms
from .ekscan import EkSpec, ek_badness, ek_count_sequences, ek_sweep
from .errors import (BudgetError, PrecisionError, SelfsimError, SpecError,
                     UsageError)
from .fourier import decay_fit
from .histogram import histogram
from .ifs import check_strong_separation, entropy, similarity_dimension
from .transforms import (ResolvedMeasure, load_measure_spec,
                         measure_histogram, measure_spectral, project_ifs)

_JOBS_ENV = "SELFSIM_JOBS"


def _fmt(x) -> str:
    return "%.17g" % float(x)


def _emit(path: str | None, header: list, rows: list) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(str(c) if isinstance(c, (str, int)) else _fmt(c)
                              for c in row))
    text = "\n".join(lines) + "\n"
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def _parse_levels(text: str):
    parts = text.split("..")
    if len(parts) != 2:
        raise UsageError(f"levels must look like 6..20, got {text!r}")
    try:
        lo, hi = int(parts[0]), int(parts[1])
    except ValueError as exc:
        raise UsageError(f"levels must be integers: {text!r}") from exc
    if lo < 1 or hi < lo:
        raise UsageError(f"need 1 <= n_min <= n_max, got {text!r}")
    return lo, hi


def _parse_range(text: str):
    parts = text.split(":")
    if len(parts) != 3:
        raise UsageError(f"range must look like lo:hi:steps, got {text!r}")
    try:
        lo, hi, steps = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError as exc:
        raise UsageError(f"bad range {text!r}") from exc
    if steps < 1:
        raise UsageError("range needs at least one step")
    return lo, hi, steps


def _default_jobs() -> int:
    raw = os.environ.get(_JOBS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _measure_levels(rm: ResolvedMeasure, n_min: int, n_max: int, args):
    hists = [measure_histogram(rm, n, extra_depth=args.extra_depth,
                               guard=args.guard, word_budget=args.budget)
             for n in range(n_min, n_max + 1)]
    return hists


def _hist_rows(hist):
    if hist.ambient_dim == 1:
        header = ["cell_index", "cell_left", "lower_mass", "upper_mass"]
        w = hist.cell_width
        rows = [(int(k), k * w, lo, up) for k, lo, up in
                zip(hist.indices.tolist(), hist.lower, hist.upper)]
    else:
        header = ["cell_index_x", "cell_index_y", "cell_left_x",
                  "cell_left_y", "lower_mass", "upper_mass"]
        w = hist.cell_width
        rows = [(int(kx), int(ky), kx * w, ky * w, lo, up)
                for (kx, ky), lo, up in
                zip(hist.indices.tolist(), hist.lower, hist.upper)]
    return header, rows


def _cmd_dim(args) -> None:
    rm = load_measure_spec(args.ifs)
    n_min, n_max = _parse_levels(args.levels)
    q_list = args.q if args.q else [2.0]
    for q in q_list:
        if abs(q - 1.0) < 1e-12 or q <= 0:
            raise SpecError("q must be positive and not 1; use the entropy "
                            "subcommand for q = 1")
    hists = _measure_levels(rm, n_min, n_max, args)
    table = table_from_histograms(hists, q_list)
    header = ["q", "n", "S_lower", "S_upper", "slope_fit", "D_lo", "D_hi"]
    rows = []
    for q in q_list:
        est = estimate_Dq(table, q)
        j = table.q_index(q)
        for i, n in enumerate(table.levels):
            rows.append((q, int(n), table.s_lower[i, j], table.s_upper[i, j],
                         est.point, est.lo, est.hi))
    _emit(args.out, header, rows)


def _cmd_entropy(args) -> None:
    rm = load_measure_spec(args.ifs)
    n_min, n_max = _parse_levels(args.levels)
    hists = _measure_levels(rm, n_min, n_max, args)
    table = table_from_histograms(hists, [2.0])
    est = estimate_D1(table)
    header = ["n", "H_lower", "H_upper", "slope_fit", "D_lo", "D_hi"]
    rows = [(int(n), table.h_lower[i], table.h_upper[i],
             est.point, est.lo, est.hi)
            for i, n in enumerate(table.levels)]
    _emit(args.out, header, rows)


def _cmd_fourier(args) -> None:
    rm = load_measure_spec(args.ifs)
    measure = measure_spectral(rm)
    xi_max = args.xi_max
    if xi_max is None:
        xi_max = args.xi0 * args.band_ratio ** args.bands
    profile = decay_fit(measure, xi_max, args.bands,
                        samples_per_band=args.samples_per_band, tol=args.tol,
                        band_ratio=args.band_ratio, xi0=args.xi0,
                        seed=args.seed)
    header = ["xi", "abs_value", "error_bound"]
    rows = list(zip(profile.xi, profile.abs_value, profile.error_bound))
    _emit(args.out, header, rows)
    band_path = args.band_out
    if band_path is None and args.out is not None:
        band_path = args.out + ".bands.csv"
    band_rows = [(int(k), bm, profile.sigma_hat)
                 for k, bm in enumerate(profile.band_max)]
    _emit(band_path, ["band_k", "band_max", "fitted_sigma"], band_rows)


def _cmd_project(args) -> None:
    rm = load_measure_spec(args.ifs)
    if rm.kind != "ifs":
        raise SpecError("project expects a plain system document")
    ifs, p = rm.ifs, rm.p
    if ifs.ambient_dim != 2:
        raise SpecError("project needs a 2D system")
    if abs(ifs.map.alpha or 0.0) <= 1e-15:
        out, w = project_ifs(ifs, p, args.beta)
        proj = ResolvedMeasure(kind="ifs", ifs=out, p=w, label=out.label)
    else:
        proj = ResolvedMeasure(kind="projection", ifs=ifs, p=p,
                               beta=args.beta, label=ifs.label)
    hist = measure_histogram(proj, args.n, extra_depth=args.extra_depth,
                             word_budget=args.budget)
    header, rows = _hist_rows(hist)
    _emit(args.out, header, rows)


def _cmd_convolve(args) -> None:
    rm = load_measure_spec(args.ifs)
    if args.other is not None:
        if rm.kind != "ifs":
            raise SpecError("give either a derived document or --other, "
                            "not both")
        rm2 = load_measure_spec(args.other)
        if rm2.kind != "ifs":
            raise SpecError("--other must be a plain system document")
        rm = ResolvedMeasure(kind="convolution", u=args.u,
                             parts=((rm.ifs, rm.p), (rm2.ifs, rm2.p)),
                             label=f"{rm.label}*{rm2.label}")
    elif rm.kind != "convolution":
        raise SpecError("document has no convolution derivation; pass --other")
    hist = measure_histogram(rm, args.n, extra_depth=args.extra_depth,
                             guard=args.guard, word_budget=args.budget)
    header, rows = _hist_rows(hist)
    _emit(args.out, header, rows)


def _cmd_skipkeep(args) -> None:
    from .transforms import skip_keep
    rm = load_measure_spec(args.ifs)
    if rm.kind != "ifs":
        raise SpecError("skipkeep expects a plain system document")
    pair = skip_keep(rm.ifs, rm.p, args.k, word_budget=args.budget)
    if args.part == "skip":
        ifs, p = pair.nu_ifs, pair.nu_weights
    else:
        ifs, p = pair.eta_scaled_ifs, pair.eta_weights
    hist = histogram(ifs, p, args.n, extra_depth=args.extra_depth,
                     word_budget=args.budget)
    header, rows = _hist_rows(hist)
    _emit(args.out, header, rows)


def _ek_fixed_params(args, kind: str, exclude: str | None = None) -> dict:
    if kind == "translations":
        params = {"lam": args.lam, "u": args.u}
    elif kind == "projections":
        params = {"theta": args.theta, "alpha": args.alpha, "beta": args.beta}
    else:
        params = {"theta1": args.theta1, "theta2": args.theta2, "u": args.u}
    if exclude is not None:
        params.pop(exclude, None)
    return {k: v for k, v in params.items() if v is not None}


_RANGE_FLAGS = (("lambda_range", "lam"), ("theta_range", "theta"),
                ("theta1_range", "theta1"), ("u_range", "u"))


def _cmd_ekscan(args) -> None:
    ranges = [(getattr(args, flag), vary) for flag, vary in _RANGE_FLAGS
              if getattr(args, flag) is not None]
    if len(ranges) > 1:
        raise UsageError("give at most one range flag")
    header = ["parameter", "badness", "witness_t"]
    if ranges:
        text, vary = ranges[0]
        lo, hi, steps = _parse_range(text)
        fixed = _ek_fixed_params(args, args.kind, exclude=vary)
        rows = ek_sweep(args.kind, fixed, vary, lo, hi, steps,
                        args.N, args.c, t_grid=args.t_grid, jobs=args.jobs)
        _emit(args.out, header, rows)
        return
    spec = EkSpec(kind=args.kind, N=args.N, c=args.c, t_grid=args.t_grid,
                  **_ek_fixed_params(args, args.kind))
    rep = ek_badness(spec)
    primary = {"translations": spec.lam, "projections": spec.theta,
               "convolutions": spec.theta1}[args.kind]
    _emit(args.out, header, [(primary, rep.badness, rep.witness_t)])


def _cmd_ekcount(args) -> None:
    rep = ek_count_sequences(args.kind, args.N, args.c, args.delta,
                             theta=args.theta, theta1=args.theta1)
    header = ["N", "count", "log_count_over_N"]
    rows = [(int(n), int(cnt), rate)
            for n, cnt, rate in zip(rep.ns, rep.counts, rep.rates)]
    _emit(args.out, header, rows)


def _cmd_sweep(args) -> None:
    fixed = _ek_fixed_params(args, args.kind, exclude=args.vary)
    rows = ek_sweep(args.kind, fixed, args.vary, args.lo, args.hi, args.steps,
                    args.N, args.c, t_grid=args.t_grid, jobs=args.jobs)
    _emit(args.out, ["parameter", "badness", "witness_t"], rows)


def _cmd_check(args) -> None:
    rows = []
    rm = load_measure_spec(args.ifs)
    rows.append(("parse", "pass",
                 f"kind={rm.kind}; label={rm.label or '(none)'}"))
    if rm.kind == "ifs":
        ifs, p = rm.ifs, rm.p
        wsum = float(np.sum(p))
        rows.append(("weights", "pass" if abs(wsum - 1.0) <= 1e-12 else "fail",
                     f"sum={_fmt(wsum)}"))
        cert = check_strong_separation(ifs, args.depth,
                                       word_budget=args.budget)
        if cert.separated:
            detail = f"separated at depth {cert.depth}"
            status = "pass"
        else:
            detail = (f"inconclusive at depth {cert.depth}; "
                      f"overlap witness {cert.overlap}")
            status = "info"
        rows.append(("separation", status, detail))
        rows.append(("sim_dim", "info",
                     _fmt(similarity_dimension(ifs, p))))
        rows.append(("entropy", "info", _fmt(entropy(p))))
    hist = measure_histogram(rm, args.n, extra_depth=args.extra_depth,
                             word_budget=args.budget)
    t_lo, t_up = hist.total_lower(), hist.total_upper()
    ok = (t_lo <= 1.0 + 1e-9) and (t_up >= 1.0 - 1e-9)
    rows.append(("sandwich", "pass" if ok else "fail",
                 f"n={args.n}; lower={_fmt(t_lo)}; upper={_fmt(t_up)}"))
    _emit(args.out, ["check_name", "status", "detail"], rows)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _add_common(sp, levels_default=None):
    sp.add_argument("--ifs", required=True, help="measure document (JSON)")
    if levels_default is not None:
        sp.add_argument("--levels", default=levels_default,
                        help="dyadic level range, e.g. 6..20")
    sp.add_argument("--extra-depth", type=int, default=4)
    sp.add_argument("--guard", type=int, default=4,
                    help="extra levels for convolution factor histograms")
    sp.add_argument("--budget", type=int, default=None,
                    help="word budget override")
    sp.add_argument("-o", "--out", default=None, help="output CSV path")


def _add_ek_params(sp):
    sp.add_argument("--N", type=int, default=30)
    sp.add_argument("--c", type=float, default=0.1)
    sp.add_argument("--t-grid", type=int, default=4096)
    sp.add_argument("--lam", type=float, default=None)
    sp.add_argument("--u", type=float, default=1.0)
    sp.add_argument("--theta", type=float, default=None)
    sp.add_argument("--alpha", type=float, default=None)
    sp.add_argument("--beta", type=float, default=0.0)
    sp.add_argument("--theta1", type=float, default=None)
    sp.add_argument("--theta2", type=float, default=None)
    sp.add_argument("--jobs", type=int, default=_default_jobs())
    sp.add_argument("-o", "--out", default=None)


def _build_parser() -> _Parser:
    parser = _Parser(prog="selfsim",
                     description="self-similar measure exploration")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    sp = sub.add_parser("dim", help="L^q dimension estimate")
    _add_common(sp, levels_default="6..20")
    sp.add_argument("--q", action="append", type=float, default=None)
    sp.set_defaults(func=_cmd_dim)

    sp = sub.add_parser("entropy", help="entropy dimension estimate")
    _add_common(sp, levels_default="6..14")
    sp.set_defaults(func=_cmd_entropy)

    sp = sub.add_parser("fourier", help="transform sampling and decay fit")
    sp.add_argument("--ifs", required=True)
    sp.add_argument("--bands", type=int, required=True)
    sp.add_argument("--xi-max", type=float, default=None)
    sp.add_argument("--samples-per-band", type=int, default=64)
    sp.add_argument("--tol", type=float, default=1e-9)
    sp.add_argument("--band-ratio", type=float, default=2.0)
    sp.add_argument("--xi0", type=float, default=1.0)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("-o", "--out", default=None)
    sp.add_argument("--band-out", default=None)
    sp.set_defaults(func=_cmd_fourier)

    sp = sub.add_parser("project", help="histogram of a projected measure")
    _add_common(sp)
    sp.add_argument("--beta", type=float, required=True)
    sp.add_argument("--n", type=int, default=10)
    sp.set_defaults(func=_cmd_project)

    sp = sub.add_parser("convolve", help="histogram of a convolution")
    _add_common(sp)
    sp.add_argument("--other", default=None)
    sp.add_argument("--u", type=float, default=1.0)
    sp.add_argument("--n", type=int, default=12)
    sp.set_defaults(func=_cmd_convolve)

    sp = sub.add_parser("skipkeep", help="histogram of a digit-split factor")
    _add_common(sp)
    sp.add_argument("--k", type=int, required=True)
    sp.add_argument("--part", choices=("skip", "keep"), default="skip")
    sp.add_argument("--n", type=int, default=10)
    sp.set_defaults(func=_cmd_skipkeep)

    sp = sub.add_parser("ekscan", help="exceptional-parameter badness scan")
    sp.add_argument("kind", choices=("translations", "projections",
                                     "convolutions"))
    _add_ek_params(sp)
    sp.add_argument("--lambda-range", default=None, metavar="LO:HI:STEPS")
    sp.add_argument("--theta-range", default=None, metavar="LO:HI:STEPS")
    sp.add_argument("--theta1-range", default=None, metavar="LO:HI:STEPS")
    sp.add_argument("--u-range", default=None, metavar="LO:HI:STEPS")
    sp.set_defaults(func=_cmd_ekscan)

    sp = sub.add_parser("ekcount", help="admissible sequence counting")
    sp.add_argument("kind", choices=("translations", "convolutions"))
    sp.add_argument("--N", type=int, default=15)
    sp.add_argument("--c", type=float, default=0.1)
    sp.add_argument("--delta", type=float, default=0.0)
    sp.add_argument("--theta", type=float, default=None)
    sp.add_argument("--theta1", type=float, default=None)
    sp.add_argument("-o", "--out", default=None)
    sp.set_defaults(func=_cmd_ekcount)

    sp = sub.add_parser("sweep", help="badness across a parameter grid")
    sp.add_argument("kind", choices=("translations", "projections",
                                     "convolutions"))
    sp.add_argument("--vary", required=True,
                    choices=("lam", "u", "theta", "theta1", "theta2",
                             "alpha", "beta"))
    sp.add_argument("--lo", type=float, required=True)
    sp.add_argument("--hi", type=float, required=True)
    sp.add_argument("--steps", type=int, required=True)
    _add_ek_params(sp)
    sp.set_defaults(func=_cmd_sweep)

    sp = sub.add_parser("check", help="certification and invariant suite")
    sp.add_argument("--ifs", required=True)
    sp.add_argument("--depth", type=int, default=6)
    sp.add_argument("--n", type=int, default=8)
    sp.add_argument("--extra-depth", type=int, default=4)
    sp.add_argument("--budget", type=int, default=None)
    sp.add_argument("-o", "--out", default=None)
    sp.set_defaults(func=_cmd_check)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        args.func(args)
        return 0
    except SystemExit as exc:
        return int(exc.code or 0)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except SelfsimError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
