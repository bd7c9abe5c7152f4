"""Command-line surface: files in, reports out, CI-friendly exit codes.

Exit codes: 0 on success, 2 on validation failures (unreadable or malformed
inputs, violated preconditions), 3 on tolerance/assertion failures (route
disagreement, slopes outside an asserted window, non-shrinking residuals).
"""

from __future__ import annotations

import argparse
import json
import sys

from . import __version__
from .bounds import (
    NonCircularError,
    SingularCovarianceError,
    BoundInputs,
    be_lower_terms,
    be_upper,
    be_upper_circular,
    be_upper_multivariate,
    circularity_check,
    clt_conditions,
    fmt_norms,
)
from .chaos import (
    ChaosVariable,
    ChaosVector,
    DegreeCapError,
    chaos_from_json,
    moment_report,
)
from .ou import (
    GridSpec,
    OUParams,
    rate_sweep,
    sample_numerator,
    verify_denominator_identity,
)
from .sampling import sample_chaos, save_batch
from .space import SpaceError, load_kernel
from .space import kernel_from_json

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_TOLERANCE = 3


def _write(text: str, path: str | None) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")
    else:
        with open(path, "w") as fh:
            fh.write(text)


def _load_chaos(path: str) -> ChaosVariable:
    with open(path) as fh:
        return chaos_from_json(json.load(fh))


def _load_vector(path: str) -> ChaosVector:
    with open(path) as fh:
        doc = json.load(fh)
    try:
        comps = doc["components"]
    except (KeyError, TypeError) as exc:
        raise SpaceError(f"vector file needs a 'components' list: {exc}") from exc
    out = []
    for entry in comps:
        if "kernel" in entry and "p" in entry:
            # bare single-order component given as {"p","q","kernel"}
            out.append(ChaosVariable.from_kernel(kernel_from_json(entry["kernel"])))
        else:
            out.append(chaos_from_json(entry))
    return ChaosVector(out)


# -- subcommands -------------------------------------------------------------------


def cmd_moments(args) -> int:
    rep = moment_report(load_kernel(args.kernel), degree_cap=args.degree_cap)
    _write(json.dumps(rep.to_json(), indent=2), args.output)
    if rep.route_spread() > args.tol:
        print(f"route disagreement {rep.route_spread():.3e} > {args.tol:.1e}", file=sys.stderr)
        return EXIT_TOLERANCE
    return EXIT_OK


def cmd_bound(args) -> int:
    if args.vector is not None:
        rep = be_upper_multivariate(_load_vector(args.vector), circular_tol=args.circular_tol)
        _write(json.dumps(rep.to_json(), indent=2), args.output)
        return EXIT_OK
    kern = load_kernel(args.kernel)
    inputs = BoundInputs.from_kernel(kern)
    doc = {
        "sigma_sq": inputs.sigma_sq,
        "pseudo_re": inputs.a,
        "pseudo_im": inputs.b,
        "lambda1": inputs.lambda1,
        "lambda2": inputs.lambda2,
        "l": inputs.l,
        "be_upper": be_upper(kern, inputs),
        "lower_terms": dict(zip(
            ("abs_third", "abs_third_mixed", "contraction_sum_sq"), be_lower_terms(kern))),
        "lower_terms_note": "lower-bound candidates up to an unspecified constant",
        "fmt_norms": {f"{i},{j}": v for (i, j), v in sorted(fmt_norms(kern).items())},
    }
    try:
        doc["be_upper_circular"] = be_upper_circular(kern, circular_tol=args.circular_tol)
    except NonCircularError:
        doc["be_upper_circular"] = None
    _write(json.dumps(doc, indent=2), args.output)
    return EXIT_OK


def cmd_fmt_check(args) -> int:
    table = fmt_norms(load_kernel(args.kernel))
    if args.format == "csv":
        lines = ["i,j,norm"] + [f"{i},{j},{v!r}" for (i, j), v in sorted(table.items())]
        _write("\n".join(lines) + "\n", args.output)
    else:
        _write(json.dumps({f"{i},{j}": v for (i, j), v in sorted(table.items())}, indent=2),
               args.output)
    return EXIT_OK


def cmd_clt_check(args) -> int:
    rep = clt_conditions(_load_chaos(args.chaos), M=args.truncate)
    _write(json.dumps(rep.to_json(), indent=2), args.output)
    return EXIT_OK


def cmd_circularity(args) -> int:
    rep = circularity_check(_load_vector(args.vector), tol=args.tol)
    _write(json.dumps(rep.to_json(), indent=2), args.output)
    return EXIT_OK if rep.passed else EXIT_TOLERANCE


def cmd_sample(args) -> int:
    if args.kernel is not None:
        F = ChaosVariable.from_kernel(load_kernel(args.kernel))
    else:
        F = _load_chaos(args.chaos)
    batch = sample_chaos(F, args.n, args.seed)
    if args.output is None:
        raise SpaceError("sample needs -o/--output (CSV dump)")
    save_batch(batch, args.output)
    return EXIT_OK


def cmd_ou_rate(args) -> int:
    T_list = [float(x) for x in args.T.split(",")]
    base = OUParams(lam=args.lam, omega=args.omega, T=T_list[0], H=args.hurst)
    table = rate_sweep(base, T_list, dt=args.dt)
    _write(table.to_csv(), args.output)
    if args.check:
        ok = abs(table.slope_gap - args.gap_slope) <= args.slope_tol
        if table.slope_e3_mixed is not None and base.H == 0.5:
            ok = ok and abs(table.slope_e3_mixed - args.mixed_slope) <= args.slope_tol
        if not ok:
            print(
                f"slopes outside window: gap={table.slope_gap:.3f} (target {args.gap_slope}"
                f" +- {args.slope_tol}), e3_mixed={table.slope_e3_mixed}",
                file=sys.stderr,
            )
            return EXIT_TOLERANCE
    return EXIT_OK


def cmd_ou_verify(args) -> int:
    dts = [float(x) for x in args.dt.split(",")]
    params = OUParams(lam=args.lam, omega=args.omega, T=args.T)
    reports = []
    for dt in dts:
        m = int(round(args.T / dt))
        reports.append(verify_denominator_identity(params, GridSpec(m=m), seed=args.seed,
                                                   n_paths=args.paths))
    _write(json.dumps([r.to_json() for r in reports], indent=2), args.output)
    if args.check and len(reports) >= 2:
        means = [r.mean_abs_residual for r in reports]
        if any(b >= a for a, b in zip(means, means[1:])):
            print(f"residuals did not shrink across dt list: {means}", file=sys.stderr)
            return EXIT_TOLERANCE
    return EXIT_OK


def cmd_ou_sample(args) -> int:
    params = OUParams(lam=args.lam, omega=args.omega, T=args.T)
    m = int(round(args.T / args.dt))
    batch = sample_numerator(params, GridSpec(m=m), N=args.n, seed=args.seed)
    if args.output is None:
        raise SpaceError("ou-sample needs -o/--output (CSV dump)")
    save_batch(batch, args.output)
    return EXIT_OK


# -- parser ----------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cwchaos",
        description="Complex Wiener chaos calculus: moments, normal-approximation "
                    "bounds, sampling, and the Ornstein-Uhlenbeck application.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("moments", help="moment report for a kernel file (three gap routes)")
    p.add_argument("kernel")
    p.add_argument("-o", "--output", default=None)
    p.add_argument("--degree-cap", type=int, default=8)
    p.add_argument("--tol", type=float, default=1e-9, help="route agreement tolerance")
    p.set_defaults(func=cmd_moments)

    p = sub.add_parser("bound", help="Berry-Esseen bound report (kernel or vector file)")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--kernel")
    g.add_argument("--vector")
    p.add_argument("-o", "--output", default=None)
    p.add_argument("--circular-tol", type=float, default=1e-8)
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("fmt-check", help="contraction-norm table of a kernel")
    p.add_argument("kernel")
    p.add_argument("-o", "--output", default=None)
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.set_defaults(func=cmd_fmt_check)

    p = sub.add_parser("clt-check", help="chaotic CLT condition tables for a chaos file")
    p.add_argument("chaos")
    p.add_argument("-o", "--output", default=None)
    p.add_argument("--truncate", type=int, default=8, help="tail-mass truncation order")
    p.set_defaults(func=cmd_clt_check)

    p = sub.add_parser("circularity", help="pseudo-covariance check of a vector file")
    p.add_argument("vector")
    p.add_argument("-o", "--output", default=None)
    p.add_argument("--tol", type=float, default=1e-8)
    p.set_defaults(func=cmd_circularity)

    p = sub.add_parser("sample", help="Monte Carlo batch of a kernel/chaos file (CSV)")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--kernel")
    g.add_argument("--chaos")
    p.add_argument("-N", "--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output", required=False)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("ou-rate", help="horizon sweep of the decay-rate quantities (CSV)")
    p.add_argument("--lambda", dest="lam", type=float, default=1.0)
    p.add_argument("--omega", type=float, default=0.0)
    p.add_argument("--hurst", type=float, default=0.5)
    p.add_argument("--T", default="50,100,200,400,800", help="comma-separated horizons")
    p.add_argument("--dt", type=float, default=0.05, help="grid spacing (fixed across T)")
    p.add_argument("-o", "--output", default=None)
    p.add_argument("--assert", dest="check", action="store_true",
                   help="exit 3 unless slopes fall in the target windows")
    p.add_argument("--gap-slope", type=float, default=-1.0)
    p.add_argument("--mixed-slope", type=float, default=-0.5)
    p.add_argument("--slope-tol", type=float, default=0.1)
    p.set_defaults(func=cmd_ou_rate)

    p = sub.add_parser("ou-verify", help="pathwise check of the |Z|^2 time-average identity")
    p.add_argument("--lambda", dest="lam", type=float, default=1.0)
    p.add_argument("--omega", type=float, default=0.0)
    p.add_argument("--T", type=float, default=5.0)
    p.add_argument("--dt", default="0.1,0.01", help="comma-separated spacings, coarse to fine")
    p.add_argument("--paths", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output", default=None)
    p.add_argument("--assert", dest="check", action="store_true",
                   help="exit 3 unless residuals shrink along the dt list")
    p.set_defaults(func=cmd_ou_verify)

    p = sub.add_parser("ou-sample", help="Monte Carlo batch of the normalized numerator statistic")
    p.add_argument("--lambda", dest="lam", type=float, default=1.0)
    p.add_argument("--omega", type=float, default=0.0)
    p.add_argument("--T", type=float, default=10.0)
    p.add_argument("--dt", type=float, default=0.05)
    p.add_argument("-N", "--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output", required=False)
    p.set_defaults(func=cmd_ou_sample)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (SpaceError, DegreeCapError, NonCircularError, SingularCovarianceError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (OSError, json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
