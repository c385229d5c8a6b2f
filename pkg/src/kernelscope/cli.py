"""Command-line front door: one subcommand per operation.

Every output embeds the tool version and the full config for exact
reproduction.  CSV output is byte-identical across runs of the same
config (wall time is reported in JSON output and on stderr only, never
inside CSV).  Exit codes: 0 success, 1 domain/validation error, 2
capacity/precision error.
"""

from __future__ import annotations

import argparse
import io
import json
import sys
import time

from . import __version__
from . import automaton, christol, dirichlet, kernel, seqgen, zeta
from .errors import (
    CapacityError,
    ContourError,
    DomainError,
    ExhaustionError,
    KernelscopeError,
    PrecisionError,
    RangeError,
    VerdictError,
)

_EXIT_DOMAIN = 1
_EXIT_CAPACITY = 2


def _config_string(args: argparse.Namespace) -> str:
    cfg = {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "out")}
    return json.dumps(cfg, default=str, sort_keys=True)


def _emit(args, payload_json, payload_csv, elapsed: float) -> None:
    """payload_json: dict; payload_csv: callable(fh) writing rows."""
    fmt = getattr(args, "format", "json")
    if fmt == "json":
        doc = {
            "tool": "kernelscope",
            "version": __version__,
            "config": json.loads(_config_string(args)),
            "wall_time_s": round(elapsed, 6),
            "result": payload_json,
        }
        text = json.dumps(doc, indent=2, default=str) + "\n"
    else:
        buf = io.StringIO()
        buf.write(f"# tool=kernelscope version={__version__}\n")
        buf.write(f"# config={_config_string(args)}\n")
        payload_csv(buf)
        text = buf.getvalue()
    out = getattr(args, "out", None)
    if out:
        with open(out, "w") as fh:
            fh.write(text)
        print(f"wrote {out} ({elapsed:.3f}s)", file=sys.stderr)
    else:
        sys.stdout.write(text)


def _parse_complex_list(raw: str) -> list[complex]:
    return [complex(part) for part in raw.split(",") if part]


def _function_id(args) -> seqgen.FunctionId:
    return seqgen.FunctionId(args.fn, args.fn_param)


def _load_table(args) -> seqgen.ValueTable:
    if getattr(args, "fn", None) is None or getattr(args, "N", None) is None:
        raise DomainError("this command needs --fn and --N")
    fid = _function_id(args)
    ft = seqgen.build_factor_table(max(2, args.N))
    t = seqgen.generate(fid, args.N, ft)
    if getattr(args, "mod", None):
        t = seqgen.reduce_mod(t, args.mod)
    return t


def _load_rep(args) -> automaton.LinearRepresentation:
    if getattr(args, "rep", None):
        with open(args.rep) as fh:
            return automaton.rep_from_json(json.load(fh))
    if getattr(args, "fn", None) is None or getattr(args, "N", None) is None:
        raise DomainError("need --rep FILE, or --fn/--N (plus --k/--L/--M) to build")
    t = _load_table(args)
    return automaton.build_representation(t, args.k, args.L, args.M)


def _add_function_args(p, need_n=True):
    p.add_argument("--fn", required=True, choices=sorted(seqgen.ALL_TAGS))
    p.add_argument("--fn-param", type=int, default=None,
                   help="k of tau_k, m of sigma_m / q_m")
    p.add_argument("--mod", type=int, default=None,
                   help="reduce the table mod this value")
    if need_n:
        p.add_argument("--N", type=int, required=True, help="table bound")


def _add_output_args(p, default_fmt="json"):
    p.add_argument("--out", default=None, help="output path (default stdout)")
    p.add_argument("--format", choices=("csv", "json"), default=default_fmt)


def _add_rep_source(p):
    p.add_argument("--rep", default=None, help="representation JSON file")
    p.add_argument("--fn", choices=sorted(seqgen.ALL_TAGS), default=None)
    p.add_argument("--fn-param", type=int, default=None)
    p.add_argument("--mod", type=int, default=None)
    p.add_argument("--N", type=int, default=None)
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--L", type=int, default=6)
    p.add_argument("--M", type=int, default=64)


# --- subcommand bodies -------------------------------------------------------


def _cmd_generate(args):
    t = _load_table(args)
    return t.to_json(), t.write_csv


def _cmd_kernel_profile(args):
    t = _load_table(args)
    prof = kernel.kernel_profile(t, args.k, args.L, args.M)
    return prof.to_json(), prof.write_csv


def _cmd_rank_profile(args):
    t = _load_table(args)
    prof = kernel.rank_profile(t, args.k, args.L, args.M)
    return prof.to_json(), prof.write_csv


def _cmd_density(args):
    t = _load_table(args)
    lengths = [int(x) for x in args.lengths.split(",") if x]
    ests = kernel.value_density(t, args.value, lengths)

    def to_csv(fh):
        import csv as _csv

        w = _csv.writer(fh, lineterminator="\n")
        w.writerow(["X", "count", "density", "approx_num", "approx_den", "residual"])
        for e in ests:
            w.writerow([e.X, e.count, repr(e.density), e.approx.numerator,
                        e.approx.denominator, repr(e.residual)])

    return [e.to_json() for e in ests], to_csv


def _cmd_build_rep(args):
    t = _load_table(args)
    rep = automaton.build_representation(t, args.k, args.L, args.M)
    return rep.to_json(), None


def _cmd_eval_rep(args):
    rep = _load_rep(args)
    val = automaton.evaluate(rep, args.n)
    return {"n": args.n, "value": val}, None


def _cmd_pole_lattice(args):
    rep = _load_rep(args)
    lat = automaton.pole_lattice(rep, args.m_max, args.l_max)
    return lat.to_json(), lat.write_csv


def _cmd_dirichlet_eval(args):
    s = complex(args.s)
    if args.method == "direct":
        t = _load_table(args)
        res = dirichlet.direct_sum(t, s, args.N_terms or t.N)
    elif args.method == "recursion":
        rep = _load_rep(args)
        res = dirichlet.continue_via_recursion(
            rep, s, levels=args.levels, m_max=args.m_max
        )
    else:
        if args.id is None:
            raise DomainError("--method zeta-quotient needs --id")
        ident = dirichlet.IdentityId(args.id, args.id_param)
        res = dirichlet.zeta_quotient_eval(ident, s)
    return res.to_json(), None


def _cmd_verify_identity(args):
    ident = dirichlet.IdentityId(args.id, args.id_param)
    fid = ident.function_id()
    ft = seqgen.build_factor_table(args.N)
    t = seqgen.generate(fid, args.N, ft)
    samples = _parse_complex_list(args.s)
    report = dirichlet.verify_identity(ident, t, samples, args.N)
    return report.to_json(), None


def _cmd_pole_scan(args):
    rep = _load_rep(args)
    res = dirichlet.pole_scan(
        rep, args.a, args.b, args.T, args.step,
        levels=args.levels, threads=args.threads,
    )
    return res.to_json(), res.write_csv


def _cmd_singularities(args):
    points = dirichlet.landau_walfisz_singularities(args.n_max)

    def to_csv(fh):
        import csv as _csv

        w = _csv.writer(fh, lineterminator="\n")
        w.writerow(["numerator", "denominator", "value"])
        for f in points:
            w.writerow([f.numerator, f.denominator, repr(float(f))])

    return (
        {"count": len(points),
         "points": [{"num": f.numerator, "den": f.denominator} for f in points]},
        to_csv,
    )


def _cmd_zeta(args):
    res = zeta.zeta_em(complex(args.re, args.im), args.tol)
    return {
        "s": [args.re, args.im],
        "value": [res.value.real, res.value.imag],
        "terms_used": res.terms_used,
        "bernoulli_order": res.bernoulli_order,
        "error_estimate": res.error_estimate,
    }, None


def _cmd_zeros(args):
    zs = zeta.critical_line_zeros(args.T)
    return (
        [{"index": i, "ordinate": z.ordinate} for i, z in enumerate(zs, start=1)],
        lambda fh: zeta.zeros_to_csv(zs, fh),
    )


def _cmd_zero_count(args):
    report = zeta.zero_count_report(args.T)
    return {
        "T": args.T,
        "N": report.winding_count,
        "sign_change_count": report.sign_change_count,
        "agree": report.agree,
    }, None


def _cmd_tlogt(args):
    Ts = [float(x) for x in args.T_list.split(",") if x]
    rows = zeta.tlogt_ratio_table(Ts)
    return (
        [{"T": r.T, "N": r.N, "ratio_TlogT": r.ratio} for r in rows],
        lambda fh: zeta.ratio_table_to_csv(rows, fh),
    )


def _cmd_christol_orbit(args):
    t = _load_table(args)
    series = christol.series_from_table(t, args.p, min(args.N + 1, t.N + 1))
    report = christol.orbit_explore(series, args.budget)
    verdict = christol.algebraicity_verdict(report)
    return {"orbit": report.to_json(), "verdict": verdict.to_json()}, None


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="kernelscope",
        description=__doc__,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="tabulate a function")
    _add_function_args(p)
    _add_output_args(p, default_fmt="csv")
    p.set_defaults(func=_cmd_generate)

    for name, fn in (("kernel-profile", _cmd_kernel_profile),
                     ("rank-profile", _cmd_rank_profile)):
        p = sub.add_parser(name, help=f"{name.replace('-', ' ')} of a sequence")
        _add_function_args(p)
        p.add_argument("--k", type=int, required=True)
        p.add_argument("--L", type=int, required=True)
        p.add_argument("--M", type=int, required=True)
        _add_output_args(p)
        p.set_defaults(func=fn)

    p = sub.add_parser("density", help="value occurrence densities")
    _add_function_args(p)
    p.add_argument("--value", type=int, required=True)
    p.add_argument("--lengths", required=True, help="comma list of prefix lengths")
    _add_output_args(p)
    p.set_defaults(func=_cmd_density)

    p = sub.add_parser("build-rep", help="build a linear representation")
    _add_function_args(p)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--L", type=int, required=True)
    p.add_argument("--M", type=int, required=True)
    _add_output_args(p)
    p.set_defaults(func=_cmd_build_rep)

    p = sub.add_parser("eval-rep", help="evaluate a representation at n")
    _add_rep_source(p)
    p.add_argument("--n", type=int, required=True)
    _add_output_args(p)
    p.set_defaults(func=_cmd_eval_rep)

    p = sub.add_parser("pole-lattice", help="candidate pole lattice")
    _add_rep_source(p)
    p.add_argument("--m-max", type=int, default=3)
    p.add_argument("--l-max", type=int, default=3)
    _add_output_args(p)
    p.set_defaults(func=_cmd_pole_lattice)

    p = sub.add_parser("dirichlet-eval", help="evaluate a Dirichlet series")
    p.add_argument("--method", choices=("direct", "recursion", "zeta-quotient"),
                   required=True)
    p.add_argument("--s", required=True, help="complex point, e.g. 2 or 2+1j")
    p.add_argument("--id", choices=sorted(dirichlet.IDENTITY_TAGS), default=None)
    p.add_argument("--id-param", type=int, default=None)
    p.add_argument("--N-terms", type=int, default=None)
    p.add_argument("--levels", type=int, default=None)
    p.add_argument("--m-max", type=int, default=200)
    _add_rep_source(p)
    _add_output_args(p)
    p.set_defaults(func=_cmd_dirichlet_eval)

    p = sub.add_parser("verify-identity", help="truncated sum vs closed form")
    p.add_argument("--id", choices=sorted(dirichlet.IDENTITY_TAGS), required=True)
    p.add_argument("--id-param", type=int, default=None)
    p.add_argument("--s", required=True, help="comma list of complex points")
    p.add_argument("--N", type=int, required=True)
    _add_output_args(p)
    p.set_defaults(func=_cmd_verify_identity)

    p = sub.add_parser("pole-scan", help="grid scan for pole candidates")
    _add_rep_source(p)
    p.add_argument("--a", type=float, required=True)
    p.add_argument("--b", type=float, required=True)
    p.add_argument("--T", type=float, required=True)
    p.add_argument("--step", type=float, default=0.05)
    p.add_argument("--levels", type=int, default=None)
    p.add_argument("--threads", type=int, default=1)
    _add_output_args(p)
    p.set_defaults(func=_cmd_pole_scan)

    p = sub.add_parser("singularities",
                       help="real singular points 1/n of the prime zeta function")
    p.add_argument("--n-max", type=int, required=True)
    _add_output_args(p)
    p.set_defaults(func=_cmd_singularities)

    p = sub.add_parser("zeta", help="evaluate zeta at one point")
    p.add_argument("--re", type=float, required=True)
    p.add_argument("--im", type=float, default=0.0)
    p.add_argument("--tol", type=float, default=1e-12)
    _add_output_args(p)
    p.set_defaults(func=_cmd_zeta)

    p = sub.add_parser("zeros", help="critical-line zeros up to height T")
    p.add_argument("--T", type=float, required=True)
    _add_output_args(p, default_fmt="csv")
    p.set_defaults(func=_cmd_zeros)

    p = sub.add_parser("zero-count", help="N(T) by the argument principle")
    p.add_argument("--T", type=float, required=True)
    _add_output_args(p)
    p.set_defaults(func=_cmd_zero_count)

    p = sub.add_parser("tlogt", help="N(T)/(T log10 T) growth table")
    p.add_argument("--T-list", required=True, help="comma list of heights")
    _add_output_args(p, default_fmt="csv")
    p.set_defaults(func=_cmd_tlogt)

    p = sub.add_parser("christol-orbit", help="Cartier section orbit over F_p")
    _add_function_args(p)
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--budget", type=int, default=50)
    _add_output_args(p)
    p.set_defaults(func=_cmd_christol_orbit)

    return ap


def run(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage problems; the contract here is 1
        return 0 if exc.code in (0, None) else _EXIT_DOMAIN
    start = time.perf_counter()
    try:
        payload_json, payload_csv = args.func(args)
    except (CapacityError, PrecisionError, ContourError, ExhaustionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _EXIT_CAPACITY
    except (DomainError, RangeError, VerdictError, KernelscopeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _EXIT_DOMAIN
    elapsed = time.perf_counter() - start
    if getattr(args, "format", "json") == "csv" and payload_csv is None:
        print("error: this command has no CSV form; use --format json",
              file=sys.stderr)
        return _EXIT_DOMAIN
    _emit(args, payload_json, payload_csv, elapsed)
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
