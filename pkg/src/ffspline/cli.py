"""Command-line front end.

Exit codes: 0 when every verdict passes, 2 when some verdict fails, 1 on bad
input or an exceeded budget.
"""
from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

import numpy as np

from . import io as fio
from .budget import EXHAUSTIVE_BUDGET
from .cubes import SubsetOracle, bad_fraction
from .errors import BudgetExceeded, FFSplineError, SamplingError
from .field import Space, parse_field_spec
from .gowers import ComplexFun, gowers_exact, gowers_mc, uniformity
from .linforms import almost_cube_system, counting_check, cs_complexity, cs_complexity_at, cube_system
from .polyfun import GroupFun, family_rank_bounds, format_poly, parse_poly, rank_bounds
from .report import RunReport, emit
from .spline import (DEFAULT_VOTES, ExtensionAborted, corrupt, default_flat_dim, extend_to_V,
                     noise_experiment, spline_on_X, subspace_poly_test)
from .variety import (VarietySpec, lines_through, projective_zero_density, solution_count_anchored,
                      variety_members)

EXIT_PASS, EXIT_INPUT, EXIT_FAIL = 0, 1, 2


class InputError(FFSplineError):
    pass


# -- shared argument groups -------------------------------------------------------------

def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--field", help="field spec such as 3 or 2^3/1011 (default 2)")
    p.add_argument("--dim", type=int, help="dimension n of V")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--budget", type=int, default=None, help=f"enumeration budget (default {EXHAUSTIVE_BUDGET})")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--out", help="write the report here instead of stdout")
    p.add_argument("--no-clock", action="store_true", help="omit the wall-clock field")


def _domain(p):
    p.add_argument("--variety", help="file with one equation per line")
    p.add_argument("--eq", action="append", default=[], help="inline equation 'poly [= t]', repeatable")


def _function(p, noise=True):
    p.add_argument("--fun", help="function table file")
    p.add_argument("--poly", help="polynomial read in Z/p (prime fields)")
    if noise:
        p.add_argument("--noise", type=float, default=0.0, help="corrupt this fraction of X")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ffspline", description="Cube tests, splining and friends over finite fields.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("cube-test", help="fraction of cubes in X where f_m != 0")
    _common(p); _domain(p); _function(p)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--samples", type=int, default=10_000)
    p.add_argument("--mode", choices=("auto", "exhaustive", "sampled"), default="auto")
    p.add_argument("--tol", type=float, default=0.0, help="pass when the bad fraction is <= tol")

    for name, extend in (("correct", False), ("extend", True)):
        p = sub.add_parser(name, help="plurality-vote correction" + (" extended to V" if extend else " on X"))
        _common(p); _domain(p); _function(p)
        p.add_argument("--m", type=int, required=True)
        p.add_argument("--votes", type=int, default=DEFAULT_VOTES)
        p.add_argument("--samples", type=int, default=20_000, help="cube samples for sampled residuals")
        p.add_argument("--table-out", help="write the corrected function table here")
        if not extend:
            p.add_argument("--extend", action="store_true")
        p.set_defaults(extend=extend)

    p = sub.add_parser("gowers", help="U_m norm of e(f) or e_q(P)")
    _common(p); _function(p, noise=False)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--exact", action="store_true", help="refuse to fall back to sampling")
    p.add_argument("--max", type=float, help="pass when the norm is <= this")

    p = sub.add_parser("uniformity", help="eta = ||1_X - delta||_{U_m}")
    _common(p); _domain(p)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--epsilon", type=float, help="pass when eta < epsilon")

    p = sub.add_parser("csc", help="Cauchy-Schwarz complexity of a form system")
    _common(p)
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--system", help="form system file")
    g.add_argument("--cube", type=int, metavar="M", help="the M-cube system")
    g.add_argument("--almost-cube", type=int, metavar="M", help="the M almost-cube system")
    p.add_argument("--at", type=int, help="only this form index (0-based)")
    p.add_argument("--m", type=int, help="pass when the complexity is <= m")

    p = sub.add_parser("count", help="pattern count against delta^|I| and the uniformity bound")
    _common(p); _domain(p)
    g = p.add_mutually_exclusive_group()
    g.add_argument("--system", help="form system file")
    g.add_argument("--cube", type=int, metavar="M", default=None)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--density", type=float, help="random subset of V with this density instead of a variety")

    p = sub.add_parser("rank", help="rank bounds of a polynomial or family")
    _common(p)
    p.add_argument("--poly", action="append", required=True, help="repeat for a family")
    p.add_argument("--d", type=int, help="degree bound d (default: the degree)")
    p.add_argument("--min-rank", type=int, help="pass when the certified lower bound reaches this")

    p = sub.add_parser("lines", help="lines, projective zeros and anchored counts of a variety")
    _common(p); _domain(p)
    p.add_argument("--point", default=None, help="base point, e.g. 0,1,2 (default origin)")
    p.add_argument("--anchor", action="append", default=[], help="anchor point, repeatable")

    p = sub.add_parser("subspace", help="degree of f on affine subspaces inside X")
    _common(p); _domain(p); _function(p)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--l", type=int, help="flat dimension (default ceil(m/(q-q/p)))")
    p.add_argument("--samples", type=int, default=200)
    p.add_argument("--exhaustive", action="store_true")

    p = sub.add_parser("sweep", help="planted-noise recovery sweep")
    _common(p); _domain(p)
    p.add_argument("--poly", required=True, help="planted polynomial of degree < m")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--rho", default="0,0.02,0.05,0.1", help="comma separated noise rates ('' for none)")
    p.add_argument("--votes", type=int, default=DEFAULT_VOTES)
    p.add_argument("--extend", action="store_true")
    return ap


# -- input assembly --------------------------------------------------------------------

def _space(args, table: GroupFun | None = None) -> Space:
    if table is not None:
        S = table.space
        if args.field is not None and parse_field_spec(args.field) != S.field:
            raise InputError("--field disagrees with the function table")
        if args.dim is not None and args.dim != S.n:
            raise InputError("--dim disagrees with the function table")
        return S
    if args.dim is None:
        raise InputError("--dim is required")
    return Space(parse_field_spec(args.field or "2"), args.dim)


def _variety(args, S: Space) -> tuple[VarietySpec | None, SubsetOracle]:
    text = ""
    if getattr(args, "variety", None):
        text += fio.read_text(args.variety)
    for eq in getattr(args, "eq", []) or []:
        text += eq + "\n"
    if not text.strip():
        return None, SubsetOracle.full(S)
    spec = VarietySpec.parse(S, text)
    return spec, variety_members(spec, args.budget)


def _load_function(args):
    """(space, spec, X, f, corrupted points)."""
    table = fio.read_table(args.fun) if args.fun else None
    if table is None and not args.poly:
        raise InputError("give --fun or --poly")
    if table is not None and args.poly:
        raise InputError("give only one of --fun and --poly")
    S = _space(args, table)
    spec, X = _variety(args, S)
    if X.size == 0:
        raise InputError("X is empty")
    if table is not None:
        f = table
        if np.any(X.mask & ~f.mask):
            raise InputError("the function table does not cover X")
    else:
        f = GroupFun.from_poly(parse_poly(S, args.poly), mask=X.mask)
    pts = np.empty(0, dtype=np.int64)
    rho = getattr(args, "noise", 0.0)
    if rho:
        if not 0 <= rho <= 1:
            raise InputError("--noise must lie in [0, 1]")
        f, pts = corrupt(f.restrict(X.mask), X, rho, args.seed)
    return S, spec, X, f, pts


def _config(args) -> dict:
    return {k: v for k, v in sorted(vars(args).items()) if k not in ("out", "format", "no_clock")}


# -- commands --------------------------------------------------------------------------

def cmd_cube_test(args, rep: RunReport):
    S, spec, X, f, pts = _load_function(args)
    r = bad_fraction(f, X, args.m, args.samples, args.seed, args.budget, args.mode, args.workers)
    rep.results.update(cube_test=r.as_dict(), corrupted=len(pts), domain_size=X.size)
    rep.verdict("bad cube fraction", f"epsilon <= {args.tol}", r.epsilon, r.epsilon <= args.tol)


def cmd_correct(args, rep: RunReport):
    S, spec, X, f, pts = _load_function(args)
    run = extend_to_V if args.extend else spline_on_X
    try:
        r = run(f, X, args.m, args.votes, args.seed, args.workers, args.budget, args.samples)
    except ExtensionAborted as err:
        rep.results.update(aborted=True, problems=err.problems)
        rep.verdict("completion sampling", "every anchor outside X gets a plurality", len(err.problems), False)
        return
    rep.results.update(spline=r.as_dict(), corrupted=len(pts))
    rep.verdict("residual", "h_m = 0 on every scanned cube", r.residual.epsilon, r.residual.bad == 0)
    if r.exact_extension is not None:
        rep.verdict("exact extension", "h|X = f and residual 0 for a clean input", r.exact_extension,
                    r.exact_extension)
    if args.table_out:
        fio.write_table(args.table_out, r.h)


def _complex_function(args):
    if args.fun:
        f = fio.read_table(args.fun)
        S = _space(args, f)
        if not f.is_total:
            raise InputError("the Gowers norm needs a function on all of V")
        return S, ComplexFun(S, np.exp(2j * np.pi * f.values / f.N))
    if not args.poly:
        raise InputError("give --fun or --poly")
    S = _space(args)
    return S, ComplexFun.phase(parse_poly(S, args.poly))


def cmd_gowers(args, rep: RunReport):
    S, g = _complex_function(args)
    budget = EXHAUSTIVE_BUDGET if args.budget is None else args.budget
    if S.size**args.m <= budget:
        r = gowers_exact(g, args.m, args.budget, args.workers)
    elif args.exact:
        raise BudgetExceeded("exact Gowers norm", S.size**args.m, budget)
    else:
        r = gowers_mc(g, args.m, args.samples, args.seed)
    rep.results["gowers"] = r.as_dict()
    if args.max is not None:
        rep.verdict("Gowers norm", f"||g||_U{args.m} <= {args.max}", r.value, r.value <= args.max)


def cmd_uniformity(args, rep: RunReport):
    S = _space(args)
    spec, X = _variety(args, S)
    r = uniformity(X, args.m, args.epsilon, args.budget, args.samples, args.seed, args.workers)
    rep.results["uniformity"] = r.as_dict()
    if args.epsilon is not None:
        rep.verdict("uniformity", f"eta < {args.epsilon}", r.eta, r.uniform)


def _system(args):
    if args.system:
        return fio.read_system(args.system)
    if getattr(args, "almost_cube", None):
        return almost_cube_system(args.almost_cube)
    return cube_system(args.cube if args.cube else 2)


def cmd_csc(args, rep: RunReport):
    sysm = _system(args)
    p = parse_field_spec(args.field).p if args.field else None
    if args.at is not None:
        if not 0 <= args.at < len(sysm):
            raise InputError(f"--at must lie in [0, {len(sysm)})")
        c = cs_complexity_at(sysm, args.at, p)
        value = c.d
        rep.results["complexity_at"] = {"j": c.j, "d": c.d, "nodes": c.nodes,
                                        "certificate": c.certificate.as_dict() if c.certificate else None}
    else:
        r = cs_complexity(sysm, p)
        value = r.value
        rep.results["complexity"] = r.as_dict()
    rep.results["system"] = sysm.format().splitlines()
    if args.m is not None:
        ok = value <= args.m
        shown = "inf" if value == float("inf") else int(value)
        rep.results["summary"] = f"complexity {shown} {'<=' if ok else '>'} m={args.m}: {'pass' if ok else 'fail'}"
        rep.verdict("complexity", f"complexity <= {args.m}", value, ok)


def cmd_count(args, rep: RunReport):
    S = _space(args)
    if args.density is not None:
        if not 0 <= args.density <= 1:
            raise InputError("--density must lie in [0, 1]")
        from .sampling import SUBSPACE, rng_for

        X = SubsetOracle(S, rng_for(args.seed, SUBSPACE, 99).random(S.size) < args.density)
    else:
        _, X = _variety(args, S)
    sysm = _system(args)
    r = counting_check(sysm, X, args.m, budget=args.budget, workers=args.workers)
    rep.results["count"] = r.as_dict()
    rep.verdict("counting", f"|count/|V|^r - delta^|I|| <= {len(sysm)} eta + 1e-9 when complexity <= m",
                r.verdict, r.passed)


def cmd_rank(args, rep: RunReport):
    S = _space(args)
    polys = [parse_poly(S, t) for t in args.poly]
    if len(polys) == 1:
        r = rank_bounds(polys[0], args.d, args.budget)
        lo, up = r.lower, r.upper
        rep.results["rank"] = {
            "poly": format_poly(polys[0]), "rank": r.rank, "lower": lo, "upper": up, "exact": r.exact,
            "witness": [[format_poly(Q), format_poly(R)] for Q, R in r.witness],
        }
    else:
        lo, up = family_rank_bounds(polys, args.budget)
        rep.results["family_rank"] = {"polys": [format_poly(P) for P in polys], "lower": lo, "upper": up}
    if args.min_rank is not None:
        rep.verdict("rank", f"rank >= {args.min_rank}", lo, lo >= args.min_rank)


def _point(S: Space, text: str | None) -> int:
    if text is None:
        return 0
    return S.parse_point(text if text.startswith("(") else f"({text})")


def cmd_lines(args, rep: RunReport):
    S = _space(args)
    spec, X = _variety(args, S)
    if spec is None:
        raise InputError("give --variety or --eq")
    x = _point(S, args.point)
    r = lines_through(spec, x, args.budget)
    rep.results["lines"] = {**r.as_dict(), "x": S.format_point(x)}
    rep.verdict("lines", f"count >= q^(n - {r.C})", r.count, r.passed)
    if spec.homogeneous:
        pz = projective_zero_density(spec, args.budget)
        rep.results["projective"] = pz.as_dict()
        rep.verdict("projective zeros", "zeros >= |P(V)| / (2 q^(D+1))", pz.projective_zeros, pz.passed)
    if args.anchor:
        a = solution_count_anchored(spec, [_point(S, t) for t in args.anchor], args.budget)
        rep.results["anchored"] = {**a.as_dict(), "anchors": [S.format_point(t) for t in a.anchors]}
        if a.applicable:
            rep.verdict("anchored count", f"count >= 1 + (q^n - 1) / (2 q^{a.exponent})", a.count, a.passed)


def cmd_subspace(args, rep: RunReport):
    S, spec, X, f, pts = _load_function(args)
    r = subspace_poly_test(f, X, args.m, args.l, args.samples, args.seed, args.exhaustive, budget=args.budget)
    rep.results["subspace"] = {**r.as_dict(), "default_l": default_flat_dim(S.q, S.field.p, args.m)}
    rep.verdict("subspace degree", f"reduced degree < {args.m} on every tested flat", r.failing, r.failing == 0)


def cmd_sweep(args, rep: RunReport):
    S = _space(args)
    spec, X = _variety(args, S)
    try:
        rhos = [float(t) for t in args.rho.split(",") if t.strip()]
    except ValueError as exc:
        raise InputError(f"bad --rho list: {exc}") from exc
    g = parse_poly(S, args.poly)
    rows = noise_experiment(g, X, args.m, rhos, args.votes, args.seed, args.extend, args.workers, args.budget)
    rep.rows = [r.__dict__ for r in rows]


COMMANDS = {
    "cube-test": cmd_cube_test,
    "correct": cmd_correct,
    "extend": cmd_correct,
    "gowers": cmd_gowers,
    "uniformity": cmd_uniformity,
    "csc": cmd_csc,
    "count": cmd_count,
    "rank": cmd_rank,
    "lines": cmd_lines,
    "subspace": cmd_subspace,
    "sweep": cmd_sweep,
}


def run(args) -> RunReport:
    rep = RunReport(args.command, _config(args))
    t0 = time.perf_counter()
    COMMANDS[args.command](args, rep)
    rep.wall_clock = round(time.perf_counter() - t0, 6)
    return rep


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.format == "csv" and args.command != "sweep":
            raise InputError("CSV output is only available for sweep")
        rep = run(args)
    except (FFSplineError, ValueError, OSError, IndexError) as err:
        if isinstance(err, SamplingError) and not isinstance(err, ExtensionAborted):
            kind = "sampling failure"
        elif isinstance(err, BudgetExceeded):
            kind = "budget exceeded"
        else:
            kind = "input error"
        print(f"ffspline: {kind}: {err}", file=sys.stderr)
        return EXIT_INPUT
    data = emit(rep, args.format, clock=not args.no_clock)
    if args.out:
        Path(args.out).write_bytes(data)
    else:
        sys.stdout.write(data.decode())
    return EXIT_PASS if rep.passed else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
