"""Self-correction by plurality vote over cube completions.

For an anchor a and directions v with every vertex a + w.v (w != 0) in X, the
completion vote is

    G_a(v) = sum_{w != 0} (-1)^(|w|+1) f(a + w.v),

the value that f_m(a | v) = 0 forces on f(a).  This is minus the almost-cube
sum f'_m, so a good cube votes for f(a).  h(a) is the plurality of T sampled
votes.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from typing import Sequence

import numpy as np

from . import kernels
from .budget import check_budget
from .cubes import AlmostCube, BadFractionReport, SubsetOracle, alt_sum_prime, bad_fraction, sample_completions
from .errors import DomainError, SamplingError, SubspaceSearchError
from .field import Space
from .polyfun import GroupFun, PolyFun, eval_table, interpolate, reduced_degree
from .sampling import NOISE, SUBSPACE, parallel_map, rng_for, split_range

VOTE_CONVENTION = (
    "G_a(v) = sum over nonzero w of (-1)^(|w|+1) f(a + w.v) = -f'_m(a|v); "
    "a cube with f_m = 0 votes for f(a)"
)
DEFAULT_VOTES = 200


class ExtensionAborted(SamplingError):
    """Some anchor outside X received no usable vote."""

    def __init__(self, problems: list[dict]):
        self.problems = problems
        first = problems[0]
        super().__init__(
            f"extension aborted at {len(problems)} anchor(s) outside X, first {first['point']}: {first['reason']}",
            first.get("attempts", 0),
            first.get("accepted", 0),
        )


@dataclass
class VoteTally:
    anchor: int
    T: int
    tally: dict  # value -> count
    winner: int | None  # None on a tie or with no votes
    margin: float  # (top - second) / T
    failures: int  # T - accepted draws
    attempts: int = 0
    error: str | None = None

    @property
    def tie(self) -> bool:
        return self.winner is None and bool(self.tally)

    @property
    def unanimous(self) -> bool:
        return len(self.tally) == 1 and self.failures == 0

    def as_dict(self) -> dict:
        return {
            "anchor": self.anchor,
            "T": self.T,
            "tally": {str(k): v for k, v in sorted(self.tally.items())},
            "winner": self.winner,
            "margin": self.margin,
            "failures": self.failures,
            "attempts": self.attempts,
            "error": self.error,
        }


def completion_vote(f: GroupFun, a: int, vs: Sequence[int]) -> int:
    return (-alt_sum_prime(f, AlmostCube(int(a), tuple(int(v) for v in vs)))) % f.N


def _tally(anchor: int, votes: np.ndarray, T: int, attempts: int) -> VoteTally:
    vals, counts = np.unique(votes, return_counts=True)
    order = np.lexsort((vals, -counts))
    vals, counts = vals[order], counts[order]
    tally = {int(v): int(c) for v, c in zip(vals, counts)}
    top = int(counts[0]) if counts.size else 0
    second = int(counts[1]) if counts.size > 1 else 0
    winner = int(vals[0]) if counts.size and top > second else None
    return VoteTally(int(anchor), T, tally, winner, (top - second) / T, T - int(votes.shape[0]), attempts)


def correct_at(f: GroupFun, X: SubsetOracle, m: int, a: int, T: int = DEFAULT_VOTES, seed: int = 0,
               max_attempts: int | None = None) -> VoteTally:
    """Plurality of T completion votes at a.  Raises SamplingError when no
    completion of a inside X is found within the rejection budget."""
    if np.any(X.mask & ~f.mask):
        raise DomainError("f is not defined on all of X")
    vs, stats = sample_completions(a, X, m, T, seed, strict=False, max_attempts=max_attempts)
    anchors = np.full(vs.shape[0], int(a), dtype=np.int64)
    inside, rest = kernels.almost_cube_eval(X.mask, f.values, f.N, anchors, vs, X.space)
    votes = (-rest) % f.N
    return _tally(a, votes, T, stats.attempts)


def _safe_tally(f, X, m, a, T, seed, max_attempts):
    try:
        return correct_at(f, X, m, a, T, seed, max_attempts)
    except SamplingError as err:
        return VoteTally(int(a), T, {}, None, 0.0, T, err.attempts, str(err))


def _margin_summary(tallies: list[VoteTally]) -> dict:
    ms = np.array([t.margin for t in tallies], dtype=float)
    if ms.size == 0:
        return {}
    return {
        "min": float(ms.min()),
        "mean": float(ms.mean()),
        "p10": float(np.quantile(ms, 0.1)),
        "median": float(np.median(ms)),
        "unanimous": int(sum(t.unanimous for t in tallies)),
    }


@dataclass
class SplineReport:
    domain: str  # "X" or "V"
    m: int
    T: int
    seed: int
    h: GroupFun
    residual: BadFractionReport
    disagreement: float  # |{x in X : h(x) != f(x)}| / |X|
    margins: dict
    n_anchors: int
    flagged: list  # ties and sampling failures
    input_epsilon: float | None = None
    exact_extension: bool | None = None
    tallies: list = dc_field(default_factory=list, repr=False)

    @property
    def passed(self) -> bool:
        if self.exact_extension is False:
            return False
        return self.residual.bad == 0

    def as_dict(self) -> dict:
        return {
            "vote_convention": VOTE_CONVENTION,
            "domain": self.domain,
            "m": self.m,
            "votes_per_anchor": self.T,
            "seed": self.seed,
            "anchors": self.n_anchors,
            "input_epsilon": self.input_epsilon,
            "residual": self.residual.as_dict(),
            "disagreement": self.disagreement,
            "margins": self.margins,
            "flagged": self.flagged,
            "exact_extension": self.exact_extension,
        }


def _run_anchors(f, X, m, anchors, T, seed, workers, max_attempts):
    def run(span):
        a, b = span
        return [_safe_tally(f, X, m, int(x), T, seed, max_attempts) for x in anchors[a:b]]

    parts = parallel_map(run, split_range(len(anchors), 4 * workers), workers)
    return [t for part in parts for t in part]


def _flag(S: Space, t: VoteTally, inside: bool) -> dict | None:
    if t.winner is not None:
        return None
    reason = t.error if t.error else "plurality tie"
    return {
        "point": S.format_point(t.anchor),
        "in_X": inside,
        "reason": reason,
        "attempts": t.attempts,
        "accepted": t.T - t.failures,
    }


def _residual(h: GroupFun, Xh: SubsetOracle, m: int, seed: int, budget, workers, samples):
    return bad_fraction(h, Xh, m, samples=samples, seed=seed, budget=budget, workers=workers)


def spline_on_X(f: GroupFun, X: SubsetOracle, m: int, T: int = DEFAULT_VOTES, seed: int = 0,
                workers: int = 1, budget: int | None = None, samples: int = 20_000,
                max_attempts: int | None = None) -> SplineReport:
    """h(x) = plurality vote at every x in X.  Anchors with a tie or no votes
    keep f's value and are listed under ``flagged``."""
    S = X.space
    anchors = X.members
    tallies = _run_anchors(f, X, m, anchors, T, seed, workers, max_attempts)
    vals = f.values.copy()
    flagged = []
    for t in tallies:
        if t.winner is not None:
            vals[t.anchor] = t.winner
        else:
            flagged.append(_flag(S, t, True))
    h = GroupFun(S, f.N, X.mask, vals)
    residual = _residual(h, X, m, seed, budget, workers, samples)
    eps_in = bad_fraction(f, X, m, samples=samples, seed=seed, budget=budget, workers=workers).epsilon
    dis = float(np.count_nonzero(h.values[anchors] != f.values[anchors]) / anchors.shape[0])
    return SplineReport("X", m, T, int(seed), h, residual, dis, _margin_summary(tallies),
                        len(anchors), flagged, eps_in, None, tallies)


def extend_to_V(f: GroupFun, X: SubsetOracle, m: int, T: int = DEFAULT_VOTES, seed: int = 0,
                workers: int = 1, budget: int | None = None, samples: int = 20_000,
                max_attempts: int | None = None) -> SplineReport:
    """h(a) = plurality vote at every a in V, votes drawn from completions in X.

    Anchors outside X with a tie or with no completion abort the run
    (ExtensionAborted lists them); inside X they keep f's value."""
    S = X.space
    anchors = S.points()
    tallies = _run_anchors(f, X, m, anchors, T, seed, workers, max_attempts)
    problems = [_flag(S, t, False) for t in tallies if t.winner is None and not X.mask[t.anchor]]
    if problems:
        raise ExtensionAborted(problems)
    vals = np.zeros(S.size, dtype=np.int64)
    flagged = []
    for t in tallies:
        if t.winner is not None:
            vals[t.anchor] = t.winner
        else:
            vals[t.anchor] = f.values[t.anchor]
            flagged.append(_flag(S, t, True))
    h = GroupFun.total(S, f.N, vals)
    full = SubsetOracle.full(S)
    residual = _residual(h, full, m, seed, budget, workers, samples)
    mem = X.members
    dis = float(np.count_nonzero(h.values[mem] != f.values[mem]) / mem.shape[0])
    inp = bad_fraction(f, X, m, samples=samples, seed=seed, budget=budget, workers=workers)
    exact = None
    if inp.mode == "exhaustive" and inp.bad == 0 and residual.mode == "exhaustive":
        # clean input: the extension must agree with f on X and satisfy h_m = 0
        exact = dis == 0 and residual.bad == 0
    return SplineReport("V", m, T, int(seed), h, residual, dis, _margin_summary(tallies),
                        len(anchors), flagged, inp.epsilon, exact, tallies)


def verify_vanishing(h: GroupFun, m: int, mode: str = "auto", samples: int = 20_000, seed: int = 0,
                     budget: int | None = None, workers: int = 1) -> BadFractionReport:
    """Fraction of cubes in the domain of h on which h_m != 0."""
    D = SubsetOracle(h.space, h.mask)
    return bad_fraction(h, D, m, samples=samples, seed=seed, budget=budget, mode=mode, workers=workers)


# -- subspace tester --------------------------------------------------------------------

def default_flat_dim(q: int, p: int, m: int) -> int:
    """l = ceil(m / (q - q/p))."""
    return -(-m * p // (q * p - q))


@dataclass
class SubspaceReport:
    l: int
    m: int
    mode: str  # "exhaustive" or "sampled"
    tested: int
    failing: int
    fraction: float
    seed: int | None
    example: dict | None  # one failing flat, if any

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def _flat_points(S: Space, x0: int, basis: Sequence[int]) -> np.ndarray:
    """x0 + sum t_i b_i, ordered by the point index of t in F_q^l."""
    pts = np.array([int(x0)], dtype=np.int64)
    for b in basis:
        layers = [S.add(pts, S.scale(t, np.full(pts.shape, int(b), dtype=np.int64))) for t in range(S.q)]
        # digit i of t is the coefficient of b_i: new digit is the most significant
        pts = np.concatenate(layers)
    return pts


def _restriction_degree(f: GroupFun, S: Space, pts: np.ndarray, l: int) -> float:
    sub = Space(S.field, l)
    return reduced_degree(interpolate(sub, f.values[pts] % S.q))


def _span_set(S: Space, basis) -> set:
    return set(_flat_points(S, 0, basis).tolist())


def _grow_flat(X: SubsetOracle, l: int, rng, restarts: int) -> tuple[int, list[int] | None, int]:
    """Greedy: random base point in X, then random directions keeping the whole
    flat inside X.  Returns (x0, basis or None, deepest dimension reached)."""
    S = X.space
    pts_all = S.points()
    deepest = 0
    for _ in range(restarts):
        x0 = int(X.members[rng.integers(X.size)])
        basis: list[int] = []
        flat = np.array([x0], dtype=np.int64)
        while len(basis) < l:
            ok = np.ones(S.size, dtype=bool)
            for t in range(1, S.q):
                step = S.scale(t, pts_all)
                ok &= X.mask[S.add(flat[:, None], step[None, :])].all(axis=0)
            inflat = np.zeros(S.size, dtype=bool)
            inflat[S.sub(flat, x0)] = True
            ok &= ~inflat
            cand = np.flatnonzero(ok)
            if cand.size == 0:
                break
            b = int(cand[rng.integers(cand.size)])
            basis.append(b)
            flat = _flat_points(S, x0, basis)
        deepest = max(deepest, len(basis))
        if len(basis) == l:
            return x0, basis, l
    return 0, None, deepest


def all_flats(X: SubsetOracle, l: int, budget: int | None = None):
    """Every l-dimensional affine subspace inside X as (x0, basis), each once."""
    S = X.space
    check_budget("flat enumeration", S.size**l, budget if budget is not None else 1 << 22)
    seen_sub = set()
    subspaces = []
    F = S.field
    for tup in np.ndindex(*([S.size] * l)):
        basis = [int(b) for b in tup]
        if F.matrix_rank(S.coords(np.array(basis))) < l:
            continue
        key = frozenset(_span_set(S, basis))
        if key in seen_sub:
            continue
        seen_sub.add(key)
        subspaces.append((basis, np.array(sorted(key), dtype=np.int64)))
    out = []
    for basis, W in subspaces:
        seen = set()
        for x0 in range(S.size):
            coset = S.add(W, x0)
            rep = int(coset.min())
            if rep in seen:
                continue
            seen.add(rep)
            if X.mask[coset].all():
                out.append((x0, basis))
    return out


def subspace_poly_test(f: GroupFun, X: SubsetOracle, m: int, l: int | None = None, samples: int = 200,
                       seed: int = 0, exhaustive: bool = False, restarts: int = 50,
                       budget: int | None = None) -> SubspaceReport:
    """Fraction of l-flats inside X on which f has reduced degree >= m.

    Flats are grown greedily from random points of X (or all enumerated with
    exhaustive=True).  Needs a prime field and N = p so that f's values are
    field elements."""
    S = X.space
    F = S.field
    if not F.is_prime or f.N != F.p:
        raise ValueError("the subspace test needs a prime field and N = p")
    if np.any(X.mask & ~f.mask):
        raise DomainError("f is not defined on all of X")
    if l is None:
        l = default_flat_dim(S.q, F.p, m)
    if l < 1:
        raise ValueError("l must be >= 1")
    if l > S.n:
        raise SubspaceSearchError(l, S.n)
    if exhaustive:
        flats = all_flats(X, l, budget)
        if not flats:
            raise SubspaceSearchError(l, 0)
        seed_out = None
    else:
        flats = []
        for k in range(samples):
            x0, basis, deepest = _grow_flat(X, l, rng_for(seed, SUBSPACE, k), restarts)
            if basis is None:
                raise SubspaceSearchError(l, deepest)
            flats.append((x0, basis))
        seed_out = int(seed)
    failing = 0
    example = None
    for x0, basis in flats:
        pts = _flat_points(S, x0, basis)
        deg = _restriction_degree(f, S, pts, l)
        if deg >= m:
            failing += 1
            if example is None:
                example = {"base": S.format_point(x0), "basis": [S.format_point(b) for b in basis], "degree": deg}
    return SubspaceReport(l, m, "exhaustive" if exhaustive else "sampled", len(flats), failing,
                          failing / len(flats), seed_out, example)


# -- planted noise experiments -------------------------------------------------------------

def corrupt(f: GroupFun, X: SubsetOracle, rho: float, seed: int, key: int = 0) -> tuple[GroupFun, np.ndarray]:
    """Add a random nonzero offset to ceil(rho |X|) points of X."""
    k = math.ceil(rho * X.size - 1e-12)
    rng = rng_for(seed, NOISE, key)
    pts = np.sort(rng.choice(X.members, size=k, replace=False)) if k else np.empty(0, dtype=np.int64)
    vals = f.values.copy()
    vals[pts] = (vals[pts] + rng.integers(1, f.N, k)) % f.N
    return f.with_values(vals), pts


@dataclass
class SweepRow:
    rho: float
    corrupted: int
    epsilon: float
    recovery: float  # fraction of anchors where h equals the planted g
    disagreement_with_g: float
    margin_min: float
    margin_mean: float
    flagged: int


def noise_experiment(g: PolyFun, X: SubsetOracle, m: int, rhos: Sequence[float], T: int = DEFAULT_VOTES,
                     seed: int = 0, extend: bool = False, workers: int = 1,
                     budget: int | None = None) -> list[SweepRow]:
    """Corrupt g|X at rate rho, spline (or extend), and measure recovery of g."""
    if reduced_degree(g) >= m:
        raise ValueError("planted function must have degree < m")
    G = GroupFun.from_poly(g, mask=X.mask)
    gv = eval_table(g)
    rows = []
    for i, rho in enumerate(rhos):
        f, pts = corrupt(G, X, rho, seed, i)
        if extend:
            rep = extend_to_V(f, X, m, T, seed, workers, budget)
            dom = np.ones(X.space.size, dtype=bool)
        else:
            rep = spline_on_X(f, X, m, T, seed, workers, budget)
            dom = X.mask
        agree = float(np.count_nonzero(rep.h.values[dom] == gv[dom]) / dom.sum())
        rows.append(SweepRow(float(rho), int(pts.shape[0]), float(rep.input_epsilon), agree, 1 - agree,
                             rep.margins.get("min", 0.0), rep.margins.get("mean", 0.0), len(rep.flagged)))
    return rows
