"""Varieties X = {P_i = a_i} inside V: membership, anchored solution counts,
lines through a point, projective zero counts, and random high-rank
instances."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .budget import check_budget
from .cubes import SubsetOracle
from .errors import DomainError, ParseError
from .field import Field, Space
from .polyfun import (
    NEG_INF, PolyFun, bilinear_rank, eval_table, format_poly, monomials, multilinear_bias,
    parse_poly, reduced_degree, _projective_vectors,
)
from .sampling import SUBSPACE, rng_for


@dataclass(frozen=True)
class VarietySpec:
    space: Space
    equations: tuple  # ((PolyFun, target), ...)

    def __post_init__(self):
        if not self.equations:
            raise ValueError("a variety needs at least one equation")
        q = self.space.q
        for P, t in self.equations:
            if P.space != self.space:
                raise ValueError("equation lives on another space")
            deg = reduced_degree(P)
            if deg == NEG_INF or deg < 1:
                raise ValueError(f"equation {format_poly(P)!r} is constant")
            if not 0 <= int(t) < q:
                raise ValueError(f"target {t} is not a field element")

    @classmethod
    def of(cls, polys: Sequence[PolyFun], targets: Sequence[int] | None = None) -> "VarietySpec":
        targets = [0] * len(polys) if targets is None else list(targets)
        if not polys:
            raise ValueError("a variety needs at least one equation")
        return cls(polys[0].space, tuple((P, int(t)) for P, t in zip(polys, targets)))

    @classmethod
    def parse(cls, space: Space, text: str) -> "VarietySpec":
        """One polynomial per line, optional '= target'; '#' starts a comment."""
        eqs = []
        for raw in text.splitlines():
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            lhs, _, rhs = line.partition("=")
            t = 0
            if rhs.strip():
                try:
                    t = int(rhs.strip())
                except ValueError as exc:
                    raise ParseError(f"bad target in {raw!r}") from exc
                if space.field.is_prime:
                    t %= space.q
            eqs.append((parse_poly(space, lhs), t))
        if not eqs:
            raise ParseError("variety file has no equations")
        return cls(space, tuple(eqs))

    def format(self) -> str:
        return "\n".join(f"{format_poly(P)} = {t}" for P, t in self.equations) + "\n"

    @property
    def polys(self) -> list[PolyFun]:
        return [P for P, _ in self.equations]

    @property
    def targets(self) -> list[int]:
        return [int(t) for _, t in self.equations]

    @property
    def degrees(self) -> list[int]:
        return [int(reduced_degree(P)) for P in self.polys]

    @property
    def codim(self) -> int:
        return len(self.equations)

    @property
    def homogeneous(self) -> bool:
        """All equations homogeneous with zero targets."""
        return all(P.is_homogeneous() and t == 0 for P, t in self.equations)

    def tables(self, budget: int | None = None) -> list[np.ndarray]:
        return [eval_table(P, budget) for P in self.polys]

    def contains(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.int64)
        ok = np.ones(x.shape, dtype=bool)
        for P, t in self.equations:
            ok &= P(x) == t
        return ok


def variety_members(spec: VarietySpec, budget: int | None = None) -> SubsetOracle:
    S = spec.space
    check_budget("variety enumeration", S.size, budget)
    mask = np.ones(S.size, dtype=bool)
    for T, t in zip(spec.tables(), spec.targets):
        mask &= T == t
    return SubsetOracle(S, mask)


@dataclass
class AnchoredCountReport:
    anchors: list[int]
    count: int
    exponent: int | None  # D + 1 with D = m * sum_i d_i (d_i + 1) / 2
    bound: float | None
    applicable: bool
    passed: bool | None

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def solution_count_anchored(spec: VarietySpec, anchors: Sequence[int], budget: int | None = None) -> AnchoredCountReport:
    """|{x : P_i(x + a_j) = t_i for all i, j}| by enumeration.

    The comparison bound comes from the lines construction: the x with
    x + t a_j in X for every t and j form the zero set of m * sum_i d_i(d_i+1)/2
    worth of homogeneous degree, so by the projective zero bound there are at
    least 1 + (q^n - 1) / (2 q^(D+1)) of them.  It applies to homogeneous
    zero-target systems with every anchor on X; otherwise the count is
    reported without a bound."""
    S = spec.space
    check_budget("anchored solution count", S.size * max(1, len(anchors)), budget)
    anchors = [int(a) for a in anchors]
    if not anchors:
        raise ValueError("need at least one anchor")
    tabs = spec.tables()
    on_X = True
    for a in anchors:
        S.check(a)
        on_X &= all(T[a] == t for T, t in zip(tabs, spec.targets))
    pts = S.points()
    ok = np.ones(S.size, dtype=bool)
    for a in anchors:
        sh = S.add(pts, a)
        for T, t in zip(tabs, spec.targets):
            ok &= T[sh] == t
    count = int(ok.sum())
    if not (spec.homogeneous and on_X):
        return AnchoredCountReport(anchors, count, None, None, False, None)
    m = len(anchors)
    D = m * sum(d * (d + 1) // 2 for d in spec.degrees)
    q, n = S.q, S.n
    bound = 1 + (q**n - 1) / (2 * q ** (D + 1))
    return AnchoredCountReport(anchors, count, D + 1, bound, True, count >= bound)


@dataclass
class LineCountReport:
    x: int
    count: int  # directions v != 0 with x + t v in X for all t
    C: int
    bound: float  # q^(n - C)
    passed: bool

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def lines_complexity(degrees: Sequence[int]) -> int:
    """C(d) = sum_i d_i (d_i + 1) / 2 + 1."""
    return sum(d * (d + 1) // 2 for d in degrees) + 1


def line_directions(spec: VarietySpec, x: int, budget: int | None = None) -> np.ndarray:
    """Mask over V of the directions v with x + t v in X for every t in F_q."""
    S = spec.space
    check_budget("line scan", S.size * S.q, budget)
    tabs = spec.tables()
    pts = S.points()
    ok = np.ones(S.size, dtype=bool)
    for t in range(S.q):
        line_pts = S.add(int(x), S.scale(t, pts))
        for T, a in zip(tabs, spec.targets):
            ok &= T[line_pts] == a
    ok[0] = False
    return ok


def lines_through(spec: VarietySpec, x: int, budget: int | None = None) -> LineCountReport:
    S = spec.space
    x = int(x)
    S.check(x)
    dmax = max(spec.degrees)
    if S.q <= dmax:
        raise ValueError(f"line count needs q > max degree (q={S.q}, d={dmax})")
    if not bool(spec.contains(x)):
        raise DomainError(f"{S.format_point(x)} is not on X")
    count = int(line_directions(spec, x, budget).sum())
    C = lines_complexity(spec.degrees)
    bound = float(S.q) ** (S.n - C)
    return LineCountReport(x, count, C, bound, count >= bound)


@dataclass
class ProjectiveReport:
    affine_zeros: int
    projective_zeros: int
    projective_size: int
    D: int
    bound: float  # |P(V)| / (2 q^(D+1))
    density: float
    passed: bool

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def projective_zero_density(spec: VarietySpec, budget: int | None = None) -> ProjectiveReport:
    if not spec.homogeneous:
        raise ValueError("projective zero count needs homogeneous equations with zero targets")
    S = spec.space
    X = variety_members(spec, budget)
    q, n = S.q, S.n
    proj = (X.size - 1) // (q - 1)
    pv = (q**n - 1) // (q - 1)
    D = sum(spec.degrees)
    bound = pv / (2 * q ** (D + 1))
    return ProjectiveReport(X.size, proj, pv, D, bound, proj / pv, proj >= bound)


# -- random high-rank instances ------------------------------------------------------

@dataclass
class HighRankInstance:
    spec: VarietySpec
    method: str  # "bilinear-rank" (d = 2) or "bias-proxy" (d = 3)
    certified: float  # rank lower bound, or the largest combination bias
    threshold: float
    tries: int

    def as_dict(self) -> dict:
        return {
            "equations": [format_poly(P) for P in self.spec.polys],
            "method": self.method,
            "certified": self.certified,
            "threshold": self.threshold,
            "tries": self.tries,
        }


def max_certifiable_rank(field: Field, n: int) -> int:
    """Largest ceil(rank(B)/2) a quadratic in n variables can show; B is
    alternating in characteristic 2, so its rank is even there."""
    return n // 2 if field.p == 2 else -(-n // 2)


def _random_homogeneous(space: Space, d: int, rng) -> PolyFun:
    monos = [e for e in monomials(space, d) if sum(e) == d]
    while True:
        coefs = rng.integers(0, space.q, len(monos))
        if coefs.any():
            return PolyFun.from_dict(space, dict(zip(monos, coefs.tolist())))


def _combinations(polys):
    S = polys[0].space
    for coefs in _projective_vectors(S.q, len(polys)):
        comb = PolyFun.zero(S)
        for a, P in zip(coefs, polys):
            if a:
                comb = comb + P.scale(a)
        yield comb


def random_high_rank_instance(field: Field, n: int, d: int, L: int, rank_target: int,
                              seed: int = 0, max_tries: int = 200,
                              budget: int | None = None) -> HighRankInstance:
    """L random homogeneous degree-d equations whose every nonzero combination
    is certified strong: rank >= rank_target via the bilinear form for d = 2,
    multilinear bias < q^-rank_target as a proxy for d = 3."""
    if d not in (2, 3):
        raise ValueError("instances are generated for d = 2 or d = 3 only")
    if L < 1:
        raise ValueError("L must be >= 1")
    S = Space(field, n)
    if d == 2 and rank_target > max_certifiable_rank(field, n):
        raise ValueError(
            f"rank {rank_target} cannot be certified for quadratics in {n} variables over F_{field.q}"
        )
    if not [e for e in monomials(S, d) if sum(e) == d]:
        raise ValueError(f"no reduced monomials of degree {d} over F_{field.q}")
    threshold = float(field.q) ** (-rank_target)
    for attempt in range(1, max_tries + 1):
        rng = rng_for(seed, SUBSPACE, 7, attempt)
        polys = [_random_homogeneous(S, d, rng) for _ in range(L)]
        if d == 2:
            lows = [-(-bilinear_rank(c) // 2) for c in _combinations(polys)]
            if min(lows) >= rank_target:
                return HighRankInstance(VarietySpec.of(polys), "bilinear-rank", min(lows), rank_target, attempt)
        else:
            biases = [multilinear_bias(c, 3, budget) for c in _combinations(polys)]
            if max(biases) < threshold:
                return HighRankInstance(VarietySpec.of(polys), "bias-proxy", max(biases), threshold, attempt)
    raise ValueError(f"no instance reached the target after {max_tries} tries")
