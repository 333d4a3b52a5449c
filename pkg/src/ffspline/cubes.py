"""Cubes (u | v_1..v_m), almost cubes, the alternating sums f_m and f'_m,
exhaustive and rejection-sampled cube generation inside a subset X, and
bad-cube statistics.

Vertex w of a cube, 0 <= w < 2^m, is u + sum_i bit_i(w) v_i.  Degenerate cubes
(zero or repeated directions) count: C_m(X) is a set of parameter tuples.
"""
from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from typing import Callable, Iterator

import numpy as np

from . import kernels
from .budget import check_budget
from .errors import DomainError
from .field import Space
from .polyfun import GroupFun
from .sampling import (
    CUBES, COMPLETIONS, SamplingStats, parallel_map, rejection_sample, split_range, wilson,
)


@dataclass(frozen=True, eq=False)
class SubsetOracle:
    """X inside V as a membership mask plus the sorted member list."""

    space: Space
    mask: np.ndarray
    members: np.ndarray = dc_field(init=False)

    def __post_init__(self):
        mask = np.asarray(self.mask, dtype=bool).reshape(-1)
        if mask.shape != (self.space.size,):
            raise ValueError(f"mask must have {self.space.size} entries")
        if not mask.any():
            raise ValueError("X is empty")
        mask.flags.writeable = False
        mem = np.flatnonzero(mask).astype(np.int64)
        mem.flags.writeable = False
        object.__setattr__(self, "mask", mask)
        object.__setattr__(self, "members", mem)

    @classmethod
    def full(cls, space: Space) -> "SubsetOracle":
        return cls(space, np.ones(space.size, dtype=bool))

    @classmethod
    def from_members(cls, space: Space, members) -> "SubsetOracle":
        mask = np.zeros(space.size, dtype=bool)
        mask[np.asarray(members, dtype=np.int64)] = True
        return cls(space, mask)

    @property
    def size(self) -> int:
        return int(self.members.shape[0])

    @property
    def density(self) -> float:
        return self.size / self.space.size

    def __contains__(self, x) -> bool:
        return bool(self.mask[int(x)])

    def __eq__(self, other):
        if not isinstance(other, SubsetOracle):
            return NotImplemented
        return self.space == other.space and np.array_equal(self.mask, other.mask)

    __hash__ = None


def _vertices(space: Space, u: int, vs) -> np.ndarray:
    verts = [int(u)]
    for v in vs:
        verts += [int(space.add(x, int(v))) for x in verts]
    return np.array(verts, dtype=np.int64)


def _signs(m: int) -> np.ndarray:
    return np.array([-1 if bin(w).count("1") % 2 else 1 for w in range(1 << m)], dtype=np.int64)


def _fmt(space: Space, u, vs) -> str:
    return f"({space.format_point(u)} | " + ", ".join(space.format_point(v) for v in vs) + ")"


@dataclass(frozen=True)
class Cube:
    u: int
    vs: tuple[int, ...]

    @property
    def m(self) -> int:
        return len(self.vs)

    def vertices(self, space: Space) -> np.ndarray:
        return _vertices(space, self.u, self.vs)

    def format(self, space: Space) -> str:
        return _fmt(space, self.u, self.vs)


@dataclass(frozen=True)
class AlmostCube:
    """The cube (u | vs) without its base vertex u."""

    u: int
    vs: tuple[int, ...]

    @property
    def m(self) -> int:
        return len(self.vs)

    def vertices(self, space: Space) -> np.ndarray:
        return _vertices(space, self.u, self.vs)[1:]

    def format(self, space: Space) -> str:
        return _fmt(space, self.u, self.vs) + "'"


def alt_sum(f: GroupFun, c: Cube) -> int:
    """f_m(u | v) = sum_w (-1)^|w| f(u + w.v) in Z/N."""
    verts = c.vertices(f.space)
    if not f.mask[verts].all():
        raise DomainError(f"cube {c.format(f.space)} leaves the domain of f")
    return int((_signs(c.m) * f.values[verts]).sum() % f.N)


def alt_sum_prime(f: GroupFun, c: AlmostCube) -> int:
    """f'_m(u | v) = sum_{w != 0} (-1)^|w| f(u + w.v) in Z/N."""
    verts = c.vertices(f.space)
    if not f.mask[verts].all():
        raise DomainError(f"almost cube {c.format(f.space)} leaves the domain of f")
    return int((_signs(c.m)[1:] * f.values[verts]).sum() % f.N)


def enumerate_cubes(X: SubsetOracle, m: int, budget: int | None = None) -> Iterator[Cube]:
    """Every (u | v_1..v_m) with all 2^m vertices in X, each tuple once."""
    S = X.space
    check_budget("cube enumeration", S.size ** (m + 1), budget)
    pts = S.points()
    for u in X.members:
        # frontier of partial vertex lists, extended one direction at a time
        frontier = [((), np.array([u], dtype=np.int64))]
        for _ in range(m):
            nxt = []
            for vs, verts in frontier:
                shifted = S.add(verts[:, None], pts[None, :])  # (2^i, |V|)
                ok = X.mask[shifted].all(axis=0)
                for v in np.flatnonzero(ok):
                    nxt.append((vs + (int(v),), np.concatenate([verts, shifted[:, v]])))
            frontier = nxt
        for vs, _ in frontier:
            yield Cube(int(u), vs)


def count_cubes(X: SubsetOracle, m: int, budget: int | None = None, workers: int = 1) -> int:
    """|C_m(X)|."""
    zero = GroupFun(X.space, 2, X.mask, np.zeros(X.space.size, dtype=np.int64))
    return _scan(zero, X, m, budget, workers)[0]


def _scan(f: GroupFun, X: SubsetOracle, m: int, budget, workers: int) -> tuple[int, int]:
    S = X.space
    check_budget("exhaustive cube scan", S.size ** (m + 1), budget)
    if np.any(X.mask & ~f.mask):
        raise DomainError("f is not defined on all of X")
    anchors = X.members

    def run(span):
        a, b = span
        return kernels.cube_scan(X.mask, f.values, f.N, m, anchors[a:b], S)

    parts = parallel_map(run, split_range(anchors.shape[0], 4 * workers), workers)
    return sum(t for t, _ in parts), sum(b for _, b in parts)


def _cube_proposer(X: SubsetOracle, m: int):
    S = X.space
    mem = X.members

    def propose(rng, size):
        u = mem[rng.integers(0, mem.shape[0], size)]
        vs = rng.integers(0, S.size, (size, m))
        inside, _ = kernels.almost_cube_eval(X.mask, np.zeros(S.size, dtype=np.int64), 2, u, vs, S)
        return np.concatenate([u[:, None], vs], axis=1), inside

    return propose


def sample_cubes(X: SubsetOracle, m: int, count: int, seed: int,
                 max_attempts: int | None = None) -> tuple[list[Cube], SamplingStats]:
    """Rejection sampling: u uniform on X, v uniform on V^m, keep cubes in C_m(X)."""
    if m == 0:
        rows, stats = rejection_sample(
            lambda rng, size: (X.members[rng.integers(0, X.size, size)][:, None], np.ones(size, bool)),
            count, 1.0, seed, CUBES, (0,), what="cube sampling",
        )
    else:
        rate = X.density ** ((1 << m) - 1)
        rows, stats = rejection_sample(
            _cube_proposer(X, m), count, rate, seed, CUBES, (m,), what="cube sampling",
            max_attempts=max_attempts,
        )
    return [Cube(int(r[0]), tuple(int(v) for v in r[1:])) for r in rows], stats


@dataclass
class BadFractionReport:
    samples: int
    bad: int
    epsilon: float
    ci_low: float
    ci_high: float
    seed: int | None
    mode: str  # "exhaustive" or "sampled"
    m: int
    acceptance: dict | None = None

    def as_dict(self) -> dict:
        return {
            "m": self.m,
            "mode": self.mode,
            "samples": self.samples,
            "bad": self.bad,
            "epsilon": self.epsilon,
            "ci95": [self.ci_low, self.ci_high],
            "seed": self.seed,
            "acceptance": self.acceptance,
        }


def bad_fraction(f: GroupFun, X: SubsetOracle, m: int, samples: int = 10_000, seed: int = 0,
                 budget: int | None = None, mode: str = "auto", workers: int = 1) -> BadFractionReport:
    """Fraction of cubes in C_m(X) on which f_m != 0.

    mode "auto" is exhaustive when |V|^(m+1) fits the budget, else sampled."""
    S = X.space
    if np.any(X.mask & ~f.mask):
        raise DomainError("f is not defined on all of X")
    if mode == "auto":
        from .budget import EXHAUSTIVE_BUDGET

        mode = "exhaustive" if S.size ** (m + 1) <= (budget or EXHAUSTIVE_BUDGET) else "sampled"
    if mode == "exhaustive":
        total, bad = _scan(f, X, m, budget, workers)
        eps = bad / total
        return BadFractionReport(total, bad, eps, eps, eps, None, "exhaustive", m)
    if mode != "sampled":
        raise ValueError(f"unknown mode {mode!r}")
    cubes, stats = sample_cubes(X, m, samples, seed)
    bad = _bad_count(f, cubes)
    lo, hi = wilson(bad, len(cubes))
    return BadFractionReport(len(cubes), bad, bad / len(cubes), lo, hi, seed, "sampled", m, stats.as_dict())


def _bad_count(f: GroupFun, cubes: list[Cube]) -> int:
    u = np.array([c.u for c in cubes], dtype=np.int64)
    vs = np.array([c.vs for c in cubes], dtype=np.int64).reshape(len(cubes), -1)
    if vs.shape[1] == 0:
        return int(np.count_nonzero(f.values[u] % f.N))
    inside, rest = kernels.almost_cube_eval(f.mask, f.values, f.N, u, vs, f.space)
    if not inside.all():
        raise DomainError("a sampled cube leaves the domain of f")
    return int(np.count_nonzero((f.values[u] + rest) % f.N))


def sample_completions(a: int, X: SubsetOracle, m: int, count: int, seed: int,
                       key: tuple[int, ...] = (), strict: bool = True,
                       max_attempts: int | None = None) -> tuple[np.ndarray, SamplingStats]:
    """Directions v with (a | v)' in C'_m(X), uniform by rejection from V^m.

    Returns an array of shape (accepted, m).  ``key`` extends the random
    stream address (the spline code passes the anchor's position)."""
    S = X.space
    a = int(a)
    S.check(a)
    rate = X.density ** ((1 << m) - 1)
    zeros = np.zeros(S.size, dtype=np.int64)

    def propose(rng, size):
        vs = rng.integers(0, S.size, (size, m))
        inside, _ = kernels.almost_cube_eval(X.mask, zeros, 2, np.full(size, a, dtype=np.int64), vs, S)
        return vs, inside

    return rejection_sample(
        propose, count, rate, seed, COMPLETIONS, (a, m, *key), strict=strict,
        what=f"completion sampling at {S.format_point(a)}", max_attempts=max_attempts,
    )


@dataclass
class FiberStats:
    n_domain: int
    n_fibers: int
    min_fiber: int
    max_fiber: int
    mean_fiber: float
    C: float  # max fiber / min nonempty fiber

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def fiber_statistics(domain, mapping: Callable[[np.ndarray], np.ndarray],
                     keep: Callable[[np.ndarray], np.ndarray] | None = None,
                     budget: int | None = None) -> FiberStats:
    """Exact fiber sizes of ``mapping`` on the rows of ``domain``.

    ``mapping`` takes the (k, a) array of domain tuples and returns a (k, b)
    array of images; ``keep`` optionally filters images.  C = max/min over
    nonempty fibers measures how far the map is from homogeneous."""
    dom = np.asarray(domain, dtype=np.int64)
    if dom.ndim == 1:
        dom = dom[:, None]
    check_budget("fiber statistics", dom.shape[0], budget)
    img = np.asarray(mapping(dom), dtype=np.int64)
    if img.ndim == 1:
        img = img[:, None]
    if keep is not None:
        img = img[np.asarray(keep(img), dtype=bool)]
    if img.shape[0] == 0:
        return FiberStats(dom.shape[0], 0, 0, 0, 0.0, float("inf"))
    _, counts = np.unique(img, axis=0, return_counts=True)
    lo, hi = int(counts.min()), int(counts.max())
    return FiberStats(dom.shape[0], int(counts.shape[0]), lo, hi, float(counts.mean()), hi / lo)


def cube_tuples(X: SubsetOracle, m: int, budget: int | None = None) -> np.ndarray:
    """All (u, v_1..v_m) of C_m(X) as rows."""
    return np.array([(c.u, *c.vs) for c in enumerate_cubes(X, m, budget)], dtype=np.int64).reshape(-1, m + 1)
