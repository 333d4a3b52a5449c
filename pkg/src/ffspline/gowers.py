"""Gowers U_m norms of complex functions on V, exact and Monte-Carlo, and the
uniformity eta = ||1_X - delta||_{U_m} of a subset."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .budget import EXHAUSTIVE_BUDGET, check_budget
from .cubes import SubsetOracle
from .field import Space
from .polyfun import PolyFun, eval_table
from .sampling import MC, parallel_map, rng_for, split_range


@dataclass(frozen=True, eq=False)
class ComplexFun:
    space: Space
    values: np.ndarray
    bound: float = 1.0

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.complex128).reshape(-1)
        if vals.shape != (self.space.size,):
            raise ValueError(f"table must have {self.space.size} entries")
        if np.any(np.abs(vals) > self.bound + 1e-12):
            raise ValueError(f"values exceed the declared bound {self.bound}")
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)

    @classmethod
    def phase(cls, P: PolyFun) -> "ComplexFun":
        """x -> e_q(P(x))."""
        return cls(P.space, P.space.field.char(eval_table(P)), 1.0)

    @classmethod
    def balanced_indicator(cls, X: SubsetOracle) -> "ComplexFun":
        """1_X - delta."""
        d = X.density
        return cls(X.space, X.mask.astype(float) - d, max(d, 1 - d))

    def __mul__(self, other: "ComplexFun") -> "ComplexFun":
        return ComplexFun(self.space, self.values * other.values, self.bound * other.bound)


@dataclass
class GowersReport:
    m: int
    value: float
    mode: str  # "exact" or "monte-carlo"
    pre_root: float
    imag_residue: float
    samples: int | None = None
    seed: int | None = None
    stderr: float | None = None

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def _root(pre: float, m: int) -> float:
    return max(pre, 0.0) ** (1.0 / (1 << m))


def gowers_power_exact(g: ComplexFun, m: int, budget: int | None = None, workers: int = 1) -> float:
    """||g||_{U_m}^{2^m} by recursion on multiplicative derivatives.

    The outer average over h is always taken as a sum over the same ordered
    array, so the float result does not depend on ``workers``."""
    S = g.space
    if m < 1:
        raise ValueError("m must be >= 1")
    check_budget("exact Gowers norm", S.size**m, budget)
    vals = g.values
    if m == 1:
        mu = vals.mean()
        return float((mu * np.conj(mu)).real)
    pts = S.points()

    def run(span):
        a, b = span
        out = np.empty(b - a)
        for k, h in enumerate(range(a, b)):
            D = vals[S.add(pts, h)] * np.conj(vals)
            out[k] = kernels.gowers_power(D, m - 1, S)
        return out

    parts = parallel_map(run, split_range(S.size, 4 * workers), workers)
    return float(np.concatenate(parts).sum() / S.size)


def gowers_exact(g: ComplexFun, m: int, budget: int | None = None, workers: int = 1) -> GowersReport:
    pre = gowers_power_exact(g, m, budget, workers)
    # the recursion ends in |E D|^2, so the average is real by construction
    return GowersReport(m, _root(pre, m), "exact", pre, 0.0)


def gowers_mc(g: ComplexFun, m: int, samples: int, seed: int, batch: int = 1 << 14) -> GowersReport:
    """Unbiased estimate of the 2^m-power average from uniform (x, v) draws."""
    S = g.space
    if samples < 1:
        raise ValueError("samples must be >= 1")
    vals = g.values
    re_sum = 0.0
    re_sq = 0.0
    im_sum = 0.0
    for b, start in enumerate(range(0, samples, batch)):
        k = min(batch, samples - start)
        rng = rng_for(seed, MC, m, b)
        x = rng.integers(0, S.size, k)
        vs = rng.integers(0, S.size, (k, m))
        verts = [x]
        conj = [False]
        for i in range(m):
            verts += [S.add(p, vs[:, i]) for p in verts]
            conj += [not c for c in conj]
        prod = np.ones(k, dtype=np.complex128)
        for p, c in zip(verts, conj):
            prod *= np.conj(vals[p]) if c else vals[p]
        re_sum += float(prod.real.sum())
        re_sq += float((prod.real**2).sum())
        im_sum += float(prod.imag.sum())
    mean = re_sum / samples
    var = max(re_sq / samples - mean * mean, 0.0)
    stderr = (var / max(samples - 1, 1)) ** 0.5 if samples > 1 else float("inf")
    return GowersReport(m, _root(mean, m), "monte-carlo", mean, im_sum / samples, samples, int(seed), stderr)


@dataclass
class UniformityReport:
    m: int
    density: float
    eta: float
    mode: str
    epsilon: float | None = None
    uniform: bool | None = None  # eta < epsilon
    gowers: dict | None = None

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def uniformity(X: SubsetOracle, m: int, epsilon: float | None = None, budget: int | None = None,
               samples: int = 100_000, seed: int = 0, workers: int = 1) -> UniformityReport:
    """delta and eta = ||1_X - delta||_{U_m}; exact when |V|^m fits the budget."""
    g = ComplexFun.balanced_indicator(X)
    if X.space.size**m <= (EXHAUSTIVE_BUDGET if budget is None else budget):
        rep = gowers_exact(g, m, budget, workers)
    else:
        rep = gowers_mc(g, m, samples, seed)
    verdict = None if epsilon is None else bool(rep.value < epsilon)
    return UniformityReport(m, X.density, rep.value, rep.mode, epsilon, verdict, rep.as_dict())
