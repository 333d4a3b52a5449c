"""Polynomial functions V -> F_q in reduced form, and functions V -> Z/N.

A reduced monomial has every exponent in [0, q-1]; since a^q = a on F_q every
function V -> F_q is given by exactly one reduced polynomial.
"""
from __future__ import annotations

import itertools
import math
import re
from dataclasses import dataclass, field as dc_field
from typing import Iterable, Sequence

import numpy as np

from .budget import check_budget
from .errors import BudgetExceeded, DomainError, ParseError
from .field import Field, Space

NEG_INF = float("-inf")
_EVAL_CHUNK = 1 << 20


def reduce_exponent(e: int, q: int) -> int:
    if e < 0:
        raise ValueError("negative exponent")
    if e < q:
        return e
    return (e - 1) % (q - 1) + 1


def monomials(space: Space, max_deg: int) -> list[tuple[int, ...]]:
    """Reduced exponent tuples of total degree <= max_deg, low degree first."""
    if max_deg < 0:
        return []
    top = min(space.q - 1, max_deg)
    out = [e for e in itertools.product(range(top + 1), repeat=space.n) if sum(e) <= max_deg]
    out.sort(key=lambda e: (sum(e), e[::-1]))
    return out


def _sort_key(e):
    return (-sum(e), tuple(-x for x in e))


@dataclass(frozen=True)
class PolyFun:
    """Reduced polynomial on ``space``; ``terms`` is a canonical tuple of
    (exponent tuple, nonzero coefficient) pairs.  Build with from_dict/parse."""

    space: Space
    terms: tuple = ()

    @classmethod
    def from_dict(cls, space: Space, coeffs: dict) -> "PolyFun":
        F = space.field
        acc: dict[tuple[int, ...], int] = {}
        for exps, c in coeffs.items():
            exps = tuple(int(e) for e in exps)
            if len(exps) != space.n:
                raise ValueError(f"exponent tuple {exps} has wrong length for n={space.n}")
            c = int(c)
            if not 0 <= c < F.q:
                raise ValueError(f"coefficient {c} is not an element of F_{F.q}")
            key = tuple(reduce_exponent(e, F.q) for e in exps)
            acc[key] = int(F.add(acc.get(key, 0), c))
        items = sorted(((e, c) for e, c in acc.items() if c), key=lambda t: _sort_key(t[0]))
        return cls(space, tuple(items))

    @classmethod
    def zero(cls, space: Space) -> "PolyFun":
        return cls(space, ())

    @classmethod
    def constant(cls, space: Space, c: int) -> "PolyFun":
        return cls.from_dict(space, {(0,) * space.n: c})

    @classmethod
    def variable(cls, space: Space, i: int) -> "PolyFun":
        """x_i, 1-based."""
        e = [0] * space.n
        e[i - 1] = 1
        return cls.from_dict(space, {tuple(e): 1})

    @classmethod
    def parse(cls, space: Space, text: str) -> "PolyFun":
        return parse_poly(space, text)

    @property
    def coeffs(self) -> dict:
        return dict(self.terms)

    @property
    def degree(self):
        return reduced_degree(self)

    def is_zero(self) -> bool:
        return not self.terms

    def is_homogeneous(self) -> bool:
        return len({sum(e) for e, _ in self.terms}) <= 1

    def __call__(self, x):
        return poly_eval(self, x)

    def table(self, budget: int | None = None) -> np.ndarray:
        return eval_table(self, budget)

    # -- ring operations --------------------------------------------------

    def _check(self, other: "PolyFun"):
        if other.space != self.space:
            raise DomainError("polynomials live on different spaces")

    def __add__(self, other: "PolyFun") -> "PolyFun":
        self._check(other)
        F = self.space.field
        acc = dict(self.terms)
        for e, c in other.terms:
            acc[e] = int(F.add(acc.get(e, 0), c))
        return PolyFun.from_dict(self.space, acc)

    def __neg__(self) -> "PolyFun":
        F = self.space.field
        return PolyFun.from_dict(self.space, {e: int(F.neg(c)) for e, c in self.terms})

    def __sub__(self, other: "PolyFun") -> "PolyFun":
        return self + (-other)

    def scale(self, c: int) -> "PolyFun":
        F = self.space.field
        return PolyFun.from_dict(self.space, {e: int(F.mul(c, a)) for e, a in self.terms})

    def __mul__(self, other):
        if isinstance(other, (int, np.integer)):
            return self.scale(int(other))
        self._check(other)
        F = self.space.field
        acc: dict[tuple[int, ...], int] = {}
        for e1, c1 in self.terms:
            for e2, c2 in other.terms:
                e = tuple(reduce_exponent(a + b, F.q) for a, b in zip(e1, e2))
                acc[e] = int(F.add(acc.get(e, 0), F.mul(c1, c2)))
        return PolyFun.from_dict(self.space, acc)

    __rmul__ = __mul__

    def __str__(self) -> str:
        return format_poly(self)


# -- text format ---------------------------------------------------------------

_TERM = re.compile(r"([+-]?)([^+-]+)")


def parse_poly(space: Space, text: str) -> PolyFun:
    """Parse ``"2*x1^2*x3 + x2 - 1"``.  Coefficients are element indices."""
    F = space.field
    body = text.replace(" ", "")
    if not body:
        raise ParseError("empty polynomial")
    if not re.fullmatch(r"[+-]?[^+-]+([+-][^+-]+)*", body):
        raise ParseError(f"malformed polynomial {text!r}")
    acc: dict[tuple[int, ...], int] = {}
    for sign, term in _TERM.findall(body):
        c = 1
        exps = [0] * space.n
        for factor in term.split("*"):
            if re.fullmatch(r"\d+", factor):
                k = int(factor)
                if k >= F.q and not F.is_prime:
                    raise ParseError(f"coefficient {k} is not an element index of F_{F.q}")
                c = int(F.mul(c, k % F.q if F.is_prime else k))
                continue
            m = re.fullmatch(r"x(\d+)(?:\^(\d+))?", factor)
            if not m:
                raise ParseError(f"bad factor {factor!r} in {text!r}")
            i = int(m.group(1))
            if not 1 <= i <= space.n:
                raise ParseError(f"variable x{i} out of range for n={space.n}")
            exps[i - 1] += int(m.group(2) or 1)
        if sign == "-":
            c = int(F.neg(c))
        key = tuple(reduce_exponent(e, F.q) for e in exps)
        acc[key] = int(F.add(acc.get(key, 0), c))
    return PolyFun.from_dict(space, acc)


def format_poly(P: PolyFun) -> str:
    if not P.terms:
        return "0"
    out = []
    for exps, c in P.terms:
        parts = []
        if c != 1 or not any(exps):
            parts.append(str(c))
        for i, e in enumerate(exps):
            if e == 1:
                parts.append(f"x{i + 1}")
            elif e > 1:
                parts.append(f"x{i + 1}^{e}")
        out.append("*".join(parts))
    return " + ".join(out)


# -- evaluation and interpolation ------------------------------------------------

def poly_eval(P: PolyFun, x):
    """P at point index/indices x."""
    S = P.space
    F = S.field
    x = np.asarray(x, dtype=np.int64)
    S.check(x)
    flat = x.reshape(-1)
    out = np.zeros(flat.shape[0], dtype=np.int64)
    for s in range(0, flat.shape[0], _EVAL_CHUNK):
        c = S.coords(flat[s:s + _EVAL_CHUNK])
        powers: dict[tuple[int, int], np.ndarray] = {}
        acc = np.zeros(c.shape[0], dtype=np.int64)
        for exps, coef in P.terms:
            term = np.full(c.shape[0], coef, dtype=np.int64)
            for i, e in enumerate(exps):
                if e:
                    if (i, e) not in powers:
                        powers[(i, e)] = F.pow(c[:, i], e)
                    term = F.mul(term, powers[(i, e)])
            acc = F.add(acc, term)
        out[s:s + _EVAL_CHUNK] = acc
    if x.ndim == 0:
        return int(out[0])
    return out.reshape(x.shape)


def eval_table(P: PolyFun, budget: int | None = None) -> np.ndarray:
    check_budget("polynomial table", P.space.size, budget)
    return poly_eval(P, P.space.points())


def _interp_matrix(F: Field) -> np.ndarray:
    """M with coefficient_k = sum_a M[k, a] f(a) for univariate f on F_q."""
    q = F.q
    e = F.elements()
    M = np.zeros((q, q), dtype=np.int64)
    M[0, 0] = 1
    for k in range(1, q):
        M[k] = F.neg(F.pow(e, q - 1 - k))
    return M


def interpolate(space: Space, table, budget: int | None = None) -> PolyFun:
    """The reduced polynomial with the given value table, one axis at a time."""
    F = space.field
    q, n = space.q, space.n
    check_budget("interpolation", space.size, budget)
    T = np.asarray(table, dtype=np.int64)
    if T.shape != (space.size,):
        raise ValueError(f"table must have {space.size} entries")
    if np.any((T < 0) | (T >= q)):
        raise ValueError("table entries must be field elements")
    M = _interp_matrix(F)
    T = T.reshape([q] * n)  # axis n-1-i holds x_{i+1}
    for ax in range(n):
        if F.is_prime:
            T = np.moveaxis(np.tensordot(M, T, axes=([1], [ax])) % q, 0, ax)
        else:
            Tm = np.moveaxis(T, ax, 0)
            out = np.zeros_like(Tm)
            for k in range(q):
                acc = np.zeros(Tm.shape[1:], dtype=np.int64)
                for a in range(q):
                    if M[k, a]:
                        acc = F.add(acc, F.mul(M[k, a], Tm[a]))
                out[k] = acc
            T = np.moveaxis(out, 0, ax)
    C = T.reshape(-1)
    nz = np.nonzero(C)[0]
    exps = space.coords(nz)
    return PolyFun.from_dict(space, {tuple(int(v) for v in e): int(c) for e, c in zip(exps, C[nz])})


def reduced_degree(P: PolyFun):
    """Total degree of the reduced form; -inf for the zero polynomial."""
    if not P.terms:
        return NEG_INF
    return max(sum(e) for e, _ in P.terms)


def random_poly(space: Space, max_deg: int, rng: np.random.Generator, exact: bool = False) -> PolyFun:
    """Uniform coefficients on all reduced monomials of degree <= max_deg; with
    exact=True at least one top-degree coefficient is forced nonzero."""
    monos = monomials(space, max_deg)
    q = space.q
    coefs = rng.integers(0, q, len(monos))
    if exact:
        top = [i for i, e in enumerate(monos) if sum(e) == max_deg]
        if not top:
            raise ValueError(f"no reduced monomial of degree {max_deg} in F_{q}^{space.n}")
        if not any(coefs[i] for i in top):
            coefs[top[rng.integers(len(top))]] = rng.integers(1, q)
    return PolyFun.from_dict(space, dict(zip(monos, coefs.tolist())))


# -- functions into Z/N ----------------------------------------------------------

@dataclass(frozen=True, eq=False)
class GroupFun:
    """f: X -> Z/N stored densely over V with a membership mask."""

    space: Space
    N: int
    mask: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        if self.N < 2:
            raise ValueError("N must be >= 2")
        mask = np.asarray(self.mask, dtype=bool).reshape(-1)
        vals = np.asarray(self.values, dtype=np.int64).reshape(-1)
        if mask.shape != (self.space.size,) or vals.shape != (self.space.size,):
            raise ValueError(f"mask and values must have {self.space.size} entries")
        vals = np.where(mask, vals % self.N, 0)
        mask.flags.writeable = False
        vals.flags.writeable = False
        object.__setattr__(self, "mask", mask)
        object.__setattr__(self, "values", vals)

    @classmethod
    def total(cls, space: Space, N: int, values) -> "GroupFun":
        return cls(space, N, np.ones(space.size, dtype=bool), values)

    @classmethod
    def from_poly(cls, P: PolyFun, N: int | None = None, mask=None) -> "GroupFun":
        """The polynomial read in Z/p; only meaningful over a prime field."""
        F = P.space.field
        if not F.is_prime:
            raise ValueError("polynomial-induced Z/N functions need a prime field")
        N = F.p if N is None else N
        if N != F.p:
            raise ValueError(f"a polynomial over F_{F.p} induces a Z/{F.p} function, not Z/{N}")
        if mask is None:
            mask = np.ones(P.space.size, dtype=bool)
        return cls(P.space, N, mask, eval_table(P))

    @property
    def is_total(self) -> bool:
        return bool(self.mask.all())

    @property
    def members(self) -> np.ndarray:
        return np.flatnonzero(self.mask)

    def restrict(self, mask) -> "GroupFun":
        mask = np.asarray(mask, dtype=bool)
        if np.any(mask & ~self.mask):
            raise DomainError("restriction mask leaves the domain")
        return GroupFun(self.space, self.N, mask, self.values)

    def with_values(self, values) -> "GroupFun":
        return GroupFun(self.space, self.N, self.mask, values)

    def __call__(self, x):
        x = np.asarray(x, dtype=np.int64)
        if not np.all(self.mask[x]):
            raise DomainError("point outside the function's domain")
        return self.values[x]

    def __eq__(self, other) -> bool:
        if not isinstance(other, GroupFun):
            return NotImplemented
        return (
            self.space == other.space
            and self.N == other.N
            and np.array_equal(self.mask, other.mask)
            and np.array_equal(self.values, other.values)
        )

    __hash__ = None


def additive_derivative(f: GroupFun, h: int) -> GroupFun:
    """x -> f(x+h) - f(x)."""
    if not f.is_total:
        raise DomainError("additive derivative needs a function on all of V")
    S = f.space
    S.check(h)
    shifted = f.values[S.add(S.points(), int(h))]
    return GroupFun.total(S, f.N, shifted - f.values)


# -- multilinear forms and bias ---------------------------------------------------

@dataclass(frozen=True)
class MultilinearEval:
    """(x; v_1..v_d) -> sum_w (-1)^(d-|w|) P(x + w.v)."""

    P: PolyFun
    d: int
    _table: np.ndarray | None = dc_field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.d < 1:
            raise ValueError("arity must be >= 1")
        if self.P.space.size <= (1 << 22):
            object.__setattr__(self, "_table", eval_table(self.P))

    def _P(self, pts):
        if self._table is not None:
            return self._table[pts]
        return poly_eval(self.P, pts)

    def __call__(self, x, vs):
        S = self.P.space
        F = S.field
        vs = np.asarray(vs, dtype=np.int64)
        single = vs.ndim == 1
        vs = vs.reshape(-1, self.d)
        x = np.broadcast_to(np.asarray(x, dtype=np.int64), (vs.shape[0],))
        acc = np.zeros(vs.shape[0], dtype=np.int64)
        pts = [x.copy()]
        for i in range(self.d):
            pts += [S.add(p, vs[:, i]) for p in pts]
        for w, pt in enumerate(pts):
            val = self._P(pt)
            if (self.d - bin(w).count("1")) % 2:
                val = F.neg(val)
            acc = F.add(acc, val)
        return int(acc[0]) if single else acc


def multilinear_form(P: PolyFun, d: int) -> MultilinearEval:
    return MultilinearEval(P, d)


def bias(P: PolyFun, budget: int | None = None) -> float:
    """|E_x e_q(P(x))|."""
    T = eval_table(P, budget)
    return float(abs(P.space.field.char(T).mean()))


def multilinear_bias(P: PolyFun, d: int | None = None, budget: int | None = None) -> float:
    """|E_{x_1..x_d} e_q(P_d(0 | x_1..x_d))|; d defaults to the reduced degree."""
    S = P.space
    if d is None:
        deg = reduced_degree(P)
        d = 1 if deg == NEG_INF else max(int(deg), 1)
    total = S.size**d
    check_budget("multilinear bias", total, budget)
    form = MultilinearEval(P, d)
    F = S.field
    acc = 0j
    chunk = max(1, _EVAL_CHUNK)
    powers = S.size ** np.arange(d, dtype=np.int64)
    for s in range(0, total, chunk):
        idx = np.arange(s, min(total, s + chunk), dtype=np.int64)
        vs = (idx[:, None] // powers) % S.size
        acc += F.char(form(0, vs)).sum()
    return float(abs(acc / total))


# -- rank ---------------------------------------------------------------------------

# factor-product tables above this many cells are refused
RANK_TABLE_BUDGET = 1 << 24
# residual lookups in the three-term search
RANK_PAIR_BUDGET = 1 << 26


@dataclass
class RankResult:
    rank: int | None
    lower: int
    upper: int
    witness: list = dc_field(default_factory=list)  # [(Q, R), ...] with P = sum Q R
    exact: bool = False


def _bilinear_matrix(P: PolyFun) -> np.ndarray:
    S = P.space
    n = S.n
    basis = [int(S.index(np.eye(n, dtype=np.int64)[i])) for i in range(n)]
    form = MultilinearEval(P, 2)
    vs = np.array([[basis[i], basis[j]] for i in range(n) for j in range(n)], dtype=np.int64)
    return form(0, vs).reshape(n, n)


def bilinear_rank(P: PolyFun) -> int:
    """Rank over F_q of the polarised form (u, v) -> P(u+v) - P(u) - P(v) + P(0)."""
    return P.space.field.matrix_rank(_bilinear_matrix(P))


def _greedy_upper(P: PolyFun, d: int) -> tuple[int, list]:
    """Cover the degree->=d monomials by variables; x_i * (stuff) per chosen
    variable, plus one term 1 * (leftover low-degree part)."""
    S = P.space
    high = [e for e, _ in P.terms if sum(e) >= d]
    chosen: list[int] = []
    left = set(high)
    while left:
        best = max(range(S.n), key=lambda i: (sum(1 for e in left if e[i]), -i))
        chosen.append(best)
        left = {e for e in left if not e[best]}
    groups: dict[int, dict] = {i: {} for i in chosen}
    low: dict = {}
    for e, c in P.terms:
        for i in chosen:
            if e[i]:
                r = list(e)
                r[i] -= 1
                groups[i][tuple(r)] = c
                break
        else:
            low[e] = c
    witness = [(PolyFun.variable(S, i + 1), PolyFun.from_dict(S, g)) for i, g in groups.items()]
    if low:
        witness.append((PolyFun.constant(S, 1), PolyFun.from_dict(S, low)))
    return len(witness), witness


class _ProductIndex:
    """All products c*Q*R of degree-<d factors, up to scalars, keyed by a random
    F_p-linear hash of their value tables so residual keys can be formed by
    subtraction."""

    def __init__(self, space: Space, d: int, budget: int):
        F = space.field
        q, p = F.q, F.p
        self.space = space
        self.monos = monomials(space, d - 1)
        M = len(self.monos)
        nfac = (q**M - 1) // (q - 1)
        nprod = nfac * (nfac + 1) // 2 * (q - 1)
        check_budget("rank search product table", nprod * space.size, budget)
        mt = np.stack([eval_table(PolyFun.from_dict(space, {e: 1})) for e in self.monos])
        rows = []
        for lead in range(M):
            tail = np.array(list(itertools.product(range(q), repeat=M - lead - 1)), dtype=np.int64)
            tail = tail.reshape(q ** (M - lead - 1), M - lead - 1)
            block = np.zeros((tail.shape[0], M), dtype=np.int64)
            block[:, lead] = 1
            block[:, lead + 1:] = tail
            rows.append(block)
        self.C = np.concatenate(rows)
        if F.is_prime:
            fac = (self.C @ mt) % p
        else:
            fac = np.zeros((self.C.shape[0], space.size), dtype=np.int64)
            for k in range(M):
                fac = F.add(fac, F.mul(self.C[:, k:k + 1], mt[k][None, :]))
        self.factors = fac
        ii, jj = np.triu_indices(nfac)
        scalars = np.arange(1, q, dtype=np.int64)
        self.i = np.repeat(ii, q - 1)
        self.j = np.repeat(jj, q - 1)
        self.c = np.tile(scalars, ii.shape[0])
        # hash: K linear functionals over F_p of the digit expansion of a table
        self.K = max(1, int(60 / math.log2(p)))
        rng = np.random.default_rng(0x5EED)
        self.W = rng.integers(0, p, (space.size * F.l, self.K), dtype=np.int64)
        self.p = p
        self.keys = np.empty((self.i.shape[0], self.K), dtype=np.int64)
        step = max(1, (1 << 22) // space.size)
        for s in range(0, self.i.shape[0], step):
            sl = slice(s, s + step)
            prod = F.mul(self.c[sl, None], F.mul(fac[self.i[sl]], fac[self.j[sl]]))
            self.keys[sl] = self.key(prod)
        self.packed = self.pack(self.keys)
        self.order = np.argsort(self.packed, kind="stable")
        self.sorted = self.packed[self.order]

    def digits(self, tables):
        F = self.space.field
        tables = np.asarray(tables, dtype=np.int64)
        if F.is_prime:
            return tables
        d = (tables[..., None] // (F.p ** np.arange(F.l))) % F.p
        return d.reshape(tables.shape[:-1] + (-1,))

    def key(self, tables):
        return (self.digits(tables) @ self.W) % self.p

    def pack(self, keys):
        w = self.p ** np.arange(self.K, dtype=np.int64)
        return (keys * w).sum(-1)

    def lookup(self, keys):
        """Index of some product with each key, or -1."""
        packed = self.pack(keys)
        pos = np.searchsorted(self.sorted, packed)
        pos = np.minimum(pos, self.sorted.shape[0] - 1)
        hit = self.sorted[pos] == packed
        return np.where(hit, self.order[pos], -1)

    def poly(self, row) -> PolyFun:
        return PolyFun.from_dict(self.space, dict(zip(self.monos, self.C[row].tolist())))

    def pair(self, k):
        Q = self.poly(self.i[k]).scale(int(self.c[k]))
        return (Q, self.poly(self.j[k]))

    def table(self, k):
        F = self.space.field
        return F.mul(self.c[k], F.mul(self.factors[self.i[k]], self.factors[self.j[k]]))


def _check_witness(P: PolyFun, witness) -> bool:
    return sum((Q * R for Q, R in witness), PolyFun.zero(P.space)) == P


def rank_exact_small(P: PolyFun, d: int | None = None, max_rank: int = 3,
                     budget: int | None = None, pair_budget: int | None = None) -> RankResult:
    """Minimal r with P = sum_{j<=r} Q_j R_j, deg Q_j, deg R_j < d, plus a witness.

    Raises BudgetExceeded when the factor-product table or the three-term
    search is too large, or when the rank exceeds max_rank."""
    S = P.space
    deg = reduced_degree(P)
    if d is None:
        d = int(deg) if deg != NEG_INF else 2
    if d < 2:
        raise ValueError("rank needs degree >= 2")
    if P.is_zero():
        return RankResult(0, 0, 0, [], True)
    if deg < d:
        return RankResult(1, 1, 1, [(PolyFun.constant(S, 1), P)], True)
    budget = RANK_TABLE_BUDGET if budget is None else budget
    pair_budget = RANK_PAIR_BUDGET if pair_budget is None else pair_budget
    idx = _ProductIndex(S, d, budget)
    target = eval_table(P)
    kP = idx.key(target[None, :])[0]
    p = idx.p

    def confirm(ks):
        w = [idx.pair(k) for k in ks]
        return w if _check_witness(P, w) else None

    excluded = 1  # every rank below this has been ruled out

    def give_up(what, cost, limit):
        err = BudgetExceeded(what, cost, limit)
        err.rank_lower = excluded
        return err

    # r = 1
    k = int(idx.lookup(kP[None, :])[0])
    if k >= 0 and (w := confirm([k])):
        return RankResult(1, 1, 1, w, True)
    excluded = 2
    if max_rank >= 2:
        hits = idx.lookup((kP[None, :] - idx.keys) % p)
        for a in np.flatnonzero(hits >= 0):
            if (w := confirm([a, int(hits[a])])):
                return RankResult(2, 2, 2, w, True)
    excluded = 3
    if max_rank >= 3:
        n = idx.keys.shape[0]
        if n * (n + 1) // 2 > pair_budget:
            raise give_up("three-term rank search", n * (n + 1) // 2, pair_budget)
        for a in range(n):
            res = (kP[None, :] - idx.keys[a][None, :] - idx.keys[a:]) % p
            hits = idx.lookup(res)
            for b in np.flatnonzero(hits >= 0):
                if (w := confirm([a, a + int(b), int(hits[b])])):
                    return RankResult(3, 3, 3, w, True)
    excluded = max_rank + 1
    raise give_up(f"rank search stops at {max_rank}", excluded, max_rank)


def rank_bounds(P: PolyFun, d: int | None = None, budget: int | None = None,
                pair_budget: int | None = None) -> RankResult:
    """Exact rank when the search fits the budget, else (lower, upper) with the
    upper bound from a greedy decomposition and, for d = 2, the lower bound
    ceil(rank(B)/2) from the polarised bilinear form B."""
    deg = reduced_degree(P)
    if d is None:
        d = int(deg) if deg != NEG_INF else 2
    lower = 0
    try:
        return rank_exact_small(P, d, budget=budget, pair_budget=pair_budget)
    except BudgetExceeded as err:
        lower = getattr(err, "rank_lower", 0)
    if d == 2:
        lower = max(lower, -(-bilinear_rank(P) // 2))
    up, w = _greedy_upper(P, d)
    lower = min(lower, up)
    return RankResult(None, lower, up, w, False)


def _projective_vectors(q: int, c: int) -> Iterable[tuple[int, ...]]:
    for lead in range(c):
        for tail in itertools.product(range(q), repeat=c - lead - 1):
            yield (0,) * lead + (1,) + tail


def _combos(Ps: Sequence[PolyFun]):
    S = Ps[0].space
    for coefs in _projective_vectors(S.q, len(Ps)):
        comb = PolyFun.zero(S)
        for a, P in zip(coefs, Ps):
            if a:
                comb = comb + P.scale(a)
        yield coefs, comb


def _buckets(Ps: Sequence[PolyFun]) -> dict[int, list[PolyFun]]:
    if not Ps:
        raise ValueError("empty family")
    out: dict[int, list[PolyFun]] = {}
    for P in Ps:
        deg = reduced_degree(P)
        if deg == NEG_INF or deg < 2:
            raise ValueError(f"family members need degree >= 2, got {format_poly(P)!r}")
        out.setdefault(int(deg), []).append(P)
    return out


def family_rank_bounds(Ps: Sequence[PolyFun], budget: int | None = None,
                       pair_budget: int | None = None) -> tuple[int, int]:
    """(lower, upper) for min_j min over nonzero combinations of the degree-j
    members of their j-rank."""
    lo = up = None
    for j, bucket in sorted(_buckets(Ps).items()):
        for _, comb in _combos(bucket):
            r = rank_bounds(comb, j, budget, pair_budget)
            lo = r.lower if lo is None else min(lo, r.lower)
            up = r.upper if up is None else min(up, r.upper)
    return lo, up


def family_rank(Ps: Sequence[PolyFun], budget: int | None = None,
                pair_budget: int | None = None) -> int:
    """Exact family rank; raises BudgetExceeded if any combination is out of reach."""
    best = None
    for j, bucket in sorted(_buckets(Ps).items()):
        for _, comb in _combos(bucket):
            r = rank_exact_small(comb, j, budget=budget, pair_budget=pair_budget).rank
            best = r if best is None else min(best, r)
            if best == 0:
                return 0
    return best
