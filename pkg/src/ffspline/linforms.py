"""Systems of integer affine forms r_i(v) = sum_j a_ij v_j + w_i, their
Cauchy-Schwarz complexity, and exact pattern counts inside a subset X.

Complexity at j is the least d such that the other forms split into d parts
none of whose affine spans contains r_j.  Shift slots w_i are treated as
extra formal variables, so the analysis runs on the full coefficient rows.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import kernels
from .budget import check_budget
from .cubes import SubsetOracle
from .errors import BudgetExceeded, ParseError
from .field import is_prime
from .gowers import uniformity

INF = math.inf
SEARCH_NODE_BUDGET = 5_000_000


def _natural(name: str):
    m = re.fullmatch(r"([A-Za-z_]+)(\d*)", name)
    return (m.group(1), int(m.group(2)) if m.group(2) else -1) if m else (name, -1)


@dataclass(frozen=True)
class LinFormSystem:
    variables: tuple[str, ...]  # tuple variables v_1..v_r
    slots: tuple[str, ...]  # shift slots w_1..w_s
    coefs: tuple[tuple[int, ...], ...]
    shifts: tuple[tuple[int, ...], ...]
    allow_duplicates: bool = False

    def __post_init__(self):
        if len(self.coefs) != len(self.shifts):
            raise ValueError("coefficient and shift rows differ in number")
        if not self.coefs:
            raise ValueError("empty system")
        for row, sh in zip(self.coefs, self.shifts):
            if len(row) != len(self.variables) or len(sh) != len(self.slots):
                raise ValueError("row length does not match the variables")
        if not self.allow_duplicates and len(set(self.rows())) != len(self.coefs):
            raise ValueError("duplicate forms in system")

    @classmethod
    def from_rows(cls, variables: Sequence[str], rows, slots: Sequence[str] = (), shift_rows=None,
                  allow_duplicates: bool = False) -> "LinFormSystem":
        rows = [tuple(int(a) for a in r) for r in rows]
        if shift_rows is None:
            shift_rows = [(0,) * len(slots) for _ in rows]
        return cls(tuple(variables), tuple(slots), tuple(rows),
                   tuple(tuple(int(a) for a in r) for r in shift_rows), allow_duplicates)

    @classmethod
    def parse(cls, text: str, allow_duplicates: bool = False) -> "LinFormSystem":
        """One form per line, e.g. ``2*v1 - v3 + w1``; names w<k> are shift slots."""
        parsed = []
        names: set[str] = set()
        for raw in text.splitlines():
            line = raw.split("#", 1)[0].replace(" ", "")
            if not line:
                continue
            if not re.fullmatch(r"[+-]?[^+-]+([+-][^+-]+)*", line):
                raise ParseError(f"malformed form {raw!r}")
            form: dict[str, int] = {}
            for sign, term in re.findall(r"([+-]?)([^+-]+)", line):
                m = re.fullmatch(r"(?:(\d+)\*?)?([A-Za-z_][A-Za-z_0-9]*)", term)
                if not m:
                    raise ParseError(f"bad term {term!r} in {raw!r}")
                c = int(m.group(1) or 1) * (-1 if sign == "-" else 1)
                form[m.group(2)] = form.get(m.group(2), 0) + c
                names.add(m.group(2))
            parsed.append(form)
        if not parsed:
            raise ParseError("no forms")
        slots = sorted((x for x in names if re.fullmatch(r"w\d+", x)), key=_natural)
        variables = sorted((x for x in names if x not in slots), key=_natural)
        rows = [[f.get(v, 0) for v in variables] for f in parsed]
        shifts = [[f.get(w, 0) for w in slots] for f in parsed]
        return cls.from_rows(variables, rows, slots, shifts, allow_duplicates)

    def __len__(self) -> int:
        return len(self.coefs)

    @property
    def arity(self) -> int:
        return len(self.variables)

    def rows(self) -> list[tuple[int, ...]]:
        """Full coefficient rows, shift slots appended as variables."""
        return [r + s for r, s in zip(self.coefs, self.shifts)]

    def format_form(self, i: int) -> str:
        parts = []
        for name, c in zip(self.variables + self.slots, self.rows()[i]):
            if not c:
                continue
            sign = "-" if c < 0 else "+"
            mag = "" if abs(c) == 1 else f"{abs(c)}*"
            parts.append(f"{sign} {mag}{name}")
        if not parts:
            return "0"
        s = " ".join(parts)
        return s[2:] if s.startswith("+ ") else "-" + s[2:]

    def format(self) -> str:
        return "\n".join(self.format_form(i) for i in range(len(self))) + "\n"

    def subsystem(self, idx: Sequence[int]) -> "LinFormSystem":
        return LinFormSystem(self.variables, self.slots, tuple(self.coefs[i] for i in idx),
                             tuple(self.shifts[i] for i in idx), self.allow_duplicates)


def cube_system(m: int) -> LinFormSystem:
    """x + w.h over w in {0,1}^m, vertex order as in the cube engine."""
    rows = [[1] + [(w >> i) & 1 for i in range(m)] for w in range(1 << m)]
    return LinFormSystem.from_rows(["x"] + [f"h{i + 1}" for i in range(m)], rows)


def almost_cube_system(m: int) -> LinFormSystem:
    """w.v over w != 0: the almost cube at a fixed base, as forms in v."""
    rows = [[(w >> i) & 1 for i in range(m)] for w in range(1, 1 << m)]
    return LinFormSystem.from_rows([f"v{i + 1}" for i in range(m)], rows)


# -- exact linear algebra over Q or F_p -----------------------------------------------

class _Arith:
    def __init__(self, p: int | None):
        if p is not None and not is_prime(p):
            raise ValueError(f"{p} is not prime")
        self.p = p

    def conv(self, x):
        return Fraction(x) if self.p is None else int(x) % self.p

    def inv(self, x):
        return 1 / x if self.p is None else pow(x, self.p - 2, self.p)

    def norm(self, x):
        return x if self.p is None else x % self.p

    def rref(self, rows):
        M = [[self.conv(a) for a in r] for r in rows]
        piv = []
        r = 0
        ncols = len(M[0]) if M else 0
        for c in range(ncols):
            k = next((i for i in range(r, len(M)) if M[i][c] != 0), None)
            if k is None:
                continue
            M[r], M[k] = M[k], M[r]
            iv = self.inv(M[r][c])
            M[r] = [self.norm(a * iv) for a in M[r]]
            for i in range(len(M)):
                if i != r and M[i][c] != 0:
                    f = M[i][c]
                    M[i] = [self.norm(a - f * b) for a, b in zip(M[i], M[r])]
            piv.append(c)
            r += 1
            if r == len(M):
                break
        return M[:r], piv

    def solve(self, A_cols, b):
        """x with sum_i x_i A_cols[i] = b, or None."""
        if not A_cols:
            return None if any(b) else []
        n = len(A_cols)
        aug = [[A_cols[i][k] for i in range(n)] + [b[k]] for k in range(len(b))]
        R, piv = self.rref(aug)
        if n in piv:
            return None
        x = [self.conv(0)] * n
        for row, c in zip(R, piv):
            x[c] = row[-1]
        return x

    def nullspace(self, rows, ncols):
        R, piv = self.rref(rows) if rows else ([], [])
        free = [c for c in range(ncols) if c not in piv]
        out = []
        for f in free:
            z = [self.conv(0)] * ncols
            z[f] = self.conv(1)
            for row, c in zip(R, piv):
                z[c] = self.norm(-row[f])
            out.append(z)
        return out


def _aug(row):
    return list(row) + [1]


@dataclass
class SpanResult:
    inside: bool
    combination: list | None  # lambda_i with sum = 1, when inside

    def __bool__(self):
        return self.inside


def in_affine_span(target: Sequence[int], forms: Sequence[Sequence[int]], p: int | None = None) -> SpanResult:
    """Is target = sum lambda_i forms_i with sum lambda_i = 1, over Q (p=None)
    or over F_p?"""
    for f in forms:
        if len(f) != len(target):
            raise ValueError("arity mismatch")
    ar = _Arith(p)
    lam = ar.solve([_aug(f) for f in forms], _aug(target))
    if lam is None:
        return SpanResult(False, None)
    return SpanResult(True, lam)


def _separator(ar: _Arith, target, forms):
    """z with <(s,1), z> = 0 for every form s and <(target,1), z> != 0."""
    ncols = len(target) + 1
    t = [ar.conv(a) for a in _aug(target)]
    for z in ar.nullspace([_aug(f) for f in forms], ncols):
        if ar.norm(sum(a * b for a, b in zip(t, z))) != 0:
            if ar.p is None:
                den = math.lcm(*(Fraction(a).denominator for a in z))
                return [int(a * den) for a in z]
            return [int(a) for a in z]
    return None


@dataclass
class PartitionCertificate:
    pivot: int
    parts: list[list[int]]
    separators: list[list[int]]  # one functional (y, c) per part
    span_field: int | None

    @property
    def d(self) -> int:
        return len(self.parts)

    def verify(self, system: LinFormSystem) -> bool:
        rows = system.rows()
        covered = sorted(i for part in self.parts for i in part)
        if covered != sorted(i for i in range(len(rows)) if i != self.pivot):
            return False
        ar = _Arith(self.span_field)
        t = _aug(rows[self.pivot])
        for part, z in zip(self.parts, self.separators):
            if in_affine_span(rows[self.pivot], [rows[i] for i in part], self.span_field):
                return False
            if any(ar.norm(sum(ar.conv(a) * b for a, b in zip(_aug(rows[i]), z))) != 0 for i in part):
                return False
            if ar.norm(sum(ar.conv(a) * b for a, b in zip(t, z))) == 0:
                return False
        return True

    def as_dict(self) -> dict:
        return {"pivot": self.pivot, "parts": self.parts, "separators": self.separators}


@dataclass
class ComplexityAt:
    j: int
    d: float  # math.inf when some single form already spans r_j
    certificate: PartitionCertificate | None
    nodes: int


def cs_complexity_at(system: LinFormSystem, j: int, p: int | None = None,
                     node_budget: int = SEARCH_NODE_BUDGET) -> ComplexityAt:
    rows = system.rows()
    k = len(rows)
    if k > 20:
        raise BudgetExceeded("complexity search over more than 20 forms", k, 20)
    if not 0 <= j < k:
        raise IndexError(f"form index {j} out of range")
    ar = _Arith(p)
    target = rows[j]
    others = [i for i in range(k) if i != j]
    memo: dict[frozenset, bool] = {}

    def spans(block) -> bool:
        key = frozenset(block)
        if key not in memo:
            memo[key] = bool(in_affine_span(target, [rows[i] for i in block], p))
        return memo[key]

    def cert(blocks):
        parts = [sorted(b) for b in blocks]
        seps = [_separator(ar, target, [rows[i] for i in b]) for b in parts]
        return PartitionCertificate(j, parts, seps, p)

    if not others:
        return ComplexityAt(j, 0, PartitionCertificate(j, [], [], p), 0)
    if any(spans([i]) for i in others):
        return ComplexityAt(j, INF, None, 0)
    # forms that are hard to separate go first: fewer choices near the root
    order = sorted(others, key=lambda i: -sum(spans([i, t]) for t in others if t != i))
    greedy: list[list[int]] = []
    for i in order:
        for b in greedy:
            if not spans(b + [i]):
                b.append(i)
                break
        else:
            greedy.append([i])
    best = greedy
    nodes = 0

    def search(d):
        blocks: list[list[int]] = []

        def rec(pos):
            nonlocal nodes
            nodes += 1
            if nodes > node_budget:
                raise BudgetExceeded("complexity search nodes", nodes, node_budget)
            if pos == len(order):
                return True
            i = order[pos]
            for b in blocks:
                b.append(i)
                ok = not spans(b) and rec(pos + 1)
                if ok:
                    return True
                b.pop()
            if len(blocks) < d:
                blocks.append([i])
                if rec(pos + 1):
                    return True
                blocks.pop()
            return False

        return [list(b) for b in blocks] if rec(0) else None

    for d in range(1, len(greedy)):
        found = search(d)
        if found is not None:
            best = found
            break
    return ComplexityAt(j, len(best), cert(best), nodes)


@dataclass
class ComplexityReport:
    value: float
    per_form: list[ComplexityAt]
    span_field: str

    def as_dict(self) -> dict:
        return {
            "complexity": self.value if self.value != INF else "inf",
            "span_field": self.span_field,
            "per_form": [
                {"j": c.j, "d": c.d if c.d != INF else "inf",
                 "certificate": c.certificate.as_dict() if c.certificate else None}
                for c in self.per_form
            ],
        }


def cs_complexity(system: LinFormSystem, p: int | None = None,
                  node_budget: int = SEARCH_NODE_BUDGET) -> ComplexityReport:
    per = [cs_complexity_at(system, j, p, node_budget) for j in range(len(system))]
    return ComplexityReport(max(c.d for c in per), per, "Q" if p is None else f"F_{p}")


# -- counting --------------------------------------------------------------------------

def _shift_points(system: LinFormSystem, space, assignment) -> np.ndarray:
    assignment = assignment or {}
    unknown = set(assignment) - set(system.slots)
    if unknown:
        raise ValueError(f"unknown shift slots {sorted(unknown)}")
    out = []
    for sh in system.shifts:
        x = 0
        for name, c in zip(system.slots, sh):
            if c:
                x = int(space.add(x, space.int_mul(c, int(assignment.get(name, 0)))))
        out.append(x)
    return np.array(out, dtype=np.int64)


def pattern_count(system: LinFormSystem, X: SubsetOracle, assignment: dict | None = None,
                  budget: int | None = None) -> int:
    """#{v in V^r : r_i(v) in X for every i}, shift slots set by ``assignment``."""
    S = X.space
    check_budget("pattern count", S.size**system.arity, budget)
    coefs = np.array(system.coefs, dtype=np.int64).reshape(len(system), system.arity)
    return kernels.pattern_count(X.mask, coefs, _shift_points(system, S, assignment), S)


def nondegenerate(system: LinFormSystem, p: int) -> bool:
    """Pairwise distinct, nonconstant linear parts mod p."""
    parts = [tuple(a % p for a in r) for r in system.coefs]
    return all(any(r) for r in parts) and len(set(parts)) == len(parts)


@dataclass
class CountingReport:
    count: int
    normalized: float  # count / |V|^r
    density_power: float  # delta^|I|
    deviation: float
    eta: float
    bound: float  # |I| eta + 1e-9
    complexity: float
    m: int
    nondegenerate: bool
    verdict: str  # "pass", "fail" or "lemma inapplicable"

    @property
    def passed(self) -> bool:
        return self.verdict != "fail"

    def as_dict(self) -> dict:
        d = dict(self.__dict__)
        if d["complexity"] == INF:
            d["complexity"] = "inf"
        return d


def counting_check(system: LinFormSystem, X: SubsetOracle, m: int, eta: float | None = None,
                   assignment: dict | None = None, budget: int | None = None,
                   workers: int = 1) -> CountingReport:
    """Compare the pattern density with delta^|I|; the telescoping argument
    bounds the gap by |I| * ||1_X - delta||_{U_m} when the system has
    complexity <= m.  Complexity is computed over F_p, p the characteristic."""
    S = X.space
    p = S.field.p
    cx = cs_complexity(system, p).value
    if eta is None:
        eta = uniformity(X, m, budget=budget, workers=workers).eta
    count = pattern_count(system, X, assignment, budget)
    norm = count / S.size**system.arity
    dp = X.density ** len(system)
    dev = abs(norm - dp)
    bound = len(system) * eta + 1e-9
    if cx > m:
        verdict = "lemma inapplicable"
    else:
        verdict = "pass" if dev <= bound else "fail"
    return CountingReport(count, norm, dp, dev, eta, bound, cx, m, nondegenerate(system, p), verdict)
