"""Finite fields F_q = F_{p^l}, the additive character e_q, and points of F_q^n.

Field elements are integers in [0, q): the base-p digits of an index are the
coefficients (lowest degree first) of the residue class modulo the field's
defining polynomial.  Points of V = F_q^n are integers in [0, q^n) whose
base-q digits are the coordinates, x_1 being the least significant digit.
"""
from __future__ import annotations

import itertools
import math
import re
from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np

from .errors import FieldError, ParseError

# full q x q tables below this size, log/antilog tables below LOG_MAX_Q
TABLE_MAX_Q = 1024
LOG_MAX_Q = 1 << 16
# full point-addition table when |V| <= this
POINT_TABLE_MAX = 2048


def is_prime(p: int) -> bool:
    if p < 2:
        return False
    if p < 4:
        return True
    if p % 2 == 0:
        return False
    for d in range(3, math.isqrt(p) + 1, 2):
        if p % d == 0:
            return False
    return True


# -- polynomials over F_p as coefficient lists, lowest degree first ---------

def _trim(a: list[int]) -> list[int]:
    while a and a[-1] == 0:
        a.pop()
    return a


def _poly_mod(a: Sequence[int], m: Sequence[int], p: int) -> list[int]:
    a = _trim([c % p for c in a])
    m = _trim([c % p for c in m])
    inv_lead = pow(m[-1], p - 2, p)
    while len(a) >= len(m):
        shift = len(a) - len(m)
        factor = a[-1] * inv_lead % p
        for i, c in enumerate(m):
            a[shift + i] = (a[shift + i] - factor * c) % p
        _trim(a)
    return a


def _poly_mulmod(a: Sequence[int], b: Sequence[int], m: Sequence[int], p: int) -> list[int]:
    out = [0] * (len(a) + len(b))
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                out[i + j] = (out[i + j] + x * y) % p
    return _poly_mod(out, m, p)


def is_irreducible(modulus_low_first: Sequence[int], p: int) -> bool:
    """Trial division by every monic polynomial of degree <= l/2."""
    mod = _trim([c % p for c in modulus_low_first])
    deg = len(mod) - 1
    if deg < 1:
        return False
    for d in range(1, deg // 2 + 1):
        for tail in itertools.product(range(p), repeat=d):
            g = list(tail) + [1]
            if not _poly_mod(mod, g, p):
                return False
    return True


def _digits(x: int, base: int, width: int) -> list[int]:
    out = []
    for _ in range(width):
        x, r = divmod(x, base)
        out.append(r)
    return out


def _undigits(ds: Sequence[int], base: int) -> int:
    return sum(int(d) * base**i for i, d in enumerate(ds))


@dataclass(frozen=True)
class Field:
    """The finite field F_{p^l}; build with :func:`field_create`."""

    p: int
    l: int
    modulus: tuple[int, ...]  # monic, lowest degree first, length l + 1

    @property
    def q(self) -> int:
        return self.p**self.l

    @property
    def is_prime(self) -> bool:
        return self.l == 1

    def __repr__(self) -> str:
        return f"Field({format_field_spec(self)!r})"

    def elements(self) -> np.ndarray:
        return np.arange(self.q, dtype=np.int64)

    # -- tables -------------------------------------------------------------

    @cached_property
    def _exp_log(self):
        """Antilog/log tables w.r.t. a primitive element (q <= LOG_MAX_Q)."""
        q, p = self.q, self.p
        order = q - 1
        for g in range(2, q) if q > 2 else [1]:
            gd = _digits(g, p, self.l)
            powers = [1]
            cur = [1]
            for _ in range(order - 1):
                cur = _poly_mulmod(cur, gd, self.modulus, p)
                powers.append(_undigits(cur, p))
            if len(set(powers)) == order:
                exp = np.array(powers + powers, dtype=np.int64)
                log = np.zeros(q, dtype=np.int64)
                log[exp[:order]] = np.arange(order)
                return exp, log
        raise FieldError("no primitive element found; modulus is not irreducible")

    @cached_property
    def add_table(self) -> np.ndarray | None:
        if self.q > TABLE_MAX_Q:
            return None
        e = self.elements()
        return self._add_digits(e[:, None], e[None, :])

    @cached_property
    def mul_table(self) -> np.ndarray | None:
        if self.q > TABLE_MAX_Q:
            return None
        e = self.elements()
        if self.is_prime:
            return (e[:, None] * e[None, :]) % self.p
        return self._mul_log(e[:, None], e[None, :])

    @cached_property
    def neg_table(self) -> np.ndarray:
        e = self.elements()
        d = (e[:, None] // self.p ** np.arange(self.l)) % self.p
        return ((-d) % self.p * self.p ** np.arange(self.l)).sum(-1)

    @cached_property
    def inv_table(self) -> np.ndarray:
        inv = np.zeros(self.q, dtype=np.int64)
        if self.is_prime:
            for a in range(1, self.q):
                inv[a] = pow(a, self.p - 2, self.p)
        else:
            exp, log = self._exp_log
            nz = np.arange(1, self.q)
            inv[nz] = exp[(-log[nz]) % (self.q - 1)]
        return inv

    @cached_property
    def trace_table(self) -> np.ndarray:
        """tr(a) = sum_{i<l} a^(p^i), an element of the prime subfield."""
        e = self.elements()
        acc = np.zeros(self.q, dtype=np.int64)
        cur = e.copy()
        for _ in range(self.l):
            acc = self.add(acc, cur)
            cur = self.pow(cur, self.p)
        if np.any(acc >= self.p):
            raise FieldError("trace left the prime subfield; modulus is broken")
        return acc

    @cached_property
    def char_table(self) -> np.ndarray:
        return np.exp(2j * np.pi * self.trace_table / self.p)

    # -- vectorised arithmetic -----------------------------------------------

    def _add_digits(self, a, b):
        a = np.asarray(a, dtype=np.int64)
        b = np.asarray(b, dtype=np.int64)
        if self.is_prime:
            return (a + b) % self.p
        out = np.zeros(np.broadcast(a, b).shape, dtype=np.int64)
        w = 1
        for _ in range(self.l):
            out += ((a // w + b // w) % self.p) * w
            w *= self.p
        return out

    def _mul_log(self, a, b):
        exp, log = self._exp_log
        a = np.asarray(a, dtype=np.int64)
        b = np.asarray(b, dtype=np.int64)
        r = exp[log[a] + log[b]]
        return np.where((a == 0) | (b == 0), 0, r)

    def add(self, a, b):
        if self.is_prime:
            return (np.asarray(a, dtype=np.int64) + b) % self.p
        tab = self.add_table
        if tab is not None:
            return tab[a, b]
        return self._add_digits(a, b)

    def neg(self, a):
        if self.is_prime:
            return (-np.asarray(a, dtype=np.int64)) % self.p
        if self.q <= LOG_MAX_Q:
            return self.neg_table[a]
        a = np.asarray(a, dtype=np.int64)
        out = np.zeros_like(a)
        w = 1
        for _ in range(self.l):
            out += ((-(a // w)) % self.p) * w
            w *= self.p
        return out

    def sub(self, a, b):
        return self.add(a, self.neg(b))

    def mul(self, a, b):
        if self.is_prime:
            return (np.asarray(a, dtype=np.int64) * b) % self.p
        tab = self.mul_table
        if tab is not None:
            return tab[a, b]
        if self.q <= LOG_MAX_Q:
            return self._mul_log(a, b)
        f = np.vectorize(
            lambda x, y: _undigits(
                _poly_mulmod(_digits(x, self.p, self.l), _digits(y, self.p, self.l), self.modulus, self.p),
                self.p,
            ),
            otypes=[np.int64],
        )
        return f(a, b)

    def inv(self, a):
        a = np.asarray(a, dtype=np.int64)
        if np.any(a == 0):
            raise ZeroDivisionError("0 has no inverse in a field")
        if self.q <= LOG_MAX_Q:
            return self.inv_table[a]
        return self.pow(a, self.q - 2)

    def pow(self, a, e: int):
        a = np.asarray(a, dtype=np.int64)
        result = np.ones_like(a)
        base = a.copy()
        e = int(e)
        if e < 0:
            raise ValueError("negative exponent")
        while e:
            if e & 1:
                result = self.mul(result, base)
            base = self.mul(base, base)
            e >>= 1
        return result

    def trace(self, a):
        if self.q <= LOG_MAX_Q:
            return self.trace_table[a]
        acc = np.zeros_like(np.asarray(a, dtype=np.int64))
        cur = np.asarray(a, dtype=np.int64)
        for _ in range(self.l):
            acc = self.add(acc, cur)
            cur = self.pow(cur, self.p)
        return acc

    def char(self, a):
        """e_q(a) = exp(2 pi i tr(a) / p)."""
        return np.exp(2j * np.pi * np.asarray(self.trace(a)) / self.p)

    def from_int(self, k: int) -> int:
        """The image of the integer k in the prime subfield."""
        return k % self.p

    # -- linear algebra over F_q ----------------------------------------------

    def row_reduce(self, M) -> tuple[np.ndarray, list[int]]:
        """Reduced row echelon form and pivot columns."""
        R = np.array(M, dtype=np.int64, copy=True)
        if R.ndim != 2:
            raise ValueError("row_reduce expects a matrix")
        rows, cols = R.shape
        pivots: list[int] = []
        r = 0
        for c in range(cols):
            if r == rows:
                break
            nz = np.nonzero(R[r:, c])[0]
            if nz.size == 0:
                continue
            k = r + nz[0]
            if k != r:
                R[[r, k]] = R[[k, r]]
            R[r] = self.mul(R[r], self.inv(R[r, c]))
            for i in range(rows):
                if i != r and R[i, c]:
                    R[i] = self.sub(R[i], self.mul(R[i, c], R[r]))
            pivots.append(c)
            r += 1
        return R, pivots

    def matrix_rank(self, M) -> int:
        M = np.asarray(M)
        if M.size == 0:
            return 0
        return len(self.row_reduce(M)[1])

    def solve(self, A, b) -> np.ndarray | None:
        """One solution x of A x = b, or None when the system is inconsistent."""
        A = np.asarray(A, dtype=np.int64)
        b = np.asarray(b, dtype=np.int64).reshape(-1, 1)
        aug = np.hstack([A, b])
        R, piv = self.row_reduce(aug)
        ncols = A.shape[1]
        if ncols in piv:
            return None
        x = np.zeros(ncols, dtype=np.int64)
        for row, c in enumerate(piv):
            x[c] = R[row, -1]
        return x


def field_create(p: int, l: int = 1, modulus=None) -> Field:
    """Build F_{p^l}.

    ``modulus`` is either a string such as ``"x^2+x+1"`` or a coefficient
    sequence written highest degree first (``[1, 1, 1]`` for x^2+x+1).  A
    prime field needs none.
    """
    if not is_prime(p):
        raise FieldError(f"{p} is not prime")
    if l < 1:
        raise FieldError("extension degree must be >= 1")
    if l == 1 and modulus is None:
        return Field(p, 1, (0, 1))
    if modulus is None:
        raise FieldError(f"F_{p}^{l} needs a modulus")
    if isinstance(modulus, str):
        low = _parse_univariate(modulus, p)
    else:
        low = [int(c) % p for c in reversed(list(modulus))]
    low = _trim(low)
    if len(low) - 1 != l:
        raise FieldError(f"modulus has degree {len(low) - 1}, expected {l}")
    if low[-1] != 1:
        inv = pow(low[-1], p - 2, p)
        low = [c * inv % p for c in low]
    if not is_irreducible(low, p):
        raise FieldError("reducible modulus")
    return Field(p, l, tuple(low))


def _parse_univariate(text: str, p: int) -> list[int]:
    text = text.replace(" ", "")
    coeffs: dict[int, int] = {}
    for sign, term in re.findall(r"([+-]?)([^+-]+)", text):
        m = re.fullmatch(r"(\d*)\*?(x(?:\^(\d+))?)?", term)
        if not m or (not m.group(1) and not m.group(2)):
            raise ParseError(f"bad term {term!r} in {text!r}")
        c = int(m.group(1)) if m.group(1) else 1
        e = 0 if not m.group(2) else int(m.group(3) or 1)
        coeffs[e] = (coeffs.get(e, 0) + (-c if sign == "-" else c)) % p
    deg = max(coeffs) if coeffs else 0
    return [coeffs.get(i, 0) for i in range(deg + 1)]


def parse_field_spec(spec: str) -> Field:
    """Parse ``"p"`` or ``"p^l/coeffs"``; coefficients highest degree first,
    either as a digit string (``"2^3/1011"``) or comma separated."""
    spec = spec.strip()
    m = re.fullmatch(r"(\d+)(?:\^(\d+))?(?:/([\d,]+))?", spec)
    if not m:
        raise ParseError(f"bad field spec {spec!r}")
    p = int(m.group(1))
    l = int(m.group(2) or 1)
    mod = m.group(3)
    if mod is None:
        return field_create(p, l)
    coeffs = [int(c) for c in mod.split(",")] if "," in mod else [int(c) for c in mod]
    return field_create(p, l, coeffs)


def format_field_spec(F: Field) -> str:
    if F.is_prime:
        return str(F.p)
    hi = list(reversed(F.modulus))
    body = "".join(map(str, hi)) if F.p < 10 else ",".join(map(str, hi))
    return f"{F.p}^{F.l}/{body}"


@dataclass(frozen=True)
class Space:
    """V = F_q^n with points encoded as integers in [0, q^n)."""

    field: Field
    n: int

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("dimension must be >= 1")

    @property
    def q(self) -> int:
        return self.field.q

    @property
    def size(self) -> int:
        return self.field.q**self.n

    @cached_property
    def _weights(self) -> np.ndarray:
        return self.q ** np.arange(self.n, dtype=np.int64)

    def coords(self, idx) -> np.ndarray:
        idx = np.asarray(idx, dtype=np.int64)
        return (idx[..., None] // self._weights) % self.q

    def index(self, coords) -> np.ndarray:
        c = np.asarray(coords, dtype=np.int64)
        if c.shape[-1] != self.n:
            raise ValueError(f"expected {self.n} coordinates, got {c.shape[-1]}")
        return (c * self._weights).sum(-1)

    def points(self) -> np.ndarray:
        return np.arange(self.size, dtype=np.int64)

    @cached_property
    def add_table(self) -> np.ndarray | None:
        if self.size > POINT_TABLE_MAX:
            return None
        pts = self.points()
        if self.field.is_prime:
            c = self.coords(pts)
            return self.index((c[:, None, :] + c[None, :, :]) % self.q)
        return self.index(self.field.add(self.coords(pts)[:, None, :], self.coords(pts)[None, :, :]))

    def add(self, x, y):
        tab = self.add_table
        if tab is not None:
            return tab[x, y]
        return self.index(self.field.add(self.coords(x), self.coords(y)))

    def neg(self, x):
        return self.index(self.field.neg(self.coords(x)))

    def sub(self, x, y):
        return self.add(x, self.neg(y))

    def scale(self, c, x):
        """Field scalar c times point x."""
        c = np.asarray(c, dtype=np.int64)
        return self.index(self.field.mul(c[..., None], self.coords(x)))

    def int_mul(self, k: int, x):
        return self.scale(self.field.from_int(k), x)

    def check(self, x) -> None:
        x = np.asarray(x)
        if np.any((x < 0) | (x >= self.size)):
            raise ValueError(f"point index out of range for F_{self.q}^{self.n}")

    def parse_point(self, text: str) -> int:
        parts = [t for t in re.split(r"[,\s()]+", text.strip()) if t]
        if len(parts) != self.n:
            raise ParseError(f"point {text!r} needs {self.n} coordinates")
        vals = [int(t) for t in parts]
        if any(not 0 <= v < self.q for v in vals):
            raise ParseError(f"coordinate out of range in {text!r}")
        return int(self.index(vals))

    def format_point(self, x) -> str:
        return "(" + ",".join(str(int(c)) for c in self.coords(int(x))) + ")"


def point_combine(space: Space, u, omega: Sequence[int], vs: Sequence[int]) -> int:
    """u + sum_i omega_i v_i."""
    if len(omega) != len(vs):
        raise ValueError("omega and directions have different lengths")
    out = int(u)
    for w, v in zip(omega, vs):
        if w:
            out = int(space.add(out, int(v)))
    return out
