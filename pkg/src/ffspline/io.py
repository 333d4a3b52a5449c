"""Text formats for function tables, varieties and form systems.

A function table looks like

    # ffspline function table
    field 3
    dim 2
    N 3
    mask 4 1 4
    values
    0 1 2
    - 1 2
    0 1 2

The mask line lists run lengths over the point index, alternating members and
non-members and starting with members (a leading 0 is allowed).  Values come
in rows of q, ordered by point index; '-' marks a point outside the domain.
"""
from __future__ import annotations

from pathlib import Path

import numpy as np

from .errors import ParseError
from .field import Space, format_field_spec, parse_field_spec
from .linforms import LinFormSystem
from .polyfun import GroupFun
from .variety import VarietySpec

TABLE_MAGIC = "# ffspline function table"


def mask_rle(mask) -> list[int]:
    mask = np.asarray(mask, dtype=bool)
    runs = []
    cur = True
    k = 0
    for b in mask.tolist():
        if b == cur:
            k += 1
        else:
            runs.append(k)
            cur, k = b, 1
    runs.append(k)
    return runs


def mask_from_rle(runs, size: int) -> np.ndarray:
    if any(r < 0 for r in runs) or sum(runs) != size:
        raise ParseError(f"mask runs must be nonnegative and sum to {size}")
    out = np.zeros(size, dtype=bool)
    pos = 0
    for i, r in enumerate(runs):
        if i % 2 == 0:
            out[pos:pos + r] = True
        pos += r
    return out


def format_table(f: GroupFun) -> str:
    S = f.space
    lines = [
        TABLE_MAGIC,
        f"field {format_field_spec(S.field)}",
        f"dim {S.n}",
        f"N {f.N}",
        "mask " + " ".join(map(str, mask_rle(f.mask))),
        "values",
    ]
    toks = [str(int(v)) if m else "-" for v, m in zip(f.values.tolist(), f.mask.tolist())]
    for i in range(0, len(toks), S.q):
        lines.append(" ".join(toks[i:i + S.q]))
    return "\n".join(lines) + "\n"


def parse_table(text: str) -> GroupFun:
    head: dict[str, str] = {}
    body: list[str] = []
    in_values = False
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if in_values:
            body.extend(line.split())
            continue
        if line == "values":
            in_values = True
            continue
        key, _, rest = line.partition(" ")
        if key not in ("field", "dim", "N", "mask"):
            raise ParseError(f"unknown header line {raw!r}")
        head[key] = rest.strip()
    for key in ("field", "dim", "N"):
        if key not in head:
            raise ParseError(f"function table lacks a {key!r} line")
    if not in_values:
        raise ParseError("function table lacks a 'values' section")
    try:
        S = Space(parse_field_spec(head["field"]), int(head["dim"]))
        N = int(head["N"])
        runs = [int(t) for t in head.get("mask", str(S.size)).split()]
    except ValueError as exc:
        raise ParseError(f"bad function table header: {exc}") from exc
    if len(body) != S.size:
        raise ParseError(f"expected {S.size} values, found {len(body)}")
    mask = mask_from_rle(runs, S.size)
    vals = np.zeros(S.size, dtype=np.int64)
    for i, tok in enumerate(body):
        if tok == "-":
            if mask[i]:
                raise ParseError(f"missing value at member point {i}")
            continue
        if not mask[i]:
            raise ParseError(f"value given at non-member point {i}")
        try:
            v = int(tok)
        except ValueError as exc:
            raise ParseError(f"bad value {tok!r}") from exc
        if not 0 <= v < N:
            raise ParseError(f"value {v} outside Z/{N}")
        vals[i] = v
    return GroupFun(S, N, mask, vals)


def read_table(path) -> GroupFun:
    return parse_table(read_text(path))


def write_table(path, f: GroupFun) -> None:
    Path(path).write_text(format_table(f))


def read_variety(path, space: Space) -> VarietySpec:
    return VarietySpec.parse(space, read_text(path))


def read_system(path) -> LinFormSystem:
    return LinFormSystem.parse(read_text(path))


def read_text(path) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc.strerror}") from exc
