"""Counter-based random streams, rejection sampling and Wilson intervals.

Every random draw is addressed by (seed, stream tag, key..., batch index), so
results do not depend on how work is split across threads.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, asdict
from typing import Callable, Sequence

import numpy as np

from .errors import SamplingError

# stream tags
COMPLETIONS = 1
CUBES = 2
NOISE = 3
MC = 4
SUBSPACE = 5

BATCH = 4096
REJECTION_FACTOR = 10_000
WILSON_Z = 1.959963984540054
MAX_ATTEMPTS = 1 << 28


def rng_for(seed: int, stream: int, *key: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed), int(stream), *map(int, key)])))


def wilson(k: int, n: int, z: float = WILSON_Z) -> tuple[float, float]:
    """Wilson score interval for k successes in n trials."""
    if n == 0:
        return (0.0, 1.0)
    ph = k / n
    den = 1 + z * z / n
    centre = (ph + z * z / (2 * n)) / den
    half = z * math.sqrt(ph * (1 - ph) / n + z * z / (4 * n * n)) / den
    return (max(0.0, centre - half), min(1.0, centre + half))


@dataclass
class SamplingStats:
    attempts: int
    accepted: int
    requested: int
    expected_rate: float
    seed: int

    @property
    def acceptance(self) -> float:
        return self.accepted / self.attempts if self.attempts else 0.0

    def as_dict(self) -> dict:
        d = asdict(self)
        d["acceptance"] = self.acceptance
        return d


def rejection_sample(
    propose: Callable[[np.random.Generator, int], tuple[np.ndarray, np.ndarray]],
    count: int,
    expected_rate: float,
    seed: int,
    stream: int,
    key: Sequence[int] = (),
    strict: bool = True,
    what: str = "rejection sampling",
    max_attempts: int | None = None,
):
    """Draw batches from ``propose(rng, size) -> (candidates, accepted_mask)``
    until ``count`` candidates are accepted.

    The budget is 10^4 expected waits (w = 1/expected_rate) before the first
    acceptance and max(10^4 w, 4 count w) attempts overall.  With strict=False a
    partial sample is returned; with no acceptance at all SamplingError is
    raised either way.
    """
    w = 1.0 / expected_rate if expected_rate > 0 else float("inf")
    first_limit = REJECTION_FACTOR * w
    limit = max(first_limit, 4 * count * w)
    cap = MAX_ATTEMPTS if max_attempts is None else max_attempts
    limit = min(limit, cap)
    first_limit = min(first_limit, cap)
    got: list[np.ndarray] = []
    n_acc = 0
    attempts = 0
    batch = 0
    while n_acc < count:
        if attempts >= limit or (n_acc == 0 and attempts >= first_limit):
            break
        size = int(min(BATCH, max(1, math.ceil(limit - attempts))))
        cand, ok = propose(rng_for(seed, stream, *key, batch), size)
        batch += 1
        idx = np.flatnonzero(ok)
        need = count - n_acc
        if idx.shape[0] >= need:
            idx = idx[:need]
            attempts += int(idx[-1]) + 1
        else:
            attempts += size
        got.append(cand[idx])
        n_acc += idx.shape[0]
    stats = SamplingStats(attempts, n_acc, count, expected_rate, int(seed))
    if n_acc == 0:
        raise SamplingError(f"{what}: nothing accepted, measured acceptance 0", attempts, 0)
    if strict and n_acc < count:
        raise SamplingError(
            f"{what}: budget exhausted at measured acceptance {stats.acceptance:.3g}", attempts, n_acc
        )
    return np.concatenate(got, axis=0), stats


def parallel_map(fn, items, workers: int = 1) -> list:
    """Ordered map; results are identical for any worker count."""
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, items))


def split_range(n: int, parts: int) -> list[tuple[int, int]]:
    parts = max(1, min(parts, n)) if n else 1
    edges = np.linspace(0, n, parts + 1).astype(int)
    return [(int(a), int(b)) for a, b in zip(edges[:-1], edges[1:])]
