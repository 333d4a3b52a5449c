import itertools

import numpy as np
import pytest

from ffspline.cubes import (
    AlmostCube, Cube, SubsetOracle, alt_sum, alt_sum_prime, bad_fraction, count_cubes, cube_tuples,
    enumerate_cubes, fiber_statistics, sample_completions, sample_cubes,
)
from ffspline.errors import DomainError, SamplingError
from ffspline.field import Space, field_create
from ffspline.polyfun import GroupFun, PolyFun, eval_table, parse_poly, random_poly
from ffspline.sampling import wilson
from ffspline.variety import VarietySpec, variety_members

F2, F3 = field_create(2), field_create(3)


def brute_cubes(X: SubsetOracle, m: int):
    """Oracle: loop over all (u, v) tuples in plain Python."""
    S = X.space
    out = []
    for tup in itertools.product(range(S.size), repeat=m + 1):
        verts = Cube(tup[0], tup[1:]).vertices(S)
        if X.mask[verts].all():
            out.append(tup)
    return out


def test_alt_sum_examples():
    S = Space(F3, 1)
    c = GroupFun.total(S, 3, np.full(3, 2))
    assert alt_sum(c, Cube(1, (2, 1))) == 0
    lin = GroupFun.total(S, 3, np.arange(3))
    assert alt_sum(lin, Cube(0, (1, 2))) == 0
    sq = GroupFun.total(S, 3, np.arange(3) ** 2)
    assert alt_sum(sq, Cube(0, (1, 1))) == 2


def test_alt_sum_prime_examples():
    S = Space(F3, 1)
    c = GroupFun.total(S, 3, np.full(3, 2))
    assert alt_sum_prime(c, AlmostCube(0, (1, 1))) == (-2) % 3
    lin = GroupFun.total(S, 3, np.arange(3))
    assert alt_sum_prime(lin, AlmostCube(0, (1, 1))) == 0
    part = GroupFun(S, 3, np.array([True, False, True]), np.arange(3))
    with pytest.raises(DomainError):
        alt_sum_prime(part, AlmostCube(0, (1, 1)))


def test_cube_format():
    S = Space(F3, 2)
    assert Cube(S.index([1, 2]), (1, 3)).format(S) == "((1,2) | (1,0), (0,1))"


def test_enumerate_cubes_examples():
    S1 = Space(F2, 1)
    assert count_cubes(SubsetOracle.full(S1), 1) == 4
    S3 = Space(F3, 1)
    single = SubsetOracle.from_members(S3, [0])
    assert [(c.u, c.vs) for c in enumerate_cubes(single, 2)] == [(0, (0, 0))]
    S2 = Space(F2, 2)
    hyper = SubsetOracle(S2, S2.coords(S2.points())[:, 0] == 0)
    assert count_cubes(hyper, 1) == 4


@pytest.mark.parametrize("m", [1, 2])
def test_enumeration_matches_brute_force(m):
    S = Space(F3, 2)
    rng = np.random.default_rng(3)
    X = SubsetOracle(S, rng.random(S.size) < 0.6)
    want = brute_cubes(X, m)
    got = [tuple(r) for r in cube_tuples(X, m)]
    assert sorted(got) == sorted(want)
    assert count_cubes(X, m) == len(want)
    assert count_cubes(X, m, workers=4) == len(want)


def test_bad_fraction_degree_below_m_is_zero():
    S = Space(F3, 3)
    rng = np.random.default_rng(5)
    for _ in range(5):
        P = random_poly(S, 2, rng)
        r = bad_fraction(GroupFun.from_poly(P), SubsetOracle.full(S), 3)
        assert r.mode == "exhaustive" and r.bad == 0


def test_bad_fraction_x1x2_exact_value():
    S = Space(F2, 4)
    f = GroupFun.from_poly(parse_poly(S, "x1*x2"))
    r = bad_fraction(f, SubsetOracle.full(S), 2)
    # f_2(u|v,w) = v1 w2 + v2 w1 is independent of u: bad iff the 2x2 minor is odd
    vw = np.array([(a, b, c, d) for a, b, c, d in itertools.product((0, 1), repeat=4)])
    odd = ((vw[:, 0] * vw[:, 3] + vw[:, 1] * vw[:, 2]) % 2).mean()
    assert r.epsilon == pytest.approx(odd) == pytest.approx(0.375)


def test_single_corruption_counts_incident_cubes():
    S = Space(F2, 3)
    X = SubsetOracle.full(S)
    g = GroupFun.from_poly(parse_poly(S, "x1 + x3"))
    pt = 5
    vals = g.values.copy()
    vals[pt] ^= 1
    f = g.with_values(vals)
    r = bad_fraction(f, X, 2)
    odd = 0
    for u, v, w in itertools.product(range(S.size), repeat=3):
        verts = Cube(u, (v, w)).vertices(S)
        odd += int(np.count_nonzero(verts == pt) % 2)
    assert r.bad == odd


def test_sampled_bad_fraction_wilson_coverage():
    S = Space(F2, 4)
    f = GroupFun.from_poly(parse_poly(S, "x1*x2"))
    X = SubsetOracle.full(S)
    exact = bad_fraction(f, X, 2).epsilon
    hits = 0
    for seed in range(100):
        r = bad_fraction(f, X, 2, samples=1000, seed=seed, mode="sampled")
        assert r.acceptance["accepted"] == 1000 and r.seed == seed
        hits += r.ci_low <= exact <= r.ci_high
    assert hits >= 93


def test_sample_cubes_acceptance_coverage():
    S = Space(F2, 8)
    rng = np.random.default_rng(0)
    X = SubsetOracle(S, rng.random(S.size) < 0.5)
    exact = count_cubes(X, 2) / (X.size * S.size**2)
    assert abs(exact - X.density**3) < 0.02
    hits = 0
    for seed in range(100):
        cubes, stats = sample_cubes(X, 2, 500, seed=seed)
        lo, hi = wilson(stats.accepted, stats.attempts)
        hits += lo <= exact <= hi
    assert hits >= 93
    for c in cubes:
        assert X.mask[c.vertices(S)].all()


def test_sample_cubes_full_space_accepts_everything():
    S = Space(F3, 2)
    _, stats = sample_cubes(SubsetOracle.full(S), 2, 100, seed=0)
    assert stats.acceptance == 1.0


def test_single_point_only_accepts_zero_direction():
    S = Space(F3, 2)
    X = SubsetOracle.from_members(S, [4])
    cubes, _ = sample_cubes(X, 1, 5, seed=0, max_attempts=10_000)
    assert all(c.u == 4 and c.vs == (0,) for c in cubes)


def test_completions_on_full_space():
    S = Space(F3, 2)
    vs, stats = sample_completions(3, SubsetOracle.full(S), 1, 50, seed=0)
    assert vs.shape == (50, 1) and stats.acceptance == 1.0


def test_completion_acceptance_on_quadric():
    S = Space(F3, 4)
    X = variety_members(VarietySpec.parse(S, "x1*x2 + x3*x4"))
    a = 0
    pts = S.points()
    ys = 0
    for v1 in pts:
        third = S.add(pts, v1)
        ys += int(np.count_nonzero(X.mask[v1] & X.mask[pts] & X.mask[third]))
    exact = ys / S.size**2
    assert exact >= 3.0**-4  # |Y| >= q^-n |V^m|
    vs, stats = sample_completions(a, X, 2, 2000, seed=3)
    lo, hi = wilson(stats.accepted, stats.attempts)
    assert lo <= exact <= hi


def test_completion_failure_is_explicit():
    S = Space(F2, 4)
    hyper = SubsetOracle(S, S.coords(S.points())[:, 0] == 0)
    with pytest.raises(SamplingError) as exc:
        sample_completions(S.index([1, 0, 0, 0]), hyper, 2, 10, seed=0)
    assert exc.value.accepted == 0 and exc.value.attempts > 0


def test_fiber_statistics_examples():
    S = Space(F2, 2)
    pts = S.points()
    ident = fiber_statistics(pts, lambda d: d)
    assert (ident.min_fiber, ident.max_fiber, ident.C) == (1, 1, 1.0)
    proj = fiber_statistics(pts, lambda d: S.coords(d[:, 0])[:, :1])
    assert (proj.min_fiber, proj.max_fiber, proj.C, proj.n_fibers) == (2, 2, 1.0, 2)


def test_subset_oracle_basics():
    S = Space(F3, 2)
    X = SubsetOracle.from_members(S, [0, 4, 8])
    assert X.size == 3 and X.density == pytest.approx(1 / 3)
    assert 4 in X and 5 not in X
    with pytest.raises(ValueError):
        SubsetOracle(S, np.ones(5, dtype=bool))


def test_degree_m_poly_has_bad_cubes():
    S = Space(F3, 2)
    P = PolyFun.from_dict(S, {(1, 1): 1})
    assert bad_fraction(GroupFun.from_poly(P), SubsetOracle.full(S), 2).bad > 0
    assert np.array_equal(GroupFun.from_poly(P).values, eval_table(P))
