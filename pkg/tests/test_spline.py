import numpy as np
import pytest

from ffspline.cubes import SubsetOracle, alt_sum, enumerate_cubes
from ffspline.errors import DomainError, SamplingError, SubspaceSearchError
from ffspline.field import Space, field_create
from ffspline.polyfun import GroupFun, parse_poly
from ffspline.report import to_json
from ffspline.spline import (
    VOTE_CONVENTION, ExtensionAborted, all_flats, completion_vote, correct_at, corrupt, default_flat_dim,
    extend_to_V, noise_experiment, spline_on_X, subspace_poly_test, verify_vanishing,
)
from ffspline.variety import VarietySpec, variety_members

F2, F3, F5 = field_create(2), field_create(3), field_create(5)


def test_completion_vote_examples():
    S = Space(F3, 2)
    f = GroupFun.from_poly(parse_poly(S, "x1 + 2*x2"))
    for a, v1, v2 in [(0, 1, 3), (4, 5, 7), (8, 2, 2)]:
        assert completion_vote(f, a, (v1, v2)) == f(a)
    c = GroupFun.total(S, 3, np.full(S.size, 2))
    assert completion_vote(c, 0, (1, 3)) == 2
    S5 = Space(F5, 1)
    sq = GroupFun.total(S5, 5, np.arange(5) ** 2)
    assert completion_vote(sq, 0, (1, 1, 1)) == 0


def test_completion_vote_needs_vertices_in_domain():
    S = Space(F3, 1)
    f = GroupFun(S, 3, np.array([True, True, False]), np.zeros(3))
    with pytest.raises(DomainError):
        completion_vote(f, 0, (1, 1))


def test_vote_identity_exhaustive():
    S = Space(F3, 2)
    rng = np.random.default_rng(2)
    X = SubsetOracle(S, rng.random(S.size) < 0.7)
    f = GroupFun(S, 3, X.mask, rng.integers(0, 3, S.size))
    for c in enumerate_cubes(X, 2):
        good = alt_sum(f, c) == 0
        assert good == (completion_vote(f, c.u, c.vs) == f(c.u))


def test_correct_at_clean_is_unanimous():
    S = Space(F3, 3)
    f = GroupFun.from_poly(parse_poly(S, "x1 + x3 + 1"))
    X = SubsetOracle.full(S)
    for a in (0, 5, 26):
        t = correct_at(f, X, 2, a, T=50, seed=1)
        assert t.unanimous and t.winner == f(a) and t.margin == 1.0


def test_correct_at_planted_margins():
    S = Space(F3, 4)
    X = SubsetOracle.full(S)
    g = GroupFun.from_poly(parse_poly(S, "x1 + 2*x3"))
    f, _ = corrupt(g, X, 0.02, seed=11)
    for a in range(S.size):
        t = correct_at(f, X, 2, a, T=200, seed=11)
        assert t.winner == g(a) and t.margin > 0.5


def test_correct_at_empty_completions_raise():
    S = Space(F2, 4)
    hyper = SubsetOracle(S, S.coords(S.points())[:, 0] == 0)
    f = GroupFun.total(S, 2, np.zeros(S.size))
    with pytest.raises(SamplingError):
        correct_at(f, hyper, 2, S.index([1, 0, 0, 0]), T=10, seed=0)


def test_spline_on_clean_input_is_identity():
    S = Space(F3, 5)
    X = variety_members(VarietySpec.parse(S, "x1*x2 + x3*x4 + x5^2"))
    g = GroupFun.from_poly(parse_poly(S, "x1 + x4 + 2"), mask=X.mask)
    assert verify_vanishing(g, 2).bad == 0
    r = spline_on_X(g, X, 2, T=100, seed=3)
    assert all(t.unanimous for t in r.tallies)
    assert np.array_equal(r.h.values, g.values)
    assert r.residual.bad == 0 and r.disagreement == 0
    assert r.as_dict()["vote_convention"] == VOTE_CONVENTION


def test_spline_single_point():
    S = Space(F3, 2)
    X = SubsetOracle.from_members(S, [4])
    f = GroupFun(S, 3, X.mask, np.full(S.size, 2))
    r = spline_on_X(f, X, 2, T=20, seed=0)
    assert r.h(4) == 2 and not r.flagged


def test_spline_twice_changes_nothing_on_unanimous_anchors():
    S = Space(F3, 5)
    X = variety_members(VarietySpec.parse(S, "x1*x2 + x3*x4 + x5^2"))
    g = GroupFun.from_poly(parse_poly(S, "x2 + x5"), mask=X.mask)
    f, _ = corrupt(g, X, 0.05, seed=2)
    first = spline_on_X(f, X, 2, T=100, seed=2)
    second = spline_on_X(first.h, X, 2, T=100, seed=5)
    for t in second.tallies:
        if t.unanimous:
            assert second.h(t.anchor) == first.h(t.anchor)


def test_extend_agrees_with_spline_on_unanimous_anchors():
    S = Space(F3, 4)
    X = variety_members(VarietySpec.parse(S, "x1*x2 + x3*x4"))
    g = GroupFun.from_poly(parse_poly(S, "x1 + x2"), mask=X.mask)
    f, _ = corrupt(g, X, 0.03, seed=4)
    on_x = spline_on_X(f, X, 2, T=100, seed=4)
    on_v = extend_to_V(f, X, 2, T=100, seed=4)
    by_anchor = {t.anchor: t for t in on_x.tallies}
    for t in on_v.tallies:
        if X.mask[t.anchor] and t.unanimous and by_anchor[t.anchor].unanimous:
            assert on_v.h(t.anchor) == on_x.h(t.anchor)


def test_extend_full_space_low_degree_is_identity():
    S = Space(F3, 3)
    X = SubsetOracle.full(S)
    f = GroupFun.from_poly(parse_poly(S, "2*x1 + x2"))
    r = extend_to_V(f, X, 2, T=50, seed=0)
    assert np.array_equal(r.h.values, f.values) and r.residual.bad == 0
    assert r.exact_extension is True and r.passed


def test_extend_from_a_hyperplane_aborts():
    S = Space(F2, 4)
    hyper = SubsetOracle(S, S.coords(S.points())[:, 0] == 0)
    f = GroupFun(S, 2, hyper.mask, np.zeros(S.size))
    with pytest.raises(ExtensionAborted) as exc:
        extend_to_V(f, hyper, 2, T=20, seed=0)
    problems = exc.value.problems
    assert len(problems) == 8
    assert all(not p["in_X"] and p["accepted"] == 0 for p in problems)


def test_tie_keeps_value_and_is_flagged(monkeypatch):
    import ffspline.spline as sp

    S = Space(F3, 2)
    X = SubsetOracle.full(S)
    f = GroupFun.total(S, 3, np.arange(S.size) % 3)

    def tie(f, X, m, a, T, seed, max_attempts=None):
        return sp.VoteTally(int(a), 4, {0: 2, 1: 2}, None, 0.0, 0)

    monkeypatch.setattr(sp, "correct_at", tie)
    r = sp.spline_on_X(f, X, 2, T=4, seed=0)
    assert len(r.flagged) == S.size
    assert r.flagged[0]["reason"] == "plurality tie"
    assert np.array_equal(r.h.values, f.values)
    with pytest.raises(ExtensionAborted):
        sp.extend_to_V(f, SubsetOracle.from_members(S, [0, 1, 2]), 2, T=4, seed=0)


def test_verify_vanishing_examples():
    S = Space(F2, 4)
    lin = GroupFun.from_poly(parse_poly(S, "x1 + x2 + 1"))
    assert verify_vanishing(lin, 2).bad == 0
    q = GroupFun.from_poly(parse_poly(S, "x1*x2"))
    exact = verify_vanishing(q, 2)
    assert exact.mode == "exhaustive" and exact.epsilon == pytest.approx(0.375)
    sampled = verify_vanishing(q, 2, mode="sampled", samples=5000, seed=3)
    assert sampled.ci_low <= exact.epsilon <= sampled.ci_high


def test_default_flat_dimension():
    assert [default_flat_dim(2, 2, m) for m in (1, 2, 3)] == [1, 2, 3]
    assert [default_flat_dim(3, 3, m) for m in (1, 2, 3, 4)] == [1, 1, 2, 2]
    assert default_flat_dim(5, 5, 6) == 2
    assert default_flat_dim(4, 2, 3) == 2


def test_all_flats_count():
    S = Space(F2, 4)
    flats = all_flats(SubsetOracle.full(S), 2)
    # Gaussian binomial [4 choose 2]_2 = 35 subspaces, 4 cosets each
    assert len(flats) == 35 * 4


def test_subspace_test_examples():
    S = Space(F2, 4)
    X = SubsetOracle.full(S)
    low = GroupFun.from_poly(parse_poly(S, "x1 + x3"))
    assert subspace_poly_test(low, X, 2, exhaustive=True).failing == 0
    q = GroupFun.from_poly(parse_poly(S, "x1*x2"))
    r = subspace_poly_test(q, X, 2, exhaustive=True)
    assert r.l == 2 and r.failing > 0 and r.example["degree"] == 2
    S3 = Space(F3, 3)
    r = subspace_poly_test(GroupFun.from_poly(parse_poly(S3, "x1^2")), SubsetOracle.full(S3), 2, samples=30)
    assert r.l == 1 and r.tested == 30


def test_subspace_test_on_flat_inside_variety():
    S = Space(F3, 4)
    X = variety_members(VarietySpec.parse(S, "x1*x2 + x3*x4"))
    f = GroupFun.from_poly(parse_poly(S, "x1 + x3"), mask=X.mask)
    r = subspace_poly_test(f, X, 3, l=2, samples=20, seed=1)
    assert r.failing == 0 and r.tested == 20


def test_subspace_search_failure_names_depth():
    S = Space(F3, 3)
    X = SubsetOracle.from_members(S, [0, 1, 2])  # a single line
    f = GroupFun(S, 3, X.mask, np.zeros(S.size))
    with pytest.raises(SubspaceSearchError) as exc:
        subspace_poly_test(f, X, 3, l=2, samples=3, restarts=5)
    assert exc.value.reached_dim == 1


def test_corrupt_counts():
    S = Space(F3, 4)
    X = SubsetOracle.full(S)
    g = GroupFun.from_poly(parse_poly(S, "x1"))
    f, pts = corrupt(g, X, 0.02, seed=0)
    assert len(pts) == 2 and np.count_nonzero(f.values != g.values) == 2
    f0, pts0 = corrupt(g, X, 0.0, seed=0)
    assert len(pts0) == 0 and np.array_equal(f0.values, g.values)


def test_noise_experiment_examples():
    S = Space(F3, 4)
    X = SubsetOracle.full(S)
    g = parse_poly(S, "x1 + 2*x2")
    rows = noise_experiment(g, X, 2, [0.0, 0.02, 0.5], T=200, seed=1)
    assert rows[0].recovery == 1.0 and rows[0].epsilon == 0.0
    assert rows[1].recovery == 1.0
    assert rows[2].recovery < 1.0
    with pytest.raises(ValueError):
        noise_experiment(parse_poly(S, "x1*x2"), X, 2, [0.0])


def test_reports_do_not_depend_on_workers():
    S = Space(F3, 4)
    X = SubsetOracle.full(S)
    g = GroupFun.from_poly(parse_poly(S, "x1 + x4"))
    f, _ = corrupt(g, X, 0.05, seed=6)
    a = spline_on_X(f, X, 2, T=60, seed=6, workers=1)
    b = spline_on_X(f, X, 2, T=60, seed=6, workers=8)
    assert to_json(a.as_dict()) == to_json(b.as_dict())
    assert np.array_equal(a.h.values, b.h.values)
