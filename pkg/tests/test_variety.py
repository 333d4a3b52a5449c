import numpy as np
import pytest

from ffspline.errors import DomainError, ParseError
from ffspline.field import Space, field_create
from ffspline.polyfun import bilinear_rank, parse_poly
from ffspline.variety import (
    VarietySpec, line_directions, lines_complexity, lines_through, max_certifiable_rank,
    projective_zero_density, random_high_rank_instance, solution_count_anchored, variety_members,
)

F2, F3 = field_create(2), field_create(3)


def test_parse_and_format():
    S = Space(F3, 3)
    spec = VarietySpec.parse(S, "# a comment\nx1*x2 + x3^2\nx1 = 2\n")
    assert spec.codim == 2 and spec.targets == [0, 2] and spec.degrees == [2, 1]
    assert VarietySpec.parse(S, spec.format()).format() == spec.format()
    assert not spec.homogeneous
    with pytest.raises(ParseError):
        VarietySpec.parse(S, "# nothing\n")
    with pytest.raises(ValueError):
        VarietySpec.of([])
    with pytest.raises(ValueError, match="constant"):
        VarietySpec.parse(S, "1")


def test_membership_examples():
    S2 = Space(F2, 2)
    assert variety_members(VarietySpec.parse(S2, "x1")).density == 0.5
    S4 = Space(F3, 4)
    X = variety_members(VarietySpec.parse(S4, "x1*x2 + x3*x4"))
    assert X.size == 33 and 0 in X


def test_membership_agrees_with_evaluation():
    S = Space(F3, 5)
    spec = VarietySpec.parse(S, "x1*x2 + x3*x4 + x5^2\nx1 + x2 + x3 = 1")
    X = variety_members(spec)
    rng = np.random.default_rng(0)
    pts = rng.integers(0, S.size, 10_000)
    direct = np.ones(pts.shape, dtype=bool)
    for P, t in spec.equations:
        direct &= P(pts) == t
    assert np.array_equal(X.mask[pts], direct)
    assert np.array_equal(spec.contains(pts), direct)


def test_homogeneous_variety_is_a_cone():
    S = Space(F3, 4)
    spec = VarietySpec.parse(S, "x1*x2 + x3*x4")
    X = variety_members(spec)
    assert 0 in X
    for t in (1, 2):
        assert np.all(X.mask[S.scale(t, X.members)])


def test_anchored_count_examples():
    S = Space(F3, 4)
    spec = VarietySpec.parse(S, "x1*x2 + x3*x4")
    X = variety_members(spec)
    one = solution_count_anchored(spec, [0])
    assert one.count >= X.size
    a1, a2 = S.index([1, 0, 0, 0]), S.index([0, 0, 1, 0])
    two = solution_count_anchored(spec, [a1, a2])
    # the exponent is D + 1 with D = m * d(d+1)/2 = 2 * 3
    assert two.applicable and two.exponent == 7
    assert two.passed and two.count >= two.bound
    assert two.count >= 3.0 ** (4 - 6)
    three = solution_count_anchored(spec, [a1, a2, S.index([0, 1, 0, 0])])
    assert three.count <= two.count <= one.count


def test_anchored_count_on_a_hyperplane():
    S = Space(F3, 3)
    spec = VarietySpec.parse(S, "x1")
    # anchors sharing x1 shift the hyperplane to the same place
    for anchors in ([0], [S.index([1, 0, 0])], [5, 8, 11]):
        assert solution_count_anchored(spec, anchors).count == 9


def test_anchors_off_the_variety_get_no_bound():
    S = Space(F3, 4)
    spec = VarietySpec.parse(S, "x1*x2 + x3*x4")
    r = solution_count_anchored(spec, [S.index([1, 1, 0, 0])])
    assert not r.applicable and r.bound is None and r.count > 0


def test_lines_examples():
    S = Space(F3, 3)
    hyper = VarietySpec.parse(S, "x1 + x2")
    for x in variety_members(hyper).members[:4]:
        assert lines_through(hyper, x).count == 3**2 - 1
    S4 = Space(F3, 4)
    Q = VarietySpec.parse(S4, "x1*x2 + x3*x4")
    r = lines_through(Q, 0)
    assert r.count == 32 and r.C == 4 and r.bound == 1.0 and r.passed
    with pytest.raises(DomainError):
        lines_through(Q, S4.index([1, 1, 0, 0]))


def test_lines_through_origin_two_ways():
    S = Space(F3, 4)
    spec = VarietySpec.parse(S, "x1*x2 + x3*x4 + x1^2")
    X = variety_members(spec)
    # P(t v) = t^2 P(v): the line through 0 lies in X iff v does
    assert line_directions(spec, 0).sum() == X.size - 1


def test_lines_need_large_field():
    S = Space(F2, 4)
    with pytest.raises(ValueError, match="q > max degree"):
        lines_through(VarietySpec.parse(S, "x1*x2"), 0)


def test_lines_complexity():
    assert lines_complexity([2]) == 4
    assert lines_complexity([2, 3]) == 10


def test_projective_examples():
    S = Space(F3, 3)
    r = projective_zero_density(VarietySpec.parse(S, "x1"))
    assert r.density == pytest.approx((9 - 1) / (27 - 1))
    assert r.density >= 1 / (2 * 9) and r.passed
    S4 = Space(F3, 4)
    r = projective_zero_density(VarietySpec.parse(S4, "x1*x2 + x3*x4"))
    assert r.projective_zeros == 16 and r.projective_size == 40
    assert r.bound == pytest.approx(40 / 54) and r.passed
    with pytest.raises(ValueError):
        projective_zero_density(VarietySpec.parse(S4, "x1 = 1"))


def test_projective_check_runs_when_degree_exceeds_dimension():
    S = Space(F3, 2)
    r = projective_zero_density(VarietySpec.parse(S, "x1*x2\nx1^2 + x2^2"))
    assert r.D + 1 > S.n
    assert r.projective_zeros == 0 and r.bound < 1


def test_high_rank_generator():
    inst = random_high_rank_instance(F2, 6, 2, 1, 3, seed=4)
    assert inst.method == "bilinear-rank" and inst.certified >= 3
    assert bilinear_rank(inst.spec.polys[0]) == 6
    with pytest.raises(ValueError):
        random_high_rank_instance(F3, 2, 2, 1, 3)
    pair = random_high_rank_instance(F3, 4, 2, 2, 2, seed=1)
    assert pair.spec.codim == 2 and pair.certified >= 2
    assert max_certifiable_rank(F2, 5) == 2 and max_certifiable_rank(F3, 5) == 3


def test_high_rank_cubic_uses_bias_proxy():
    inst = random_high_rank_instance(F2, 6, 3, 1, 1, seed=0)
    assert inst.method == "bias-proxy" and inst.certified < inst.threshold


def test_known_rank_three_quadric_certifies():
    S = Space(F2, 6)
    P = parse_poly(S, "x1*x2 + x3*x4 + x5*x6")
    assert -(-bilinear_rank(P) // 2) == 3
