import cmath

import numpy as np
import pytest

from ffspline.errors import FieldError, ParseError
from ffspline.field import Space, field_create, format_field_spec, parse_field_spec, point_combine


def test_prime_field_arithmetic():
    F = field_create(3)
    assert F.q == 3 and F.is_prime
    assert F.add(2, 2) == 1
    assert F.mul(2, 2) == 1
    assert F.inv(2) == 2
    assert F.neg(1) == 2


def test_f4_from_irreducible_modulus():
    F = field_create(2, 2, [1, 1, 1])  # x^2 + x + 1, highest first
    assert F.q == 4
    w = 2  # the class of x
    assert F.mul(w, w) == F.add(w, 1)  # x^2 = x + 1
    assert all(F.mul(a, F.inv(a)) == 1 for a in range(1, 4))


def test_reducible_modulus_rejected():
    with pytest.raises(FieldError, match="reducible"):
        field_create(2, 2, [1, 0, 1])


def test_non_prime_characteristic_rejected():
    with pytest.raises(FieldError):
        field_create(4)


def test_trace_examples():
    assert field_create(3).trace(2) == 2
    F4 = field_create(2, 2, [1, 1, 1])
    assert F4.trace(0) == 0
    assert F4.trace(2) == 1  # omega + omega^2 = 1


def test_character_examples():
    F3 = field_create(3)
    assert F3.char(0) == pytest.approx(1)
    assert F3.char(1) == pytest.approx(cmath.exp(2j * cmath.pi / 3))
    F4 = field_create(2, 2, [1, 1, 1])
    assert F4.char(2) == pytest.approx(-1)


@pytest.mark.parametrize("spec", ["2", "3", "5", "2^2/111", "2^3/1011", "3^2/101", "2^6/1000011"])
def test_field_axioms_exhaustive(spec):
    F = parse_field_spec(spec)
    els = F.elements()
    x, y, z = np.meshgrid(els, els, els, indexing="ij")
    assert np.array_equal(F.add(x, y), F.add(y, x))
    assert np.array_equal(F.mul(x, y), F.mul(y, x))
    assert np.array_equal(F.add(F.add(x, y), z), F.add(x, F.add(y, z)))
    assert np.array_equal(F.mul(F.mul(x, y), z), F.mul(x, F.mul(y, z)))
    assert np.array_equal(F.mul(x, F.add(y, z)), F.add(F.mul(x, y), F.mul(x, z)))
    assert np.all(F.add(els, F.neg(els)) == 0)
    assert np.all(F.mul(els[1:], F.inv(els[1:])) == 1)


@pytest.mark.parametrize("spec", ["2", "3", "7", "2^2/111", "2^3/1011", "3^2/101", "2^6/1000011"])
def test_trace_linear_and_characters_sum_to_zero(spec):
    F = parse_field_spec(spec)
    els = F.elements()
    a, b = np.meshgrid(els, els, indexing="ij")
    assert np.all(F.trace(F.add(a, b)) == (F.trace(a) + F.trace(b)) % F.p)
    assert abs(F.char(els).sum()) < 1e-9


def test_field_spec_round_trip():
    for spec in ["3", "2^3/1011", "3^2/101"]:
        assert format_field_spec(parse_field_spec(spec)) == spec
    with pytest.raises(ParseError):
        parse_field_spec("three")


def test_point_encoding_round_trip():
    rng = np.random.default_rng(1)
    for spec, n in [("2", 10), ("3", 6), ("2^2/111", 5)]:
        S = Space(parse_field_spec(spec), n)
        x = rng.integers(0, S.size, 10_000)
        assert np.array_equal(S.index(S.coords(x)), x)
        assert S.parse_point(S.format_point(int(x[0]))) == x[0]


def test_point_combine_examples():
    S2 = Space(field_create(2), 2)
    u = S2.index([1, 0])
    vs = [S2.index([1, 1]), S2.index([0, 1])]
    assert point_combine(S2, u, (0, 0), vs) == u
    assert point_combine(S2, u, (1, 1), vs) == S2.index([0, 0])
    S3 = Space(field_create(3), 1)
    assert point_combine(S3, 2, (1, 1), (2, 2)) == 0


def test_space_arithmetic_matches_coordinates():
    S = Space(field_create(3), 3)
    x, y = 17, 23
    want = S.index((S.coords(x) + S.coords(y)) % 3)
    assert S.add(x, y) == want
    assert S.sub(S.add(x, y), y) == x
    assert S.scale(2, x) == S.index((2 * S.coords(x)) % 3)
