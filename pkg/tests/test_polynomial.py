from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from latent_homophily.polynomial import Polynomial

x0, x1 = Polynomial.variable(0), Polynomial.variable(1)

small_int = st.integers(min_value=-5, max_value=5)
exps = st.tuples(*[st.integers(0, 2)] * 6)
polys = st.dictionaries(exps, small_int, max_size=6).map(Polynomial)
points = st.lists(st.fractions(min_value=-2, max_value=2, max_denominator=7), min_size=6, max_size=6)


def test_zero_terms_dropped():
    p = x0 - x0
    assert p.is_zero and len(p) == 0 and p.degree == -1


def test_square_expansion():
    p = (1 - x0) ** 2
    assert p.coefficient((0,) * 6) == 1
    assert p.coefficient((1, 0, 0, 0, 0, 0)) == -2
    assert p.coefficient((2, 0, 0, 0, 0, 0)) == 1
    assert p.degree == 2


def test_exact_evaluation_stays_rational():
    p = Polynomial.constant(Fraction(1, 3)) * x0 * x1
    assert p.evaluate([Fraction(1, 2), 3, 0, 0, 0, 0]) == Fraction(1, 2)


def test_evaluate_many_matches_scalar():
    p = (x0 + 2 * x1) ** 3 - x1
    pts = np.random.default_rng(0).random((20, 6))
    np.testing.assert_allclose(p.evaluate_many(pts), [p.evaluate(list(r)) for r in pts], rtol=1e-14)


def test_json_round_trip_is_exact():
    p = Polynomial({(1, 0, 0, 0, 0, 2): Fraction(-7, 3), (0,) * 6: Fraction(1, 9)})
    data = p.to_json()
    assert {t["coef"] for t in data} == {"-7/3", "1/9"}
    assert Polynomial.from_json(data) == p


@settings(max_examples=60, deadline=None)
@given(polys, polys, points)
def test_ring_homomorphism(p, q, x):
    assert (p * q).evaluate(x) == p.evaluate(x) * q.evaluate(x)
    assert (p + q).evaluate(x) == p.evaluate(x) + q.evaluate(x)
    assert (p - q).evaluate(x) == p.evaluate(x) - q.evaluate(x)


@settings(max_examples=40, deadline=None)
@given(polys)
def test_json_round_trip_property(p):
    assert Polynomial.from_json(p.to_json()) == p


def test_power_rejects_negative():
    with pytest.raises(ValueError):
        x0 ** -1
