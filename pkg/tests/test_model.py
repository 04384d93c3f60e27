from fractions import Fraction

import numpy as np
import pytest

from latent_homophily.model import (ObservableSet, constraint_polys, joint_observable_polys,
                                    sequence_probability_poly, transition_counters)
from latent_homophily.polynomial import Polynomial
from latent_homophily.statistics import encode_outcome

from oracles import all_sequences, forward_chain_probability, pair_probability

a0, ap, am, b0, bp, bm = (Polynomial.variable(i) for i in range(6))


@pytest.mark.parametrize("seq, expected", [
    ((1, 1, 1), (0, 0, 2, 0)),
    ((1, -1, 1), (1, 1, 0, 0)),
    ((-1, -1, 1), (0, 1, 0, 1)),
])
def test_transition_counter_examples(seq, expected):
    assert tuple(transition_counters(seq)) == expected


def test_counter_identity_all_sequences():
    for T in (2, 3, 4, 5):
        for seq in all_sequences(T):
            assert sum(transition_counters(seq)) == T - 1


def test_counters_need_two_states():
    with pytest.raises(ValueError):
        transition_counters((1,))


def test_rejects_non_binary_state():
    with pytest.raises(ValueError):
        transition_counters((1, 0, 1))


@pytest.mark.parametrize("seq, expected", [
    ((1, 1, 1), a0 * (1 - ap) ** 2),
    ((-1, -1, -1), (1 - a0) * (1 - am) ** 2),
    ((1, -1, 1), a0 * ap * am),
])
def test_sequence_poly_examples(seq, expected):
    assert sequence_probability_poly(seq, "A") == expected


def test_role_b_uses_beta_variables():
    assert sequence_probability_poly((1, 1, 1), "B") == b0 * (1 - bp) ** 2
    with pytest.raises(ValueError):
        sequence_probability_poly((1, 1), "C")


def test_joint_poly_all_plus():
    obs = joint_observable_polys(3)
    assert obs.polys[63] == a0 * (1 - ap) ** 2 * b0 * (1 - bp) ** 2


@pytest.mark.parametrize("T", [2, 3])
def test_uniform_point_gives_uniform_outcomes(T):
    obs = joint_observable_polys(T)
    vals = [p.evaluate([Fraction(1, 2)] * 6) for p in obs.polys]
    assert all(v == Fraction(1, 4 ** T) for v in vals)
    assert sum(vals) == 1


def test_joint_polys_match_forward_chains():
    obs = joint_observable_polys(3)
    rng = np.random.default_rng(11)
    for x in rng.random((25, 6)):
        vals = obs.evaluate(x)
        for a in all_sequences(3):
            for b in all_sequences(3):
                assert vals[encode_outcome(a, b)] == pytest.approx(pair_probability(a, b, x), abs=1e-13)


def test_sequence_poly_exact_against_forward_chain():
    x = [Fraction(1, 3), Fraction(2, 7), Fraction(5, 11)]
    for seq in all_sequences(4):
        poly = sequence_probability_poly(seq, "A")
        assert poly.evaluate(x + [0, 0, 0]) == forward_chain_probability(seq, *x)


def test_degree_bounds():
    for T in (2, 3):
        obs = joint_observable_polys(T)
        assert obs.max_degree <= 2 * T
        for seq in all_sequences(T):
            assert sequence_probability_poly(seq).degree <= T


def test_sum_is_identically_one():
    total = sum(joint_observable_polys(3).polys, Polynomial())
    assert total == Polynomial.constant(1)


def test_nonnegative_on_box():
    vals = joint_observable_polys(3).evaluate_many(np.random.default_rng(5).random((500, 6)))
    assert vals.min() >= -1e-12


def test_moments_of_mixture():
    obs = joint_observable_polys(3)
    pts = np.random.default_rng(2).random((2, 6))
    np.testing.assert_allclose(obs.moments([0.25, 0.75], pts), 0.25 * obs.evaluate(pts[0]) + 0.75 * obs.evaluate(pts[1]))


def test_constraint_examples():
    g = constraint_polys()
    assert len(g) == 6
    assert g[0].evaluate([0] * 6) == 0
    assert g[0].evaluate([Fraction(1, 2)] + [0] * 5) == Fraction(1, 4)
    assert g[0].evaluate([Fraction(3, 2)] + [0] * 5) == Fraction(-3, 4)


def test_observable_set_length():
    obs = joint_observable_polys(2)
    assert isinstance(obs, ObservableSet) and len(obs) == 16
    with pytest.raises(ValueError):
        joint_observable_polys(1)
