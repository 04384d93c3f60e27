"""Reference computations written independently of the package internals."""
from __future__ import annotations

import itertools
from fractions import Fraction

import numpy as np


def forward_chain_probability(seq, p0, p_plus, p_minus):
    """Probability of a ±1 path of a two-state chain by stepping forward.

    ``p_plus`` is the chance to leave +1, ``p_minus`` the chance to leave -1.
    """
    prob = p0 if seq[0] == 1 else 1 - p0
    for prev, nxt in zip(seq, seq[1:]):
        leave = p_plus if prev == 1 else p_minus
        prob *= leave if nxt != prev else 1 - leave
    return prob


def all_sequences(T):
    return list(itertools.product((1, -1), repeat=T))


def outcome_index(a, b):
    bits = "".join("1" if s == 1 else "0" for s in tuple(a) + tuple(b))
    return int(bits, 2)


def pair_probability(a, b, x):
    return forward_chain_probability(a, *x[:3]) * forward_chain_probability(b, *x[3:])


def single_arc_outcomes(T):
    """Outcomes reachable by a dominant a copied onto b at every step.

    a never changes (no arc points at it); b takes a's state from slice 2 on.
    """
    reach = set()
    for sa, sb in itertools.product((1, -1), repeat=2):
        a = (sa,) * T
        b = (sb,) + (sa,) * (T - 1)
        reach.add(outcome_index(a, b))
    return reach


def hand_certificate_1d():
    """Degree-2 certificate that E[x] = 1.5 is impossible for x in [0, 1].

    1 - x = (1 - x)^2 + (x - x^2): Gram of (1 - x)^2 over [1, x] and a unit
    multiplier on g = x - x^2.
    """
    b = np.array([1.0])
    Q0 = np.array([[1.0, -1.0], [-1.0, 1.0]])
    Q1 = np.array([[1.0]])
    return b, (Q0, Q1)


def exact_poly_eval(poly, x):
    return poly.evaluate([Fraction(v) for v in x])
