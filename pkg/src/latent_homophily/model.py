"""Static latent-homophily model as polynomials in the chain parameters.

The parameter vector is ``x = (a0, a_plus, a_minus, b0, b_plus, b_minus)``:

* ``a0`` / ``b0``: probability that the first state is +1,
* ``a_plus`` / ``b_plus``: probability of flipping + -> -,
* ``a_minus`` / ``b_minus``: probability of flipping - -> +.

Note the sign convention: ``a_plus`` is the probability of *leaving* the +
state, so a + -> + stay contributes a factor ``1 - a_plus``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import List, NamedTuple, Sequence, Tuple

import numpy as np

from .polynomial import Polynomial
from .statistics import decode_sequence, encode_outcome

NPARAMS = 6
PARAMETER_NAMES = ("alpha_0", "alpha_plus", "alpha_minus", "beta_0", "beta_plus", "beta_minus")

# positions of (initial, flip+, flip-) in x for each role
ROLE_OFFSET = {"A": 0, "B": 3}


class TransitionCounters(NamedTuple):
    flips_plus: int
    flips_minus: int
    stays_plus: int
    stays_minus: int


def _check_sequence(seq: Sequence[int]) -> Tuple[int, ...]:
    seq = tuple(int(s) for s in seq)
    if any(s not in (1, -1) for s in seq):
        raise ValueError(f"sequence {seq} contains a state other than ±1")
    return seq


def transition_counters(seq: Sequence[int]) -> TransitionCounters:
    """Count + -> -, - -> +, + -> + and - -> - transitions.

    Uses the closed forms ``F± = Σ (1 ± A_t)(1 - A_{t+1} A_t) / 4`` and
    ``S± = Σ (1 ± A_t)(1 + A_{t+1} A_t) / 4``.
    """
    seq = _check_sequence(seq)
    if len(seq) < 2:
        raise ValueError("a sequence needs at least two states to have transitions")
    fp = fm = sp = sm = 0
    for a, b in zip(seq, seq[1:]):
        fp += (1 + a) * (1 - b * a)
        fm += (1 - a) * (1 - b * a)
        sp += (1 + a) * (1 + b * a)
        sm += (1 - a) * (1 + b * a)
    return TransitionCounters(fp // 4, fm // 4, sp // 4, sm // 4)


def sequence_probability_poly(seq: Sequence[int], role: str = "A") -> Polynomial:
    """Probability of a state sequence under a static two-state chain.

    Returns ``p+^F+ p-^F- (1-p-)^S- (1-p+)^S+ p0^[A1=+] (1-p0)^[A1=-]`` in
    the alpha variables for role ``"A"`` and in the beta variables for ``"B"``.
    """
    if role not in ROLE_OFFSET:
        raise ValueError(f"role must be 'A' or 'B', got {role!r}")
    seq = _check_sequence(seq)
    c = transition_counters(seq)
    off = ROLE_OFFSET[role]
    p0 = Polynomial.variable(off)
    p_plus = Polynomial.variable(off + 1)
    p_minus = Polynomial.variable(off + 2)
    poly = (p_plus ** c.flips_plus * p_minus ** c.flips_minus
            * (1 - p_minus) ** c.stays_minus * (1 - p_plus) ** c.stays_plus)
    return poly * (p0 if seq[0] == 1 else 1 - p0)


@dataclass(frozen=True)
class ObservableSet:
    """Indicator observables of all joint outcomes and their model polynomials.

    ``polys[j]`` is the probability of joint outcome ``j`` for a pair of
    independent chains with parameters ``x``.
    """

    T: int
    polys: Tuple[Polynomial, ...]

    def __len__(self) -> int:
        return len(self.polys)

    @property
    def max_degree(self) -> int:
        return max(p.degree for p in self.polys)

    def evaluate(self, x: Sequence[float]) -> np.ndarray:
        return np.array([p.evaluate(list(x)) for p in self.polys])

    def evaluate_many(self, points: np.ndarray) -> np.ndarray:
        """Rows of ``points`` -> array of shape (n_points, 4**T)."""
        return np.stack([p.evaluate_many(points) for p in self.polys], axis=1)

    def moments(self, weights: Sequence[float], points: np.ndarray) -> np.ndarray:
        """Observable expectations of a finite mixture of parameter points."""
        weights = np.asarray(weights, dtype=float)
        return weights @ self.evaluate_many(np.atleast_2d(points))


@lru_cache(maxsize=8)
def joint_observable_polys(T: int = 3) -> ObservableSet:
    if T < 2:
        raise ValueError("T must be at least 2")
    seq_polys_a = [sequence_probability_poly(decode_sequence(i, T), "A") for i in range(2 ** T)]
    seq_polys_b = [sequence_probability_poly(decode_sequence(i, T), "B") for i in range(2 ** T)]
    polys: List[Polynomial] = [None] * 4 ** T
    for ia, pa in enumerate(seq_polys_a):
        for ib, pb in enumerate(seq_polys_b):
            j = encode_outcome(decode_sequence(ia, T), decode_sequence(ib, T))
            polys[j] = pa * pb
    assert all(p is not None for p in polys)
    return ObservableSet(T, tuple(polys))


def constraint_polys() -> List[Polynomial]:
    """``g_i(x) = x_i - x_i**2``; the box [0, 1]^6 is where all are nonnegative."""
    return [Polynomial.variable(i) - Polynomial.variable(i) ** 2 for i in range(NPARAMS)]

