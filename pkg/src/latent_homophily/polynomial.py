"""Sparse multivariate polynomials with exact rational coefficients.

Terms are stored as a mapping from exponent tuples to :class:`fractions.Fraction`
coefficients. Zero coefficients are never stored, so structural equality of two
polynomials is equality of their term maps.
"""
from __future__ import annotations

from fractions import Fraction
from numbers import Rational
from typing import Dict, Iterable, Mapping, Sequence, Tuple

import numpy as np

Exponent = Tuple[int, ...]

NVARS = 6


def _coerce(value) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, (int, Rational)):
        return Fraction(value)
    if isinstance(value, float):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value)
    raise TypeError(f"cannot use {type(value).__name__} as a polynomial coefficient")


class Polynomial:
    """Immutable sparse polynomial in a fixed number of variables.

    Parameters
    ----------
    terms : mapping, optional
        Exponent tuple -> coefficient. Coefficients are converted to
        ``Fraction``; zero entries are dropped.
    nvars : int
        Number of variables. Defaults to the six model parameters.
    """

    __slots__ = ("_terms", "_nvars", "_hash")

    def __init__(self, terms: Mapping[Exponent, object] | None = None, nvars: int = NVARS):
        self._nvars = nvars
        clean: Dict[Exponent, Fraction] = {}
        for exps, coef in (terms or {}).items():
            exps = tuple(int(e) for e in exps)
            if len(exps) != nvars:
                raise ValueError(f"exponent {exps} has arity {len(exps)}, expected {nvars}")
            if any(e < 0 for e in exps):
                raise ValueError(f"negative exponent in {exps}")
            c = _coerce(coef)
            if c:
                clean[exps] = clean.get(exps, Fraction(0)) + c
                if not clean[exps]:
                    del clean[exps]
        self._terms = clean
        self._hash = None

    # constructors
    @classmethod
    def constant(cls, value, nvars: int = NVARS) -> "Polynomial":
        return cls({(0,) * nvars: value}, nvars)

    @classmethod
    def variable(cls, index: int, nvars: int = NVARS) -> "Polynomial":
        if not 0 <= index < nvars:
            raise IndexError(f"variable index {index} out of range for {nvars} variables")
        exps = [0] * nvars
        exps[index] = 1
        return cls({tuple(exps): 1}, nvars)

    @classmethod
    def monomial(cls, exps: Sequence[int], coef=1) -> "Polynomial":
        return cls({tuple(exps): coef}, len(exps))

    # basic properties
    @property
    def nvars(self) -> int:
        return self._nvars

    @property
    def terms(self) -> Dict[Exponent, Fraction]:
        return dict(self._terms)

    @property
    def degree(self) -> int:
        """Maximum total degree; ``-1`` for the zero polynomial."""
        if not self._terms:
            return -1
        return max(sum(e) for e in self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    def coefficient(self, exps: Sequence[int]) -> Fraction:
        return self._terms.get(tuple(exps), Fraction(0))

    def __len__(self) -> int:
        return len(self._terms)

    def __iter__(self):
        return iter(sorted(self._terms.items(), key=lambda kv: (sum(kv[0]), tuple(-e for e in kv[0]))))

    # arithmetic
    def _lift(self, other) -> "Polynomial":
        if isinstance(other, Polynomial):
            if other._nvars != self._nvars:
                raise ValueError("polynomials have different numbers of variables")
            return other
        return Polynomial.constant(other, self._nvars)

    def __add__(self, other) -> "Polynomial":
        other = self._lift(other)
        out = dict(self._terms)
        for e, c in other._terms.items():
            out[e] = out.get(e, Fraction(0)) + c
        return Polynomial(out, self._nvars)

    __radd__ = __add__

    def __neg__(self) -> "Polynomial":
        return Polynomial({e: -c for e, c in self._terms.items()}, self._nvars)

    def __sub__(self, other) -> "Polynomial":
        return self + (-self._lift(other))

    def __rsub__(self, other) -> "Polynomial":
        return self._lift(other) - self

    def __mul__(self, other) -> "Polynomial":
        if not isinstance(other, Polynomial):
            c = _coerce(other)
            return Polynomial({e: c * v for e, v in self._terms.items()}, self._nvars)
        other = self._lift(other)
        out: Dict[Exponent, Fraction] = {}
        for e1, c1 in self._terms.items():
            for e2, c2 in other._terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                out[e] = out.get(e, Fraction(0)) + c1 * c2
        return Polynomial(out, self._nvars)

    __rmul__ = __mul__

    def __pow__(self, n: int) -> "Polynomial":
        if not isinstance(n, int) or n < 0:
            raise ValueError("only nonnegative integer powers are supported")
        result = Polynomial.constant(1, self._nvars)
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def __eq__(self, other) -> bool:
        if isinstance(other, Polynomial):
            return self._nvars == other._nvars and self._terms == other._terms
        try:
            return self == Polynomial.constant(other, self._nvars)
        except TypeError:
            return NotImplemented

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((self._nvars, frozenset(self._terms.items())))
        return self._hash

    # evaluation
    def __call__(self, x: Sequence) -> object:
        return self.evaluate(x)

    def evaluate(self, x: Sequence):
        """Evaluate at a point.

        Exact when ``x`` holds ``Fraction``/``int`` values, float otherwise.
        """
        if len(x) != self._nvars:
            raise ValueError(f"point has {len(x)} coordinates, expected {self._nvars}")
        exact = all(isinstance(v, (int, Fraction)) for v in x)
        if exact:
            total = Fraction(0)
            for e, c in self._terms.items():
                term = c
                for v, k in zip(x, e):
                    if k:
                        term *= Fraction(v) ** k
                total += term
            return total
        return float(self.evaluate_many(np.asarray([x], dtype=float))[0])

    def evaluate_many(self, points: np.ndarray) -> np.ndarray:
        """Vectorized float evaluation at the rows of ``points``."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        if not self._terms:
            return np.zeros(points.shape[0])
        exps = np.array(list(self._terms.keys()), dtype=float)
        coefs = np.array([float(c) for c in self._terms.values()])
        # (n_points, n_terms)
        vals = np.prod(points[:, None, :] ** exps[None, :, :], axis=2)
        return vals @ coefs

    # serialization
    def to_json(self) -> list:
        """Term list ``[{"exps": [...], "coef": "p/q"}, ...]`` in graded order."""
        return [{"exps": list(e), "coef": str(c)} for e, c in self]

    @classmethod
    def from_json(cls, data: Iterable[Mapping], nvars: int = NVARS) -> "Polynomial":
        terms: Dict[Exponent, Fraction] = {}
        for item in data:
            e = tuple(int(v) for v in item["exps"])
            terms[e] = terms.get(e, Fraction(0)) + Fraction(str(item["coef"]))
        return cls(terms, nvars)

    def __repr__(self) -> str:
        if not self._terms:
            return "Polynomial(0)"
        parts = []
        for e, c in self:
            mono = "*".join(f"x{i + 1}" + (f"^{k}" if k > 1 else "") for i, k in enumerate(e) if k)
            parts.append(f"{c}" + (f"*{mono}" if mono else ""))
        return "Polynomial(" + " + ".join(parts) + ")"
