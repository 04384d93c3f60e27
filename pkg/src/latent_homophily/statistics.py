"""Empirical joint distribution of paired state sequences along influence arcs.

Outcome ``j`` of a pair of length-``T`` sequences is the integer whose bits,
most significant first, are ``A_1..A_T, B_1..B_T`` with ``+1 -> 1`` and
``-1 -> 0``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence, Tuple

import numpy as np

from .network import DirectedInfluenceGraph, NodeStateSeries

ENCODING = "A-major, +1→1"


def encode_outcome(seq_a: Sequence[int], seq_b: Sequence[int]) -> int:
    if len(seq_a) != len(seq_b):
        raise ValueError(f"sequence lengths differ: {len(seq_a)} vs {len(seq_b)}")
    j = 0
    for s in tuple(seq_a) + tuple(seq_b):
        if s not in (1, -1):
            raise ValueError(f"state {s!r} is not ±1")
        j = (j << 1) | (1 if s == 1 else 0)
    return j


def decode_outcome(j: int, T: int) -> Tuple[Tuple[int, ...], Tuple[int, ...]]:
    if not 0 <= j < 4 ** T:
        raise ValueError(f"outcome {j} out of range for T={T}")
    bits = [(j >> (2 * T - 1 - k)) & 1 for k in range(2 * T)]
    states = tuple(1 if b else -1 for b in bits)
    return states[:T], states[T:]


def decode_sequence(i: int, T: int) -> Tuple[int, ...]:
    """Single-chain analogue of :func:`decode_outcome` over ``[0, 2**T)``."""
    return tuple(1 if (i >> (T - 1 - k)) & 1 else -1 for k in range(T))


@dataclass(frozen=True)
class EmpiricalDistribution:
    T: int
    counts: np.ndarray

    def __post_init__(self):
        counts = np.asarray(self.counts, dtype=np.int64)
        if counts.shape != (4 ** self.T,):
            raise ValueError(f"expected {4 ** self.T} counts for T={self.T}, got {counts.shape}")
        if np.any(counts < 0):
            raise ValueError("counts must be nonnegative")
        counts.setflags(write=False)
        object.__setattr__(self, "counts", counts)

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def y_hat(self) -> np.ndarray:
        if self.total == 0:
            return np.zeros(len(self.counts))
        return self.counts / self.total

    def __add__(self, other: "EmpiricalDistribution") -> "EmpiricalDistribution":
        if other.T != self.T:
            raise ValueError("cannot pool distributions with different T")
        return EmpiricalDistribution(self.T, self.counts + other.counts)

    def to_json(self) -> dict:
        return {"T": self.T, "encoding": ENCODING, "counts": [int(c) for c in self.counts],
                "total": self.total}

    @classmethod
    def from_json(cls, data: Mapping) -> "EmpiricalDistribution":
        enc = data.get("encoding", ENCODING)
        if enc != ENCODING:
            raise ValueError(f"unsupported outcome encoding {enc!r}")
        dist = cls(int(data["T"]), np.asarray(data["counts"], dtype=np.int64))
        if "total" in data and int(data["total"]) != dist.total:
            raise ValueError(f"total {data['total']} disagrees with counts sum {dist.total}")
        return dist


def pair_sequence_counts(series: NodeStateSeries, graph: DirectedInfluenceGraph) -> EmpiricalDistribution:
    """Pool the outcomes of every (arc, shared reference) pair.

    For an arc ``u -> v`` and every reference ``r`` with nodes ``(u, r)`` and
    ``(v, r)`` in the series, the outcome of the two state sequences (``u`` in
    the A role) is counted once.
    """
    T = series.T
    by_author = series.references_by_author()
    weights = 1 << np.arange(2 * T - 1, -1, -1)
    bits = (series.states > 0).astype(np.int64) if len(series.nodes) else np.zeros((0, T), np.int64)
    rows_a, rows_b = [], []
    for u, v in graph.arcs:
        for end in (u, v):
            if end not in series.authors:
                raise KeyError(f"arc {u}->{v}: author {end!r} is missing from the state series")
        refs_u, refs_v = by_author.get(u, {}), by_author.get(v, {})
        if len(refs_v) < len(refs_u):
            shared = [r for r in refs_v if r in refs_u]
        else:
            shared = [r for r in refs_u if r in refs_v]
        for r in shared:
            rows_a.append(refs_u[r])
            rows_b.append(refs_v[r])
    counts = np.zeros(4 ** T, dtype=np.int64)
    if rows_a:
        joint = np.concatenate([bits[rows_a], bits[rows_b]], axis=1)
        np.add.at(counts, joint @ weights, 1)
    return EmpiricalDistribution(T, counts)
