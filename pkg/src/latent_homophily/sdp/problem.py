"""Block-structured linear matrix inequality problems.

A problem has free scalar variables ``y`` (length ``n_vars``), blocks

    S_k(y) = C_k + sum_m y_m G_{k,m}

that must be positive semidefinite (``kind="psd"``) or elementwise
nonnegative diagonal (``kind="diag"``), and linear equalities ``A y = b``.

Block data is kept in coordinate form. ``mat == 0`` addresses the constant
``C_k`` and ``mat == m + 1`` addresses ``G_{k,m}``; only entries with
``row <= col`` are stored and an off-diagonal entry stands for both of its
symmetric positions.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np
import scipy.sparse as sp

BLOCK_KINDS = ("psd", "diag")


def _canonical(mat, row, col, val):
    mat = np.asarray(mat, dtype=np.int64)
    row = np.asarray(row, dtype=np.int64)
    col = np.asarray(col, dtype=np.int64)
    val = np.asarray(val, dtype=float)
    lo, hi = np.minimum(row, col), np.maximum(row, col)
    if mat.size:
        keys = np.stack([mat, lo, hi], axis=1)
        uniq, inverse = np.unique(keys, axis=0, return_inverse=True)
        summed = np.zeros(len(uniq))
        np.add.at(summed, inverse.ravel(), val)
        keep = summed != 0
        uniq, summed = uniq[keep], summed[keep]
        return uniq[:, 0].copy(), uniq[:, 1].copy(), uniq[:, 2].copy(), summed
    empty = np.zeros(0, dtype=np.int64)
    return empty, empty, empty.copy(), np.zeros(0)


def _freeze(*arrays):
    for a in arrays:
        a.setflags(write=False)


@dataclass(frozen=True, eq=False)
class Block:
    label: str
    size: int
    kind: str
    mat: np.ndarray
    row: np.ndarray
    col: np.ndarray
    val: np.ndarray

    def __post_init__(self):
        if self.kind not in BLOCK_KINDS:
            raise ValueError(f"unknown block kind {self.kind!r}")
        mat, row, col, val = _canonical(self.mat, self.row, self.col, self.val)
        if row.size and (row.min() < 0 or col.max() >= self.size):
            raise ValueError(f"block {self.label!r}: entry index outside {self.size}x{self.size}")
        if self.kind == "diag" and np.any(row != col):
            raise ValueError(f"diagonal block {self.label!r} has off-diagonal entries")
        _freeze(mat, row, col, val)
        for name, arr in zip(("mat", "row", "col", "val"), (mat, row, col, val)):
            object.__setattr__(self, name, arr)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Block):
            return NotImplemented
        return (self.label == other.label and self.size == other.size and self.kind == other.kind
                and all(np.array_equal(getattr(self, k), getattr(other, k))
                        for k in ("mat", "row", "col", "val")))

    @property
    def nnz(self) -> int:
        return int(self.val.size)

    def operator(self, n_vars: int) -> sp.csr_matrix:
        """Sparse map ``[1, y] -> vec(S(y))`` (row-major ``size*size``), both triangles filled."""
        n = self.size
        off = self.row != self.col
        rows = np.concatenate([self.row * n + self.col, (self.col * n + self.row)[off]])
        cols = np.concatenate([self.mat, self.mat[off]])
        vals = np.concatenate([self.val, self.val[off]])
        return sp.csr_matrix((vals, (rows, cols)), shape=(n * n, n_vars + 1))

    def evaluate(self, y: np.ndarray) -> np.ndarray:
        """Dense ``S(y)``."""
        coef = np.concatenate([[1.0], np.asarray(y, dtype=float)])
        out = np.zeros((self.size, self.size))
        np.add.at(out, (self.row, self.col), self.val * coef[self.mat])
        off = self.row != self.col
        np.add.at(out, (self.col[off], self.row[off]), (self.val * coef[self.mat])[off])
        return out

    def adjoint(self, Z: np.ndarray) -> np.ndarray:
        """``[<C, Z>, <G_1, Z>, ..., <G_n, Z>]`` for symmetric ``Z``."""
        Z = np.asarray(Z, dtype=float)
        if self.kind == "diag" and Z.ndim == 1:
            Z = np.diag(Z)
        weight = np.where(self.row == self.col, 1.0, 2.0)
        contrib = self.val * weight * Z[self.row, self.col]
        out = np.zeros(int(self.mat.max()) + 1 if self.mat.size else 1)
        np.add.at(out, self.mat, contrib)
        return out


@dataclass(frozen=True, eq=False)
class SdpProblem:
    """Feasibility problem: find ``y`` with every block PSD and ``A y = b``."""

    n_vars: int
    blocks: Tuple[Block, ...]
    eq_row: np.ndarray
    eq_col: np.ndarray
    eq_val: np.ndarray
    rhs: np.ndarray
    var_labels: Tuple[str, ...] = ()
    eq_labels: Tuple[str, ...] = ()
    objective: Optional[np.ndarray] = None

    def __post_init__(self):
        object.__setattr__(self, "blocks", tuple(self.blocks))
        rhs = np.asarray(self.rhs, dtype=float).ravel()
        A = sp.coo_matrix((np.asarray(self.eq_val, dtype=float),
                           (np.asarray(self.eq_row, dtype=np.int64), np.asarray(self.eq_col, dtype=np.int64))),
                          shape=(rhs.size, self.n_vars))
        A.sum_duplicates()
        A.eliminate_zeros()
        order = np.lexsort((A.col, A.row))
        eq_row, eq_col, eq_val = A.row[order].astype(np.int64), A.col[order].astype(np.int64), A.data[order]
        objective = (np.zeros(self.n_vars) if self.objective is None
                     else np.asarray(self.objective, dtype=float).ravel())
        if objective.size != self.n_vars:
            raise ValueError("objective length must equal n_vars")
        for b in self.blocks:
            if b.mat.size and b.mat.max() > self.n_vars:
                raise ValueError(f"block {b.label!r} references variable beyond n_vars={self.n_vars}")
        if self.var_labels and len(self.var_labels) != self.n_vars:
            raise ValueError("var_labels length must equal n_vars")
        if self.eq_labels and len(self.eq_labels) != rhs.size:
            raise ValueError("eq_labels length must equal the number of equalities")
        _freeze(eq_row, eq_col, eq_val, rhs, objective)
        for name, arr in (("eq_row", eq_row), ("eq_col", eq_col), ("eq_val", eq_val), ("rhs", rhs),
                          ("objective", objective)):
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "var_labels", tuple(self.var_labels))
        object.__setattr__(self, "eq_labels", tuple(self.eq_labels))

    def __eq__(self, other) -> bool:
        if not isinstance(other, SdpProblem):
            return NotImplemented
        return (self.n_vars == other.n_vars and self.blocks == other.blocks
                and self.var_labels == other.var_labels and self.eq_labels == other.eq_labels
                and all(np.array_equal(getattr(self, k), getattr(other, k))
                        for k in ("eq_row", "eq_col", "eq_val", "rhs", "objective")))

    @property
    def n_equalities(self) -> int:
        return int(self.rhs.size)

    @property
    def block_structure(self) -> List[Tuple[str, int]]:
        return [(b.label, b.size) for b in self.blocks]

    def block(self, label: str) -> Block:
        for b in self.blocks:
            if b.label == label:
                return b
        raise KeyError(label)

    def equality_matrix(self) -> sp.csr_matrix:
        return sp.csr_matrix((self.eq_val, (self.eq_row, self.eq_col)), shape=(self.n_equalities, self.n_vars))

    def equality_residual(self, y: np.ndarray) -> np.ndarray:
        return self.equality_matrix() @ np.asarray(y, dtype=float) - self.rhs

    def min_eigenvalues(self, y: np.ndarray) -> List[float]:
        out = []
        for b in self.blocks:
            S = b.evaluate(y)
            out.append(float(np.min(np.diag(S))) if b.kind == "diag" else float(np.linalg.eigvalsh(S)[0]))
        return out

    def farkas_check(self, Z: Sequence[np.ndarray], lam: np.ndarray):
        """Residual of ``sum_k G_k^*(Z_k) = A^T lam`` and the margin ``-(sum <C_k,Z_k> + b.lam)``.

        A positive margin with zero residual and PSD ``Z_k`` proves infeasibility.
        """
        total = np.zeros(self.n_vars + 1)
        for b, Zk in zip(self.blocks, Z):
            adj = b.adjoint(Zk)
            total[: adj.size] += adj
        ATlam = self.equality_matrix().T @ np.asarray(lam, dtype=float)
        residual = total[1:] - ATlam
        margin = -(total[0] + float(self.rhs @ lam))
        return residual, margin


def make_block(label: str, size: int, entries: Iterable[Tuple[int, int, int, float]], kind: str = "psd") -> Block:
    """Build a block from ``(mat, row, col, value)`` tuples."""
    entries = list(entries)
    if entries:
        mat, row, col, val = (np.array(c) for c in zip(*entries))
    else:
        mat = row = col = np.zeros(0, dtype=np.int64)
        val = np.zeros(0)
    return Block(label, size, kind, mat, row, col, val)
