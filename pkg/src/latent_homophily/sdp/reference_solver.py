"""Stand-alone SDPA feasibility solver used to cross-check the embedded solver.

Usage::

    python -m latent_homophily.sdp.reference_solver problem.dat-s solution.out

It solves ``max t`` subject to ``sum_i x_i F_i - F_0 - t I >= 0`` per block
(``t <= 1``) with cvxpy, using a different conic solver than the embedded
one. The solution file follows the CSDP layout: the first line holds ``x``,
then ``1 block i j value`` lines for the slack ``Z = sum x_i F_i - F_0`` and
``2 block i j value`` lines for the dual matrix ``X``.

Exit status mirrors CSDP: 0 feasible, 2 infeasible (``X`` is an improving
ray with ``tr(F_i X) = 0`` and ``tr(F_0 X) > 0``), 4 solver failure.
Equality blocks need no special handling: a pair ``a.x - b >= 0``,
``b - a.x >= 0`` caps ``t`` at 0.
"""
from __future__ import annotations

import argparse
import sys

import numpy as np
import scipy.sparse as sp

EXIT_FEASIBLE, EXIT_INFEASIBLE, EXIT_FAILURE = 0, 2, 4


def _read_raw(path):
    """Minimal SDPA reader returning ``(n, sizes, F)`` with ``F[k]`` a list of
    ``(mat, row, col, value)`` entries as written (``F_0`` not negated)."""
    body = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line and line[0] not in '"*':
                body.append(line.replace(",", " ").replace("{", " ").replace("}", " ").split())
    n = int(body[0][0])
    nb = int(body[1][0])
    sizes = [int(s) for s in body[2][:nb]]
    start = 4 if n else 3
    F = [[] for _ in sizes]
    for parts in body[start:]:
        m, k, i, j = (int(p) for p in parts[:4])
        F[k - 1].append((m, i - 1, j - 1, float(parts[4])))
    return n, sizes, F


def _operator(n, size, entries):
    """Sparse ``vec(F_m)`` columns for one block, both triangles."""
    rows, cols, vals = [], [], []
    for m, i, j, v in entries:
        rows.append(i * size + j)
        cols.append(m)
        vals.append(v)
        if i != j:
            rows.append(j * size + i)
            cols.append(m)
            vals.append(v)
    return sp.csr_matrix((vals, (rows, cols)), shape=(size * size, n + 1))


def solve_file(path, t_cap=1.0, tol=1e-7):
    import cvxpy as cp

    n, sizes, F = _read_raw(path)
    x, t = cp.Variable(n), cp.Variable()
    cons, blocks = [t <= t_cap], []
    for size, ent in zip(sizes, F):
        dim = abs(size)
        op = _operator(n, dim, ent)
        if size < 0:
            op = op[np.arange(dim) * (dim + 1)]
        # the constant column holds F_0, so Z = sum x_i F_i - F_0
        lin = op[:, 1:] @ x - op[:, 0].toarray().ravel()
        if size > 0:
            Z = cp.reshape(lin, (dim, dim), order="C")
            con = 0.5 * (Z + Z.T) - t * np.eye(dim) >> 0
        else:
            con = lin - t >= 0
        cons.append(con)
        blocks.append((size, op, con))
    prob = cp.Problem(cp.Maximize(t), cons)
    try:
        prob.solve(solver=cp.CLARABEL)
    except cp.SolverError:
        prob.solve(solver=cp.SCS, eps=1e-9, max_iters=100000)
    if prob.status not in (cp.OPTIMAL, cp.OPTIMAL_INACCURATE):
        return EXIT_FAILURE, None, None, None
    xv = np.asarray(x.value, dtype=float).ravel()
    Zs, Xs = [], []
    for size, op, con in blocks:
        dim = abs(size)
        vec = op @ np.concatenate([[-1.0], xv])
        dual = np.asarray(con.dual_value, dtype=float)
        if size > 0:
            Zs.append(vec.reshape(dim, dim))
            Xs.append(0.5 * (dual + dual.T))
        else:
            Zs.append(np.diag(vec))
            Xs.append(np.diag(dual.ravel()))
    code = EXIT_FEASIBLE if float(t.value) >= -tol else EXIT_INFEASIBLE
    return code, xv, Zs, Xs


def write_solution(path, x, Zs, Xs):
    lines = [" ".join(repr(float(v)) for v in x)]
    for mat, mats in ((1, Zs), (2, Xs)):
        for k, M in enumerate(mats, start=1):
            iu, ju = np.triu_indices(M.shape[0])
            for i, j in zip(iu, ju):
                if M[i, j] != 0:
                    lines.append(f"{mat} {k} {i + 1} {j + 1} {float(M[i, j])!r}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="reference_solver", description=__doc__.splitlines()[0])
    ap.add_argument("problem")
    ap.add_argument("solution")
    args = ap.parse_args(argv)
    code, x, Zs, Xs = solve_file(args.problem)
    if x is not None:
        write_solution(args.solution, x, Zs, Xs)
    return code


if __name__ == "__main__":
    sys.exit(main())
