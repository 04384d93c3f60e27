"""Feasibility classification of block LMI problems.

Feasibility is decided through the auxiliary program

    maximize t  subject to  S_k(y) - t I  >= 0 (every block),  A y = b,  t <= t_cap

which always has strictly feasible primal and dual points (when ``A y = b`` is
consistent), so an interior-point method converges to a well-defined optimum
``t*``. ``t* >= 0`` yields a witness ``y``. For ``t* < 0`` the optimal dual
``(Z, lam)`` is a Farkas ray: ``Z_k >= 0``, ``sum_k G_k^*(Z_k) = A^T lam`` and
``-(sum_k <C_k, Z_k> + b.lam) = -t* > 0``.

The conic program is handed to CVXOPT's ``conelp`` (homogeneous self-dual
embedding, primal-dual path following).
"""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp

from .problem import SdpProblem

logger = logging.getLogger(__name__)

FEASIBLE = "feasible"
INFEASIBLE = "infeasible"
UNKNOWN = "unknown"


@dataclass(frozen=True)
class SolverOptions:
    max_iterations: int = 60
    tol_gap: float = 1e-8
    tol_feas: float = 1e-7
    t_cap: float = 1.0
    # solver-internal accuracy; the dual residual floors near 1e-8 at level 3
    solver_feastol: float = 1e-7
    rank_tol: float = 1e-10


@dataclass(frozen=True)
class FarkasRay:
    """Dual improving ray: PSD block multipliers and equality multipliers."""

    Z: Tuple[np.ndarray, ...]
    lam: np.ndarray
    margin: float
    residual: float
    min_eigenvalue: float


@dataclass(frozen=True)
class SdpOutcome:
    status: str
    y: Optional[np.ndarray] = None
    blocks: Tuple[np.ndarray, ...] = ()
    ray: Optional[FarkasRay] = None
    iterations: int = 0
    residuals: Dict[str, float] = field(default_factory=dict)
    t_star: Optional[float] = None
    solver_status: str = ""
    seconds: float = 0.0

    @property
    def feasible(self) -> bool:
        return self.status == FEASIBLE

    @property
    def infeasible(self) -> bool:
        return self.status == INFEASIBLE


def _independent_rows(A: np.ndarray, b: np.ndarray, tol: float):
    """Select a maximal independent row subset; detect inconsistency.

    Returns ``(rows, None)`` or ``(None, lam)`` where ``lam`` satisfies
    ``A^T lam = 0`` and ``b.lam < 0``.
    """
    if A.shape[0] == 0:
        return np.zeros(0, dtype=int), None
    _, R, piv = la.qr(A.T, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    scale = diag[0] if diag.size and diag[0] > 0 else 1.0
    rank = int(np.sum(diag > tol * scale))
    rows = np.sort(piv[:rank])
    y_ls, *_ = la.lstsq(A, b)
    resid = b - A @ y_ls
    if np.max(np.abs(resid), initial=0.0) > max(1e-9, 1e-9 * np.max(np.abs(b), initial=0.0)):
        return None, -resid
    return rows, None


def witness_residuals(problem: SdpProblem, y: np.ndarray) -> Tuple[float, float]:
    """``(max |A y - b|, min block eigenvalue)`` recomputed from scratch."""
    eq = float(np.max(np.abs(problem.equality_residual(y)), initial=0.0))
    eigs = problem.min_eigenvalues(y)
    return eq, float(min(eigs, default=0.0))


def _check_ray(problem: SdpProblem, Z, lam) -> FarkasRay:
    residual, margin = problem.farkas_check(Z, lam)
    mins = []
    for b, Zk in zip(problem.blocks, Z):
        mins.append(float(np.min(Zk)) if b.kind == "diag" else float(np.linalg.eigvalsh(Zk)[0]))
    return FarkasRay(tuple(Z), np.asarray(lam, dtype=float), float(margin),
                     float(np.max(np.abs(residual), initial=0.0)), float(min(mins, default=0.0)))


def _build_conelp(problem: SdpProblem, rows: np.ndarray, options: SolverOptions):
    """Assemble CVXOPT ``conelp`` data for the max-t program over ``x = (y, t)``."""
    n = problem.n_vars
    diag_blocks = [b for b in problem.blocks if b.kind == "diag"]
    psd_blocks = [b for b in problem.blocks if b.kind == "psd"]

    G_parts: List[sp.spmatrix] = []
    h_parts: List[np.ndarray] = []
    # 'l' cone: diagonal blocks, then the cap t <= t_cap
    for b in diag_blocks:
        op = b.operator(n).tocsr()
        sel = np.arange(b.size) * (b.size + 1)
        op = op[sel]
        G_parts.append(sp.hstack([-op[:, 1:], sp.csr_matrix(np.ones((b.size, 1)))]))
        h_parts.append(op[:, 0].toarray().ravel())
    G_parts.append(sp.csr_matrix(([1.0], ([0], [n])), shape=(1, n + 1)))
    h_parts.append(np.array([options.t_cap]))
    n_lin = sum(b.size for b in diag_blocks) + 1
    for b in psd_blocks:
        # CVXOPT stores 's' blocks column-major; S is symmetric so row-major vec is identical
        op = b.operator(n).tocsr()
        eye = sp.csr_matrix((np.ones(b.size), (np.arange(b.size) * (b.size + 1), np.zeros(b.size, int))),
                            shape=(b.size * b.size, 1))
        G_parts.append(sp.hstack([-op[:, 1:], eye]))
        h_parts.append(op[:, 0].toarray().ravel())
    G = sp.vstack(G_parts).tocoo()
    h = np.concatenate(h_parts)
    dims = {"l": n_lin, "q": [], "s": [b.size for b in psd_blocks]}
    c = np.zeros(n + 1)
    c[n] = -1.0
    A = problem.equality_matrix().toarray()[rows]
    A = np.hstack([A, np.zeros((A.shape[0], 1))])
    bvec = problem.rhs[rows]
    return c, G, h, dims, A, bvec, diag_blocks, psd_blocks


class _StructuredKKT:
    """KKT solver for ``conelp`` exploiting sparse block coefficient matrices.

    Solves ``[0 A' G'; A 0 0; G 0 -W'W] [ux; uy; uz] = [bx; by; bz]`` the way
    CVXOPT's ``kkt_chol`` does (QR of ``A'``, Cholesky of the reduced normal
    matrix), but scales all columns of an 's' block at once: with
    ``W^-T(u) = rti' u rti`` the scaled columns ``rti' G_j rti`` come out of one
    sparse product and one dense GEMM.
    """

    def __init__(self, G: sp.coo_matrix, dims, A: np.ndarray):
        G = G.tocsr()
        self.N = G.shape[1]
        self.A = A
        self.n_lin = dims["l"]
        self.sizes = list(dims["s"])
        self.G_lin = G[: self.n_lin]
        self.L1, self.tri = [], []
        offset = self.n_lin
        for n in self.sizes:
            Gk = G[offset: offset + n * n].tocoo()
            a, c = np.divmod(Gk.row, n)
            self.L1.append(sp.csr_matrix((Gk.data, (Gk.col * n + a, c)), shape=(self.N * n, n)))
            ib, id_ = np.tril_indices(n)
            weight = np.where(ib == id_, 1.0, np.sqrt(2.0))
            self.tri.append((ib, id_, weight))
            offset += n * n
        p = A.shape[0]
        if p:
            # A' = [Q1, Q2] [R; 0]
            Q, R = la.qr(A.T, mode="full")
            self.Q, self.R = Q, R[:p]

    def _pack(self, k, M):
        ib, id_, w = self.tri[k]
        return M[ib, id_] * w

    def _unpack(self, k, v):
        n = self.sizes[k]
        ib, id_, w = self.tri[k]
        M = np.zeros((n, n))
        M[ib, id_] = v / w
        M[id_, ib] = v / w
        return M

    def __call__(self, W):
        import cvxopt

        di = np.array(W["di"]).ravel()
        rti = [np.array(r) for r in W["rti"]]
        N = self.N
        G_lin_scaled = sp.diags(di) @ self.G_lin
        H = (G_lin_scaled.T @ G_lin_scaled).toarray()
        scaled = []
        for k, (n, r, L1) in enumerate(zip(self.sizes, rti, self.L1)):
            U = (L1 @ r).reshape(N, n, n)
            V = (r.T @ U.transpose(1, 0, 2).reshape(n, N * n)).reshape(n, N, n)
            ib, id_, w = self.tri[k]
            Vp = V[ib, :, id_] * w[:, None]
            scaled.append(Vp)
            H += Vp.T @ Vp
        A = self.A
        p = A.shape[0]
        K = self.Q.T @ H @ self.Q if p else H
        K22 = K[p:, p:]
        try:
            factor = la.cho_factor(K22, lower=True, check_finite=False)
        except la.LinAlgError:
            eps = 1e-13 * max(1.0, float(np.max(np.abs(np.diag(K22)))))
            factor = la.cho_factor(K22 + eps * np.eye(K22.shape[0]), lower=True, check_finite=False)

        def solve(x, y, z):
            bx = np.array(x).ravel()
            bz = np.array(z).ravel()
            bz_lin = di * bz[: self.n_lin]
            r1 = bx + G_lin_scaled.T @ bz_lin
            packed = []
            offset = self.n_lin
            for k, (n, r, Vp) in enumerate(zip(self.sizes, rti, scaled)):
                B = bz[offset: offset + n * n].reshape(n, n, order="F")
                B = np.tril(B) + np.tril(B, -1).T
                bp = self._pack(k, r.T @ B @ r)
                packed.append(bp)
                r1 = r1 + Vp.T @ bp
                offset += n * n
            if p:
                by = np.array(y).ravel()
                q = self.Q.T @ r1
                v = la.solve_triangular(self.R, by, trans="T", check_finite=False)
                w = la.cho_solve(factor, q[p:] - K[p:, :p] @ v, check_finite=False)
                uy = la.solve_triangular(self.R, q[:p] - K[:p, :p] @ v - K[:p, p:] @ w, check_finite=False)
                ux = self.Q[:, :p] @ v + self.Q[:, p:] @ w
                y[:] = cvxopt.matrix(uy)
            else:
                ux = la.cho_solve(factor, r1, check_finite=False)
            out = [G_lin_scaled @ ux - bz_lin]
            for k, (Vp, bp) in enumerate(zip(scaled, packed)):
                out.append(self._unpack(k, Vp @ ux - bp).ravel(order="F"))
            x[:] = cvxopt.matrix(ux)
            z[:] = cvxopt.matrix(np.concatenate(out))

        return solve


def solve(problem: SdpProblem, options: Optional[SolverOptions] = None) -> SdpOutcome:
    """Classify a problem as feasible, infeasible or unknown.

    Feasible outcomes carry a witness ``y`` whose equality residual and block
    eigenvalues are re-checked against ``tol_feas``; infeasible outcomes carry
    a :class:`FarkasRay` with positive margin.
    """
    import cvxopt
    from cvxopt import solvers

    options = options or SolverOptions()
    start = time.perf_counter()
    A_full = problem.equality_matrix().toarray()
    rows, incons = _independent_rows(A_full, problem.rhs, options.rank_tol)
    if incons is not None:
        Z = tuple(np.zeros((b.size, b.size)) if b.kind == "psd" else np.zeros(b.size) for b in problem.blocks)
        ray = _check_ray(problem, Z, incons)
        return SdpOutcome(INFEASIBLE, ray=ray, solver_status="inconsistent equalities",
                          seconds=time.perf_counter() - start)

    c, G, h, dims, A, bvec, diag_blocks, psd_blocks = _build_conelp(problem, rows, options)

    def cm(arr):
        return cvxopt.matrix(np.ascontiguousarray(arr, dtype=float))

    Gs = cvxopt.spmatrix(G.data.tolist(), G.row.tolist(), G.col.tolist(), size=G.shape)
    opts = {
        "show_progress": logger.isEnabledFor(logging.DEBUG),
        "maxiters": options.max_iterations,
        "abstol": options.tol_gap,
        "reltol": options.tol_gap,
        "feastol": options.solver_feastol,
        "refinement": 1,
    }
    kwargs = {}
    if A.shape[0]:
        kwargs = {"A": cm(A), "b": cm(bvec.reshape(-1, 1))}
    try:
        sol = solvers.conelp(cm(c.reshape(-1, 1)), Gs, cm(h.reshape(-1, 1)), dims, options=opts,
                             kktsolver=_StructuredKKT(G, dims, A), **kwargs)
    except (ValueError, ArithmeticError) as exc:
        logger.warning("conelp failed: %s", exc)
        return SdpOutcome(UNKNOWN, solver_status=f"error: {exc}", seconds=time.perf_counter() - start)

    status = sol["status"]
    iterations = int(sol.get("iterations", 0) or 0)
    x = sol.get("x")
    residuals = {
        "primal": float(sol.get("primal infeasibility") or np.nan),
        "dual": float(sol.get("dual infeasibility") or np.nan),
        "gap": float(sol.get("gap") or np.nan),
    }
    if x is None:
        return SdpOutcome(UNKNOWN, iterations=iterations, residuals=residuals, solver_status=status,
                          seconds=time.perf_counter() - start)
    x = np.array(x).ravel()
    y, t_star = x[:-1], float(x[-1])
    eq_res, min_eig = witness_residuals(problem, y)
    residuals.update({"equality": eq_res, "min_eigenvalue": min_eig})
    elapsed = time.perf_counter() - start
    if status != "optimal":
        # iteration cap or stalled: report diagnostics only
        return SdpOutcome(UNKNOWN, y=y, iterations=iterations, residuals=residuals, t_star=t_star,
                          solver_status=status, seconds=elapsed)
    if eq_res <= options.tol_feas and min_eig >= -options.tol_feas:
        return SdpOutcome(FEASIBLE, y=y, blocks=tuple(b.evaluate(y) for b in problem.blocks),
                          iterations=iterations, residuals=residuals, t_star=t_star,
                          solver_status=status, seconds=elapsed)

    # rebuild block multipliers from the conic dual
    z = np.array(sol["z"]).ravel()
    lam_red = np.array(sol["y"]).ravel() if A.shape[0] else np.zeros(0)
    lam = np.zeros(problem.n_equalities)
    lam[rows] = lam_red
    Z_by_label = {}
    pos = 0
    for b in diag_blocks:
        Z_by_label[id(b)] = z[pos:pos + b.size].copy()
        pos += b.size
    pos += 1  # cap multiplier
    for b in psd_blocks:
        # column-major, only the lower triangle is meaningful
        Zk = np.tril(z[pos:pos + b.size * b.size].reshape(b.size, b.size, order="F"))
        Z_by_label[id(b)] = Zk + np.tril(Zk, -1).T
        pos += b.size * b.size
    Z = tuple(Z_by_label[id(b)] for b in problem.blocks)
    ray = _check_ray(problem, Z, lam)
    residuals.update({"ray_margin": ray.margin, "ray_residual": ray.residual})
    logger.debug("t*=%.3e ray margin=%.3e residual=%.3e", t_star, ray.margin, ray.residual)
    if t_star < -options.tol_feas and ray.margin > 0 and ray.min_eigenvalue >= -options.tol_feas:
        return SdpOutcome(INFEASIBLE, y=y, ray=ray, iterations=iterations, residuals=residuals,
                          t_star=t_star, solver_status=status, seconds=elapsed)
    return SdpOutcome(UNKNOWN, y=y, ray=ray, iterations=iterations, residuals=residuals, t_star=t_star,
                      solver_status=status, seconds=elapsed)
