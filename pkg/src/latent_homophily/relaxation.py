"""Lasserre moment relaxation of the latent-homophily feasibility problem.

Given observed outcome frequencies ``y_hat`` the question is whether a
probability measure on the unit box reproduces them,
``E_mu[f_j] = y_hat_j`` for every outcome. The level-``d`` relaxation asks for
a pseudo-moment vector ``y`` indexed by monomials of degree ``<= 2d`` with

* ``y_0 = 1`` and ``L_y(f_j) = y_hat_j``,
* a PSD moment matrix ``M_d(y)``,
* PSD localizing matrices ``M_{d-1}(g_i y)`` for ``g_i = x_i - x_i**2``.

Infeasibility is witnessed by coefficients ``b`` and SOS multipliers with
``1 - b.f = sigma_0 + sum_i sigma_i g_i`` and ``b.y_hat > 1``; such a
certificate is checked independently of the solver by
:func:`validate_certificate`.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from .model import ObservableSet, constraint_polys, joint_observable_polys
from .polynomial import Polynomial
from .sdp.problem import Block, SdpProblem
from .sdp.solver import SdpOutcome
from .statistics import EmpiricalDistribution

Exponent = Tuple[int, ...]


class RelaxationLevelError(ValueError):
    pass


class CertificateError(ValueError):
    pass


# ---------------------------------------------------------------------------
# monomial bookkeeping

@dataclass(frozen=True, eq=False)
class MonomialBasis:
    """Exponent vectors of total degree ``<= degree`` in graded lexicographic order."""

    degree: int
    nvars: int
    exponents: Tuple[Exponent, ...]

    def __post_init__(self):
        object.__setattr__(self, "_index", {e: i for i, e in enumerate(self.exponents)})

    def __len__(self) -> int:
        return len(self.exponents)

    def __iter__(self):
        return iter(self.exponents)

    def __getitem__(self, i: int) -> Exponent:
        return self.exponents[i]

    def __contains__(self, e) -> bool:
        return tuple(e) in self._index

    def index_of(self, e: Sequence[int]) -> int:
        return self._index[tuple(e)]

    def monomial_at(self, i: int) -> Exponent:
        return self.exponents[i]

    def as_array(self) -> np.ndarray:
        return np.array(self.exponents, dtype=np.int64).reshape(len(self), self.nvars)

    def evaluate(self, x: Sequence[float]) -> np.ndarray:
        """Values of every basis monomial at ``x``."""
        x = np.asarray(x, dtype=float)
        return np.prod(x[None, :] ** self.as_array(), axis=1)


@lru_cache(maxsize=32)
def monomial_basis(d: int, nvars: int = 6) -> MonomialBasis:
    if d < 0:
        raise ValueError("degree must be nonnegative")
    exps: List[Exponent] = []
    for k in range(d + 1):
        for combo in itertools.combinations_with_replacement(range(nvars), k):
            e = [0] * nvars
            for v in combo:
                e[v] += 1
            exps.append(tuple(e))
    assert len(exps) == math.comb(nvars + d, nvars)
    return MonomialBasis(d, nvars, tuple(exps))


def _add(e1: Exponent, e2: Exponent) -> Exponent:
    return tuple(a + b for a, b in zip(e1, e2))


# ---------------------------------------------------------------------------
# problem construction

@dataclass(frozen=True, eq=False)
class MomentRelaxation:
    """A built relaxation: the SDP plus the model data it was derived from."""

    problem: SdpProblem
    level: int
    observables: Tuple[Polynomial, ...]
    constraints: Tuple[Polynomial, ...]
    y_hat: np.ndarray
    epsilon: float
    moment_basis: MonomialBasis
    multiplier_bases: Tuple[MonomialBasis, ...]
    variables: MonomialBasis

    @property
    def nvars(self) -> int:
        return self.variables.nvars


def _as_polys(observables) -> Tuple[Polynomial, ...]:
    if isinstance(observables, ObservableSet):
        return observables.polys
    return tuple(observables)


def _as_y_hat(y_hat) -> np.ndarray:
    if isinstance(y_hat, EmpiricalDistribution):
        return y_hat.y_hat.astype(float)
    return np.asarray(y_hat, dtype=float).ravel()


def minimum_level(observables, constraints) -> int:
    deg = max([p.degree for p in observables] + [0])
    level = math.ceil(deg / 2)
    for g in constraints:
        level = max(level, math.ceil(g.degree / 2))
    return level


def build_moment_feasibility(y_hat, observables: Union[ObservableSet, Sequence[Polynomial], None] = None,
                             constraints: Optional[Sequence[Polynomial]] = None, level: int = 3,
                             epsilon: float = 0.0) -> MomentRelaxation:
    """Level-``level`` moment feasibility SDP for observed frequencies ``y_hat``.

    Blocks are ``"moment"`` followed by ``"localizing_1"`` ... one per
    constraint. Equality 0 is ``y_0 = 1``; equality ``j + 1`` matches outcome
    ``j``. With ``epsilon > 0`` the outcome equalities become the interval
    ``|L(f_j) - y_hat_j| <= epsilon`` held in a diagonal block ``"observables"``.
    """
    y_hat = _as_y_hat(y_hat)
    if observables is None:
        T = round(math.log(len(y_hat), 4))
        observables = joint_observable_polys(T)
    polys = _as_polys(observables)
    if len(polys) != len(y_hat):
        raise ValueError(f"{len(y_hat)} observed values but {len(polys)} observables")
    cons = tuple(constraint_polys() if constraints is None else constraints)
    nvars = polys[0].nvars
    need = minimum_level(polys, cons)
    if level < need:
        raise RelaxationLevelError(
            f"relaxation level {level} is too low: observables of degree "
            f"{max(p.degree for p in polys)} need level >= {need}")
    if epsilon < 0:
        raise ValueError("epsilon must be nonnegative")

    variables = monomial_basis(2 * level, nvars)
    mbasis = monomial_basis(level, nvars)
    vidx = variables.index_of

    def entries_for(basis: MonomialBasis, poly_terms):
        mats, rows, cols, vals = [], [], [], []
        exps = basis.exponents
        for i, u in enumerate(exps):
            for j in range(i, len(exps)):
                uv = _add(u, exps[j])
                for e, c in poly_terms:
                    mats.append(vidx(_add(uv, e)) + 1)
                    rows.append(i)
                    cols.append(j)
                    vals.append(c)
        return mats, rows, cols, vals

    one = [((0,) * nvars, 1.0)]
    blocks = [Block("moment", len(mbasis), "psd", *entries_for(mbasis, one))]
    mult_bases = []
    for k, g in enumerate(cons, start=1):
        gb = monomial_basis(level - math.ceil(g.degree / 2), nvars)
        mult_bases.append(gb)
        terms = [(e, float(c)) for e, c in g]
        blocks.append(Block(f"localizing_{k}", len(gb), "psd", *entries_for(gb, terms)))

    eq_row, eq_col, eq_val = [0], [vidx((0,) * nvars)], [1.0]
    rhs = [1.0]
    eq_labels = ["normalization"]
    obs_rows = []
    for j, f in enumerate(polys):
        obs_rows.append([(vidx(e), float(c)) for e, c in f])
    if epsilon == 0:
        for j, terms in enumerate(obs_rows):
            for col, c in terms:
                eq_row.append(j + 1)
                eq_col.append(col)
                eq_val.append(c)
            rhs.append(float(y_hat[j]))
            eq_labels.append(f"outcome_{j}")
    else:
        mats, rows, vals = [], [], []
        n = len(obs_rows)
        for j, terms in enumerate(obs_rows):
            # upper: y_hat + eps - L(f) >= 0 ; lower: L(f) - y_hat + eps >= 0
            mats += [0, 0]
            rows += [j, n + j]
            vals += [float(y_hat[j]) + epsilon, epsilon - float(y_hat[j])]
            for col, c in terms:
                mats += [col + 1, col + 1]
                rows += [j, n + j]
                vals += [-c, c]
        blocks.append(Block("observables", 2 * n, "diag", mats, rows, rows, vals))

    problem = SdpProblem(
        n_vars=len(variables), blocks=tuple(blocks), eq_row=eq_row, eq_col=eq_col, eq_val=eq_val,
        rhs=rhs, var_labels=tuple(_monomial_label(e) for e in variables), eq_labels=tuple(eq_labels))
    return MomentRelaxation(problem, level, polys, cons, y_hat, float(epsilon), mbasis, tuple(mult_bases),
                            variables)


def _monomial_label(e: Exponent) -> str:
    if not any(e):
        return "1"
    return "*".join(f"x{i + 1}" + (f"^{k}" if k > 1 else "") for i, k in enumerate(e) if k)


def point_moments(relax: MomentRelaxation, points, weights=None) -> np.ndarray:
    """Moment vector of a finite measure on parameter points (a feasible ``y`` when the data match)."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    weights = np.full(len(points), 1.0 / len(points)) if weights is None else np.asarray(weights, float)
    return sum(w * relax.variables.evaluate(p) for w, p in zip(weights, points))


# ---------------------------------------------------------------------------
# certificates

@dataclass(frozen=True)
class Tolerances:
    psd: float = 1e-8
    identity: float = 1e-8
    margin: float = 1e-6


@dataclass(frozen=True, eq=False)
class SosCertificate:
    """``1 - b.f = sigma_0 + sum_i sigma_i g_i`` with Gram matrices ``grams``.

    ``grams[0]`` is over the degree-``level`` monomial basis and ``grams[i]``
    over the multiplier basis of constraint ``i``.
    """

    b: np.ndarray
    grams: Tuple[np.ndarray, ...]
    level: int
    nvars: int
    margin: float
    epsilon: float = 0.0
    multiplier_degrees: Tuple[int, ...] = ()

    def to_json(self) -> dict:
        return {
            "b": [float(v) for v in self.b],
            "grams": [np.asarray(G).tolist() for G in self.grams],
            "level": self.level,
            "nvars": self.nvars,
            "margin": self.margin,
            "epsilon": self.epsilon,
            "multiplier_degrees": list(self.multiplier_degrees),
        }

    @classmethod
    def from_json(cls, data) -> "SosCertificate":
        return cls(np.asarray(data["b"], float), tuple(np.asarray(G, float) for G in data["grams"]),
                   int(data["level"]), int(data["nvars"]), float(data["margin"]),
                   float(data.get("epsilon", 0.0)), tuple(data.get("multiplier_degrees", ())))


@dataclass(frozen=True)
class CertificateCheck:
    valid: bool
    reason: Optional[str]
    min_eigenvalue: float
    identity_residual: float
    margin: float

    def __bool__(self) -> bool:
        return self.valid


def certificate_margin(b: np.ndarray, y_hat: np.ndarray, epsilon: float = 0.0) -> float:
    b = np.asarray(b, dtype=float)
    return float(b @ y_hat - 1.0 - epsilon * np.sum(np.abs(1.0 - b)))


def _sym_psd_min(G: np.ndarray) -> float:
    G = np.asarray(G, dtype=float)
    if G.size == 0:
        return 0.0
    return float(np.linalg.eigvalsh(0.5 * (G + G.T))[0])


def identity_residual(cert: SosCertificate, observables: Sequence[Polynomial],
                      constraints: Sequence[Polynomial], exact: bool = True) -> float:
    """Max-norm coefficient residual of ``1 - b.f - sigma_0 - sum sigma_i g_i``.

    Computed from scratch with polynomial arithmetic over the certificate
    data, in exact rationals by default (so the only rounding is in the
    final conversion to float).
    """
    num = Fraction if exact else float
    nvars = cert.nvars
    acc: Dict[Exponent, object] = {}

    def add(e, c):
        acc[e] = acc.get(e, 0) + c

    add((0,) * nvars, num(1))
    for bj, f in zip(cert.b, observables):
        bj = num(float(bj))
        if bj:
            for e, c in f:
                add(e, -bj * num(c))
    quad_degrees = [cert.level] + [cert.level - math.ceil(g.degree / 2) for g in constraints]
    multipliers = [((0,) * nvars, num(1))]
    for k, G in enumerate(cert.grams):
        basis = monomial_basis(quad_degrees[k], nvars)
        if len(basis) != G.shape[0]:
            raise CertificateError(f"Gram {k} has size {G.shape[0]}, expected {len(basis)}")
        mult = multipliers if k == 0 else [(e, num(c)) for e, c in constraints[k - 1]]
        n = len(basis)
        for i in range(n):
            for j in range(n):
                q = G[i, j]
                if q == 0:
                    continue
                q = num(float(q))
                uv = _add(basis[i], basis[j])
                for e, c in mult:
                    add(_add(uv, e), -q * c)
    return float(max((abs(v) for v in acc.values()), default=0.0))


def validate_certificate(cert: SosCertificate, y_hat, observables, constraints=None,
                         tolerances: Tolerances = Tolerances(), exact: bool = True) -> CertificateCheck:
    """Check a certificate: Gram PSD, polynomial identity, and positive margin."""
    y_hat = _as_y_hat(y_hat)
    polys = _as_polys(observables)
    cons = tuple(constraint_polys() if constraints is None else constraints)
    if len(cert.grams) != len(cons) + 1:
        return CertificateCheck(False, "structure", np.nan, np.inf, np.nan)
    min_eig = min(_sym_psd_min(G) for G in cert.grams)
    try:
        resid = identity_residual(cert, polys, cons, exact=exact)
    except CertificateError:
        return CertificateCheck(False, "structure", min_eig, np.inf, np.nan)
    margin = certificate_margin(cert.b, y_hat, cert.epsilon)
    reason = None
    if not min_eig >= -tolerances.psd:
        reason = "psd"
    elif not resid <= tolerances.identity:
        reason = "identity"
    elif not margin >= tolerances.margin:
        reason = "margin"
    return CertificateCheck(reason is None, reason, min_eig, resid, margin)


def _lhs_coefficients(relax: MomentRelaxation, b: np.ndarray) -> np.ndarray:
    """Coefficients of ``1 - b.f`` over ``relax.variables``."""
    out = np.zeros(len(relax.variables))
    out[0] = 1.0
    for bj, f in zip(b, relax.observables):
        for e, c in f:
            out[relax.variables.index_of(e)] -= bj * float(c)
    return out


def _sos_coefficients(blocks, grams, n_vars) -> np.ndarray:
    total = np.zeros(n_vars + 1)
    for blk, G in zip(blocks, grams):
        adj = blk.adjoint(G)
        total[: adj.size] += adj
    return total[1:]


def _psd_clip(G: np.ndarray) -> np.ndarray:
    w, V = np.linalg.eigh(0.5 * (G + G.T))
    return (V * np.maximum(w, 0.0)) @ V.T


def extract_certificate(relax: MomentRelaxation, outcome: SdpOutcome, tolerances: Tolerances = Tolerances(),
                        max_repairs: int = 20) -> SosCertificate:
    """Turn a Farkas ray of the moment problem into an SOS certificate.

    The ray is rescaled so that ``max_j |1 - b_j| = 1``. Rounding left by the
    solver is repaired by projecting the multiplier Grams onto the PSD cone and
    absorbing the remaining coefficient residual into ``sigma_0`` with the
    minimum-norm correction.
    """
    ray = outcome.ray
    if ray is None:
        raise CertificateError("outcome carries no dual ray")
    problem = relax.problem
    psd_blocks = [b for b in problem.blocks if b.kind == "psd"]
    Z = dict(zip([b.label for b in problem.blocks], ray.Z))
    lam = np.asarray(ray.lam, dtype=float)
    n_obs = len(relax.observables)
    c = np.zeros(n_obs)
    if relax.epsilon == 0:
        c += lam[1:1 + n_obs]
    else:
        w = np.asarray(Z["observables"], dtype=float).ravel()
        if w.ndim == 1 and w.size == 2 * n_obs:
            c += w[:n_obs] - w[n_obs:]
    d = lam[0] + c
    scale = np.max(np.abs(d))
    if not np.isfinite(scale) or scale <= 0:
        raise CertificateError("degenerate dual ray")
    s = 1.0 / scale
    b = 1.0 - s * d
    grams = [s * np.asarray(Z[blk.label], dtype=float) for blk in psd_blocks]

    # minimum-norm correction of sigma_0: spread r_m over the (u, v) pairs with u + v = m
    moment_blk = psd_blocks[0]
    pair_var = np.zeros((moment_blk.size, moment_blk.size), dtype=np.int64)
    pair_var[moment_blk.row, moment_blk.col] = moment_blk.mat - 1
    pair_var[moment_blk.col, moment_blk.row] = moment_blk.mat - 1
    counts = np.bincount(pair_var.ravel(), minlength=problem.n_vars).astype(float)
    lhs = _lhs_coefficients(relax, b)
    grams = [grams[0]] + [_psd_clip(G) for G in grams[1:]]
    for attempt in range(max_repairs):
        if attempt:
            grams[0] = _psd_clip(grams[0])
        resid = lhs - _sos_coefficients(psd_blocks, grams, problem.n_vars)
        grams[0] = grams[0] + (resid / counts)[pair_var]
        if _sym_psd_min(grams[0]) >= -0.1 * tolerances.psd:
            break
    grams = [0.5 * (G + G.T) for G in grams]
    margin = certificate_margin(b, relax.y_hat, relax.epsilon)
    mdeg = tuple(mb.degree for mb in relax.multiplier_bases)
    return SosCertificate(b, tuple(grams), relax.level, relax.nvars, margin, relax.epsilon, mdeg)
