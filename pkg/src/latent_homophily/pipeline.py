"""End-to-end latent-homophily test: data -> statistics -> relaxation -> verdict.

Verdicts are conservative:

* ``ACCEPT``: the solver returned a pseudo-moment vector that passes an
  independent re-check, so a static hidden-variable model is not ruled out
  at this relaxation level.
* ``REJECT``: an SOS certificate extracted from the dual ray passed
  :func:`~latent_homophily.relaxation.validate_certificate`.
* ``UNKNOWN``: anything else (too few samples, solver trouble, a ray that
  does not validate).
"""
from __future__ import annotations

import hashlib
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from .model import joint_observable_polys
from .network import (CitationRecord, DirectedInfluenceGraph, NodeStateSeries, TimeWindow, author_reference_states,
                      build_coauthor_graph, direct_by_degree)
from .relaxation import (CertificateCheck, SosCertificate, Tolerances, build_moment_feasibility, extract_certificate,
                         validate_certificate)
from .sdp import FEASIBLE, INFEASIBLE, SolverOptions, solve
from .statistics import EmpiricalDistribution, pair_sequence_counts

logger = logging.getLogger(__name__)

REJECT, ACCEPT, UNKNOWN = "REJECT", "ACCEPT", "UNKNOWN"
DEFAULT_MIN_SAMPLES = 1000


@dataclass(frozen=True)
class AnalysisConfig:
    level: int = 3
    epsilon: float = 0.0
    min_samples: int = DEFAULT_MIN_SAMPLES
    tolerances: Tolerances = Tolerances()
    solver: SolverOptions = SolverOptions()

    def to_json(self) -> dict:
        return {"level": self.level, "epsilon": self.epsilon, "min_samples": self.min_samples,
                "tolerances": asdict(self.tolerances), "solver": asdict(self.solver)}

    @classmethod
    def from_json(cls, data) -> "AnalysisConfig":
        return cls(int(data["level"]), float(data["epsilon"]), int(data["min_samples"]),
                   Tolerances(**data["tolerances"]), SolverOptions(**data["solver"]))


@dataclass
class AnalysisResult:
    verdict: str
    reason: Optional[str]
    distribution: Optional[EmpiricalDistribution]
    solver: Dict[str, Any] = field(default_factory=dict)
    certificate: Optional[SosCertificate] = None
    check: Optional[CertificateCheck] = None


def evaluate_frequencies(y_hat, T: int, config: AnalysisConfig = AnalysisConfig(),
                         distribution: Optional[EmpiricalDistribution] = None) -> AnalysisResult:
    """Verdict for an outcome-frequency vector, with no sample-size guard.

    Useful for exact model moments; observed data should go through
    :func:`evaluate_distribution`.
    """
    y_hat = np.asarray(y_hat, dtype=float)
    obs = joint_observable_polys(T)
    relax = build_moment_feasibility(y_hat, obs, level=config.level, epsilon=config.epsilon)
    out = solve(relax.problem, config.solver)
    info = {"status": out.status, "iterations": out.iterations, "t_star": out.t_star,
            "residuals": dict(out.residuals), "seconds": round(out.seconds, 3),
            "solver_status": out.solver_status}
    if out.status == FEASIBLE:
        return AnalysisResult(ACCEPT, None, distribution, info)
    if out.status == INFEASIBLE:
        cert = extract_certificate(relax, out, config.tolerances)
        check = validate_certificate(cert, y_hat, obs, tolerances=config.tolerances)
        if check.valid:
            return AnalysisResult(REJECT, None, distribution, info, cert, check)
        return AnalysisResult(UNKNOWN, f"numerical trouble: certificate failed {check.reason} check",
                              distribution, info, cert, check)
    return AnalysisResult(UNKNOWN, f"solver inconclusive ({out.solver_status})", distribution, info)


def evaluate_distribution(dist: EmpiricalDistribution, config: AnalysisConfig = AnalysisConfig()) -> AnalysisResult:
    """Decide whether ``dist`` is explainable by a static hidden-variable model."""
    if dist.total < config.min_samples:
        return AnalysisResult(UNKNOWN, f"insufficient samples: {dist.total} < {config.min_samples}", dist)
    return evaluate_frequencies(dist.y_hat, dist.T, config, dist)


# ---------------------------------------------------------------------------
# reports

def digest(data: bytes) -> str:
    return "sha256:" + hashlib.sha256(data).hexdigest()


@dataclass
class RunReport:
    window: Optional[TimeWindow]
    sample_total: int
    verdict: str
    reason: Optional[str] = None
    distribution: Optional[EmpiricalDistribution] = None
    solver: Dict[str, Any] = field(default_factory=dict)
    certificate: Optional[SosCertificate] = None
    check: Optional[CertificateCheck] = None
    provenance: Dict[str, Any] = field(default_factory=dict)

    def certificate_summary(self) -> Optional[dict]:
        if self.check is None:
            return None
        return {"valid": self.check.valid, "reason": self.check.reason, "margin": self.check.margin,
                "identity_residual": self.check.identity_residual, "min_eigenvalue": self.check.min_eigenvalue}

    def to_json(self) -> dict:
        return {
            "window": self.window.to_json() if self.window is not None else None,
            "sample_total": self.sample_total,
            "verdict": self.verdict,
            "reason": self.reason,
            "distribution": self.distribution.to_json() if self.distribution is not None else None,
            "solver": self.solver,
            "certificate_summary": self.certificate_summary(),
            "certificate": self.certificate.to_json() if self.certificate is not None else None,
            "provenance": self.provenance,
        }

    @classmethod
    def from_json(cls, data: dict) -> "RunReport":
        summary = data.get("certificate_summary")
        check = CertificateCheck(**summary) if summary else None
        return cls(
            TimeWindow.from_json(data["window"]) if data.get("window") else None,
            int(data["sample_total"]), data["verdict"], data.get("reason"),
            EmpiricalDistribution.from_json(data["distribution"]) if data.get("distribution") else None,
            dict(data.get("solver", {})),
            SosCertificate.from_json(data["certificate"]) if data.get("certificate") else None,
            check, dict(data.get("provenance", {})),
        )


def verify_report(report: RunReport, tolerances: Optional[Tolerances] = None) -> CertificateCheck:
    """Re-validate a REJECT report's embedded certificate against its own distribution."""
    if report.certificate is None or report.distribution is None:
        raise ValueError("report carries no certificate to verify")
    tol = tolerances or AnalysisConfig.from_json(report.provenance["config"]).tolerances
    obs = joint_observable_polys(report.distribution.T)
    return validate_certificate(report.certificate, report.distribution.y_hat, obs, tolerances=tol)


def _report(result: AnalysisResult, window, provenance) -> RunReport:
    return RunReport(window, result.distribution.total, result.verdict, result.reason, result.distribution,
                     result.solver, result.certificate if result.verdict == REJECT else None, result.check,
                     provenance)


def analyze_series(series: NodeStateSeries, graph: DirectedInfluenceGraph, config: AnalysisConfig = AnalysisConfig(),
                   provenance: Optional[dict] = None) -> RunReport:
    """Test a ready-made state series (simulated or ingested)."""
    dist = pair_sequence_counts(series, graph)
    prov = {"config": config.to_json(), **dict(provenance or {})}
    prov.setdefault("series_metadata", dict(series.metadata))
    return _report(evaluate_distribution(dist, config), series.window, prov)


def window_distribution(records: Sequence[CitationRecord], window: TimeWindow) -> EmpiricalDistribution:
    """Statistics of one window; coauthor edges come from its first slice."""
    graph = build_coauthor_graph(records, window.slices[0])
    series = author_reference_states(records, graph, window)
    return pair_sequence_counts(series, direct_by_degree(graph))


def analyze_window(records: Sequence[CitationRecord], window: TimeWindow, config: AnalysisConfig = AnalysisConfig(),
                   provenance: Optional[dict] = None) -> RunReport:
    prov = {"config": config.to_json(), **dict(provenance or {})}
    try:
        dist = window_distribution(records, window)
        return _report(evaluate_distribution(dist, config), window, prov)
    except Exception as exc:  # recorded per window; the run goes on
        logger.exception("window %s failed", window.label())
        return RunReport(window, 0, UNKNOWN, f"error: {type(exc).__name__}: {exc}", provenance=prov)


def _analyze_star(args):
    return analyze_window(*args)


def analyze_windows(records: Sequence[CitationRecord], windows: Sequence[TimeWindow],
                    config: AnalysisConfig = AnalysisConfig(), jobs: int = 1,
                    provenance: Optional[dict] = None) -> List[RunReport]:
    """All windows, in parallel up to ``jobs``, returned ordered by start year."""
    windows = sorted(windows, key=lambda w: (w.start_year, w.end_year))
    tasks = [(records, w, config, provenance) for w in windows]
    if jobs <= 1 or len(tasks) <= 1:
        return [analyze_window(*t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_analyze_star, tasks))


def records_digest(records: Sequence[CitationRecord]) -> str:
    payload = json.dumps([[r.paper_id, list(r.authors), r.year, list(r.references)] for r in records],
                         separators=(",", ":")).encode()
    return digest(payload)
