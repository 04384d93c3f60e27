"""Testing network correlations against static latent homophily with Lasserre SDP relaxations."""

__version__ = "0.1.0"

from .model import ObservableSet, constraint_polys, joint_observable_polys, sequence_probability_poly
from .pipeline import ACCEPT, REJECT, UNKNOWN, AnalysisConfig, RunReport, evaluate_distribution, evaluate_frequencies
from .polynomial import Polynomial
from .relaxation import Tolerances, build_moment_feasibility, extract_certificate, validate_certificate
from .statistics import EmpiricalDistribution, encode_outcome, pair_sequence_counts

__all__ = [
    "Polynomial", "ObservableSet", "joint_observable_polys", "sequence_probability_poly", "constraint_polys",
    "EmpiricalDistribution", "encode_outcome", "pair_sequence_counts", "build_moment_feasibility",
    "extract_certificate", "validate_certificate", "Tolerances", "AnalysisConfig", "RunReport",
    "evaluate_distribution", "evaluate_frequencies", "ACCEPT", "REJECT", "UNKNOWN",
]
