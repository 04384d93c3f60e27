from .problem import Block, SdpProblem, make_block
from .solver import FEASIBLE, INFEASIBLE, UNKNOWN, FarkasRay, SdpOutcome, SolverOptions, solve

__all__ = [
    "Block", "SdpProblem", "make_block", "solve", "SdpOutcome", "SolverOptions", "FarkasRay",
    "FEASIBLE", "INFEASIBLE", "UNKNOWN",
]
