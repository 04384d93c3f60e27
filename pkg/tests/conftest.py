import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)


import numpy as np
import pytest


@pytest.fixture(scope="session")
def point_mass():
    """Level-3 relaxation of the point mass on ((+,+,-),(+,+,-)), solved once."""
    from latent_homophily.model import joint_observable_polys
    from latent_homophily.relaxation import build_moment_feasibility
    from latent_homophily.sdp import solve
    from latent_homophily.statistics import encode_outcome

    y = np.zeros(64)
    y[encode_outcome((1, 1, -1), (1, 1, -1))] = 1.0
    relax = build_moment_feasibility(y, joint_observable_polys(3), level=3)
    return relax, solve(relax.problem)
