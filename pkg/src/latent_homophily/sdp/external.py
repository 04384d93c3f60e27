"""Cross-validation through an external SDPA-speaking solver.

The external program is called as ``command problem.dat-s solution.out`` (the
CSDP convention) unless the command contains ``{problem}`` / ``{solution}``
placeholders. Its exit status and CSDP-style solution file are mapped back to
an :class:`SdpOutcome`; witnesses and rays are re-checked here, never trusted.
"""
from __future__ import annotations

import shutil
import subprocess
import sys
import tempfile
import time
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .problem import SdpProblem
from .sdpa import write_sdpa
from .solver import FEASIBLE, INFEASIBLE, UNKNOWN, SdpOutcome, SolverOptions, _check_ray, witness_residuals

REFERENCE_COMMAND = (sys.executable, "-m", "latent_homophily.sdp.reference_solver")


class ExternalSolverError(RuntimeError):
    """The external solver is missing, crashed, or gave up."""


class SolutionParseError(ValueError):
    def __init__(self, message: str, line: int):
        self.line = line
        super().__init__(f"solution line {line}: {message}")


def parse_solution(text: str, n_vars: int, sizes: Sequence[int]):
    """Parse a CSDP-style solution: ``y`` line then ``mat block i j value`` lines.

    Returns ``(y, Z_blocks, X_blocks)`` as dense symmetric matrices.
    """
    lines = [(i, ln.strip()) for i, ln in enumerate(text.splitlines(), start=1) if ln.strip()]
    if not lines:
        raise SolutionParseError("empty solution", 1)
    lineno, first = lines[0]
    try:
        y = np.array([float(v) for v in first.split()])
    except ValueError:
        raise SolutionParseError(f"bad y vector {first[:60]!r}", lineno) from None
    if y.size != n_vars:
        raise SolutionParseError(f"y has {y.size} entries, expected {n_vars}", lineno)
    mats = {1: [np.zeros((abs(s), abs(s))) for s in sizes], 2: [np.zeros((abs(s), abs(s))) for s in sizes]}
    for lineno, line in lines[1:]:
        parts = line.split()
        if len(parts) != 5:
            raise SolutionParseError(f"expected 'mat block i j value', got {line!r}", lineno)
        try:
            m, k, i, j = (int(p) for p in parts[:4])
            v = float(parts[4])
        except ValueError:
            raise SolutionParseError(f"bad entry {line!r}", lineno) from None
        if m not in mats or not 1 <= k <= len(sizes) or not (1 <= i <= abs(sizes[k - 1]) and 1 <= j <= abs(sizes[k - 1])):
            raise SolutionParseError(f"entry out of range {line!r}", lineno)
        M = mats[m][k - 1]
        M[i - 1, j - 1] = M[j - 1, i - 1] = v
    return y, mats[1], mats[2]


def _command(command: Optional[Sequence[str]], problem_path: Path, solution_path: Path) -> List[str]:
    cmd = list(command or REFERENCE_COMMAND)
    if not cmd:
        raise ExternalSolverError("empty solver command")
    if any("{problem}" in c or "{solution}" in c for c in cmd):
        return [c.format(problem=problem_path, solution=solution_path) for c in cmd]
    return cmd + [str(problem_path), str(solution_path)]


def solve_via_export(problem: SdpProblem, command: Optional[Sequence[str]] = None,
                     options: Optional[SolverOptions] = None, timeout: Optional[float] = None,
                     workdir: Optional[str] = None) -> SdpOutcome:
    """Export ``problem``, run the external solver, and classify its answer.

    Exit code 0 means a feasible point was claimed and 2 an infeasibility
    ray; both are re-verified against ``problem``. A missing executable or
    any other exit status raises :class:`ExternalSolverError`.
    """
    options = options or SolverOptions()
    start = time.perf_counter()
    with tempfile.TemporaryDirectory(dir=workdir) as tmp:
        prob_path, sol_path = Path(tmp) / "problem.dat-s", Path(tmp) / "solution.out"
        write_sdpa(problem, prob_path)
        cmd = _command(command, prob_path, sol_path)
        if shutil.which(cmd[0]) is None and not Path(cmd[0]).exists():
            raise ExternalSolverError(f"external solver {cmd[0]!r} not found")
        try:
            proc = subprocess.run(cmd, capture_output=True, text=True, timeout=timeout)
        except (OSError, subprocess.TimeoutExpired) as exc:
            raise ExternalSolverError(f"external solver failed to run: {exc}") from exc
        if proc.returncode not in (0, 2):
            raise ExternalSolverError(f"external solver exited with {proc.returncode}: "
                                      f"{proc.stderr.strip()[-500:]}")
        if not sol_path.exists():
            raise ExternalSolverError("external solver wrote no solution file")
        text = sol_path.read_text(encoding="utf-8")

    sizes = [b.size if b.kind == "psd" else -b.size for b in problem.blocks]
    if problem.n_equalities:
        sizes.append(-2 * problem.n_equalities)
    y, _, X = parse_solution(text, problem.n_vars, sizes)
    elapsed = time.perf_counter() - start
    eq_res, min_eig = witness_residuals(problem, y)
    residuals = {"equality": eq_res, "min_eigenvalue": min_eig}
    tag = f"external exit {proc.returncode}"
    if proc.returncode == 0:
        if eq_res <= options.tol_feas and min_eig >= -options.tol_feas:
            return SdpOutcome(FEASIBLE, y=y, blocks=tuple(b.evaluate(y) for b in problem.blocks),
                              residuals=residuals, solver_status=tag, seconds=elapsed)
        return SdpOutcome(UNKNOWN, y=y, residuals=residuals, solver_status=tag + ", witness rejected",
                          seconds=elapsed)

    Z = tuple(Xk if b.kind == "psd" else np.diag(Xk).copy() for b, Xk in zip(problem.blocks, X))
    lam = np.zeros(problem.n_equalities)
    if problem.n_equalities:
        w = np.diag(X[-1])
        # pair (a.y - b >= 0, b - a.y >= 0) multipliers (w+, w-) give lam = w- - w+
        lam = w[1::2] - w[0::2]
    ray = _check_ray(problem, Z, lam)
    residuals.update({"ray_margin": ray.margin, "ray_residual": ray.residual})
    if ray.margin > 0 and ray.min_eigenvalue >= -options.tol_feas:
        return SdpOutcome(INFEASIBLE, y=y, ray=ray, residuals=residuals, solver_status=tag, seconds=elapsed)
    return SdpOutcome(UNKNOWN, y=y, ray=ray, residuals=residuals, solver_status=tag + ", ray rejected",
                      seconds=elapsed)
