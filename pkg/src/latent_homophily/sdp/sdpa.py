"""SDPA sparse format (``.dat-s``) export and import.

The SDPA convention is ``sum_i x_i F_i - F_0 >= 0``. A block ``S_k(y) = C_k +
sum_m y_m G_{k,m}`` is written with ``F_0 = -C_k`` and ``F_m = G_{k,m}``.
Equalities ``a_i . y = b_i`` have no native SDPA form; each becomes the pair of
diagonal entries ``a_i . y - b_i >= 0`` and ``b_i - a_i . y >= 0`` in one
extra diagonal block written last.

Labels, block kinds and the position of the equality block travel in ``*``
comment lines, so a file written here reads back to an equal ``SdpProblem``.
Files from other producers are read too; without the metadata every block is
an inequality block.

Floats are written with ``repr`` so the round trip is bit-exact.
"""
from __future__ import annotations

import json
from pathlib import Path
from typing import List, Optional, Union

import numpy as np

from .problem import Block, SdpProblem

MAGIC = "latent-homophily sdpa v1"


class SdpaFormatError(ValueError):
    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


def _fmt(v: float) -> str:
    return repr(float(v))


def equality_pair_entries(problem: SdpProblem):
    """``(mat, row, col, val)`` of the equality-pair diagonal block."""
    mats, rows, vals = [], [], []
    for r, c, v in zip(problem.eq_row, problem.eq_col, problem.eq_val):
        mats += [c + 1, c + 1]
        rows += [2 * r, 2 * r + 1]
        vals += [v, -v]
    for i, b in enumerate(problem.rhs):
        if b != 0:
            mats += [0, 0]
            rows += [2 * i, 2 * i + 1]
            vals += [-b, b]
    return np.array(mats, dtype=np.int64), np.array(rows, dtype=np.int64), np.array(vals, dtype=float)


def dumps(problem: SdpProblem) -> str:
    """Render ``problem`` as SDPA sparse text."""
    blocks = list(problem.blocks)
    n_eq = problem.n_equalities
    meta = {
        "blocks": [[b.label, b.kind] for b in blocks],
        "equality_block": len(blocks) + 1 if n_eq else None,
        "var_labels": list(problem.var_labels),
        "eq_labels": list(problem.eq_labels),
    }
    sizes = [b.size if b.kind == "psd" else -b.size for b in blocks]
    if n_eq:
        sizes.append(-2 * n_eq)
    out = [f'"{MAGIC}', f"* meta {json.dumps(meta, separators=(',', ':'))}",
           str(problem.n_vars), str(len(sizes)), " ".join(map(str, sizes)),
           " ".join(_fmt(v) for v in problem.objective) if problem.n_vars else ""]

    def emit(mat, blk, row, col, val):
        # SDPA stores F_0 = -C
        v = -val if mat == 0 else val
        out.append(f"{mat} {blk} {row + 1} {col + 1} {_fmt(v)}")

    for k, b in enumerate(blocks, start=1):
        for m, r, c, v in zip(b.mat, b.row, b.col, b.val):
            emit(int(m), k, int(r), int(c), v)
    if n_eq:
        mats, rows, vals = equality_pair_entries(problem)
        order = np.lexsort((rows, mats))
        for m, r, v in zip(mats[order], rows[order], vals[order]):
            emit(int(m), len(blocks) + 1, int(r), int(r), v)
    return "\n".join(out) + "\n"


def write_sdpa(problem: SdpProblem, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.write_text(dumps(problem), encoding="utf-8")
    return path


def _numbers(text: str) -> List[str]:
    return text.replace(",", " ").replace("{", " ").replace("}", " ").replace("(", " ").replace(")", " ").split()


def loads(text: str) -> SdpProblem:
    """Parse SDPA sparse text. Errors name the offending line."""
    meta = None
    body = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if line.startswith("* meta "):
            try:
                meta = json.loads(line[len("* meta "):])
            except json.JSONDecodeError as exc:
                raise SdpaFormatError(f"bad metadata: {exc}", lineno) from None
            continue
        if not line or line[0] in '"*':
            continue
        body.append((lineno, line))
    if len(body) < 3:
        raise SdpaFormatError("truncated header")
    try:
        n_vars = int(_numbers(body[0][1])[0])
        n_blocks = int(_numbers(body[1][1])[0])
        sizes = [int(s) for s in _numbers(body[2][1])[:n_blocks]]
    except (ValueError, IndexError):
        raise SdpaFormatError("bad header", body[min(2, len(body) - 1)][0]) from None
    if len(sizes) != n_blocks:
        raise SdpaFormatError("block structure shorter than block count", body[2][0])
    pos = 3
    objective = np.zeros(n_vars)
    if n_vars:
        if pos >= len(body):
            raise SdpaFormatError("missing objective vector")
        try:
            vals = [float(v) for v in _numbers(body[pos][1])]
        except ValueError:
            raise SdpaFormatError("bad objective vector", body[pos][0]) from None
        if len(vals) < n_vars:
            raise SdpaFormatError("objective vector too short", body[pos][0])
        objective = np.array(vals[:n_vars])
        pos += 1

    entries = [[] for _ in range(n_blocks)]
    for lineno, line in body[pos:]:
        parts = _numbers(line)
        if len(parts) != 5:
            raise SdpaFormatError(f"expected 'mat block row col value', got {line!r}", lineno)
        try:
            m, k, r, c = (int(p) for p in parts[:4])
            v = float(parts[4])
        except ValueError:
            raise SdpaFormatError(f"bad entry {line!r}", lineno) from None
        if not (0 <= m <= n_vars and 1 <= k <= n_blocks and 1 <= r <= abs(sizes[k - 1])
                and 1 <= c <= abs(sizes[k - 1])):
            raise SdpaFormatError(f"entry out of range {line!r}", lineno)
        entries[k - 1].append((m, r - 1, c - 1, -v if m == 0 else v))

    eq_index = meta.get("equality_block") if meta else None
    block_meta = meta.get("blocks") if meta else None
    blocks = []
    eq_row, eq_col, eq_val = [], [], []
    rhs = np.zeros(0)
    for k, (size, ent) in enumerate(zip(sizes, entries), start=1):
        if k == eq_index:
            n_eq = abs(size) // 2
            rhs = np.zeros(n_eq)
            for m, r, _, v in ent:
                if r % 2:
                    continue
                if m == 0:
                    rhs[r // 2] = -v
                else:
                    eq_row.append(r // 2)
                    eq_col.append(m - 1)
                    eq_val.append(v)
            continue
        if block_meta:
            label, kind = block_meta[len(blocks)]
        else:
            label, kind = f"block_{k}", "psd" if size > 0 else "diag"
        arr = list(zip(*ent)) if ent else [[], [], [], []]
        blocks.append(Block(label, abs(size), kind, *(np.array(a) for a in arr)))
    return SdpProblem(
        n_vars, tuple(blocks), np.array(eq_row, dtype=np.int64), np.array(eq_col, dtype=np.int64),
        np.array(eq_val, dtype=float), rhs,
        var_labels=tuple(meta.get("var_labels", ())) if meta else (),
        eq_labels=tuple(meta.get("eq_labels", ())) if meta else (),
        objective=objective,
    )


def read_sdpa(path: Union[str, Path]) -> SdpProblem:
    return loads(Path(path).read_text(encoding="utf-8"))
