"""Copy dynamics on a directed influence graph: a known-contagion data source.

Every author carries one ±1 state per reference channel. In each step ``M``
arcs are drawn uniformly with replacement and applied one after another: for
a drawn arc ``u -> v`` the nondominant ``v`` copies the current state of the
dominant ``u``. Channels are independent replicas of the dynamics, drawn
from the same generator in a fixed order, which multiplies the number of
(arc, reference) samples without changing their distribution.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Optional, Tuple

import numpy as np

from .network import (ConfigurationError, CoauthorGraph, DirectedInfluenceGraph, NodeStateSeries, TimeWindow,
                      direct_by_degree)

RNG_ALGORITHM = "PCG64"

Node = Tuple[str, str]


@dataclass(frozen=True)
class SimulationConfig:
    """Parameters of one simulation run.

    ``picks_per_step=None`` means one pick per arc (``M = |arcs|``).
    """

    seed: int
    T: int = 3
    picks_per_step: Optional[int] = None
    references: int = 1

    def __post_init__(self):
        if self.T < 2:
            raise ConfigurationError(f"T must be at least 2, got {self.T}")
        if self.picks_per_step is not None and self.picks_per_step < 1:
            raise ConfigurationError(f"picks_per_step must be at least 1, got {self.picks_per_step}")
        if self.references < 1:
            raise ConfigurationError(f"references must be at least 1, got {self.references}")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise ConfigurationError("seed must fit in 64 unsigned bits")

    def picks(self, graph: DirectedInfluenceGraph) -> int:
        return len(graph.arcs) if self.picks_per_step is None else self.picks_per_step

    def reference_ids(self) -> Tuple[str, ...]:
        return tuple(f"r{k}" for k in range(self.references))


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(int(seed)))


def _authors(graph: DirectedInfluenceGraph):
    return sorted(graph.nodes)


def _arc_index(graph: DirectedInfluenceGraph, authors):
    pos = {a: i for i, a in enumerate(authors)}
    src = np.array([pos[u] for u, _ in graph.arcs], dtype=np.int64)
    dst = np.array([pos[v] for _, v in graph.arcs], dtype=np.int64)
    return src, dst


def _init_array(n: int, channels: int, rng: np.random.Generator) -> np.ndarray:
    return np.where(rng.integers(0, 2, size=(n, channels)) == 1, 1, -1).astype(np.int8)


def _step_array(states: np.ndarray, src: np.ndarray, dst: np.ndarray, M: int,
                rng: np.random.Generator) -> np.ndarray:
    out = states.copy()
    if src.size == 0:
        return out
    for r in range(out.shape[1]):
        col = out[:, r]
        picks = rng.integers(0, src.size, size=M)
        # order matters: a later pick sees earlier copies
        for u, v in zip(src[picks].tolist(), dst[picks].tolist()):
            col[v] = col[u]
    return out


def _to_dict(authors, refs, arr) -> Dict[Node, int]:
    return {(a, r): int(arr[i, k]) for i, a in enumerate(authors) for k, r in enumerate(refs)}


def init_states(graph: DirectedInfluenceGraph, config: SimulationConfig,
                rng: Optional[np.random.Generator] = None) -> Dict[Node, int]:
    """Independent fair ±1 state for every (author, reference) node."""
    rng = make_rng(config.seed) if rng is None else rng
    authors = _authors(graph)
    return _to_dict(authors, config.reference_ids(), _init_array(len(authors), config.references, rng))


def step(states: Dict[Node, int], graph: DirectedInfluenceGraph, config: SimulationConfig,
         rng: np.random.Generator) -> Dict[Node, int]:
    """One step of ``M`` sequential copy picks per reference channel."""
    authors = _authors(graph)
    refs = config.reference_ids()
    try:
        arr = np.array([[states[(a, r)] for r in refs] for a in authors], dtype=np.int8).reshape(len(authors),
                                                                                                 len(refs))
    except KeyError as exc:
        raise KeyError(f"no state for node {exc.args[0]}") from None
    src, dst = _arc_index(graph, authors)
    return _to_dict(authors, refs, _step_array(arr, src, dst, config.picks(graph), rng))


def run(graph: DirectedInfluenceGraph, config: SimulationConfig) -> NodeStateSeries:
    """Simulate ``T`` slices: random start, then ``T - 1`` copy steps."""
    rng = make_rng(config.seed)
    authors = _authors(graph)
    src, dst = _arc_index(graph, authors)
    M = config.picks(graph)
    current = _init_array(len(authors), config.references, rng)
    history = [current]
    for _ in range(config.T - 1):
        current = _step_array(current, src, dst, M, rng)
        history.append(current)
    # (author, channel, slice) -> rows ordered author-major
    states = np.stack(history, axis=2).reshape(len(authors) * config.references, config.T)
    nodes = tuple((a, r) for a in authors for r in config.reference_ids())
    window = TimeWindow(0, config.T, tuple((t, t + 1) for t in range(config.T)))
    metadata = {"seed": int(config.seed), "M": int(M), "T": config.T, "references": config.references,
                "rng": RNG_ALGORITHM, "source": "copy-dynamics"}
    return NodeStateSeries(nodes, states, window, frozenset(authors), metadata)


def preferential_attachment_graph(n: int, m: int, seed: int) -> CoauthorGraph:
    """Barabási–Albert coauthor graph on authors ``a0000, a0001, ...``."""
    import networkx as nx

    g = nx.barabasi_albert_graph(n, m, seed=int(seed))
    width = len(str(max(n - 1, 0)))
    name = [f"a{i:0{width}d}" for i in range(n)]
    return CoauthorGraph(frozenset(name), {tuple(sorted((name[u], name[v]))): 0 for u, v in g.edges()})


def preferential_attachment_influence(n: int, m: int, seed: int) -> DirectedInfluenceGraph:
    return direct_by_degree(preferential_attachment_graph(n, m, seed))


def run_latent(graph: DirectedInfluenceGraph, config: SimulationConfig, types: int = 4,
               low: float = 0.1, high: float = 0.9) -> NodeStateSeries:
    """Hidden-variable control: no influence along arcs.

    Each author draws one of ``types`` latent classes; a class fixes the
    initial and flip probabilities of a static chain, and every
    (author, reference) sequence is an independent run of the author's chain.
    Pair statistics are then a mixture of products of static chains, which
    is exactly the hypothesis under test.
    """
    rng = make_rng(config.seed)
    authors = _authors(graph)
    n, R, T = len(authors), config.references, config.T
    params = rng.uniform(low, high, size=(types, 3))
    cls = rng.integers(0, types, size=n)
    p0, p_plus, p_minus = (params[cls, k][:, None] for k in range(3))
    states = np.empty((n, R, T), dtype=np.int8)
    states[:, :, 0] = np.where(rng.random((n, R)) < p0, 1, -1)
    for t in range(1, T):
        prev = states[:, :, t - 1]
        flip = rng.random((n, R)) < np.where(prev > 0, p_plus, p_minus)
        states[:, :, t] = np.where(flip, -prev, prev)
    nodes = tuple((a, r) for a in authors for r in config.reference_ids())
    window = TimeWindow(0, T, tuple((t, t + 1) for t in range(T)))
    metadata = {"seed": int(config.seed), "T": T, "references": R, "rng": RNG_ALGORITHM,
                "source": "latent-classes", "types": types}
    return NodeStateSeries(nodes, states.reshape(n * R, T), window, frozenset(authors), metadata)
