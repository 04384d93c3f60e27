"""Citation records, coauthor graphs, time windows and author-reference states.

The ingest formats are

* CSV with header ``paper_id,authors,year,references``; authors and references
  are ``;``-separated lists.
* JSON lines, one object per line with keys ``paper_id``, ``authors`` (array),
  ``year`` (integer) and ``references`` (array).
"""
from __future__ import annotations

import csv
import io
import json
import logging
import warnings
from dataclasses import dataclass, field
from typing import IO, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

logger = logging.getLogger(__name__)

YearInterval = Tuple[int, int]

CSV_HEADER = ("paper_id", "authors", "year", "references")


class IngestError(ValueError):
    """A record could not be parsed; ``line`` is 1-based in the input stream."""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


class ConfigurationError(ValueError):
    pass


@dataclass(frozen=True)
class CitationRecord:
    paper_id: str
    authors: Tuple[str, ...]
    year: int
    references: Tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "authors", tuple(self.authors))
        object.__setattr__(self, "references", tuple(self.references))
        if not self.authors:
            raise ValueError(f"paper {self.paper_id!r} has no authors")
        if any(not a for a in self.authors):
            raise ValueError(f"paper {self.paper_id!r} has an empty author id")


# ---------------------------------------------------------------------------
# ingest

def _parse_year(raw, line: int) -> int:
    if isinstance(raw, bool):
        raise IngestError(f"year {raw!r} is not an integer", line)
    if isinstance(raw, int):
        return raw
    text = str(raw).strip()
    try:
        return int(text)
    except ValueError:
        raise IngestError(f"year {text!r} is not an integer", line) from None


def _split_list(text: str) -> Tuple[str, ...]:
    return tuple(item.strip() for item in text.split(";") if item.strip())


def _make_record(paper_id, authors, year, refs, line, year_range) -> CitationRecord:
    if not paper_id:
        raise IngestError("empty paper_id", line)
    if not authors:
        raise IngestError(f"paper {paper_id!r} has no authors", line)
    if year_range is not None and not (year_range[0] <= year <= year_range[1]):
        raise IngestError(f"year {year} outside corpus range {year_range[0]}-{year_range[1]}", line)
    return CitationRecord(paper_id, authors, year, refs)


def _read_csv(text: str, year_range) -> List[CitationRecord]:
    lines = text.splitlines()
    if not any(line.strip() for line in lines):
        return []
    reader = csv.reader(lines)
    records = []
    header_seen = False
    for lineno, row in enumerate(reader, start=1):
        if not row or all(not cell.strip() for cell in row):
            continue
        if not header_seen:
            if tuple(cell.strip() for cell in row) != CSV_HEADER:
                raise IngestError(f"expected header {','.join(CSV_HEADER)}, got {','.join(row)}", lineno)
            header_seen = True
            continue
        if len(row) != 4:
            raise IngestError(f"expected 4 fields, got {len(row)}", lineno)
        paper_id, authors, year, refs = row
        records.append(
            _make_record(paper_id.strip(), _split_list(authors), _parse_year(year, lineno),
                         _split_list(refs), lineno, year_range)
        )
    return records


def _read_jsonl(text: str, year_range) -> List[CitationRecord]:
    records = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise IngestError(f"invalid JSON ({exc.msg})", lineno) from None
        if not isinstance(obj, dict):
            raise IngestError("expected a JSON object", lineno)
        missing = [k for k in CSV_HEADER if k not in obj]
        if missing:
            raise IngestError(f"missing keys {missing}", lineno)
        authors, refs = obj["authors"], obj["references"]
        if not isinstance(authors, list) or not all(isinstance(a, str) for a in authors):
            raise IngestError("authors must be an array of strings", lineno)
        if not isinstance(refs, list) or not all(isinstance(r, str) for r in refs):
            raise IngestError("references must be an array of strings", lineno)
        records.append(
            _make_record(str(obj["paper_id"]), tuple(authors), _parse_year(obj["year"], lineno),
                         tuple(refs), lineno, year_range)
        )
    return records


def ingest_records(source: Union[bytes, str, IO[bytes]], format: str = "csv",
                   year_range: Optional[YearInterval] = None) -> List[CitationRecord]:
    """Parse citation records from a UTF-8 byte stream.

    Parameters
    ----------
    source : bytes or binary file object
        Input data. ``str`` is accepted for convenience.
    format : {"csv", "jsonl"}
    year_range : (int, int), optional
        Inclusive bounds every record year must satisfy.

    Raises
    ------
    IngestError
        On a malformed row; the message names the line number.
    ConfigurationError
        On an unknown format.
    """
    if format not in ("csv", "jsonl"):
        raise ConfigurationError(f"unknown ingest format {format!r}; expected 'csv' or 'jsonl'")
    if hasattr(source, "read"):
        source = source.read()
    text = source.decode("utf-8") if isinstance(source, (bytes, bytearray)) else source
    if text.startswith("﻿"):
        text = text[1:]
    if format == "csv":
        return _read_csv(text, year_range)
    return _read_jsonl(text, year_range)


def dump_records(records: Iterable[CitationRecord], format: str = "csv") -> bytes:
    """Serialize records in an ingestible format (inverse of :func:`ingest_records`)."""
    if format == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for r in records:
            for item in r.authors + r.references:
                if ";" in item:
                    raise ValueError(f"identifier {item!r} contains ';' and cannot be written as CSV")
            writer.writerow([r.paper_id, ";".join(r.authors), r.year, ";".join(r.references)])
        return buf.getvalue().encode("utf-8")
    if format == "jsonl":
        lines = [
            json.dumps({"paper_id": r.paper_id, "authors": list(r.authors), "year": r.year,
                        "references": list(r.references)})
            for r in records
        ]
        return ("\n".join(lines) + ("\n" if lines else "")).encode("utf-8")
    raise ConfigurationError(f"unknown format {format!r}")


# ---------------------------------------------------------------------------
# graphs

def _edge_key(a: str, b: str) -> Tuple[str, str]:
    return (a, b) if a < b else (b, a)


@dataclass(frozen=True)
class CoauthorGraph:
    """Undirected coauthor graph; ``edges`` maps sorted author pairs to the earliest shared year."""

    nodes: frozenset
    edges: Mapping[Tuple[str, str], int]

    def __post_init__(self):
        for a, b in self.edges:
            if a == b:
                raise ValueError(f"self-loop on {a!r}")
            if a not in self.nodes or b not in self.nodes:
                raise ValueError(f"edge {(a, b)} references an unknown node")

    @property
    def degree(self) -> Dict[str, int]:
        deg = {n: 0 for n in self.nodes}
        for a, b in self.edges:
            deg[a] += 1
            deg[b] += 1
        return deg

    def neighbors(self, author: str) -> List[str]:
        out = []
        for a, b in self.edges:
            if a == author:
                out.append(b)
            elif b == author:
                out.append(a)
        return sorted(out)

    def to_json(self) -> dict:
        return {
            "nodes": sorted(self.nodes),
            "edges": [[a, b, y] for (a, b), y in sorted(self.edges.items())],
        }

    @classmethod
    def from_json(cls, data: Mapping) -> "CoauthorGraph":
        edges = {_edge_key(a, b): int(y) for a, b, y in data["edges"]}
        return cls(frozenset(data["nodes"]), edges)


@dataclass(frozen=True)
class DirectedInfluenceGraph:
    """Coauthor graph with each edge oriented dominant -> nondominant."""

    nodes: frozenset
    arcs: Tuple[Tuple[str, str], ...]

    def __post_init__(self):
        object.__setattr__(self, "arcs", tuple(tuple(a) for a in self.arcs))
        for u, v in self.arcs:
            if u not in self.nodes or v not in self.nodes:
                raise ValueError(f"arc {u}->{v} references an unknown node")

    def to_json(self) -> dict:
        return {"nodes": sorted(self.nodes), "arcs": [list(a) for a in self.arcs]}

    @classmethod
    def from_json(cls, data: Mapping) -> "DirectedInfluenceGraph":
        if "arcs" in data:
            return cls(frozenset(data["nodes"]), tuple((u, v) for u, v in data["arcs"]))
        # an undirected coauthor graph is accepted and directed by degree
        return direct_by_degree(CoauthorGraph.from_json(data))


def build_coauthor_graph(records: Iterable[CitationRecord], edge_window: YearInterval) -> CoauthorGraph:
    """Coauthor graph of papers published in the half-open ``edge_window``.

    Every author appearing on a paper in the window is a node, including
    single-author papers.
    """
    start, end = edge_window
    if end <= start:
        raise ValueError(f"edge window [{start}, {end}) is empty")
    nodes = set()
    edges: Dict[Tuple[str, str], int] = {}
    for rec in records:
        if not start <= rec.year < end:
            continue
        authors = sorted(set(rec.authors))
        nodes.update(authors)
        for i, a in enumerate(authors):
            for b in authors[i + 1:]:
                key = (a, b)
                if key not in edges or rec.year < edges[key]:
                    edges[key] = rec.year
    return CoauthorGraph(frozenset(nodes), edges)


def direct_by_degree(graph: CoauthorGraph) -> DirectedInfluenceGraph:
    """Orient every edge from the higher-degree endpoint.

    Equal degrees are broken by author id: the lexicographically smaller id
    is dominant.
    """
    deg = graph.degree
    arcs = []
    for a, b in sorted(graph.edges):
        # a < b by construction of the edge key
        if deg[b] > deg[a]:
            arcs.append((b, a))
        else:
            arcs.append((a, b))
    return DirectedInfluenceGraph(graph.nodes, tuple(arcs))


# ---------------------------------------------------------------------------
# windows

@dataclass(frozen=True)
class TimeWindow:
    start_year: int
    end_year: int
    slices: Tuple[YearInterval, ...]

    @property
    def T(self) -> int:
        return len(self.slices)

    def slice_of(self, year: int) -> Optional[int]:
        for t, (lo, hi) in enumerate(self.slices):
            if lo <= year < hi:
                return t
        return None

    def label(self) -> str:
        return f"{self.start_year}-{self.end_year}"

    def to_json(self) -> dict:
        return {"start_year": self.start_year, "end_year": self.end_year,
                "slices": [list(s) for s in self.slices]}

    @classmethod
    def from_json(cls, data: Mapping) -> "TimeWindow":
        return cls(int(data["start_year"]), int(data["end_year"]),
                   tuple((int(a), int(b)) for a, b in data["slices"]))


def make_window(start_year: int, end_year: int, T: int = 3) -> TimeWindow:
    """Partition ``[start_year, end_year)`` into ``T`` near-equal integer-year slices.

    Remainder years go to the earliest slices.
    """
    span = end_year - start_year
    if T < 1:
        raise ValueError("T must be positive")
    if span < T:
        raise ValueError(f"window {start_year}-{end_year} is too short for {T} slices")
    base, extra = divmod(span, T)
    slices = []
    lo = start_year
    for t in range(T):
        hi = lo + base + (1 if t < extra else 0)
        slices.append((lo, hi))
        lo = hi
    return TimeWindow(start_year, end_year, tuple(slices))


@dataclass(frozen=True)
class ThreePeriod:
    """The whole corpus range as one window split into ``T`` periods."""


@dataclass(frozen=True)
class Span:
    years: int
    start: int
    stride: int


WindowScheme = Union[ThreePeriod, Span]


def parse_scheme(text: str) -> WindowScheme:
    """Parse ``three_period`` or ``span:YEARS:START:STRIDE``."""
    text = text.strip()
    if text in ("three_period", "three-period"):
        return ThreePeriod()
    parts = text.split(":")
    if parts[0] == "span" and len(parts) == 4:
        try:
            return Span(int(parts[1]), int(parts[2]), int(parts[3]))
        except ValueError:
            pass
    raise ConfigurationError(f"unknown window scheme {text!r}; use three_period or span:YEARS:START:STRIDE")


def window_slices(corpus_range: YearInterval, scheme: WindowScheme, T: int = 3) -> List[TimeWindow]:
    """Enumerate analysis windows over a corpus.

    ``corpus_range`` is ``(first_year, last_year)``; windows are half-open
    ``[start, start + years)`` and may end exactly at ``last_year``. Windows
    reaching past it are dropped with a warning.
    """
    lo, hi = corpus_range
    if isinstance(scheme, ThreePeriod):
        return [make_window(lo, hi, T)]
    if isinstance(scheme, Span):
        if scheme.years <= 0 or scheme.stride <= 0:
            raise ConfigurationError("span years and stride must be positive")
        if scheme.start < lo:
            raise ConfigurationError(f"span start {scheme.start} precedes corpus start {lo}")
        windows = []
        s = scheme.start
        while s < hi:
            if s + scheme.years > hi:
                warnings.warn(f"dropping window {s}-{s + scheme.years}: extends past corpus end {hi}",
                              stacklevel=2)
            else:
                windows.append(make_window(s, s + scheme.years, T))
            s += scheme.stride
        return windows
    raise ConfigurationError(f"unsupported scheme {scheme!r}")


# ---------------------------------------------------------------------------
# node states

@dataclass(frozen=True)
class NodeStateSeries:
    """±1 states of (author, reference) nodes over the slices of a window.

    ``states[i, t]`` is the state of ``nodes[i]`` in slice ``t``. ``authors``
    lists every author the series covers, including authors that own no node.
    """

    nodes: Tuple[Tuple[str, str], ...]
    states: np.ndarray
    window: Optional[TimeWindow] = None
    authors: frozenset = frozenset()
    metadata: Mapping = field(default_factory=dict)

    def __post_init__(self):
        states = np.asarray(self.states, dtype=np.int8)
        if states.ndim != 2:
            states = states.reshape(len(self.nodes), -1)
        if states.shape[0] != len(self.nodes):
            raise ValueError(f"{len(self.nodes)} nodes but {states.shape[0]} state rows")
        if states.size and not np.all(np.abs(states) == 1):
            raise ValueError("states must be +1 or -1")
        if self.window is not None and states.shape[1] != self.window.T and len(self.nodes):
            raise ValueError(f"states have {states.shape[1]} slices, window has {self.window.T}")
        states.setflags(write=False)
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "nodes", tuple((str(a), str(r)) for a, r in self.nodes))
        authors = frozenset(self.authors) | {a for a, _ in self.nodes}
        object.__setattr__(self, "authors", authors)

    @property
    def T(self) -> int:
        if self.window is not None:
            return self.window.T
        return int(self.states.shape[1]) if self.states.ndim == 2 else 0

    def references_by_author(self) -> Dict[str, Dict[str, int]]:
        """author -> {reference: row index}."""
        out: Dict[str, Dict[str, int]] = {a: {} for a in self.authors}
        for i, (a, r) in enumerate(self.nodes):
            out[a][r] = i
        return out

    def sequence(self, author: str, reference: str) -> Tuple[int, ...]:
        idx = self.nodes.index((author, reference))
        return tuple(int(s) for s in self.states[idx])

    def to_json(self) -> dict:
        return {
            "T": self.T,
            "window": self.window.to_json() if self.window is not None else None,
            "authors": sorted(self.authors),
            "nodes": [
                {"author": a, "reference": r, "states": [int(s) for s in row]}
                for (a, r), row in zip(self.nodes, self.states)
            ],
            "metadata": dict(self.metadata),
        }

    @classmethod
    def from_json(cls, data: Mapping) -> "NodeStateSeries":
        window = TimeWindow.from_json(data["window"]) if data.get("window") else None
        nodes = tuple((n["author"], n["reference"]) for n in data["nodes"])
        T = int(data["T"])
        states = np.array([n["states"] for n in data["nodes"]], dtype=np.int8).reshape(len(nodes), T)
        return cls(nodes, states, window, frozenset(data.get("authors", ())), dict(data.get("metadata", {})))


def author_reference_states(records: Sequence[CitationRecord], graph: CoauthorGraph,
                            window: TimeWindow) -> NodeStateSeries:
    """Per-slice citation states for the author-reference nodes of a window.

    For every edge {a, b} the references considered are those cited by a or
    b anywhere in the window; both (a, r) and (b, r) become nodes. A node is
    +1 in slice t iff the author has a paper in slice t citing r.
    """
    cited: Dict[str, List[set]] = {}
    for rec in records:
        t = window.slice_of(rec.year)
        if t is None:
            continue
        for a in set(rec.authors):
            if a not in graph.nodes:
                continue
            per_slice = cited.setdefault(a, [set() for _ in range(window.T)])
            per_slice[t].update(rec.references)

    def all_refs(a):
        return set().union(*cited[a]) if a in cited else set()

    node_refs: Dict[str, set] = {}
    for a, b in graph.edges:
        refs = all_refs(a) | all_refs(b)
        node_refs.setdefault(a, set()).update(refs)
        node_refs.setdefault(b, set()).update(refs)

    nodes = []
    rows = []
    for a in sorted(node_refs):
        slices = cited.get(a)
        for r in sorted(node_refs[a]):
            nodes.append((a, r))
            rows.append([1 if slices is not None and r in slices[t] else -1 for t in range(window.T)])
    states = np.array(rows, dtype=np.int8).reshape(len(nodes), window.T)
    logger.debug("window %s: %d author-reference nodes", window.label(), len(nodes))
    return NodeStateSeries(tuple(nodes), states, window, graph.nodes, {"source": "records"})
