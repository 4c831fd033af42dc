"""Undirected simple graphs and the two-block stochastic block model."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable

import numpy as np

from .errors import InfeasibleSpec, InvalidInput, OutOfRangeNode, SamplingExhausted, SelfLoop

# |p_plus (n/2 - 1) + p_minus n/2 - n/4| must stay below this
CONSTRAINT_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class Graph:
    """Immutable undirected, unweighted simple graph.

    Use :func:`build_graph` or :meth:`Graph.from_adjacency` rather than the
    raw constructor; both validate and freeze the adjacency matrix.
    """

    n: int
    adjacency: np.ndarray = field(repr=False)

    @classmethod
    def from_adjacency(cls, adjacency) -> "Graph":
        a = np.array(adjacency, dtype=np.int64, copy=True)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise InvalidInput(f"adjacency must be square, got shape {a.shape}")
        if not np.array_equal(a, a.T):
            raise InvalidInput("adjacency must be symmetric")
        if np.any(np.diag(a) != 0):
            raise SelfLoop("adjacency has a nonzero diagonal entry")
        if np.any((a != 0) & (a != 1)):
            raise InvalidInput("adjacency entries must be 0 or 1")
        a.setflags(write=False)
        return cls(n=a.shape[0], adjacency=a)

    @cached_property
    def degrees(self) -> np.ndarray:
        d = self.adjacency.sum(axis=1)
        d.setflags(write=False)
        return d

    @cached_property
    def m(self) -> int:
        return int(self.adjacency.sum()) // 2

    @cached_property
    def edges(self) -> tuple[tuple[int, int], ...]:
        rows, cols = np.nonzero(np.triu(self.adjacency, k=1))
        return tuple(zip(rows.tolist(), cols.tolist()))

    @cached_property
    def edge_array(self) -> np.ndarray:
        """Edges as an (m, 2) integer array with u < v."""
        e = np.array(self.edges, dtype=np.int64).reshape(-1, 2)
        e.setflags(write=False)
        return e

    def has_edge(self, u: int, v: int) -> bool:
        return bool(self.adjacency[u, v])

    def toggle_edge(self, u: int, v: int) -> "Graph":
        """Copy of this graph with edge (u, v) added if absent, removed if present."""
        if u == v:
            raise SelfLoop(f"cannot toggle self-loop at node {u}")
        a = np.array(self.adjacency)
        a[u, v] = a[v, u] = 1 - a[u, v]
        a.setflags(write=False)
        return Graph(n=self.n, adjacency=a)

    def __eq__(self, other):
        if not isinstance(other, Graph):
            return NotImplemented
        return self.n == other.n and np.array_equal(self.adjacency, other.adjacency)

    def __hash__(self):
        return hash((self.n, self.edges))


def build_graph(n: int, edges: Iterable[tuple[int, int]]) -> Graph:
    """Build a graph from an edge list, dropping duplicate and reversed pairs."""
    if n <= 0:
        raise InvalidInput(f"node count must be positive, got {n}")
    a = np.zeros((n, n), dtype=np.int64)
    for u, v in edges:
        u, v = int(u), int(v)
        if not (0 <= u < n and 0 <= v < n):
            raise OutOfRangeNode(f"edge ({u}, {v}) has an endpoint outside [0, {n})")
        if u == v:
            raise SelfLoop(f"self-loop at node {u}")
        a[u, v] = a[v, u] = 1
    a.setflags(write=False)
    return Graph(n=n, adjacency=a)


def laplacian(g: Graph) -> np.ndarray:
    """Combinatorial Laplacian D - A as a float matrix."""
    return np.diag(g.degrees.astype(float)) - g.adjacency


def connected_components(g: Graph) -> np.ndarray:
    """Component label per node, labels numbered in order of first appearance."""
    labels = np.full(g.n, -1, dtype=np.int64)
    nbrs = [np.flatnonzero(row) for row in g.adjacency]
    current = 0
    for start in range(g.n):
        if labels[start] >= 0:
            continue
        labels[start] = current
        stack = [start]
        while stack:
            x = stack.pop()
            for y in nbrs[x]:
                if labels[y] < 0:
                    labels[y] = current
                    stack.append(y)
        current += 1
    return labels


def is_connected(g: Graph) -> bool:
    return bool(connected_components(g).max() == 0)


@dataclass(frozen=True)
class SbmSpec:
    """Two equal blocks; block 0 holds the first n/2 nodes.

    The raw constructor does not enforce the mean-degree constraint, so
    hand-built specs (e.g. p_minus=0, p_plus=1) are allowed for testing.
    """

    n: int
    p_minus: float
    p_plus: float
    seed: int = 0

    @property
    def block_assignment(self) -> np.ndarray:
        return (np.arange(self.n) >= self.n // 2).astype(np.int64)

    def constraint_residual(self) -> float:
        half = self.n / 2
        return abs(self.p_plus * (half - 1) + self.p_minus * half - self.n / 4)


def solve_sbm_spec(n: int, p_minus: float, seed: int = 0) -> SbmSpec:
    """Solve the mean-degree constraint for the intra-block probability.

    The mean degree is fixed at n/4, which leaves p_minus as the single free
    parameter: p_plus = (n/4 - p_minus n/2) / (n/2 - 1).
    """
    if n < 4 or n % 2:
        raise InvalidInput(f"n must be even and at least 4, got {n}")
    if not 0.0 <= p_minus <= 1.0:
        raise InvalidInput(f"p_minus must lie in [0, 1], got {p_minus}")
    half = n / 2
    p_plus = (n / 4 - p_minus * half) / (half - 1)
    if not 0.0 <= p_plus <= 1.0:
        raise InfeasibleSpec(
            f"p_minus={p_minus} forces p_plus={p_plus:.6g} outside [0, 1] for n={n}"
        )
    return SbmSpec(n=n, p_minus=float(p_minus), p_plus=float(p_plus), seed=seed)


def _sample_with(spec: SbmSpec, rng: np.random.Generator) -> Graph:
    n = spec.n
    iu, ju = np.triu_indices(n, k=1)  # lexicographic pair order
    blocks = spec.block_assignment
    prob = np.where(blocks[iu] == blocks[ju], spec.p_plus, spec.p_minus)
    keep = rng.random(iu.size) < prob
    a = np.zeros((n, n), dtype=np.int64)
    a[iu[keep], ju[keep]] = 1
    a += a.T
    a.setflags(write=False)
    return Graph(n=n, adjacency=a)


def sample_sbm(spec: SbmSpec) -> Graph:
    """Draw one graph; one uniform variate per node pair in lexicographic order."""
    return _sample_with(spec, np.random.default_rng(spec.seed))


def planted_split_ok(g: Graph, spec: SbmSpec) -> bool:
    """Connectivity acceptance rule used by the experiments.

    A graph is accepted if it is connected. When p_minus is 0 no sample can be
    connected, so a graph is accepted if its components are exactly the blocks.
    """
    labels = connected_components(g)
    if labels.max() == 0:
        return True
    if spec.p_minus == 0:
        return labels.max() == 1 and np.array_equal(labels, spec.block_assignment)
    return False


def sample_connected_sbm(spec: SbmSpec, max_tries: int = 1000) -> tuple[Graph, int]:
    """Resample from one seeded stream until the acceptance rule holds.

    Returns the graph and the number of draws it took.
    """
    rng = np.random.default_rng(spec.seed)
    for attempt in range(1, max_tries + 1):
        g = _sample_with(spec, rng)
        if planted_split_ok(g, spec):
            return g, attempt
    raise SamplingExhausted(
        f"no acceptable SBM sample in {max_tries} draws "
        f"(n={spec.n}, p_minus={spec.p_minus}, seed={spec.seed})"
    )


def graph_to_dict(g: Graph, metadata: dict | None = None) -> dict:
    out = {"n": g.n, "edges": [list(e) for e in g.edges]}
    if metadata:
        out["metadata"] = metadata
    return out


def parse_graph_json(obj) -> Graph:
    if not isinstance(obj, dict) or "n" not in obj or "edges" not in obj:
        raise InvalidInput('graph JSON needs "n" and "edges"')
    n = obj["n"]
    if not isinstance(n, int) or isinstance(n, bool):
        raise InvalidInput(f'"n" must be an integer, got {n!r}')
    edges = []
    for e in obj["edges"]:
        if not (isinstance(e, (list, tuple)) and len(e) == 2 and all(isinstance(x, int) for x in e)):
            raise InvalidInput(f"bad edge entry {e!r}")
        edges.append(tuple(e))
    return build_graph(n, edges)


def parse_edge_list(text: str, n: int | None = None) -> Graph:
    """Whitespace-separated "u v" lines; '#' starts a comment."""
    edges = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise InvalidInput(f"line {lineno}: expected 'u v', got {line!r}")
        try:
            edges.append((int(parts[0]), int(parts[1])))
        except ValueError:
            raise InvalidInput(f"line {lineno}: node ids must be integers") from None
    if n is None:
        n = max((max(e) for e in edges), default=-1) + 1
    return build_graph(n, edges)


def load_graph(path, n: int | None = None) -> tuple[Graph, dict]:
    """Read a JSON graph or an edge-list file; returns the graph and its metadata."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InvalidInput(f"cannot read graph file {path}: {exc.strerror}") from None
    if text.lstrip().startswith("{"):
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            raise InvalidInput(f"{path}: invalid JSON ({exc.msg})") from None
        return parse_graph_json(obj), obj.get("metadata", {})
    return parse_edge_list(text, n), {}
