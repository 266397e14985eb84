"""Weighted directed graphs, random generators and the edge-list format.

Convention: an edge ``(src, dst, w)`` is a link from ``src`` to ``dst`` and
is stored in the adjacency matrix as ``A[dst, src] = w``.  Undirected graphs
are represented by symmetric pairs of directed edges.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Iterable

import numpy as np


class EdgeListError(ValueError):
    """Malformed edge-list document; carries the offending line number."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


@dataclass(frozen=True)
class DirectedGraph:
    n: int
    edges: tuple[tuple[int, int, float], ...]

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("graph needs at least one node")
        edges = tuple(
            sorted((int(s), int(d), float(w)) for s, d, w in self.edges)
        )
        seen = set()
        for s, d, w in edges:
            if not (0 <= s < self.n and 0 <= d < self.n):
                raise ValueError(f"edge {s}->{d} outside [0, {self.n})")
            if s == d:
                raise ValueError(f"self-loop at node {s}")
            if not (w > 0 and np.isfinite(w)):
                raise ValueError(f"edge {s}->{d} has non-positive weight {w}")
            if (s, d) in seen:
                raise ValueError(f"duplicate edge {s}->{d}")
            seen.add((s, d))
        object.__setattr__(self, "edges", edges)

    @classmethod
    def from_adjacency(cls, A: np.ndarray) -> "DirectedGraph":
        A = np.asarray(A, dtype=float)
        dst, src = np.nonzero(A)
        return cls(A.shape[0], tuple(zip(src, dst, A[dst, src])))

    @classmethod
    def undirected(cls, n: int, pairs: Iterable[tuple[int, int, float]]) -> "DirectedGraph":
        edges = []
        for i, j, w in pairs:
            edges.append((i, j, w))
            edges.append((j, i, w))
        return cls(n, tuple(edges))

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    @cached_property
    def src(self) -> np.ndarray:
        return np.array([e[0] for e in self.edges], dtype=np.intp)

    @cached_property
    def dst(self) -> np.ndarray:
        return np.array([e[1] for e in self.edges], dtype=np.intp)

    @cached_property
    def weights(self) -> np.ndarray:
        return np.array([e[2] for e in self.edges], dtype=float)

    @cached_property
    def adjacency(self) -> np.ndarray:
        A = np.zeros((self.n, self.n))
        A[self.dst, self.src] = self.weights
        A.setflags(write=False)
        return A

    @property
    def in_degree(self) -> np.ndarray:
        return self.adjacency.sum(axis=1)

    @property
    def is_symmetric(self) -> bool:
        A = self.adjacency
        return bool(np.array_equal(A, A.T))


def laplacian(g: DirectedGraph) -> np.ndarray:
    """``L = D - A`` with ``D`` the in-degree matrix; rows sum to zero."""
    A = g.adjacency
    return np.diag(A.sum(axis=1)) - A


def symmetrize(g: DirectedGraph) -> DirectedGraph:
    """Undirected graph with weight ``(a_ij + a_ji) / 2`` on each pair."""
    if g.is_symmetric:
        return g
    A = g.adjacency
    return DirectedGraph.from_adjacency((A + A.T) / 2)


# -- edge-list I/O -----------------------------------------------------------

def from_edge_list(text: str) -> DirectedGraph:
    """Parse ``src<TAB>dst<TAB>weight`` lines, 0-based, ``#`` comments.

    An optional ``n=<int>`` line fixes the node count; otherwise it is one
    more than the largest index seen.
    """
    n_header = None
    edges = []
    seen: dict[tuple[int, int], int] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("n="):
            if n_header is not None:
                raise EdgeListError("repeated n= header", lineno)
            try:
                n_header = int(line[2:])
            except ValueError:
                raise EdgeListError(f"bad node count {line[2:]!r}", lineno) from None
            if n_header < 1:
                raise EdgeListError("node count must be positive", lineno)
            continue
        parts = line.split("\t") if "\t" in line else line.split()
        if len(parts) != 3:
            raise EdgeListError(f"expected 3 fields, got {len(parts)}", lineno)
        try:
            s, d, w = int(parts[0]), int(parts[1]), float(parts[2])
        except ValueError:
            raise EdgeListError(f"cannot parse {line!r}", lineno) from None
        if s < 0 or d < 0:
            raise EdgeListError("negative node index", lineno)
        if s == d:
            raise EdgeListError(f"self-loop at node {s}", lineno)
        if not (w > 0 and np.isfinite(w)):
            raise EdgeListError(f"non-positive weight {w}", lineno)
        if (s, d) in seen:
            raise EdgeListError(
                f"duplicate edge {s}->{d} (first on line {seen[s, d]})", lineno
            )
        seen[s, d] = lineno
        edges.append((s, d, w, lineno))

    max_index = max((max(s, d) for s, d, _, _ in edges), default=-1)
    if n_header is None:
        if not edges:
            raise EdgeListError("empty edge list needs an n= header")
        n = max_index + 1
    else:
        n = n_header
        for s, d, _, lineno in edges:
            if max(s, d) >= n:
                raise EdgeListError(f"node index {max(s, d)} >= n={n}", lineno)
    return DirectedGraph(n, tuple((s, d, w) for s, d, w, _ in edges))


def to_edge_list(g: DirectedGraph) -> str:
    lines = [f"n={g.n}"]
    lines += [f"{s}\t{d}\t{w!r}" for s, d, w in g.edges]
    return "\n".join(lines) + "\n"


def read_edge_list(path) -> DirectedGraph:
    with open(path, encoding="utf-8") as fh:
        return from_edge_list(fh.read())


def write_edge_list(g: DirectedGraph, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(to_edge_list(g))


# -- generators --------------------------------------------------------------

def gen_scale_free(n: int, d_min: int, seed: int) -> DirectedGraph:
    """Undirected preferential-attachment graph.

    Starts from a clique on ``d_min + 1`` nodes; each later node links to
    ``d_min`` distinct existing nodes drawn with probability proportional to
    their degree, so every node ends with degree at least ``d_min``.
    """
    if not (1 <= d_min < n):
        raise ValueError(f"need n > d_min >= 1, got n={n}, d_min={d_min}")
    rng = np.random.default_rng(seed)
    m0 = d_min + 1
    pairs = [(i, j) for i in range(m0) for j in range(i + 1, m0)]
    degree = np.zeros(n)
    degree[:m0] = d_min
    for v in range(m0, n):
        p = degree[:v] / degree[:v].sum()
        targets = rng.choice(v, size=d_min, replace=False, p=p)
        for t in sorted(targets.tolist()):
            pairs.append((t, v))
            degree[t] += 1
        degree[v] = d_min
    return DirectedGraph.undirected(n, ((i, j, 1.0) for i, j in pairs))


def gen_random_geometric(
    n: int, radius: float, directed_fraction: float, seed: int
) -> DirectedGraph:
    """Random geometric graph in the unit square with some one-way links.

    ``round(directed_fraction * #pairs)`` connected pairs, drawn at random,
    keep a single random direction; the rest are linked both ways.
    """
    if radius <= 0:
        raise ValueError("radius must be positive")
    if not 0.0 <= directed_fraction <= 1.0:
        raise ValueError("directed_fraction must lie in [0, 1]")
    rng = np.random.default_rng(seed)
    pts = rng.random((n, 2))
    diff = pts[:, None, :] - pts[None, :, :]
    dist = np.sqrt((diff**2).sum(-1))
    iu, ju = np.triu_indices(n, k=1)
    close = dist[iu, ju] <= radius
    pairs = list(zip(iu[close].tolist(), ju[close].tolist()))
    n_dir = int(round(directed_fraction * len(pairs)))
    chosen = set(rng.permutation(len(pairs))[:n_dir].tolist())
    flips = rng.random(len(pairs)) < 0.5
    edges = []
    for k, (i, j) in enumerate(pairs):
        if k in chosen:
            edges.append((j, i, 1.0) if flips[k] else (i, j, 1.0))
        else:
            edges += [(i, j, 1.0), (j, i, 1.0)]
    return DirectedGraph(n, tuple(edges))


THREE_CLUSTER_LINKS = {
    "A": [(0, 10), (5, 10)],
    "B": [(0, 10), (5, 10), (6, 4)],
    "C": [(0, 10), (10, 5), (5, 0)],
}


def gen_three_cluster(variant: str) -> DirectedGraph:
    """15 nodes in three unit-weight 5-cliques joined by one-way links.

    Inter-cluster links per variant:
    A: 0->10, 5->10;  B: A plus 6->4;  C: the cycle 0->10->5->0.
    """
    try:
        links = THREE_CLUSTER_LINKS[variant.upper()]
    except KeyError:
        raise ValueError(f"unknown variant {variant!r}; expected A, B or C") from None
    pairs = []
    for base in (0, 5, 10):
        pairs += [(base + i, base + j, 1.0) for i in range(5) for j in range(i + 1, 5)]
    g = DirectedGraph.undirected(15, pairs)
    return DirectedGraph(15, g.edges + tuple((s, d, 1.0) for s, d in links))
