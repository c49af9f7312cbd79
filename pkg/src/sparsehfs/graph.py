"""Weighted undirected graphs: construction, Laplacians, k-NN graphs, edge-stream I/O."""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, NamedTuple

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components


class Edge(NamedTuple):
    u: int
    v: int
    weight: float = 1.0


@dataclass(frozen=True)
class Graph:
    """Weighted undirected graph on nodes 0..n-1.

    Edges are canonical: u < v, lexicographically sorted, duplicates merged by
    weight addition, all weights strictly positive. Instances are immutable and
    safe to share across workers.
    """

    n: int
    edges: np.ndarray    # (m, 2) int64 with u < v, lexsorted
    weights: np.ndarray  # (m,) float64, all > 0

    @property
    def m(self) -> int:
        return int(self.weights.shape[0])

    def degrees(self) -> np.ndarray:
        """Weighted degree of every node."""
        d = np.zeros(self.n)
        np.add.at(d, self.edges[:, 0], self.weights)
        np.add.at(d, self.edges[:, 1], self.weights)
        return d

    def edge_keys(self) -> np.ndarray:
        """Canonical scalar key u*n+v per edge; sorted ascending by construction."""
        return self.edges[:, 0] * self.n + self.edges[:, 1]

    def scaled(self, factor: float) -> "Graph":
        """Same topology with every weight multiplied by `factor` (> 0)."""
        if factor <= 0:
            raise ValueError("scale factor must be positive")
        return Graph(self.n, self.edges, self.weights * factor)


def _canonicalize(n: int, uv: np.ndarray, w: np.ndarray) -> Graph:
    # uv already validated: in range, no self-loops, positive weights
    lo = np.minimum(uv[:, 0], uv[:, 1])
    hi = np.maximum(uv[:, 0], uv[:, 1])
    keys = lo.astype(np.int64) * n + hi.astype(np.int64)
    order = np.argsort(keys, kind="stable")
    keys = keys[order]
    w = w[order]
    uniq, start = np.unique(keys, return_index=True)
    merged = np.add.reduceat(w, start) if len(w) else w
    edges = np.column_stack([uniq // n, uniq % n]).astype(np.int64)
    return Graph(n, edges, merged.astype(float))


def build_graph(edges: Iterable[tuple] | np.ndarray, n: int) -> Graph:
    """Build a canonical graph from (u, v[, weight]) items.

    Duplicate pairs (in either orientation) are merged by adding weights.
    Self-loops, endpoints outside 0..n-1 and non-positive weights are rejected.
    """
    if n < 1:
        raise ValueError("node count must be >= 1")
    rows = list(edges) if not isinstance(edges, np.ndarray) else edges
    if len(rows) == 0:
        return Graph(n, np.zeros((0, 2), dtype=np.int64), np.zeros(0))
    arr = np.asarray([(r[0], r[1], r[2] if len(r) > 2 else 1.0) for r in rows], dtype=float)
    uv = arr[:, :2]
    if not np.all(uv == np.floor(uv)):
        raise ValueError("node ids must be integers")
    uv = uv.astype(np.int64)
    w = arr[:, 2]
    if np.any(uv < 0) or np.any(uv >= n):
        raise ValueError(f"edge endpoint outside 0..{n - 1}")
    if np.any(uv[:, 0] == uv[:, 1]):
        raise ValueError("self-loops are not allowed")
    if np.any(w <= 0):
        raise ValueError("edge weights must be positive")
    return _canonicalize(n, uv, w)


def from_arrays(n: int, edges: np.ndarray, weights: np.ndarray) -> Graph:
    """Build a canonical graph from already-validated endpoint/weight arrays."""
    if len(edges) == 0:
        return Graph(n, np.zeros((0, 2), dtype=np.int64), np.zeros(0))
    edges = np.asarray(edges, dtype=np.int64)
    weights = np.asarray(weights, dtype=float)
    if np.any(edges < 0) or np.any(edges >= n):
        raise ValueError(f"edge endpoint outside 0..{n - 1}")
    if np.any(edges[:, 0] == edges[:, 1]):
        raise ValueError("self-loops are not allowed")
    if np.any(weights <= 0):
        raise ValueError("edge weights must be positive")
    return _canonicalize(n, edges, weights)


def laplacian(g: Graph) -> sp.csr_matrix:
    """Graph Laplacian L = D - A as a sparse CSR matrix (symmetric PSD, L@1 = 0)."""
    u, v, w = g.edges[:, 0], g.edges[:, 1], g.weights
    deg = g.degrees()
    rows = np.concatenate([u, v, np.arange(g.n)])
    cols = np.concatenate([v, u, np.arange(g.n)])
    data = np.concatenate([-w, -w, deg])
    return sp.csr_matrix((data, (rows, cols)), shape=(g.n, g.n))


def incidence(g: Graph) -> sp.csr_matrix:
    """Signed edge-node incidence matrix B (m x n); row e equals chi_u - chi_v."""
    m = g.m
    rows = np.repeat(np.arange(m), 2)
    cols = g.edges.ravel()
    data = np.tile([1.0, -1.0], m)
    return sp.csr_matrix((data, (rows, cols)), shape=(m, g.n))


def edge_vector(e: Edge | tuple, n: int) -> np.ndarray:
    """Dense indicator difference chi_u - chi_v for a single edge."""
    b = np.zeros(n)
    b[e[0]] = 1.0
    b[e[1]] = -1.0
    return b


def add_graphs(g: Graph, a: Graph) -> Graph:
    """Edge-wise weight sum of two graphs on the same node set."""
    if g.n != a.n:
        raise ValueError(f"node counts differ: {g.n} vs {a.n}")
    if g.m == 0:
        return a
    if a.m == 0:
        return g
    edges = np.vstack([g.edges, a.edges])
    weights = np.concatenate([g.weights, a.weights])
    return _canonicalize(g.n, edges, weights)


def knn_graph(points: np.ndarray, k: int, symmetrize: str = "union") -> Graph:
    """Unweighted k-nearest-neighbor graph from a point cloud.

    Parameters
    ----------
    points : (n, d) array of coordinates.
    k : neighbors per node, 1 <= k < n. Ties broken by lower node index.
    symmetrize : "union" keeps an edge if either endpoint selects the other,
        "mutual" only if both do. Duplicate directions collapse to weight 1.
    """
    points = np.asarray(points, dtype=float)
    n = points.shape[0]
    if n < 2:
        raise ValueError("need at least 2 points")
    if not 1 <= k < n:
        raise ValueError(f"k must satisfy 1 <= k < n, got k={k}, n={n}")
    if symmetrize not in ("union", "mutual"):
        raise ValueError("symmetrize must be 'union' or 'mutual'")

    sq = np.sum(points**2, axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * points @ points.T
    np.fill_diagonal(d2, np.inf)
    idx = np.arange(n)
    # lexsort: distance first, node index breaks ties
    order = np.lexsort((np.broadcast_to(idx, (n, n)), d2), axis=1)
    nbrs = order[:, :k]

    src = np.repeat(idx, k)
    dst = nbrs.ravel()
    lo = np.minimum(src, dst)
    hi = np.maximum(src, dst)
    keys = lo.astype(np.int64) * n + hi.astype(np.int64)
    if symmetrize == "union":
        keys = np.unique(keys)
    else:
        keys, counts = np.unique(keys, return_counts=True)
        keys = keys[counts == 2]
    edges = np.column_stack([keys // n, keys % n]).astype(np.int64)
    return Graph(n, edges, np.ones(len(edges)))


def is_connected(g: Graph) -> bool:
    """True iff the graph has a single connected component (n=1 counts)."""
    if g.n == 1:
        return True
    if g.m < g.n - 1:
        return False
    return component_labels(g)[0] == 1


def component_labels(g: Graph) -> tuple[int, np.ndarray]:
    """(number of components, per-node component label)."""
    adj = sp.csr_matrix(
        (np.ones(2 * g.m), (np.concatenate([g.edges[:, 0], g.edges[:, 1]]),
                            np.concatenate([g.edges[:, 1], g.edges[:, 0]]))),
        shape=(g.n, g.n),
    )
    return connected_components(adj, directed=False)


def induced_subgraph(g: Graph, nodes: np.ndarray) -> tuple[Graph, np.ndarray]:
    """Subgraph on `nodes` with dense reindexing; returns (subgraph, original ids)."""
    nodes = np.asarray(sorted(nodes), dtype=np.int64)
    remap = -np.ones(g.n, dtype=np.int64)
    remap[nodes] = np.arange(len(nodes))
    mask = (remap[g.edges[:, 0]] >= 0) & (remap[g.edges[:, 1]] >= 0)
    sub_edges = remap[g.edges[mask]]
    return Graph(len(nodes), sub_edges, g.weights[mask].copy()), nodes


# ---------------------------------------------------------------------------
# File formats: edge lists (`u v w`, w optional), point clouds, label files.
# ---------------------------------------------------------------------------

def read_edge_stream(path: str | Path) -> Iterator[Edge]:
    """Yield edges from an edge-list file in file order.

    Format: one `u v [w]` per line, whitespace separated, 0-based ids,
    weight defaults to 1.0. Lines starting with `#` and blank lines are
    skipped. Malformed lines and self-loops raise with the line number.
    """
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.strip()
            if not text or text.startswith("#"):
                continue
            parts = text.split()
            if len(parts) not in (2, 3):
                raise ValueError(f"{path}:{lineno}: expected 'u v [w]', got {text!r}")
            try:
                u, v = int(parts[0]), int(parts[1])
                w = float(parts[2]) if len(parts) == 3 else 1.0
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from None
            if u == v:
                raise ValueError(f"{path}:{lineno}: self-loop {u}")
            if w <= 0:
                raise ValueError(f"{path}:{lineno}: non-positive weight {w}")
            yield Edge(u, v, w)


def write_edge_stream(g: Graph, path: str | Path) -> None:
    """Write the graph's canonical edge list as `u v w` lines."""
    with open(path, "w", encoding="utf-8") as fh:
        for (u, v), w in zip(g.edges, g.weights):
            fh.write(f"{u} {v} {w!r}\n")


def read_point_cloud(path: str | Path) -> np.ndarray:
    """Read one point per line (whitespace-separated reals) into an (n, d) array."""
    points = []
    dim = None
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.strip()
            if not text or text.startswith("#"):
                continue
            try:
                coords = [float(t) for t in text.split()]
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from None
            if dim is None:
                dim = len(coords)
            elif len(coords) != dim:
                raise ValueError(f"{path}:{lineno}: expected {dim} coordinates")
            points.append(coords)
    if not points:
        raise ValueError(f"{path}: no points")
    return np.asarray(points)


def write_point_cloud(points: np.ndarray, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for row in np.atleast_2d(points):
            fh.write(" ".join(repr(float(c)) for c in row) + "\n")


def read_labels(path: str | Path) -> tuple[np.ndarray, np.ndarray]:
    """Read `id value` lines; returns (ids, values) in file order."""
    ids, values = [], []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.strip()
            if not text or text.startswith("#"):
                continue
            parts = text.split()
            if len(parts) != 2:
                raise ValueError(f"{path}:{lineno}: expected 'id value'")
            try:
                ids.append(int(parts[0]))
                values.append(float(parts[1]))
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from None
    return np.asarray(ids, dtype=np.int64), np.asarray(values)


def write_labels(ids: np.ndarray, values: np.ndarray, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for i, v in zip(ids, values):
            fh.write(f"{int(i)} {float(v)!r}\n")
