"""Matching-based error correction: defect graphs, MWPM, and the verdict.

Pairing weights are lattice graph distances (spin flips, not Euclidean
length), looked up in a cached all-pairs BFS table.  Sparsifiers cut the
candidate set down from the complete graph: knn(k) keeps each defect's k
nearest defects (symmetrized), delaunay keeps the flat-torus Delaunay edges
via the 3x3 periodic-image construction.  If a sparsified graph admits no
perfect matching the decoder silently falls back to the complete graph.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import matching as mt
from .code import ErrorChain, HomologyClass, Syndrome, compose, homology_class, syndrome
from .lattice import PeriodicLattice, distance_table, shortest_path_edges


class DecoderError(ValueError):
    pass


@dataclass
class DefectGraph:
    """Candidate pairing graph over the current defects."""

    lat: PeriodicLattice
    nodes: np.ndarray  # defect vertex ids, ascending
    edges: list[tuple[int, int, int]]  # (i, j, weight) as indices into nodes
    sparsifier_tag: str
    weights: np.ndarray  # (n, n) all-pairs defect distances (for fallback/oracle)
    _paths: dict = field(default_factory=dict, repr=False)

    @property
    def n(self) -> int:
        return len(self.nodes)

    def edge_path(self, i: int, j: int) -> list[int]:
        """One stored shortest lattice path between defects i and j (indices)."""
        if i > j:
            i, j = j, i
        path = self._paths.get((i, j))
        if path is None:
            a, b = int(self.nodes[i]), int(self.nodes[j])
            row = distance_table(self.lat)[a]
            path = shortest_path_edges(self.lat, row, a, b)
            self._paths[(i, j)] = path
        return path


@dataclass(frozen=True)
class Matching:
    """A perfect pairing of the defect graph's nodes."""

    pairs: tuple[tuple[int, int], ...]  # node indices, each pair (i < j)
    total_weight: int
    used_fallback: bool = False


def build_defect_graph(
    lat: PeriodicLattice,
    syn: Syndrome,
    sparsifier: str = "knn",
    k: int = 6,
) -> DefectGraph:
    """Candidate edges over the defects of syn, weighted by graph distance."""
    nodes = syn.vertices()
    n = len(nodes)
    if n % 2 == 1:
        raise DecoderError(f"odd syndrome size {n} cannot be matched")
    if n == 0:
        return DefectGraph(lat, nodes, [], sparsifier_tag=sparsifier, weights=np.zeros((0, 0), np.int64))
    table = distance_table(lat)
    W = table[np.ix_(nodes, nodes)].astype(np.int64)
    if sparsifier == "complete" or n <= 2:
        pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
        tag = sparsifier
    elif sparsifier == "knn":
        kk = min(k, n - 1)
        order = np.lexsort((np.broadcast_to(np.arange(n), (n, n)), W), axis=-1)
        chosen = set()
        for i in range(n):
            picked = 0
            for j in order[i]:
                j = int(j)
                if j == i:
                    continue
                chosen.add((min(i, j), max(i, j)))
                picked += 1
                if picked >= kk:
                    break
        pairs = sorted(chosen)
        tag = f"knn({kk})"
    elif sparsifier == "delaunay":
        pairs = _delaunay_pairs(lat, nodes)
        if pairs is None:
            pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
            tag = "delaunay->complete"
        else:
            tag = "delaunay"
    else:
        raise DecoderError(f"unknown sparsifier {sparsifier!r}")
    edges = [(i, j, int(W[i, j])) for i, j in pairs]
    return DefectGraph(lat, nodes, edges, sparsifier_tag=tag, weights=W)


def _delaunay_pairs(lat: PeriodicLattice, nodes: np.ndarray):
    """Delaunay edges of the defect set under the flat torus metric.

    Triangulates the 3x3 periodic images and keeps deduplicated edges that
    touch the canonical copy.  Returns None when the triangulation is
    degenerate (too few or collinear points).
    """
    from scipy.spatial import Delaunay, QhullError

    n = len(nodes)
    if n < 4:
        return None
    pts = lat.vertices[nodes]
    images = []
    owner = []
    for sy in (-1.0, 0.0, 1.0):
        for sx in (-1.0, 0.0, 1.0):
            images.append(pts + np.array([sx, sy]))
            owner.append((sx == 0.0) and (sy == 0.0))
    allpts = np.concatenate(images, axis=0)
    canonical = np.zeros(len(allpts), dtype=bool)
    canonical[4 * n : 5 * n] = True
    try:
        tri = Delaunay(allpts)
    except QhullError:
        return None
    pairs = set()
    for simplex in tri.simplices:
        for a in range(3):
            for b in range(a + 1, 3):
                ia, ib = int(simplex[a]), int(simplex[b])
                if not (canonical[ia] or canonical[ib]):
                    continue
                ca, cb = ia % n, ib % n
                if ca == cb:
                    continue
                pairs.add((min(ca, cb), max(ca, cb)))
    return sorted(pairs)


def mwpm(graph: DefectGraph) -> Matching:
    """Minimum-weight perfect matching over the candidate edges.

    Falls back to the complete defect graph when the sparsified candidate
    set admits no perfect matching.
    """
    if graph.n == 0:
        return Matching((), 0)
    res = mt.min_weight_perfect_matching(graph.n, graph.edges)
    fallback = False
    if res is None:
        complete = [
            (i, j, int(graph.weights[i, j]))
            for i in range(graph.n)
            for j in range(i + 1, graph.n)
        ]
        res = mt.min_weight_perfect_matching(graph.n, complete)
        fallback = True
        if res is None:
            raise DecoderError("no perfect matching on the complete defect graph")
    pairs, total = res
    return Matching(tuple(sorted(tuple(sorted(p)) for p in pairs)), total, fallback)


def brute_force_matching(graph: DefectGraph) -> Matching:
    """Exhaustive minimum-weight pairing over the complete defect graph."""
    if graph.n == 0:
        return Matching((), 0)
    if graph.n > 12:
        raise DecoderError("brute force matching capped at 12 defects")
    pairs, total = mt.brute_force_min_weight(graph.weights)
    return Matching(tuple(sorted(tuple(sorted(p)) for p in pairs)), total)


def correction_chain(lat: PeriodicLattice, graph: DefectGraph, match: Matching) -> ErrorChain:
    """Compose one stored shortest path per matched pair."""
    mask = np.zeros(lat.n_edges, dtype=bool)
    for i, j in match.pairs:
        for e in graph.edge_path(i, j):
            mask[e] = not mask[e]
    return ErrorChain(mask)


def decode(
    lat: PeriodicLattice,
    error: ErrorChain,
    sparsifier: str = "knn",
    k: int = 6,
) -> tuple[bool, HomologyClass, Matching]:
    """Full readout decode; returns (success, residual class, matching)."""
    syn = syndrome(lat, error)
    graph = build_defect_graph(lat, syn, sparsifier=sparsifier, k=k)
    match = mwpm(graph)
    corr = correction_chain(lat, graph, match)
    residual = compose(error, corr)
    cls = homology_class(lat, residual)
    return cls.trivial, cls, match


def decode_and_judge(
    lat: PeriodicLattice, error: ErrorChain, sparsifier: str = "knn", k: int = 6
) -> bool:
    """True iff MWPM correction returns the memory to the trivial class."""
    ok, _cls, _m = decode(lat, error, sparsifier=sparsifier, k=k)
    return ok
