"""Periodic (torus) lattices: generators, duality, degrees, and graph distances.

Vertices live on the flat unit torus [0,1)^2 with exact rational coordinates.
Each edge carries an explicit rational displacement vector (the intended
straight segment from its first to its second endpoint), which makes winding
and cut-crossing parities exact even for wrap-around edges.  Faces are stored
as closed boundary walks (cyclic edge-id lists).  Parallel edges are allowed
everywhere; self-loops are not.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from ._kernels import bfs_all_rows

FAMILIES = ("square", "triangular", "hexagonal", "reduced_square", "union", "subedge")

_MAX_DISTANCE_TABLE_VERTICES = 8192


class LatticeError(ValueError):
    """Invalid construction parameters or a malformed lattice."""


@dataclass(frozen=True)
class UnitCellSpec:
    """Weighted degree multiset of the repeating cell.

    degree_multiset holds (degree, weight) pairs with positive rational
    weights summing to 1; the average degree is the weighted mean.
    """

    degree_multiset: tuple[tuple[int, Fraction], ...]

    def __post_init__(self):
        total = Fraction(0)
        for d, w in self.degree_multiset:
            if w <= 0:
                raise LatticeError(f"non-positive weight {w} for degree {d}")
            total += w
        if total != 1:
            raise LatticeError(f"degree weights sum to {total}, expected 1")

    @property
    def average_degree(self) -> Fraction:
        return sum((w * d for d, w in self.degree_multiset), Fraction(0))


class PeriodicLattice:
    """Torus-embedded multigraph with vertices, edges, and faces.

    Immutable after construction; derived tables (incidence, cut masks,
    distance table) are cached on the instance and shared freely between
    threads/processes.
    """

    def __init__(
        self,
        family_tag: str,
        linear_size: int,
        coords: Sequence[tuple[Fraction, Fraction]],
        edges: Sequence[tuple[int, int]],
        disps: Sequence[tuple[Fraction, Fraction]],
        faces: Sequence[Sequence[int]],
        validate: bool = True,
    ):
        self.family_tag = family_tag
        self.linear_size = int(linear_size)
        self.coords_frac = tuple((fx % 1, fy % 1) for fx, fy in coords)
        self.edge_list = tuple((int(u), int(v)) for u, v in edges)
        self.disp_frac = tuple((dx, dy) for dx, dy in disps)
        self.faces = tuple(tuple(int(e) for e in f) for f in faces)

        self.vertices = np.array(
            [[float(fx), float(fy)] for fx, fy in self.coords_frac], dtype=np.float64
        ).reshape(len(self.coords_frac), 2)
        self.edges = np.array(self.edge_list, dtype=np.int32).reshape(len(self.edge_list), 2)

        self._build_incidence()
        self._build_edge_faces()
        self._build_cut_masks()
        self._cache: dict = {}
        if validate:
            self.validate()

    # -- basic counts ------------------------------------------------------

    @property
    def n_vertices(self) -> int:
        return len(self.coords_frac)

    @property
    def n_edges(self) -> int:
        return len(self.edge_list)

    @property
    def n_faces(self) -> int:
        return len(self.faces)

    # -- derived tables ----------------------------------------------------

    def _build_incidence(self):
        V, E = self.n_vertices, self.n_edges
        counts = np.zeros(V + 1, dtype=np.int64)
        for u, v in self.edge_list:
            if u == v:
                raise LatticeError(f"self-loop edge ({u},{v}) not supported")
            counts[u + 1] += 1
            counts[v + 1] += 1
        indptr = np.cumsum(counts).astype(np.int32)
        inc_edge = np.empty(2 * E, dtype=np.int32)
        inc_other = np.empty(2 * E, dtype=np.int32)
        fill = indptr[:-1].copy()
        # iterating edges in id order keeps each adjacency list sorted by edge id
        for e, (u, v) in enumerate(self.edge_list):
            inc_edge[fill[u]] = e
            inc_other[fill[u]] = v
            fill[u] += 1
            inc_edge[fill[v]] = e
            inc_other[fill[v]] = u
            fill[v] += 1
        self.adj_indptr = indptr
        self.adj_edge = inc_edge
        self.adj_other = inc_other
        self.degrees = np.diff(indptr).astype(np.int32)

    def _build_edge_faces(self):
        sides: list[list[int]] = [[] for _ in range(self.n_edges)]
        for fi, face in enumerate(self.faces):
            for e in face:
                if not 0 <= e < self.n_edges:
                    raise LatticeError(f"face {fi} references unknown edge {e}")
                sides[e].append(fi)
        for e, fs in enumerate(sides):
            if len(fs) != 2:
                raise LatticeError(f"edge {e} lies on {len(fs)} face sides, expected 2")
            if fs[0] == fs[1]:
                raise LatticeError(f"edge {e} has the same face on both sides")
        self.edge_faces = np.array(sides, dtype=np.int32)

    def _build_cut_masks(self):
        # Reference cuts are the lines x=0 and y=0 of the torus; an edge is in
        # a cut iff its straight segment leaves the fundamental domain in that
        # axis.  Exact rational arithmetic: no boundary ambiguity.
        E = self.n_edges
        cut_x = np.zeros(E, dtype=bool)
        cut_y = np.zeros(E, dtype=bool)
        for e, (u, _) in enumerate(self.edge_list):
            fx, fy = self.coords_frac[u]
            dx, dy = self.disp_frac[e]
            ex = fx + dx
            ey = fy + dy
            cut_x[e] = ex < 0 or ex >= 1
            cut_y[e] = ey < 0 or ey >= 1
        self.cut_x_mask = cut_x
        self.cut_y_mask = cut_y

    # -- validation --------------------------------------------------------

    def validate(self):
        V, E, F = self.n_vertices, self.n_edges, self.n_faces
        if V - E + F != 0:
            raise LatticeError(f"Euler characteristic {V - E + F} != 0 (V={V} E={E} F={F})")
        if self.n_vertices == 0 or int(self.degrees.min()) < 2:
            raise LatticeError("vertex with degree < 2")
        if int(self.degrees.sum()) != 2 * E:
            raise LatticeError("degree sum != 2|E|")
        if sum(len(f) for f in self.faces) != 2 * E:
            raise LatticeError("face size sum != 2|E|")
        for fx, fy in self.coords_frac:
            if not (0 <= fx < 1 and 0 <= fy < 1):
                raise LatticeError("vertex coordinate outside [0,1)")
        for e, (u, v) in enumerate(self.edge_list):
            dx, dy = self.disp_frac[e]
            fx, fy = self.coords_frac[u]
            gx, gy = self.coords_frac[v]
            if ((fx + dx) % 1, (fy + dy) % 1) != (gx, gy):
                raise LatticeError(f"edge {e} displacement inconsistent with endpoints")
        self._check_connected()
        for fi in range(F):
            _walk_face(self, fi)  # raises if the walk does not close with zero winding

    def _check_connected(self):
        V = self.n_vertices
        seen = np.zeros(V, dtype=bool)
        stack = [0]
        seen[0] = True
        while stack:
            v = stack.pop()
            for k in range(self.adj_indptr[v], self.adj_indptr[v + 1]):
                w = self.adj_other[k]
                if not seen[w]:
                    seen[w] = True
                    stack.append(int(w))
        if not seen.all():
            raise LatticeError("lattice graph is not connected")

    # -- misc --------------------------------------------------------------

    def incident(self, v: int) -> list[tuple[int, int]]:
        """(edge id, other endpoint) pairs at vertex v, ascending edge id."""
        lo, hi = self.adj_indptr[v], self.adj_indptr[v + 1]
        return [(int(self.adj_edge[k]), int(self.adj_other[k])) for k in range(lo, hi)]

    def __repr__(self):
        return (
            f"PeriodicLattice({self.family_tag!r}, L={self.linear_size}, "
            f"V={self.n_vertices}, E={self.n_edges}, F={self.n_faces})"
        )


def _walk_face(lat: PeriodicLattice, fi: int):
    """Traverse face fi as a closed boundary walk.

    Returns (vertex sequence, unwrapped vertex positions, unwrapped edge
    midpoints aligned with the face's edge list).  Raises LatticeError if the
    edge sequence is not a closed walk or its total winding is nonzero.
    """
    face = lat.faces[fi]
    e0 = face[0]
    u0, v0 = lat.edge_list[e0]
    last_err = None
    for start in (u0, v0):
        try:
            return _walk_face_from(lat, face, start)
        except LatticeError as err:
            last_err = err
    raise LatticeError(f"face {fi}: {last_err}")


def _walk_face_from(lat, face, start):
    cur = start
    pos = (Fraction(0), Fraction(0))
    verts = []
    positions = []
    midpoints = []
    for e in face:
        a, b = lat.edge_list[e]
        dx, dy = lat.disp_frac[e]
        if cur == a:
            nxt, step = b, (dx, dy)
        elif cur == b:
            nxt, step = a, (-dx, -dy)
        else:
            raise LatticeError(f"edge {e} does not continue the walk at vertex {cur}")
        verts.append(cur)
        positions.append(pos)
        midpoints.append((pos[0] + step[0] / 2, pos[1] + step[1] / 2))
        pos = (pos[0] + step[0], pos[1] + step[1])
        cur = nxt
    if cur != start:
        raise LatticeError("boundary walk does not close")
    if pos != (Fraction(0), Fraction(0)):
        raise LatticeError(f"boundary walk has nonzero winding {pos}")
    return verts, positions, midpoints


# ---------------------------------------------------------------------------
# generators
# ---------------------------------------------------------------------------


def parse_family(spec: str) -> tuple[str, int | None]:
    """Parse a family string, accepting the 'subedge(n)' sugar."""
    m = re.fullmatch(r"subedge\((\d+)\)", spec.strip())
    if m:
        return "subedge", int(m.group(1))
    return spec.strip(), None


def generate(family: str, L: int, n: int | None = None) -> PeriodicLattice:
    """Construct a periodic lattice of the given family at linear size L.

    Families: square, triangular, hexagonal, reduced_square, union,
    subedge (requires n >= 1; 'subedge(n)' is accepted in the family string).
    reduced_square and union use a 3x3 unit cell, so L must be divisible by 3.
    """
    fam, parsed_n = parse_family(family)
    if parsed_n is not None:
        if n is not None and n != parsed_n:
            raise LatticeError(f"conflicting sub-edge counts {parsed_n} and {n}")
        n = parsed_n
    if L < 2:
        raise LatticeError(f"L={L} too small; need L >= 2")
    if fam == "square":
        return _square(L)
    if fam == "triangular":
        return _triangular(L)
    if fam == "hexagonal":
        hexl = dual(_triangular(L))
        return PeriodicLattice(
            "hexagonal", L, hexl.coords_frac, hexl.edge_list, hexl.disp_frac, hexl.faces
        )
    if fam == "reduced_square":
        if L % 3 != 0:
            raise LatticeError(f"reduced_square needs L divisible by 3, got L={L}")
        return _reduced_square(L)
    if fam == "union":
        if L % 3 != 0:
            raise LatticeError(f"union needs L divisible by 3, got L={L}")
        return _union(L)
    if fam == "subedge":
        if n is None:
            raise LatticeError("subedge family needs a sub-edge count n")
        if n < 1:
            raise LatticeError(f"subedge needs n >= 1, got n={n}")
        return _subedge(L, n)
    raise LatticeError(f"unknown lattice family {family!r}")


def _square_parts(L):
    """Vertex/edge/face tables of the L x L square torus (shared by editors)."""

    def vid(i, j):
        return (j % L) * L + (i % L)

    def he(i, j):
        return (j % L) * L + (i % L)

    def ve(i, j):
        return L * L + (j % L) * L + (i % L)

    coords = [(Fraction(i, L), Fraction(j, L)) for j in range(L) for i in range(L)]
    edges, disps = [], []
    for j in range(L):
        for i in range(L):
            edges.append((vid(i, j), vid(i + 1, j)))
            disps.append((Fraction(1, L), Fraction(0)))
    for j in range(L):
        for i in range(L):
            edges.append((vid(i, j), vid(i, j + 1)))
            disps.append((Fraction(0), Fraction(1, L)))
    faces = [
        [he(i, j), ve(i + 1, j), he(i, j + 1), ve(i, j)] for j in range(L) for i in range(L)
    ]
    return coords, edges, disps, faces, vid, he, ve


def _square(L):
    coords, edges, disps, faces, *_ = _square_parts(L)
    return PeriodicLattice("square", L, coords, edges, disps, faces)


def _triangular(L):
    coords, edges, disps, faces, vid, he, ve = _square_parts(L)
    E0 = len(edges)

    def de(i, j):
        return E0 + (j % L) * L + (i % L)

    for j in range(L):
        for i in range(L):
            edges.append((vid(i, j), vid(i + 1, j + 1)))
            disps.append((Fraction(1, L), Fraction(1, L)))
    faces = []
    for j in range(L):
        for i in range(L):
            faces.append([he(i, j), ve(i + 1, j), de(i, j)])  # lower triangle
            faces.append([de(i, j), he(i, j + 1), ve(i, j)])  # upper triangle
    return PeriodicLattice("triangular", L, coords, edges, disps, faces)


def _reduced_square(L):
    coords, edges, disps, faces, vid, he, ve = _square_parts(L)

    def fid(i, j):
        return (j % L) * L + (i % L)

    removed = []
    merges = []  # (kept face, absorbed face, shared edge)
    for cy in range(L // 3):
        for cx in range(L // 3):
            x, y = 3 * cx, 3 * cy
            r1 = he(x + 1, y + 1)
            r2 = ve(x, y + 2)
            removed.extend((r1, r2))
            merges.append((fid(x + 1, y), fid(x + 1, y + 1), r1))
            merges.append(((fid(x - 1, y + 2)), fid(x, y + 2), r2))
    face_lists = [list(f) for f in faces]
    dead = set()
    for keep, absorb, e in merges:
        f1, f2 = face_lists[keep], face_lists[absorb]
        i1, i2 = f1.index(e), f2.index(e)
        face_lists[keep] = f1[i1 + 1 :] + f1[:i1] + f2[i2 + 1 :] + f2[:i2]
        dead.add(absorb)
    new_faces = [f for i, f in enumerate(face_lists) if i not in dead]
    return _drop_edges("reduced_square", L, coords, edges, disps, new_faces, removed)


def _drop_edges(tag, L, coords, edges, disps, faces, removed):
    removed_set = set(removed)
    remap = {}
    new_edges, new_disps = [], []
    for e, (pair, d) in enumerate(zip(edges, disps)):
        if e in removed_set:
            continue
        remap[e] = len(new_edges)
        new_edges.append(pair)
        new_disps.append(d)
    new_faces = [[remap[e] for e in f] for f in faces]
    return PeriodicLattice(tag, L, coords, new_edges, new_disps, new_faces)


def _union(L):
    coords, edges, disps, faces, vid, he, ve = _square_parts(L)

    def fid(i, j):
        return (j % L) * L + (i % L)

    face_lists = [list(f) for f in faces]
    extra_faces = []
    for cy in range(L // 3):
        for cx in range(L // 3):
            x, y = 3 * cx, 3 * cy
            for (i, j) in ((x, y), (x + 2, y + 1)):
                c = len(edges)
                edges.append((vid(i, j), vid(i + 1, j + 1)))
                disps.append((Fraction(1, L), Fraction(1, L)))
                face_lists[fid(i, j)] = [he(i, j), ve(i + 1, j), c]
                extra_faces.append([c, he(i, j + 1), ve(i, j)])
    return PeriodicLattice("union", L, coords, edges, disps, face_lists + extra_faces)


def _subedge(L, n):
    coords, edges, disps, faces, vid, he, ve = _square_parts(L)
    E0 = len(edges)
    new_edges, new_disps = [], []
    for e in range(E0):
        for _ in range(n):
            new_edges.append(edges[e])
            new_disps.append(disps[e])
    # the face listed first for an edge keeps copy 0, the second gets copy n-1
    seen_once = set()
    new_faces = []
    for f in faces:
        nf = []
        for e in f:
            if e in seen_once:
                nf.append(n * e + n - 1)
            else:
                nf.append(n * e)
                seen_once.add(e)
        new_faces.append(nf)
    for e in range(E0):
        for k in range(n - 1):
            new_faces.append([n * e + k, n * e + k + 1])
    return PeriodicLattice(f"subedge({n})", L, coords, new_edges, new_disps, new_faces)


# ---------------------------------------------------------------------------
# duality
# ---------------------------------------------------------------------------


def dual(lat: PeriodicLattice) -> PeriodicLattice:
    """The dual lattice: vertices <-> faces, with edge ids preserved.

    Dual vertex f sits at the centroid of primal face f; the dual edge with
    id e connects the two faces incident to primal edge e, its displacement
    taken through the midpoint of e so that winding parities stay exact.
    """
    F = lat.n_faces
    cent_local: list[tuple[Fraction, Fraction]] = []
    mid_local: list[dict[int, tuple[Fraction, Fraction]]] = []
    anchors: list[int] = []
    for fi in range(F):
        verts, positions, midpoints = _walk_face(lat, fi)
        k = len(verts)
        cx = sum(p[0] for p in positions) / k
        cy = sum(p[1] for p in positions) / k
        cent_local.append((cx, cy))
        mid_local.append(dict(zip(lat.faces[fi], midpoints)))
        anchors.append(verts[0])

    # absolute centroid = anchor coordinate + local offset (before mod 1)
    cents_abs = []
    for fi in range(F):
        ax, ay = lat.coords_frac[anchors[fi]]
        cents_abs.append((ax + cent_local[fi][0], ay + cent_local[fi][1]))

    dual_edges = []
    dual_disps = []
    for e in range(lat.n_edges):
        f1, f2 = int(lat.edge_faces[e][0]), int(lat.edge_faces[e][1])
        m1 = mid_local[f1][e]
        m2 = mid_local[f2][e]
        # pin both face frames at the shared physical midpoint of e; then the
        # dual segment f1 -> f2 through that midpoint has displacement
        # (centroid2 - midpoint2) - (centroid1 - midpoint1), anchors cancelling
        dx = (cent_local[f2][0] - m2[0]) - (cent_local[f1][0] - m1[0])
        dy = (cent_local[f2][1] - m2[1]) - (cent_local[f1][1] - m1[1])
        # sanity: the two frames must agree on the midpoint modulo 1
        a1x, a1y = lat.coords_frac[anchors[f1]]
        a2x, a2y = lat.coords_frac[anchors[f2]]
        wx = (a1x + m1[0]) - (a2x + m2[0])
        wy = (a1y + m1[1]) - (a2y + m2[1])
        if wx.denominator != 1 or wy.denominator != 1:
            raise LatticeError(f"edge {e}: face frames disagree off-lattice")
        dual_edges.append((f1, f2))
        dual_disps.append((dx, dy))

    dual_faces = _vertex_rotations(lat)
    return PeriodicLattice(
        f"dual_{lat.family_tag}",
        lat.linear_size,
        [(x % 1, y % 1) for x, y in cents_abs],
        dual_edges,
        dual_disps,
        dual_faces,
    )


def _vertex_rotations(lat: PeriodicLattice) -> list[list[int]]:
    """Edge rotation (cyclic order) around every vertex, from the faces alone.

    Consecutive rotation neighbors share a face corner; walking the corner
    links recovers the embedding's rotation system, so parallel edges come
    out in their true nesting order.  Raises if the corners at some vertex do
    not close into a single cycle (not a disk, i.e. not a valid embedding).
    """
    corners: list[tuple[int, int]] = []  # (edge a, edge b) meeting at the vertex
    end_corners: dict[tuple[int, int], list[int]] = {}
    for fi in range(lat.n_faces):
        verts, _pos, _mid = _walk_face(lat, fi)
        face = lat.faces[fi]
        k = len(face)
        for i in range(k):
            a = face[i]
            b = face[(i + 1) % k]
            v = verts[(i + 1) % k]
            cid = len(corners)
            corners.append((a, b))
            end_corners.setdefault((v, a), []).append(cid)
            end_corners.setdefault((v, b), []).append(cid)

    rotations = []
    for v in range(lat.n_vertices):
        inc = [e for e, _w in lat.incident(v)]
        for e in inc:
            if len(end_corners.get((v, e), ())) != 2:
                raise LatticeError(f"edge {e} has {len(end_corners.get((v, e), ()))} corners at {v}")
        start = inc[0]  # smallest edge id (incident lists are id-sorted)
        c0, c1 = end_corners[(v, start)]
        other0 = corners[c0][0] if corners[c0][1] == start else corners[c0][1]
        other1 = corners[c1][0] if corners[c1][1] == start else corners[c1][1]
        cid = c0 if (other0, c0) <= (other1, c1) else c1
        cycle = []
        cur = start
        for _ in range(len(inc)):
            cycle.append(cur)
            a, b = corners[cid]
            cur = a if b == cur else b
            ca, cb = end_corners[(v, cur)]
            cid = cb if ca == cid else ca
        if cur != start or sorted(cycle) != sorted(inc):
            raise LatticeError(f"corners at vertex {v} do not form a single rotation cycle")
        rotations.append(cycle)
    return rotations


# ---------------------------------------------------------------------------
# degrees and duality identities
# ---------------------------------------------------------------------------


def average_degree(lat: PeriodicLattice) -> Fraction:
    return Fraction(2 * lat.n_edges, lat.n_vertices)


def dual_average_degree(lat: PeriodicLattice) -> Fraction:
    return Fraction(2 * lat.n_edges, lat.n_faces)


def unit_cell(lat: PeriodicLattice) -> UnitCellSpec:
    V = lat.n_vertices
    counts: dict[int, int] = {}
    for d in lat.degrees:
        counts[int(d)] = counts.get(int(d), 0) + 1
    multiset = tuple(sorted((d, Fraction(c, V)) for d, c in counts.items()))
    return UnitCellSpec(multiset)


def check_euler_duality(lat: PeriodicLattice) -> tuple[Fraction, Fraction, Fraction]:
    """(q, q_bar, 2/q + 2/q_bar); the last is exactly 1 for any valid torus lattice."""
    q = average_degree(lat)
    qbar = dual_average_degree(lat)
    return q, qbar, Fraction(2) / q + Fraction(2) / qbar


# ---------------------------------------------------------------------------
# graph distances
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DistanceTable:
    """BFS distances (and one shortest path each) from a set of sources.

    pred_edge[s, w] is the smallest edge id among last hops of shortest paths
    from sources[s] into w (-1 at the source itself).  path(source, target)
    walks that gradient from the target, so ties are broken by the smallest
    edge id at every step.
    """

    lat: PeriodicLattice
    sources: tuple[int, ...]
    dist: np.ndarray
    pred_edge: np.ndarray

    def path(self, source: int, target: int) -> list[int]:
        s = self.sources.index(source)
        drow = self.dist[s]
        if drow[target] < 0:
            raise LatticeError("target unreachable")
        out = []
        cur = target
        while cur != source:
            e = int(self.pred_edge[s][cur])
            a, b = self.lat.edge_list[e]
            out.append(e)
            cur = a + b - cur
        out.reverse()
        return out


def graph_distances(lat: PeriodicLattice, sources: Iterable[int]) -> DistanceTable:
    """Unweighted BFS distances on the torus graph from each source."""
    src = tuple(int(s) for s in sources)
    if not src:
        raise LatticeError("need at least one source")
    V = lat.n_vertices
    dist = np.full((len(src), V), -1, dtype=np.int32)
    pred = np.full((len(src), V), -1, dtype=np.int32)
    for si, s in enumerate(src):
        drow, prow = dist[si], pred[si]
        drow[s] = 0
        frontier = [s]
        while frontier:
            nxt = []
            for v in frontier:
                dv = drow[v]
                for k in range(lat.adj_indptr[v], lat.adj_indptr[v + 1]):
                    e = lat.adj_edge[k]
                    w = lat.adj_other[k]
                    if drow[w] < 0:
                        drow[w] = dv + 1
                        prow[w] = e
                        nxt.append(int(w))
                    elif drow[w] == dv + 1 and e < prow[w]:
                        prow[w] = e
            frontier = nxt
    return DistanceTable(lat, src, dist, pred)


def distance_table(lat: PeriodicLattice) -> np.ndarray:
    """All-pairs BFS distance matrix (int16), cached on the lattice."""
    tab = lat._cache.get("dist_table")
    if tab is None:
        if lat.n_vertices > _MAX_DISTANCE_TABLE_VERTICES:
            raise LatticeError(
                f"{lat.n_vertices} vertices exceeds the all-pairs distance budget"
            )
        tab = bfs_all_rows(lat.adj_indptr, lat.adj_other, lat.n_vertices)
        lat._cache["dist_table"] = tab
    return tab


def shortest_path_edges(lat: PeriodicLattice, dist_row: np.ndarray, source: int, target: int):
    """Edge ids of one shortest path source->target given dist_row = d(source, .).

    Deterministic: walking back from the target, always take the smallest
    edge id that descends the distance gradient (same rule as DistanceTable).
    """
    out = []
    cur = int(target)
    d = int(dist_row[cur])
    while cur != source:
        for k in range(lat.adj_indptr[cur], lat.adj_indptr[cur + 1]):
            w = int(lat.adj_other[k])
            if dist_row[w] == d - 1:
                out.append(int(lat.adj_edge[k]))
                cur = w
                d -= 1
                break
        else:
            raise LatticeError("no descending neighbor; inconsistent distance row")
    out.reverse()
    return out


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------


def to_json_dict(lat: PeriodicLattice, extra_meta: dict | None = None) -> dict:
    from . import __version__

    meta = {
        "q": str(average_degree(lat)),
        "q_dual": str(dual_average_degree(lat)),
        "tool": f"toricmem {__version__}",
    }
    if extra_meta:
        meta.update(extra_meta)
    return {
        "family": lat.family_tag,
        "L": lat.linear_size,
        "vertices": [[float(x), float(y)] for x, y in lat.coords_frac],
        "edges": [[int(u), int(v)] for u, v in lat.edge_list],
        "faces": [list(f) for f in lat.faces],
        "meta": meta,
    }


def save(lat: PeriodicLattice, path, extra_meta: dict | None = None):
    doc = to_json_dict(lat, extra_meta)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dumps_lattice(doc))


def dumps_lattice(doc: dict) -> str:
    """Fixed layout: one vertex/edge/face per line, keys in schema order."""
    out = ["{"]
    out.append(f' "family": {json.dumps(doc["family"])},')
    out.append(f' "L": {doc["L"]},')
    for key in ("vertices", "edges", "faces"):
        rows = ",\n".join("  " + json.dumps(item) for item in doc[key])
        out.append(f' "{key}": [\n{rows}\n ],')
    out.append(f' "meta": {json.dumps(doc["meta"], sort_keys=True)}')
    out.append("}")
    return "\n".join(out) + "\n"


def load(path) -> PeriodicLattice:
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    coords = [
        (Fraction(x).limit_denominator(10**9), Fraction(y).limit_denominator(10**9))
        for x, y in doc["vertices"]
    ]
    disps = []
    for u, v in doc["edges"]:
        dx = coords[v][0] - coords[u][0]
        dy = coords[v][1] - coords[u][1]
        disps.append((dx - round(dx), dy - round(dy)))
    return PeriodicLattice(
        doc["family"], doc["L"], coords, [tuple(e) for e in doc["edges"]], disps, doc["faces"]
    )
