"""Error chains, syndromes, and homology on a toric-code lattice.

Only one Pauli sector is represented: a chain is the set of edges hit by
single-spin flips and its boundary (odd-parity vertices) is the syndrome.
The other sector is obtained by running the same machinery on the dual
lattice, so X- and Z-type behavior share one implementation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .lattice import PeriodicLattice


class ChainError(ValueError):
    pass


@dataclass(frozen=True)
class ErrorChain:
    """Subset of edge ids, dense bit mask; a group element under XOR."""

    mask: np.ndarray  # bool, length |E|

    @staticmethod
    def empty(lat: PeriodicLattice) -> "ErrorChain":
        return ErrorChain(np.zeros(lat.n_edges, dtype=bool))

    @staticmethod
    def from_edges(lat: PeriodicLattice, edge_ids) -> "ErrorChain":
        mask = np.zeros(lat.n_edges, dtype=bool)
        ids = np.asarray(list(edge_ids), dtype=np.int64)
        if ids.size:
            if ids.min() < 0 or ids.max() >= lat.n_edges:
                raise ChainError("edge id out of range")
            mask[ids] = True
        return ErrorChain(mask)

    @property
    def weight(self) -> int:
        return int(self.mask.sum())

    def edges(self) -> np.ndarray:
        """Sorted edge ids (the serialization order for trajectory dumps)."""
        return np.flatnonzero(self.mask)

    def __eq__(self, other):
        return isinstance(other, ErrorChain) and np.array_equal(self.mask, other.mask)


@dataclass(frozen=True)
class Syndrome:
    """Vertices with odd incident-flip parity."""

    mask: np.ndarray  # bool, length |V|

    def vertices(self) -> np.ndarray:
        return np.flatnonzero(self.mask)

    @property
    def size(self) -> int:
        return int(self.mask.sum())

    def __eq__(self, other):
        return isinstance(other, Syndrome) and np.array_equal(self.mask, other.mask)


@dataclass(frozen=True)
class HomologyClass:
    """Winding parities across the two fixed reference cuts."""

    h1: int  # crossings of the x = 0 cut (winding along x), mod 2
    h2: int  # crossings of the y = 0 cut (winding along y), mod 2

    @property
    def trivial(self) -> bool:
        return self.h1 == 0 and self.h2 == 0

    def __xor__(self, other):
        return HomologyClass(self.h1 ^ other.h1, self.h2 ^ other.h2)


def compose(a: ErrorChain, b: ErrorChain) -> ErrorChain:
    if a.mask.shape != b.mask.shape:
        raise ChainError("chains live on different lattices")
    return ErrorChain(a.mask ^ b.mask)


def syndrome(lat: PeriodicLattice, chain: ErrorChain) -> Syndrome:
    """Boundary of the chain: vertices with an odd number of flipped edges.

    Parallel edges count with multiplicity.
    """
    if chain.mask.shape != (lat.n_edges,):
        raise ChainError("chain does not index this lattice's edges")
    ends = lat.edges[chain.mask].ravel()
    counts = np.bincount(ends, minlength=lat.n_vertices)
    return Syndrome((counts & 1).astype(bool))


def homology_class(lat: PeriodicLattice, chain: ErrorChain) -> HomologyClass:
    """Winding class of a boundary-free chain relative to the reference cuts."""
    syn = syndrome(lat, chain)
    if syn.size != 0:
        raise ChainError("homology is defined only for chains with empty syndrome")
    h1 = int(lat.cut_x_mask[chain.mask].sum()) & 1
    h2 = int(lat.cut_y_mask[chain.mask].sum()) & 1
    return HomologyClass(h1, h2)


def sample_iid_errors(lat: PeriodicLattice, p: float, rng: np.random.Generator) -> ErrorChain:
    """Flip each edge independently with probability p."""
    if not (0.0 <= p <= 1.0):
        raise ChainError(f"error probability {p} outside [0, 1]")
    return ErrorChain(rng.random(lat.n_edges) < p)


def face_boundary(lat: PeriodicLattice, face_id: int) -> ErrorChain:
    """The chain consisting of one face's boundary edges (a stabilizer loop)."""
    return ErrorChain.from_edges(lat, lat.faces[face_id])
