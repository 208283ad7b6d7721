"""Thermal spin-flip dynamics: Ohmic bath rates, Gillespie engine, and an
exact master-equation oracle for tiny systems.

Time units: the default rate normalization fixes gamma(2J) = 1 and (by the
hop override) gamma(0) = gamma(2J), so lifetimes are directly comparable
across temperatures.  The pure-Ohmic gamma(0) = 2*kappa*T mode stays
available behind `hop_override=False`.

Reproducibility: every trajectory draws from its own counter-based Philox
stream keyed by (master seed, stream id, item index), so ensembles are
identical regardless of worker count or scheduling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .code import ErrorChain, syndrome
from .lattice import PeriodicLattice

_MASK64 = (1 << 64) - 1


def trajectory_rng(master_seed: int, stream: int, item: int) -> np.random.Generator:
    """Independent Philox stream for one work item (counter-based, splittable)."""
    key = np.array(
        [master_seed & _MASK64, ((stream << 44) ^ item) & _MASK64], dtype=np.uint64
    )
    return np.random.Generator(np.random.Philox(key=key))


class RateError(ValueError):
    pass


@dataclass(frozen=True)
class RateModel:
    """Ohmic spin-boson transition rates for the three relevant energies.

    T is measured in units of J (J itself is kept at 1); kappa sets the time
    scale; omega_c is infinite (the cutoff factor is 1).  hop_override forces
    gamma(0) := gamma(2J), the normalization used for all lifetime tables.
    """

    T: float
    J: float = 1.0
    n: int = 1
    kappa: float = 0.25
    omega_c: float = math.inf
    hop_override: bool = False

    def __post_init__(self):
        if self.T <= 0:
            raise RateError(f"temperature must be positive, got {self.T}")
        if self.n != 1:
            raise RateError("only the Ohmic bath (n = 1) is supported")
        if self.kappa <= 0:
            raise RateError("kappa must be positive")
        if not math.isinf(self.omega_c):
            raise RateError("finite bath cutoff is not supported (omega_c -> inf)")

    @classmethod
    def normalized(cls, T_over_J: float, hop_override: bool = True) -> "RateModel":
        """Time units with gamma(2J) = 1 (and gamma(0) = 1 under the override)."""
        if T_over_J <= 0:
            raise RateError("T/J must be positive")
        kappa = -math.expm1(-2.0 / T_over_J) / 4.0
        return cls(T=T_over_J, J=1.0, kappa=kappa, hop_override=hop_override)

    @classmethod
    def ohmic(cls, T_over_J: float, kappa: float = 0.25) -> "RateModel":
        return cls(T=T_over_J, J=1.0, kappa=kappa, hop_override=False)

    def gamma(self, omega: float) -> float:
        return rate_gamma(self, omega)

    @property
    def gamma_create(self) -> float:
        return rate_gamma(self, -2.0 * self.J)

    @property
    def gamma_annihilate(self) -> float:
        return rate_gamma(self, 2.0 * self.J)

    @property
    def gamma_hop(self) -> float:
        return rate_gamma(self, 0.0)


def rate_gamma(model: RateModel, omega: float) -> float:
    """Bath rate gamma(omega) = 2*kappa*|omega / (1 - exp(-omega/T))|.

    gamma(0) is the continuous limit 2*kappa*T, replaced by gamma(2J) when
    the hop override is active.  Detailed balance
    gamma(w) = gamma(-w) * exp(w/T) holds by construction.
    """
    if omega == 0.0:
        if model.hop_override:
            return rate_gamma(model, 2.0 * model.J)
        return 2.0 * model.kappa * model.T
    x = omega / model.T
    if x > 0:
        denom = -math.expm1(-x)  # 1 - e^{-x}, accurate for small x
    else:
        denom = -math.expm1(-x)  # negative; absolute value below
    return 2.0 * model.kappa * abs(omega / denom)


# ---------------------------------------------------------------------------
# Gillespie engine
# ---------------------------------------------------------------------------

_OMEGA_BY_CLASS = (-2.0, 0.0, 2.0)  # in units of J; index = occupied endpoints


class SimState:
    """Mutable continuous-time state: chain, defects, and per-edge rate class.

    Edge classes: 0 = pair creation (both endpoints empty), 1 = hop (exactly
    one occupied), 2 = annihilation (both occupied).  Each class keeps a pool
    of edge ids for O(1) event selection; the total rate is recomputed from
    the exact pool counts each step.
    """

    def __init__(self, lat: PeriodicLattice, model: RateModel, chain: ErrorChain | None = None):
        self.lat = lat
        self.model = model
        E = lat.n_edges
        self.chain = np.zeros(E, dtype=bool) if chain is None else chain.mask.copy()
        occ = syndrome(lat, ErrorChain(self.chain)).mask.astype(np.int8)
        self.occ = occ
        self.t = 0.0
        self.rates = (model.gamma_create, model.gamma_hop, model.gamma_annihilate)
        self._edge_ends = lat.edge_list
        self._adj = [
            [int(lat.adj_edge[k]) for k in range(lat.adj_indptr[v], lat.adj_indptr[v + 1])]
            for v in range(lat.n_vertices)
        ]
        self.cls = np.empty(E, dtype=np.int8)
        self.pool = [np.empty(E, dtype=np.int32) for _ in range(3)]
        self.pool_size = [0, 0, 0]
        self.pool_pos = np.empty(E, dtype=np.int32)
        for e, (u, v) in enumerate(self._edge_ends):
            c = int(occ[u]) + int(occ[v])
            self.cls[e] = c
            self.pool[c][self.pool_size[c]] = e
            self.pool_pos[e] = self.pool_size[c]
            self.pool_size[c] += 1
        self.n_defects = int(occ.sum())

    def total_rate(self) -> float:
        gc, gh, ga = self.rates
        return self.pool_size[0] * gc + self.pool_size[1] * gh + self.pool_size[2] * ga

    def error_chain(self) -> ErrorChain:
        return ErrorChain(self.chain.copy())

    def _move(self, e: int, c_new: int):
        c_old = int(self.cls[e])
        if c_old == c_new:
            return
        pool_old = self.pool[c_old]
        i = self.pool_pos[e]
        last = self.pool_size[c_old] - 1
        moved = pool_old[last]
        pool_old[i] = moved
        self.pool_pos[moved] = i
        self.pool_size[c_old] = last
        pool_new = self.pool[c_new]
        j = self.pool_size[c_new]
        pool_new[j] = e
        self.pool_pos[e] = j
        self.pool_size[c_new] = j + 1
        self.cls[e] = c_new

    def flip(self, e: int):
        """Apply a single spin flip and update defects, classes, and pools."""
        ends = self._edge_ends
        occ = self.occ
        u, v = ends[e]
        self.chain[e] = not self.chain[e]
        for w in (u, v):
            if occ[w]:
                occ[w] = 0
                self.n_defects -= 1
            else:
                occ[w] = 1
                self.n_defects += 1
        for w in (u, v):
            for e2 in self._adj[w]:
                a, b = ends[e2]
                self._move(e2, int(occ[a]) + int(occ[b]))

    def consistency_check(self, tol: float = 1e-12):
        """Assert defects == syndrome(chain) and pooled R == per-edge sum."""
        syn = syndrome(self.lat, ErrorChain(self.chain)).mask.astype(np.int8)
        if not np.array_equal(syn, self.occ):
            raise AssertionError("defect occupation inconsistent with chain syndrome")
        gc, gh, ga = self.rates
        per_edge = 0.0
        for e, (u, v) in enumerate(self._edge_ends):
            per_edge += (gc, gh, ga)[int(self.occ[u]) + int(self.occ[v])]
        R = self.total_rate()
        if abs(per_edge - R) > tol * max(R, 1.0):
            raise AssertionError(f"pooled rate {R} != per-edge sum {per_edge}")


def edge_rate(state: SimState, e: int) -> tuple[float, float]:
    """(rate, omega) for flipping edge e in the current state."""
    c = int(state.cls[e])
    return state.rates[c], _OMEGA_BY_CLASS[c] * state.model.J


def gillespie_step(state: SimState, rng: np.random.Generator) -> tuple[float, int]:
    """One exact stochastic step: waiting time and the flipped edge."""
    gc, gh, ga = state.rates
    n0, n1, n2 = state.pool_size
    r0 = n0 * gc
    r1 = n1 * gh
    R = r0 + r1 + n2 * ga
    if R <= 0:
        raise RateError("total rate vanished; cannot advance")
    dt = rng.exponential(1.0 / R)
    x = rng.random() * R
    if x < r0:
        c = 0
    elif x < r0 + r1:
        c = 1
    else:
        c = 2
    idx = int(rng.integers(0, state.pool_size[c]))
    e = int(state.pool[c][idx])
    state.flip(e)
    state.t += dt
    return dt, e


def evolve(
    state: SimState,
    t_max: float,
    sample_times,
    rng: np.random.Generator,
    record_chain: bool = False,
):
    """Run the jump process to t_max, recording at the given sample times.

    Returns a list of (time, n_defects, chain_edges-or-None); chain snapshots
    are taken only when record_chain is set.  Sample times must be ascending
    and <= t_max.
    """
    samples = [float(s) for s in sample_times]
    if any(b < a for a, b in zip(samples, samples[1:])):
        raise RateError("sample times must be ascending")
    if samples and samples[-1] > t_max:
        raise RateError("sample times must not exceed t_max")
    out = []

    def rec(ts):
        snap = np.flatnonzero(state.chain).copy() if record_chain else None
        out.append((ts, state.n_defects, snap))

    si = 0
    while si < len(samples) and samples[si] <= state.t:
        rec(samples[si])
        si += 1
    gc, gh, ga = state.rates
    pool_size = state.pool_size
    while state.t < t_max:
        r0 = pool_size[0] * gc
        r1 = pool_size[1] * gh
        R = r0 + r1 + pool_size[2] * ga
        dt = rng.exponential(1.0 / R)
        t_next = state.t + dt
        horizon = t_next if t_next < t_max else t_max
        while si < len(samples) and samples[si] <= horizon:
            rec(samples[si])
            si += 1
        if t_next >= t_max:
            state.t = t_max
            break
        x = rng.random() * R
        if x < r0:
            c = 0
        elif x < r0 + r1:
            c = 1
        else:
            c = 2
        idx = int(rng.integers(0, pool_size[c]))
        state.flip(int(state.pool[c][idx]))
        state.t = t_next
    while si < len(samples):
        rec(samples[si])
        si += 1
    return out


# ---------------------------------------------------------------------------
# exact master-equation oracle (tiny systems)
# ---------------------------------------------------------------------------

MASTER_MAX_EDGES = 12


@dataclass(frozen=True)
class MasterSolution:
    """Exact state distribution of the rate equation at requested times."""

    lat: PeriodicLattice
    times: tuple[float, ...]
    dists: np.ndarray  # (len(times), 2^E)
    step: float

    def defect_count(self, k: int) -> float:
        ndef = _state_defect_counts(self.lat)
        return float(self.dists[k] @ ndef)

    def defect_density(self, k: int) -> float:
        return self.defect_count(k) / self.lat.n_vertices

    def site_marginals(self, k: int) -> np.ndarray:
        E = self.lat.n_edges
        states = np.arange(1 << E, dtype=np.uint64)
        out = np.empty(self.lat.n_vertices)
        for v in range(self.lat.n_vertices):
            mask = np.uint64(_vertex_edge_mask(self.lat, v))
            par = (_popcount(states & mask) & 1).astype(bool)
            out[v] = float(self.dists[k][par].sum())
        return out


def _popcount(x: np.ndarray) -> np.ndarray:
    return np.bitwise_count(x).astype(np.int64)


def _vertex_edge_mask(lat: PeriodicLattice, v: int) -> int:
    m = 0
    for k in range(lat.adj_indptr[v], lat.adj_indptr[v + 1]):
        m |= 1 << int(lat.adj_edge[k])
    return m


def _state_defect_counts(lat: PeriodicLattice) -> np.ndarray:
    E = lat.n_edges
    states = np.arange(1 << E, dtype=np.uint64)
    total = np.zeros(1 << E, dtype=np.int64)
    for v in range(lat.n_vertices):
        mask = np.uint64(_vertex_edge_mask(lat, v))
        total += _popcount(states & mask) & 1
    return total


def master_equation_oracle(
    lat: PeriodicLattice, model: RateModel, times, rtol: float = 1e-8
) -> MasterSolution:
    """Integrate the full 2^|E|-state rate equation from the empty chain.

    Fixed-step RK4 with step <= 1e-3 / R_max, halving the step until every
    requested distribution is stable to rtol in max norm.  Distributions stay
    normalized to 1 within 1e-9 (enforced).
    """
    E = lat.n_edges
    if E > MASTER_MAX_EDGES:
        raise RateError(f"|E| = {E} too large for the exact oracle (max {MASTER_MAX_EDGES})")
    times = tuple(float(t) for t in times)
    if any(t < 0 for t in times) or any(b < a for a, b in zip(times, times[1:])):
        raise RateError("times must be ascending and nonnegative")
    nstates = 1 << E
    states = np.arange(nstates, dtype=np.uint64)
    parity = np.empty((lat.n_vertices, nstates), dtype=np.int8)
    for v in range(lat.n_vertices):
        mask = np.uint64(_vertex_edge_mask(lat, v))
        parity[v] = (_popcount(states & mask) & 1).astype(np.int8)
    gc, gh, ga = model.gamma_create, model.gamma_hop, model.gamma_annihilate
    by_class = np.array([gc, gh, ga])
    perms = []
    rates_out = []
    for e, (u, v) in enumerate(lat.edge_list):
        cls = parity[u].astype(np.int64) + parity[v].astype(np.int64)
        rates_out.append(by_class[cls])
        perms.append((states ^ np.uint64(1 << e)).astype(np.int64))
    total_out = np.sum(rates_out, axis=0)
    r_max = float(total_out.max())

    def integrate(h: float) -> np.ndarray:
        def deriv(p):
            acc = -total_out * p
            for e in range(E):
                pe = perms[e]
                acc += rates_out[e][pe] * p[pe]
            return acc

        p = np.zeros(nstates)
        p[0] = 1.0
        t = 0.0
        snaps = np.empty((len(times), nstates))
        for k, target in enumerate(times):
            while t < target - 1e-15:
                step = min(h, target - t)
                k1 = deriv(p)
                k2 = deriv(p + 0.5 * step * k1)
                k3 = deriv(p + 0.5 * step * k2)
                k4 = deriv(p + step * k3)
                p = p + (step / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
                t += step
            snaps[k] = p
        return snaps

    h = 1e-3 / max(r_max, 1e-12)
    snaps = integrate(h)
    for _ in range(8):
        finer = integrate(h / 2)
        if np.max(np.abs(finer - snaps)) <= rtol:
            snaps = finer
            h = h / 2
            break
        snaps = finer
        h = h / 2
    for k in range(len(times)):
        s = snaps[k].sum()
        if abs(s - 1.0) > 1e-9:
            raise RateError(f"probability leaked: sum = {s}")
        if snaps[k].min() < -1e-12:
            raise RateError("negative probability beyond tolerance")
    return MasterSolution(lat, times, snaps, h)
