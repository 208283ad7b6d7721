"""Experiment drivers: thresholds, decay curves, lifetimes, degree-law fits,
and Josephson-junction geometry scans, plus their CSV emitters.

All Monte Carlo fans out over (parameter point x trajectory) work items; each
item draws from its own Philox stream keyed by (seed, stream, item index), so
results are bit-identical for any worker count.  Aggregation is plain
summation keyed by item index.
"""

from __future__ import annotations

import json
import math
import multiprocessing as mp
import os
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import __version__, matching as mt
from . import _kernels
from .code import ErrorChain, sample_iid_errors
from .decoder import decode_and_judge
from .dynamics import RateModel, SimState, evolve, trajectory_rng
from .lattice import (
    PeriodicLattice,
    average_degree,
    distance_table,
    dual,
    generate,
)

# paper-fit parameters of the degree law p_c(q) = (mu*q + nu)/(q - 2)
MU_PAPER = 0.0231
NU_PAPER = 0.111
ALPHA_JJ = 1.61

_STREAM_THRESHOLD = 1
_STREAM_DECAY = 2
_STREAM_DECAY_EXT = 3
_STREAM_DENSITY = 4
_STREAM_BOOT = 5

_EXP_OVERFLOW = 700.0  # exp(x) overflows float64 just above this


class ExperimentError(RuntimeError):
    pass


class NoCrossingError(ExperimentError):
    """A scan that was expected to bracket a crossing did not."""


def lattice_for(family: str, L: int, sector: str = "primal") -> PeriodicLattice:
    lat = generate(family, L)
    if sector == "primal":
        return lat
    if sector == "dual":
        return dual(lat)
    raise ExperimentError(f"unknown sector {sector!r}")


# ---------------------------------------------------------------------------
# worker pool plumbing (fork-based; shared state is inherited copy-on-write)
# ---------------------------------------------------------------------------

_SHARED: dict = {}


def _warm_shared_lattices():
    _kernels.warmup()
    mt.warmup()
    for lat in _SHARED.get("lattices", []):
        distance_table(lat)


def _run_pool(worker, items, workers: int | None):
    if workers is None:
        workers = os.cpu_count() or 1
    if workers <= 1 or len(items) <= 1 or mp.get_start_method(allow_none=False) is None:
        return [worker(it) for it in items]
    _warm_shared_lattices()
    try:
        ctx = mp.get_context("fork")
    except ValueError:
        return [worker(it) for it in items]
    with ctx.Pool(processes=min(workers, len(items))) as pool:
        return pool.map(worker, items, chunksize=1)


# ---------------------------------------------------------------------------
# error-tolerance thresholds
# ---------------------------------------------------------------------------


@dataclass
class ThresholdResult:
    family: str
    sector: str
    sizes: tuple[int, ...]
    p_grid: tuple[float, ...]
    n_success: np.ndarray  # (len(sizes), len(p_grid))
    samples_per_point: int
    seed: int
    p_c: float | None
    p_c_err: float | None
    ci: tuple[float, float] | None
    pair_estimates: tuple[float, ...]

    @property
    def success_rate(self) -> np.ndarray:
        return self.n_success / self.samples_per_point


def _threshold_worker(item):
    size_idx, p_idx, start, count = item
    lat = _SHARED["lattices"][size_idx]
    p = _SHARED["p_grid"][p_idx]
    seed = _SHARED["seed"]
    base = (size_idx * len(_SHARED["p_grid"]) + p_idx) * _SHARED["spp"]
    sparsifier = _SHARED["sparsifier"]
    k = _SHARED["k"]
    succ = 0
    for s in range(start, start + count):
        rng = trajectory_rng(seed, _STREAM_THRESHOLD, base + s)
        chain = sample_iid_errors(lat, p, rng)
        if decode_and_judge(lat, chain, sparsifier=sparsifier, k=k):
            succ += 1
    return size_idx, p_idx, succ


def _crossings(p_grid, rate_small, rate_big):
    """Interpolated p where the larger size's success curve drops below the smaller's."""
    d = rate_big - rate_small
    roots = []
    for i in range(len(p_grid) - 1):
        d1, d2 = d[i], d[i + 1]
        if (d1 >= 0 > d2) or (d1 > 0 >= d2):
            t = d1 / (d1 - d2)
            roots.append(p_grid[i] + t * (p_grid[i + 1] - p_grid[i]))
    return roots


def _pc_from_counts(p_grid, counts, spp):
    rates = counts / spp
    pair_pcs = []
    for a in range(len(rates) - 1):
        roots = _crossings(np.asarray(p_grid), rates[a], rates[a + 1])
        if not roots:
            return None, ()
        pair_pcs.append(float(np.mean(roots)))
    return float(np.mean(pair_pcs)), tuple(pair_pcs)


def estimate_threshold(
    family: str,
    sector: str,
    sizes,
    p_grid,
    samples_per_point: int,
    seed: int,
    sparsifier: str = "knn",
    k: int = 6,
    workers: int | None = None,
    n_bootstrap: int = 200,
) -> ThresholdResult:
    """Finite-size crossing estimate of the error-tolerance threshold.

    Success-rate curves for consecutive sizes are interpolated piecewise
    linearly; their crossings are averaged and a bootstrap over the binomial
    counts gives the confidence interval.  p_c is None when no pair of
    curves crosses inside the grid.
    """
    sizes = tuple(sorted(int(L) for L in sizes))
    p_grid = tuple(float(p) for p in p_grid)
    if len(sizes) < 2:
        raise ExperimentError("need at least two sizes for a crossing estimate")
    lattices = [lattice_for(family, L, sector) for L in sizes]
    _SHARED.clear()
    _SHARED.update(
        {
            "lattices": lattices,
            "p_grid": p_grid,
            "seed": seed,
            "spp": samples_per_point,
            "sparsifier": sparsifier,
            "k": k,
        }
    )
    chunk = 50
    items = []
    for si in range(len(sizes)):
        for pi in range(len(p_grid)):
            for start in range(0, samples_per_point, chunk):
                items.append((si, pi, start, min(chunk, samples_per_point - start)))
    counts = np.zeros((len(sizes), len(p_grid)), dtype=np.int64)
    for si, pi, succ in _run_pool(_threshold_worker, items, workers):
        counts[si, pi] += succ
    _SHARED.clear()

    pc, pair_pcs = _pc_from_counts(p_grid, counts, samples_per_point)
    err = ci = None
    if pc is not None:
        boot_rng = trajectory_rng(seed, _STREAM_BOOT, 0)
        boots = []
        phat = counts / samples_per_point
        for _ in range(n_bootstrap):
            resampled = boot_rng.binomial(samples_per_point, phat)
            bpc, _ = _pc_from_counts(p_grid, resampled, samples_per_point)
            if bpc is not None:
                boots.append(bpc)
        if len(boots) >= 10:
            err = float(np.std(boots))
            ci = (float(np.percentile(boots, 2.5)), float(np.percentile(boots, 97.5)))
    return ThresholdResult(
        family=family,
        sector=sector,
        sizes=sizes,
        p_grid=p_grid,
        n_success=counts,
        samples_per_point=samples_per_point,
        seed=seed,
        p_c=pc,
        p_c_err=err,
        ci=ci,
        pair_estimates=pair_pcs,
    )


# ---------------------------------------------------------------------------
# decay curves and lifetimes
# ---------------------------------------------------------------------------


@dataclass
class DecayCurve:
    family: str
    sector: str
    L: int
    T_over_J: float
    times: tuple[float, ...]
    values: np.ndarray  # (n_runs, n_times) int8, +1 success / -1 logical failure
    seed: int
    n_defects: np.ndarray | None = None  # (n_runs, n_times) defect counts

    @property
    def n_runs(self) -> int:
        return self.values.shape[0]

    @property
    def mean(self) -> np.ndarray:
        return self.values.mean(axis=0)

    @property
    def stderr(self) -> np.ndarray:
        n = self.values.shape[0]
        return self.values.std(axis=0, ddof=1) / math.sqrt(n) if n > 1 else np.zeros(len(self.times))


def _decay_worker(item):
    start, count = item
    lat = _SHARED["lattices"][0]
    model = _SHARED["model"]
    times = _SHARED["times"]
    seed = _SHARED["seed"]
    stream = _SHARED["stream"]
    sparsifier = _SHARED["sparsifier"]
    k = _SHARED["k"]
    rows = np.empty((count, len(times)), dtype=np.int8)
    ndefs = np.empty((count, len(times)), dtype=np.int32)
    for r in range(count):
        rng = trajectory_rng(seed, stream, start + r)
        state = SimState(lat, model)
        recs = evolve(state, times[-1], times, rng, record_chain=True)
        for ti, (_t, nd, snap) in enumerate(recs):
            if snap is None or len(snap) == 0:
                chain = ErrorChain.empty(lat)
            else:
                mask = np.zeros(lat.n_edges, dtype=bool)
                mask[snap] = True
                chain = ErrorChain(mask)
            ok = decode_and_judge(lat, chain, sparsifier=sparsifier, k=k)
            rows[r, ti] = 1 if ok else -1
            ndefs[r, ti] = nd
    return start, rows, ndefs


def decay_curve(
    family: str,
    sector: str,
    L: int,
    T_over_J: float,
    t_grid,
    n_runs: int,
    seed: int,
    hop_override: bool = True,
    sparsifier: str = "knn",
    k: int = 6,
    workers: int | None = None,
    stream: int = _STREAM_DECAY,
) -> DecayCurve:
    """Ensemble decay of the logical observable under thermal noise.

    Each run evolves from the clean state and is decoded non-destructively at
    every sample time; the recorded value is +1 when the residual chain is
    homologically trivial, -1 otherwise.
    """
    times = tuple(float(t) for t in t_grid)
    if not times or any(b <= a for a, b in zip(times, times[1:])):
        raise ExperimentError("t_grid must be strictly ascending and non-empty")
    lat = lattice_for(family, L, sector)
    model = RateModel.normalized(T_over_J, hop_override=hop_override)
    _SHARED.clear()
    _SHARED.update(
        {
            "lattices": [lat],
            "model": model,
            "times": times,
            "seed": seed,
            "stream": stream,
            "sparsifier": sparsifier,
            "k": k,
        }
    )
    chunk = max(1, min(50, n_runs // ((os.cpu_count() or 1) * 4) or 1))
    items = [(start, min(chunk, n_runs - start)) for start in range(0, n_runs, chunk)]
    values = np.empty((n_runs, len(times)), dtype=np.int8)
    ndefs = np.empty((n_runs, len(times)), dtype=np.int32)
    for start, rows, nd in _run_pool(_decay_worker, items, workers):
        values[start : start + rows.shape[0]] = rows
        ndefs[start : start + nd.shape[0]] = nd
    _SHARED.clear()
    return DecayCurve(family, sector, L, T_over_J, times, values, seed, ndefs)


@dataclass
class LifetimeResult:
    family: str
    sector: str
    L: int
    T_over_J: float
    tau: float
    tau_err: float | None
    ci: tuple[float, float] | None
    criterion: float
    sensitivity: dict
    curve: DecayCurve
    extended_window: bool


def _curve_crossing(times, mean, level):
    if mean[0] < level:
        return None
    for i in range(len(times) - 1):
        m1, m2 = mean[i], mean[i + 1]
        if m1 >= level > m2:
            t = (m1 - level) / (m1 - m2)
            return float(times[i] + t * (times[i + 1] - times[i]))
    return None


def default_time_grid(family: str, sector: str, T_over_J: float, n_points: int = 28):
    """Sample grid sized from the degree-law lifetime guess for this lattice."""
    from .lattice import parse_family

    fam, _n = parse_family(family)
    L0 = 3 if fam in ("reduced_square", "union") else 2
    q = float(average_degree(lattice_for(family, L0, sector)))
    tau_guess = lifetime_from_degree(q, T_over_J)
    return tuple(np.linspace(0.0, 2.5 * tau_guess, n_points))


def estimate_lifetime(
    family: str,
    sector: str,
    L: int,
    T_over_J: float,
    n_runs: int,
    seed: int,
    t_grid=None,
    criterion: float = 0.5,
    hop_override: bool = True,
    sparsifier: str = "knn",
    k: int = 6,
    workers: int | None = None,
    n_bootstrap: int = 200,
) -> LifetimeResult:
    """Memory lifetime: first crossing of the mean logical value through 0.5.

    If the window misses the crossing it is extended (doubled) once; a second
    miss raises NoCrossingError.  Errors come from a bootstrap over runs;
    crossings at 0.25 and 0.75 are reported as criterion sensitivity.
    """
    times = tuple(t_grid) if t_grid is not None else default_time_grid(family, sector, T_over_J)
    curve = decay_curve(
        family, sector, L, T_over_J, [t for t in times if t > 0] if times[0] == 0 else times,
        n_runs, seed, hop_override=hop_override, sparsifier=sparsifier, k=k, workers=workers,
    )
    full_times = np.concatenate(([0.0], curve.times))
    full_mean = np.concatenate(([1.0], curve.mean))
    tau = _curve_crossing(full_times, full_mean, criterion)
    extended = False
    if tau is None:
        extended = True
        times2 = tuple(2 * t for t in curve.times)
        curve = decay_curve(
            family, sector, L, T_over_J, times2, n_runs, seed,
            hop_override=hop_override, sparsifier=sparsifier, k=k, workers=workers,
            stream=_STREAM_DECAY_EXT,
        )
        full_times = np.concatenate(([0.0], curve.times))
        full_mean = np.concatenate(([1.0], curve.mean))
        tau = _curve_crossing(full_times, full_mean, criterion)
        if tau is None:
            raise NoCrossingError(
                f"mean logical value never crossed {criterion} within t <= {curve.times[-1]}"
            )
    boot_rng = trajectory_rng(seed, _STREAM_BOOT, 1)
    boots = []
    n = curve.n_runs
    for _ in range(n_bootstrap):
        idx = boot_rng.integers(0, n, size=n)
        m = np.concatenate(([1.0], curve.values[idx].mean(axis=0)))
        bt = _curve_crossing(full_times, m, criterion)
        if bt is not None:
            boots.append(bt)
    err = float(np.std(boots)) if len(boots) >= 10 else None
    ci = (
        (float(np.percentile(boots, 2.5)), float(np.percentile(boots, 97.5)))
        if len(boots) >= 10
        else None
    )
    sens = {
        lvl: _curve_crossing(full_times, full_mean, lvl) for lvl in (0.25, 0.75)
    }
    return LifetimeResult(
        family, sector, L, T_over_J, tau, err, ci, criterion, sens, curve, extended
    )


def _density_worker(item):
    start, count = item
    lat = _SHARED["lattices"][0]
    model = _SHARED["model"]
    times = _SHARED["times"]
    seed = _SHARED["seed"]
    out = np.empty(count)
    for r in range(count):
        rng = trajectory_rng(seed, _STREAM_DENSITY, start + r)
        state = SimState(lat, model)
        recs = evolve(state, times[-1], times, rng)
        out[r] = np.mean([nd for _t, nd, _s in recs]) / lat.n_vertices
    return start, out


def anyon_density_check(
    lat: PeriodicLattice,
    model: RateModel,
    t_eq: float,
    n_runs: int,
    seed: int = 0,
    workers: int | None = None,
):
    """Long-time defect density per vertex (mean over [t_eq, t_eq + 10])."""
    times = tuple(np.linspace(t_eq, t_eq + 10.0, 8))
    _SHARED.clear()
    _SHARED.update({"lattices": [lat], "model": model, "times": times, "seed": seed})
    chunk = max(1, n_runs // ((os.cpu_count() or 1) * 4) or 1)
    items = [(s, min(chunk, n_runs - s)) for s in range(0, n_runs, chunk)]
    vals = np.empty(n_runs)
    for start, arr in _run_pool(_density_worker, items, workers):
        vals[start : start + len(arr)] = arr
    _SHARED.clear()
    return float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(n_runs))


def fermi_dirac_density(T_over_J: float) -> float:
    return 1.0 / (math.exp(1.0 / T_over_J) + 1.0)


# ---------------------------------------------------------------------------
# closed-form relations
# ---------------------------------------------------------------------------


def subedge_effective_p(p: float, n: int) -> float:
    """Net flip probability of an n-spin edge when each spin flips with prob p."""
    if not (0.0 <= p <= 0.5):
        raise ExperimentError(f"p = {p} outside [0, 1/2]")
    if n < 1:
        raise ExperimentError("n must be >= 1")
    return 0.5 * (1.0 - (1.0 - 2.0 * p) ** n)


def subedge_threshold(p_c_square: float, n: int) -> float:
    """Per-spin threshold of the n-sub-edge lattice given the square's p_c."""
    if n < 1:
        raise ExperimentError("n must be >= 1")
    return 0.5 * (1.0 - (1.0 - 2.0 * p_c_square) ** (1.0 / n))


def subedge_threshold_asymptote(p_c_square: float) -> float:
    """Limit of n * p_c^(n): -ln(1 - 2 p_c)/2, the O(1/q) decay constant."""
    return -0.5 * math.log(1.0 - 2.0 * p_c_square)


def lifetime_formula(p_c: float, T_over_J: float) -> float:
    """tau = 2 p_c (e^{J/T} + 1), the epsilon = 1/2 lifetime estimate."""
    if not (0.0 < p_c < 0.5):
        raise ExperimentError(f"p_c = {p_c} outside (0, 1/2)")
    if T_over_J <= 0:
        raise ExperimentError("T/J must be positive")
    return 2.0 * p_c * (math.exp(1.0 / T_over_J) + 1.0)


def pc_from_degree(q: float, mu: float = MU_PAPER, nu: float = NU_PAPER) -> float:
    """Degree law p_c(q) = (mu q + nu)/(q - 2)."""
    if q <= 2:
        raise ExperimentError(f"q = {q} must exceed 2")
    return (mu * q + nu) / (q - 2.0)


def lifetime_from_degree(
    q: float, T_over_J: float, mu: float = MU_PAPER, nu: float = NU_PAPER
) -> float:
    return lifetime_formula(pc_from_degree(q, mu, nu), T_over_J)


@dataclass(frozen=True)
class DegreeFit:
    points: tuple[tuple[float, float], ...]  # (q, p_c)
    mu: float
    nu: float
    residuals: tuple[float, ...]  # p_c - (mu q + nu)/(q - 2) per point


def fit_mu_nu(points) -> DegreeFit:
    """Least squares for p_c (q - 2) = mu q + nu (linear in mu, nu)."""
    pts = tuple((float(q), float(pc)) for q, pc in points)
    if len(pts) < 2:
        raise ExperimentError("need at least two (q, p_c) points")
    if any(q <= 2 for q, _ in pts):
        raise ExperimentError("all degrees must exceed 2")
    A = np.array([[q, 1.0] for q, _ in pts])
    y = np.array([pc * (q - 2.0) for q, pc in pts])
    sol, _res, rank, _sv = np.linalg.lstsq(A, y, rcond=None)
    if rank < 2:
        raise ExperimentError("degenerate design matrix (all degrees equal?)")
    mu, nu = float(sol[0]), float(sol[1])
    residuals = tuple(pc - pc_from_degree(q, mu, nu) for q, pc in pts)
    return DegreeFit(pts, mu, nu, residuals)


# ---------------------------------------------------------------------------
# Josephson-junction geometry scans
# ---------------------------------------------------------------------------


def qbar_from_q(q: float) -> float:
    if q <= 2:
        raise ExperimentError(f"q = {q} must exceed 2")
    return 2.0 * q / (q - 2.0)


def jj_couplings(x: float, q: float) -> tuple[float, float]:
    """(J_v/E_C, J_f/E_C) of a junction array with ratio x = E_J/E_C."""
    if x <= 1.0:
        raise ExperimentError(f"x = {x} is outside the code regime (needs x > 1)")
    if q <= 2:
        raise ExperimentError(f"q = {q} must exceed 2")
    jv = x ** 0.75 * math.exp(-q * ALPHA_JJ * math.sqrt(x))
    jf = x / qbar_from_q(q)
    return jv, jf


def _safe_exp(arg: float) -> float:
    return math.inf if arg > _EXP_OVERFLOW else math.exp(arg)


@dataclass(frozen=True)
class JJRow:
    q: float
    q_bar: float
    jv_over_ec: float
    jf_over_ec: float
    tau_p: float
    tau_d: float
    coherence: float
    simulated: bool = False
    tau_sim_primal: float | None = None
    tau_sim_dual: float | None = None


@dataclass(frozen=True)
class JJScan:
    x: float
    T: float
    alpha: float
    rows: tuple[JJRow, ...]

    @property
    def best_q(self) -> float:
        best = max(self.rows, key=lambda r: r.coherence)
        return best.q


def jj_lifetimes(x: float, T: float, q: float, mu: float = MU_PAPER, nu: float = NU_PAPER):
    """(tau_p, tau_d) as printed: the dual exponent is x*q_bar/T and the
    '+1' of the bare lifetime formula is dropped in both sectors."""
    if T <= 0:
        raise ExperimentError("T must be positive")
    qb = qbar_from_q(q)
    tau_p = 2.0 * (mu * q + nu) / (q - 2.0) * _safe_exp(
        (x ** 0.75 / T) * math.exp(-ALPHA_JJ * q * math.sqrt(x))
    )
    tau_d = 2.0 * (mu * qb + nu) / (qb - 2.0) * _safe_exp(x * qb / T)
    return tau_p, tau_d


def jj_coherence_scan(x: float, T: float, q_grid) -> JJScan:
    """Coherence time min(tau_p, tau_d) across lattice degrees at fixed x, T."""
    rows = []
    for q in q_grid:
        q = float(q)
        jv, jf = jj_couplings(x, q)
        tau_p, tau_d = jj_lifetimes(x, T, q)
        rows.append(
            JJRow(
                q=q,
                q_bar=qbar_from_q(q),
                jv_over_ec=jv,
                jf_over_ec=jf,
                tau_p=tau_p,
                tau_d=tau_d,
                coherence=min(tau_p, tau_d),
            )
        )
    return JJScan(x=x, T=T, alpha=ALPHA_JJ, rows=tuple(rows))


# families whose exact average degree matches a scan point
_JJ_SIMULABLE_FAMILIES = {
    3.0: ("hexagonal", "primal"),
    4.0: ("square", "primal"),
    6.0: ("triangular", "primal"),
    float(Fraction(32, 9)): ("reduced_square", "primal"),
    float(Fraction(32, 7)): ("reduced_square", "dual"),
    float(Fraction(40, 9)): ("union", "primal"),
    float(Fraction(40, 11)): ("union", "dual"),
}

_JJ_MAX_J_OVER_T = 8.0  # beyond this the crossing sits past any sane trajectory budget


def jj_simulation_cross_check(
    scan: JJScan,
    L: int = 12,
    n_runs: int = 300,
    seed: int = 0,
    workers: int | None = None,
) -> JJScan:
    """Re-run simulable scan rows through the thermal simulation.

    A row is simulable when its degree matches a generator family and the
    primal coupling gives J_v/T small enough to reach the lifetime crossing
    within the trajectory budget; the dual sector is almost never simulable
    at junction temperatures (exp(x q_bar / T) overflows).
    """
    rows = []
    for row in scan.rows:
        fam = _JJ_SIMULABLE_FAMILIES.get(row.q)
        tau_sim_p = tau_sim_d = None
        if fam is not None:
            family, sector = fam
            if family in ("reduced_square", "union") and L % 3 != 0:
                Luse = 3 * max(1, L // 3)
            else:
                Luse = L
            t_over_j = scan.T / row.jv_over_ec
            if 1.0 / t_over_j <= _JJ_MAX_J_OVER_T:
                res = estimate_lifetime(
                    family, sector, Luse, t_over_j, n_runs, seed, workers=workers
                )
                tau_sim_p = res.tau
        rows.append(
            JJRow(
                q=row.q,
                q_bar=row.q_bar,
                jv_over_ec=row.jv_over_ec,
                jf_over_ec=row.jf_over_ec,
                tau_p=row.tau_p,
                tau_d=row.tau_d,
                coherence=row.coherence,
                simulated=tau_sim_p is not None or tau_sim_d is not None,
                tau_sim_primal=tau_sim_p,
                tau_sim_dual=tau_sim_d,
            )
        )
    return JJScan(x=scan.x, T=scan.T, alpha=scan.alpha, rows=tuple(rows))


# ---------------------------------------------------------------------------
# CSV emitters (schemas are frozen; '#' metadata lines precede the header)
# ---------------------------------------------------------------------------


def _fmt(x) -> str:
    if isinstance(x, bool):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, float):
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return f"{x:.6g}"
    return str(x)


def write_csv(path, header, rows, config: dict | None = None):
    lines = [f"# toricmem {__version__}"]
    lines.append(
        f"# config: {json.dumps(config or {}, sort_keys=True, separators=(',', ':'))}"
    )
    lines.append(",".join(header))
    for row in rows:
        lines.append(",".join(_fmt(x) for x in row))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


TRAJECTORY_HEADER = ["run_id", "t", "n_defects", "logical_ok"]


def write_trajectory_csv(path, curve: DecayCurve, config: dict | None = None):
    """Per-run trajectory dump: run_id, t, n_defects, logical_ok."""
    if curve.n_defects is None:
        raise ExperimentError("curve carries no defect counts")
    rows = []
    for r in range(curve.n_runs):
        for ti, t in enumerate(curve.times):
            rows.append(
                [r, float(t), int(curve.n_defects[r, ti]), int(curve.values[r, ti] == 1)]
            )
    write_csv(path, TRAJECTORY_HEADER, rows, config)


THRESHOLD_HEADER = ["family", "sector", "L", "p", "n_success", "n_total", "seed"]
DECAY_HEADER = ["family", "sector", "L", "T_over_J", "t", "mean_logical", "stderr", "n_runs"]
LIFETIME_HEADER = ["family", "sector", "L", "T_over_J", "tau", "tau_err", "criterion"]
FIT_HEADER = ["q", "p_c", "p_c_err", "mu", "nu", "residual"]
JJ_HEADER = [
    "x", "T", "q", "q_bar", "Jv_over_Ec", "Jf_over_Ec", "tau_p", "tau_d",
    "coherence", "simulated_flag",
]


def write_threshold_csv(path, result: ThresholdResult, config: dict | None = None):
    rows = []
    for si, L in enumerate(result.sizes):
        for pi, p in enumerate(result.p_grid):
            rows.append(
                [
                    result.family,
                    result.sector,
                    L,
                    float(p),
                    int(result.n_success[si, pi]),
                    result.samples_per_point,
                    result.seed,
                ]
            )
    write_csv(path, THRESHOLD_HEADER, rows, config)


def write_decay_csv(path, curves, config: dict | None = None):
    if isinstance(curves, DecayCurve):
        curves = [curves]
    rows = []
    for c in curves:
        mean = c.mean
        err = c.stderr
        for ti, t in enumerate(c.times):
            rows.append(
                [c.family, c.sector, c.L, float(c.T_over_J), float(t),
                 float(mean[ti]), float(err[ti]), c.n_runs]
            )
    write_csv(path, DECAY_HEADER, rows, config)


def write_lifetime_csv(path, results, config: dict | None = None):
    if isinstance(results, LifetimeResult):
        results = [results]
    cfg = dict(config or {})
    cfg["criterion_sensitivity"] = {
        f"{r.family}/{r.sector}/T={_fmt(float(r.T_over_J))}": {
            "0.25": r.sensitivity.get(0.25),
            "0.75": r.sensitivity.get(0.75),
        }
        for r in results
    }
    rows = [
        [r.family, r.sector, r.L, float(r.T_over_J), float(r.tau),
         float(r.tau_err) if r.tau_err is not None else float("nan"), float(r.criterion)]
        for r in results
    ]
    write_csv(path, LIFETIME_HEADER, rows, cfg)


def write_fit_csv(path, fit: DegreeFit, errs=None, config: dict | None = None):
    rows = []
    for i, (q, pc) in enumerate(fit.points):
        err = errs[i] if errs is not None else float("nan")
        rows.append([float(q), float(pc), float(err), fit.mu, fit.nu, float(fit.residuals[i])])
    write_csv(path, FIT_HEADER, rows, config)


def write_jj_csv(path, scan: JJScan, config: dict | None = None):
    cfg = dict(config or {})
    sims = {
        _fmt(r.q): {"tau_sim_primal": r.tau_sim_primal, "tau_sim_dual": r.tau_sim_dual}
        for r in scan.rows
        if r.simulated
    }
    if sims:
        cfg["simulated_lifetimes"] = sims
    rows = [
        [float(scan.x), float(scan.T), r.q, r.q_bar, r.jv_over_ec, r.jf_over_ec,
         r.tau_p, r.tau_d, r.coherence, r.simulated]
        for r in scan.rows
    ]
    write_csv(path, JJ_HEADER, rows, cfg)
