"""Command-line front end: lattice files, experiments, and CSV emission.

Configuration precedence is flags > config file (JSON) > built-in defaults.
Standard output carries one machine-readable JSON summary per run; progress
notes go to standard error.  Exit codes: 0 success, 1 internal error,
2 bad configuration (including a threshold grid that never brackets the
crossing), 3 lifetime window with no crossing after one extension.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from fractions import Fraction

import numpy as np

from . import __version__, experiments as ex
from . import lattice as lt

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_BAD_CONFIG = 2
EXIT_NO_CROSSING = 3


class ConfigError(ValueError):
    pass


def _progress(msg: str):
    print(msg, file=sys.stderr, flush=True)


def _emit(summary: dict):
    print(json.dumps(summary, sort_keys=True), flush=True)


def _parse_list(text: str, conv):
    return [conv(tok) for tok in str(text).split(",") if tok.strip()]


def _parse_floats(text) -> list[float]:
    if isinstance(text, (list, tuple)):
        return [float(x) for x in text]
    return _parse_list(text, float)


def _parse_ints(text) -> list[int]:
    if isinstance(text, (list, tuple)):
        return [int(x) for x in text]
    return _parse_list(text, int)


def _parse_fraction_list(text) -> list[float]:
    if isinstance(text, (list, tuple)):
        return [float(Fraction(str(x))) for x in text]
    return [float(Fraction(tok)) for tok in str(text).split(",") if tok.strip()]


def _parse_p_grid(text) -> list[float]:
    """'0.08:0.13:0.01' (start:stop:step, inclusive) or a comma list."""
    if isinstance(text, (list, tuple)):
        return [float(x) for x in text]
    s = str(text)
    if ":" in s:
        start, stop, step = (float(x) for x in s.split(":"))
        n = int(round((stop - start) / step)) + 1
        return [start + i * step for i in range(n)]
    return _parse_list(s, float)


def _load_config(path) -> dict:
    if not path:
        return {}
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    if not isinstance(doc, dict):
        raise ConfigError("config file must hold a JSON object")
    return doc


def _merged(args: argparse.Namespace, defaults: dict) -> dict:
    """flags > config file > defaults, field by field."""
    cfg = dict(defaults)
    cfg.update(_load_config(getattr(args, "config", None)))
    for key, val in vars(args).items():
        if key in ("command", "config"):
            continue
        if val is not None:
            cfg[key] = val
    return cfg


def _public_config(cfg: dict) -> dict:
    return {k: v for k, v in sorted(cfg.items()) if v is not None}


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def _cmd_lattice(args) -> int:
    cfg = _merged(args, {"dual": False, "out": "lattice.json"})
    for req in ("family", "L"):
        if cfg.get(req) is None:
            raise ConfigError(f"missing required --{req}")
    lat = lt.generate(cfg["family"], int(cfg["L"]), cfg.get("n"))
    if cfg["dual"]:
        lat = lt.dual(lat)
    q = lt.average_degree(lat)
    qd = lt.dual_average_degree(lat)
    lt.save(lat, cfg["out"], extra_meta={"config": _public_config(cfg)})
    _emit(
        {
            "command": "lattice",
            "family": lat.family_tag,
            "L": lat.linear_size,
            "q": str(q),
            "q_dual": str(qd),
            "V": lat.n_vertices,
            "E": lat.n_edges,
            "F": lat.n_faces,
            "out": str(cfg["out"]),
        }
    )
    return EXIT_OK


def _cmd_threshold(args) -> int:
    cfg = _merged(
        args,
        {
            "sector": "primal",
            "sizes": "16,32",
            "runs": 1000,
            "seed": 1,
            "sparsifier": "knn",
            "knn_k": 6,
            "out": "threshold.csv",
            "workers": None,
        },
    )
    if cfg.get("family") is None:
        raise ConfigError("missing required --family")
    sizes = _parse_ints(cfg["sizes"])
    if cfg.get("p_grid") is None:
        q = float(lt.average_degree(ex.lattice_for(cfg["family"], max(sizes), cfg["sector"])))
        center = ex.pc_from_degree(q)
        p_grid = [round(center + d, 5) for d in (-0.02, -0.01, 0.0, 0.01, 0.02)]
    else:
        p_grid = _parse_p_grid(cfg["p_grid"])
    _progress(f"[threshold] {cfg['family']}/{cfg['sector']} sizes={sizes} grid={p_grid}")
    res = ex.estimate_threshold(
        cfg["family"],
        cfg["sector"],
        sizes,
        p_grid,
        int(cfg["runs"]),
        int(cfg["seed"]),
        sparsifier=cfg["sparsifier"],
        k=int(cfg["knn_k"]),
        workers=cfg["workers"],
    )
    ex.write_threshold_csv(cfg["out"], res, config=_public_config(cfg))
    if res.p_c is None:
        _emit(
            {
                "command": "threshold",
                "error": "out-of-range",
                "detail": "success curves do not cross inside the p grid",
                "out": str(cfg["out"]),
            }
        )
        return EXIT_BAD_CONFIG
    _emit(
        {
            "command": "threshold",
            "family": cfg["family"],
            "sector": cfg["sector"],
            "p_c": res.p_c,
            "p_c_err": res.p_c_err,
            "ci": res.ci,
            "out": str(cfg["out"]),
        }
    )
    return EXIT_OK


def _cmd_decay(args) -> int:
    cfg = _merged(
        args,
        {
            "sector": "primal",
            "sizes": "16",
            "T": 0.3,
            "points": 28,
            "runs": 1000,
            "seed": 1,
            "out": "decay.csv",
            "workers": None,
            "t_max": None,
            "dump_trajectories": None,
        },
    )
    if cfg.get("family") is None:
        raise ConfigError("missing required --family")
    sizes = _parse_ints(cfg["sizes"])
    T = float(cfg["T"])
    if cfg["t_max"] is None:
        grid = ex.default_time_grid(cfg["family"], cfg["sector"], T, int(cfg["points"]))
    else:
        grid = tuple(np.linspace(0.0, float(cfg["t_max"]), int(cfg["points"])))
    tgrid = [t for t in grid if t > 0]
    curves = []
    for L in sizes:
        _progress(f"[decay] {cfg['family']}/{cfg['sector']} L={L} T/J={T}")
        curves.append(
            ex.decay_curve(
                cfg["family"], cfg["sector"], L, T, tgrid, int(cfg["runs"]), int(cfg["seed"]),
                workers=cfg["workers"],
            )
        )
    ex.write_decay_csv(cfg["out"], curves, config=_public_config(cfg))
    if cfg.get("dump_trajectories"):
        ex.write_trajectory_csv(cfg["dump_trajectories"], curves[0], config=_public_config(cfg))
    _emit(
        {
            "command": "decay",
            "family": cfg["family"],
            "sector": cfg["sector"],
            "sizes": sizes,
            "T_over_J": T,
            "final_mean": {str(c.L): float(c.mean[-1]) for c in curves},
            "out": str(cfg["out"]),
        }
    )
    return EXIT_OK


def _cmd_lifetime(args) -> int:
    cfg = _merged(
        args,
        {
            "sector": "primal",
            "L": 16,
            "T": "0.3",
            "runs": 1000,
            "seed": 1,
            "out": "lifetime.csv",
            "workers": None,
        },
    )
    if cfg.get("family") is None:
        raise ConfigError("missing required --family")
    temps = _parse_floats(cfg["T"])
    results = []
    for T in temps:
        _progress(f"[lifetime] {cfg['family']}/{cfg['sector']} L={cfg['L']} T/J={T}")
        try:
            results.append(
                ex.estimate_lifetime(
                    cfg["family"], cfg["sector"], int(cfg["L"]), T, int(cfg["runs"]),
                    int(cfg["seed"]), workers=cfg["workers"],
                )
            )
        except ex.NoCrossingError as err:
            _emit({"command": "lifetime", "error": "no-crossing", "detail": str(err)})
            return EXIT_NO_CROSSING
    ex.write_lifetime_csv(cfg["out"], results, config=_public_config(cfg))
    _emit(
        {
            "command": "lifetime",
            "family": cfg["family"],
            "sector": cfg["sector"],
            "L": int(cfg["L"]),
            "tau": {str(r.T_over_J): r.tau for r in results},
            "tau_err": {str(r.T_over_J): r.tau_err for r in results},
            "out": str(cfg["out"]),
        }
    )
    return EXIT_OK


def _packaged_points() -> str:
    return os.path.join(os.path.dirname(__file__), "data", "fig5_published_points.csv")


def _cmd_fit(args) -> int:
    cfg = _merged(args, {"points": None, "out": "fit.csv"})
    path = cfg["points"] or _packaged_points()
    qs, pcs, errs = [], [], []
    with open(path, "r", encoding="utf-8") as fh:
        header = None
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if header is None:
                header = [h.strip() for h in line.split(",")]
                if header[:2] != ["q", "p_c"]:
                    raise ConfigError(f"points file must start with columns q,p_c (got {header})")
                continue
            parts = line.split(",")
            qs.append(float(Fraction(parts[0])))
            pcs.append(float(parts[1]))
            errs.append(float(parts[2]) if len(parts) > 2 and parts[2] else float("nan"))
    fit = ex.fit_mu_nu(zip(qs, pcs))
    ex.write_fit_csv(cfg["out"], fit, errs=errs, config=_public_config(cfg))
    _emit(
        {
            "command": "fit",
            "mu": fit.mu,
            "nu": fit.nu,
            "n_points": len(qs),
            "max_abs_residual": max(abs(r) for r in fit.residuals),
            "out": str(cfg["out"]),
        }
    )
    return EXIT_OK


def _cmd_jj(args) -> int:
    cfg = _merged(
        args,
        {
            "x": 1.01,
            "T": 0.003,
            "q_grid": "3,10/3,4,5,6",
            "simulate": False,
            "L": 12,
            "runs": 300,
            "seed": 1,
            "out": "jj.csv",
            "workers": None,
        },
    )
    qs = _parse_fraction_list(cfg["q_grid"])
    scan = ex.jj_coherence_scan(float(cfg["x"]), float(cfg["T"]), qs)
    if cfg["simulate"]:
        _progress("[jj] running simulation cross-checks on simulable rows")
        scan = ex.jj_simulation_cross_check(
            scan, L=int(cfg["L"]), n_runs=int(cfg["runs"]), seed=int(cfg["seed"]),
            workers=cfg["workers"],
        )
    ex.write_jj_csv(cfg["out"], scan, config=_public_config(cfg))
    _emit(
        {
            "command": "jj",
            "x": float(cfg["x"]),
            "T": float(cfg["T"]),
            "best_q": scan.best_q,
            "coherence": {ex._fmt(r.q): (r.coherence if math.isfinite(r.coherence) else "inf") for r in scan.rows},
            "out": str(cfg["out"]),
        }
    )
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="toricmem",
        description="Toric-code memories on periodic lattices: thresholds, lifetimes, geometry scans.",
    )
    ap.add_argument("--version", action="version", version=f"toricmem {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON config file (flags override it)")
        p.add_argument("--seed", type=int)
        p.add_argument("--workers", type=int)
        p.add_argument("--out")

    p = sub.add_parser("lattice", help="emit a lattice file")
    p.add_argument("--family")
    p.add_argument("--L", type=int)
    p.add_argument("--n", type=int, help="sub-edge count for the subedge family")
    p.add_argument("--dual", action="store_true", default=None)
    common(p)

    p = sub.add_parser("threshold", help="estimate an error-tolerance threshold")
    p.add_argument("--family")
    p.add_argument("--sector", choices=("primal", "dual"))
    p.add_argument("--sizes")
    p.add_argument("--p-grid", dest="p_grid")
    p.add_argument("--runs", type=int)
    p.add_argument("--sparsifier", choices=("knn", "delaunay", "complete"))
    p.add_argument("--knn-k", dest="knn_k", type=int)
    common(p)

    p = sub.add_parser("decay", help="ensemble decay of the logical observable")
    p.add_argument("--family")
    p.add_argument("--sector", choices=("primal", "dual"))
    p.add_argument("--sizes")
    p.add_argument("--T", dest="T")
    p.add_argument("--t-max", dest="t_max", type=float)
    p.add_argument("--points", type=int)
    p.add_argument("--runs", type=int)
    p.add_argument(
        "--dump-trajectories",
        dest="dump_trajectories",
        help="also write a per-run run_id,t,n_defects,logical_ok CSV (first size)",
    )
    common(p)

    p = sub.add_parser("lifetime", help="memory lifetime from the decay crossing")
    p.add_argument("--family")
    p.add_argument("--sector", choices=("primal", "dual"))
    p.add_argument("--L", type=int)
    p.add_argument("--T", dest="T", help="T/J value or comma list")
    p.add_argument("--runs", type=int)
    common(p)

    p = sub.add_parser("fit", help="fit the degree law to (q, p_c) points")
    p.add_argument("--points", help="CSV with q,p_c[,p_c_err]; defaults to packaged data")
    common(p)

    p = sub.add_parser("jj", help="Josephson-junction coherence scan over degrees")
    p.add_argument("--x", type=float)
    p.add_argument("--T", dest="T", type=float)
    p.add_argument("--q-grid", dest="q_grid")
    p.add_argument("--simulate", action="store_true", default=None)
    p.add_argument("--L", type=int)
    p.add_argument("--runs", type=int)
    common(p)
    return ap


_DISPATCH = {
    "lattice": _cmd_lattice,
    "threshold": _cmd_threshold,
    "decay": _cmd_decay,
    "lifetime": _cmd_lifetime,
    "fit": _cmd_fit,
    "jj": _cmd_jj,
}


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as err:
        return int(err.code or 0)
    try:
        return _DISPATCH[args.command](args)
    except (ConfigError, lt.LatticeError, ex.ExperimentError, ValueError) as err:
        if isinstance(err, ex.NoCrossingError):
            print(f"error: {err}", file=sys.stderr)
            return EXIT_NO_CROSSING
        print(f"error: {err}", file=sys.stderr)
        return EXIT_BAD_CONFIG
    except Exception as err:  # pragma: no cover - defensive
        print(f"internal error: {err}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
