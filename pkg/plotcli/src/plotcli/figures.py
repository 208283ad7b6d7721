"""Figure builders: one function per figure kind.

Legend labels are assembled from the raw CSV cell strings, so the numbers a
reader sees are exactly the numbers in the file.
"""

from __future__ import annotations

from dataclasses import dataclass

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

from .csvio import SchemaError, Table, read_table  # noqa: E402

plt.rcParams.update(
    {
        "svg.hashsalt": "plotcli",  # deterministic SVG ids
        "figure.figsize": (6.4, 4.4),
        "axes.grid": True,
        "grid.alpha": 0.25,
    }
)

KINDS = ("decay", "threshold_vs_degree", "lifetime_compare", "jj_coherence")


@dataclass(frozen=True)
class FigureSpec:
    kind: str
    inputs: tuple[str, ...]
    output: str  # base path; .svg and .png are appended
    x_range: tuple[float, float] | None = None
    y_range: tuple[float, float] | None = None
    title: str | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise SchemaError(f"unknown figure kind {self.kind!r} (have {', '.join(KINDS)})")
        if not self.inputs:
            raise SchemaError("no input CSVs given")


def _groups(table: Table, keys: list[str]):
    """Rows grouped by raw values of the key columns, in file order."""
    idx = [table.header.index(k) for k in keys]
    seen: dict[tuple, list[int]] = {}
    for rn, row in enumerate(table.rows):
        seen.setdefault(tuple(row[i] for i in idx), []).append(rn)
    return seen


def _finish(fig, ax, spec: FigureSpec):
    if spec.x_range:
        ax.set_xlim(*spec.x_range)
    if spec.y_range:
        ax.set_ylim(*spec.y_range)
    if spec.title:
        ax.set_title(spec.title)
    fig.tight_layout()


def draw_decay(spec: FigureSpec):
    fig, ax = plt.subplots()
    for path in spec.inputs:
        t = read_table(path, "decay")
        for key, rows in _groups(t, ["family", "sector", "L", "T_over_J"]).items():
            fam, sec, L_raw, T_raw = key
            ts = [float(t.rows[r][t.header.index("t")]) for r in rows]
            mean = [float(t.rows[r][t.header.index("mean_logical")]) for r in rows]
            err = [float(t.rows[r][t.header.index("stderr")]) for r in rows]
            label = f"{fam}/{sec} L={L_raw} T/J={T_raw}"
            (line,) = ax.plot(ts, mean, marker="o", markersize=3, label=label)
            lo = [m - e for m, e in zip(mean, err)]
            hi = [m + e for m, e in zip(mean, err)]
            ax.fill_between(ts, lo, hi, alpha=0.2, color=line.get_color(), linewidth=0)
    ax.set_xlabel("time")
    ax.set_ylabel("mean logical value")
    ax.legend(fontsize=8)
    _finish(fig, ax, spec)
    return fig


def draw_threshold_vs_degree(spec: FigureSpec):
    fig, ax = plt.subplots()
    for path in spec.inputs:
        t = read_table(path, "fit")
        qs = t.floats("q")
        pcs = t.floats("p_c")
        errs = [e if e == e else 0.0 for e in t.floats("p_c_err")]  # NaN -> 0
        mu_raw = t.rows[0][t.header.index("mu")]
        nu_raw = t.rows[0][t.header.index("nu")]
        ax.errorbar(qs, pcs, yerr=errs, fmt="o", capsize=3, label="measured p_c")
        mu, nu = float(mu_raw), float(nu_raw)
        lo, hi = min(qs), max(qs)
        pad = 0.15 * (hi - lo if hi > lo else 1.0)
        xs = [lo - pad + i * (hi - lo + 2 * pad) / 200 for i in range(201)]
        ys = [(mu * x + nu) / (x - 2.0) for x in xs]
        ax.plot(xs, ys, "--", label=f"fit: mu={mu_raw}, nu={nu_raw}")
    ax.set_xlabel("average degree q")
    ax.set_ylabel("error-tolerance threshold p_c")
    ax.legend(fontsize=8)
    _finish(fig, ax, spec)
    return fig


def draw_lifetime_compare(spec: FigureSpec):
    fig, ax = plt.subplots()
    for path in spec.inputs:
        t = read_table(path, "lifetime")
        source = str(t.meta.get("source", path))
        for key, rows in _groups(t, ["family", "sector"]).items():
            fam, sec = key
            Ts = [float(t.rows[r][t.header.index("T_over_J")]) for r in rows]
            taus = [float(t.rows[r][t.header.index("tau")]) for r in rows]
            errs = []
            for r in rows:
                e = float(t.rows[r][t.header.index("tau_err")])
                errs.append(e if e == e else 0.0)
            ax.errorbar(
                Ts, taus, yerr=errs, marker="o", capsize=3,
                label=f"{fam}/{sec} [{source}]",
            )
    ax.set_xlabel("T/J")
    ax.set_ylabel("memory lifetime tau")
    ax.legend(fontsize=7)
    _finish(fig, ax, spec)
    return fig


def draw_jj_coherence(spec: FigureSpec):
    fig, ax = plt.subplots()
    for path in spec.inputs:
        t = read_table(path, "jj")
        sims_meta = t.meta.get("simulated_lifetimes", {})
        for (x_raw, T_raw), rows in _groups(t, ["x", "T"]).items():
            qs = [float(t.rows[r][t.header.index("q")]) for r in rows]
            coh = [float(t.rows[r][t.header.index("coherence")]) for r in rows]
            label = f"x={x_raw} T={T_raw}"
            (line,) = ax.plot(qs, coh, marker=".", label=label)
            sim_x, sim_y = [], []
            for r in rows:
                if t.rows[r][t.header.index("simulated_flag")].strip() == "1":
                    q_raw = t.rows[r][t.header.index("q")]
                    entry = sims_meta.get(q_raw, {})
                    vals = [
                        v
                        for v in (entry.get("tau_sim_primal"), entry.get("tau_sim_dual"))
                        if v is not None
                    ]
                    y = min(vals) if vals else float(t.rows[r][t.header.index("coherence")])
                    sim_x.append(float(q_raw))
                    sim_y.append(y)
            if sim_x:
                ax.plot(
                    sim_x, sim_y, "o", markerfacecolor="none", markersize=9,
                    color=line.get_color(), label=f"simulated (T={T_raw})",
                )
    ax.set_yscale("log")
    ax.set_xlabel("average degree q")
    ax.set_ylabel("coherence time min(tau_p, tau_d)")
    ax.legend(fontsize=8)
    _finish(fig, ax, spec)
    return fig


_DRAWERS = {
    "decay": draw_decay,
    "threshold_vs_degree": draw_threshold_vs_degree,
    "lifetime_compare": draw_lifetime_compare,
    "jj_coherence": draw_jj_coherence,
}


def render(spec: FigureSpec) -> tuple[str, str]:
    """Draw the figure and write deterministic SVG and PNG files."""
    fig = _DRAWERS[spec.kind](spec)
    base = spec.output
    for suffix in (".svg", ".png"):
        if base.endswith(suffix):
            base = base[: -len(suffix)]
    svg_path, png_path = base + ".svg", base + ".png"
    try:
        fig.savefig(svg_path, format="svg", metadata={"Date": None})
        fig.savefig(png_path, format="png", dpi=130, metadata={"Software": None})
    finally:
        plt.close(fig)
    return svg_path, png_path
