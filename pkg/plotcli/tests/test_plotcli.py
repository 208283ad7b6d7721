from pathlib import Path

import pytest

from plotcli.csvio import read_table
from plotcli.figures import FigureSpec, render
from plotcli.main import main

DATA = Path(__file__).parent / "data"

KIND_INPUTS = {
    "decay": [DATA / "decay.csv"],
    "threshold_vs_degree": [DATA / "fit.csv"],
    "lifetime_compare": [DATA / "lifetime_sim.csv", DATA / "lifetime_formula.csv"],
    "jj_coherence": [DATA / "jj.csv"],
}


@pytest.mark.parametrize("kind", sorted(KIND_INPUTS))
def test_render_all_kinds_deterministically(kind, tmp_path):
    out = tmp_path / f"{kind}_fig"
    spec = FigureSpec(kind=kind, inputs=tuple(str(p) for p in KIND_INPUTS[kind]), output=str(out))
    svg1, png1 = render(spec)
    b_svg, b_png = Path(svg1).read_bytes(), Path(png1).read_bytes()
    svg2, png2 = render(spec)
    assert Path(svg2).read_bytes() == b_svg
    assert Path(png2).read_bytes() == b_png
    assert b_svg.startswith(b"<?xml")
    assert b_png[:8] == b"\x89PNG\r\n\x1a\n"


def _svg_text(path: Path) -> str:
    # text content of an SVG, glyph runs decoded from 'use' or text elements
    return path.read_text()


def test_decay_legend_values_match_csv(tmp_path):
    table = read_table(DATA / "decay.csv", "decay")
    raw_Ls = sorted({r[table.header.index("L")] for r in table.rows})
    out = tmp_path / "fig"
    rc = main(["decay", str(DATA / "decay.csv"), "-o", str(out)])
    assert rc == 0
    svg = _svg_text(out.with_suffix(".svg"))
    for raw in raw_Ls:
        assert f"L={raw}" in svg  # byte-for-byte the CSV cell


def test_fit_legend_values_match_csv(tmp_path):
    table = read_table(DATA / "fit.csv", "fit")
    mu_raw = table.rows[0][table.header.index("mu")]
    nu_raw = table.rows[0][table.header.index("nu")]
    out = tmp_path / "fig"
    rc = main(["threshold_vs_degree", str(DATA / "fit.csv"), "-o", str(out)])
    assert rc == 0
    svg = _svg_text(out.with_suffix(".svg"))
    assert f"mu={mu_raw}" in svg
    assert f"nu={nu_raw}" in svg


def test_jj_sim_markers_present(tmp_path):
    out = tmp_path / "fig"
    rc = main(["jj_coherence", str(DATA / "jj.csv"), "-o", str(out)])
    assert rc == 0
    svg = _svg_text(out.with_suffix(".svg"))
    assert "simulated (T=0.003)" in svg


def test_schema_mismatch_names_column(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    text = (DATA / "decay.csv").read_text().replace("mean_logical", "mean_value")
    bad.write_text(text)
    rc = main(["decay", str(bad), "-o", str(tmp_path / "f")])
    assert rc == 2
    err = capsys.readouterr().err
    assert "mean_logical" in err and "mean_value" in err


def test_empty_csv_rejected(tmp_path, capsys):
    empty = tmp_path / "empty.csv"
    lines = (DATA / "decay.csv").read_text().splitlines()
    empty.write_text("\n".join(lines[:3]) + "\n")  # comments + header only
    rc = main(["decay", str(empty), "-o", str(tmp_path / "f")])
    assert rc == 2
    assert "no data rows" in capsys.readouterr().err


def test_missing_file_exit_2(tmp_path):
    assert main(["decay", str(tmp_path / "nope.csv"), "-o", str(tmp_path / "f")]) == 2


def test_wrong_schema_for_kind(tmp_path, capsys):
    rc = main(["decay", str(DATA / "jj.csv"), "-o", str(tmp_path / "f")])
    assert rc == 2


def test_ranges_and_title(tmp_path):
    out = tmp_path / "fig"
    rc = main(
        ["decay", str(DATA / "decay.csv"), "-o", str(out),
         "--x-range", "0:10", "--y-range=-0.5:1.1", "--title", "decay check"]
    )
    assert rc == 0
    assert "decay check" in _svg_text(out.with_suffix(".svg"))
