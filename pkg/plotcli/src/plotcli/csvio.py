"""CSV reading and schema validation against the toricmem contracts."""

from __future__ import annotations

import json
from dataclasses import dataclass, field


class SchemaError(ValueError):
    """Input file does not match the expected column contract."""


SCHEMAS = {
    "decay": ["family", "sector", "L", "T_over_J", "t", "mean_logical", "stderr", "n_runs"],
    "threshold": ["family", "sector", "L", "p", "n_success", "n_total", "seed"],
    "lifetime": ["family", "sector", "L", "T_over_J", "tau", "tau_err", "criterion"],
    "fit": ["q", "p_c", "p_c_err", "mu", "nu", "residual"],
    "jj": [
        "x", "T", "q", "q_bar", "Jv_over_Ec", "Jf_over_Ec", "tau_p", "tau_d",
        "coherence", "simulated_flag",
    ],
}


@dataclass
class Table:
    """Rows of raw string cells plus metadata parsed from '#' comments."""

    path: str
    header: list[str]
    rows: list[list[str]]
    meta: dict = field(default_factory=dict)

    def column(self, name: str) -> list[str]:
        i = self.header.index(name)
        return [r[i] for r in self.rows]

    def floats(self, name: str) -> list[float]:
        out = []
        for i, cell in enumerate(self.column(name)):
            try:
                out.append(float(cell))
            except ValueError as err:
                raise SchemaError(
                    f"{self.path}: column {name!r} row {i + 1}: not a number ({cell!r})"
                ) from err
        return out


def read_table(path, schema: str) -> Table:
    expected = SCHEMAS[schema]
    header = None
    rows: list[list[str]] = []
    meta: dict = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line.strip():
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if body.startswith("config:"):
                    try:
                        meta.update(json.loads(body[len("config:"):].strip()))
                    except json.JSONDecodeError:
                        pass
                continue
            cells = line.split(",")
            if header is None:
                header = [c.strip() for c in cells]
                continue
            rows.append(cells)
    if header is None:
        raise SchemaError(f"{path}: no header row found")
    if header != expected:
        for got, want in zip(header, expected):
            if got != want:
                raise SchemaError(
                    f"{path}: expected column {want!r}, found {got!r} (schema: {schema})"
                )
        missing = expected[len(header):]
        extra = header[len(expected):]
        if missing:
            raise SchemaError(f"{path}: missing column {missing[0]!r} (schema: {schema})")
        raise SchemaError(f"{path}: unexpected column {extra[0]!r} (schema: {schema})")
    if not rows:
        raise SchemaError(f"{path}: no data rows")
    width = len(expected)
    for i, r in enumerate(rows):
        if len(r) != width:
            raise SchemaError(f"{path}: row {i + 1} has {len(r)} cells, expected {width}")
    return Table(path=str(path), header=header, rows=rows, meta=meta)
