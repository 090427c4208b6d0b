"""Result rows and their CSV / JSON serialization.

Numeric fields are emitted as full-precision decimal strings (see
scalars.to_decimal_string), so files round-trip at the configured digit
count.  Rows are always sorted by (omega, level, frame, variant) before
writing; with that order fixed, re-running an identical configuration
reproduces every column byte for byte except wall_time_s, which is
informational.
"""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass

from .levels import LevelResult
from .scalars import PrecisionContext, to_decimal_string

SCHEMA_VERSION = 1

CSV_COLUMNS = [
    "schema_version", "omega", "n", "frame", "variant", "E", "Im_E",
    "lambda", "residual", "basis_blocks", "digits", "sigma", "y_or_theta",
    "wall_time_s", "error",
]


@dataclass
class ResultRow:
    omega: str
    n: int
    frame: str
    variant: str
    E: str = ""
    Im_E: str = ""
    lam: str = ""
    residual: str = ""
    basis_blocks: int = 0
    digits: int = 0
    sigma: str = ""
    y_or_theta: str = ""
    wall_time_s: float = 0.0
    error: str = ""
    schema_version: int = SCHEMA_VERSION

    def as_record(self) -> dict:
        rec = asdict(self)
        rec["lambda"] = rec.pop("lam")
        return {k: rec[k] for k in CSV_COLUMNS}


def _real_string(x, digits):
    s = to_decimal_string(x, digits)
    return s.split(" + i ")[0].split(" - i ")[0]


def row_from_level(result: LevelResult, ctx: PrecisionContext, omega: str,
                   variant: str, wall_time_s: float = 0.0) -> ResultRow:
    m = ctx.mp
    e = m.mpmathify(result.energy)
    lam = m.mpmathify(result.lam)
    residual = result.trace[-1][2] if result.trace else m.mpf(0)
    return ResultRow(
        omega=str(omega), n=result.n, frame=result.frame.kind,
        variant=variant,
        E=_real_string(m.re(e), ctx.digits),
        Im_E=_real_string(m.im(e), ctx.digits) if m.im(e) != 0 else "0",
        lam=to_decimal_string(lam, ctx.digits),
        residual=m.nstr(residual, 6),
        basis_blocks=result.basis_blocks, digits=ctx.digits,
        sigma=str(result.sigma), y_or_theta=str(result.y_or_theta),
        wall_time_s=round(wall_time_s, 3))


def error_row(omega: str, n: int, frame: str, variant: str, exc: Exception,
              digits: int, wall_time_s: float = 0.0) -> ResultRow:
    return ResultRow(omega=str(omega), n=n, frame=frame, variant=variant,
                     digits=digits, wall_time_s=round(wall_time_s, 3),
                     error=f"{type(exc).__name__}: {exc}")


def sort_rows(rows):
    frame_order = {"real": 0, "translated": 1, "dilated": 2}
    return sorted(rows, key=lambda r: (float(r.omega), r.n,
                                       frame_order.get(r.frame, 9),
                                       r.variant))


def write_csv(rows, path):
    rows = sort_rows(rows)
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS,
                                quoting=csv.QUOTE_MINIMAL)
        writer.writeheader()
        for row in rows:
            writer.writerow(row.as_record())


def write_json(rows, path):
    rows = sort_rows(rows)
    with open(path, "w") as fh:
        json.dump([row.as_record() for row in rows], fh, indent=2)
        fh.write("\n")


def write_rows(rows, path, fmt: str):
    if fmt == "csv":
        write_csv(rows, path)
    elif fmt == "json":
        write_json(rows, path)
    else:
        raise ValueError(f"unknown output format {fmt!r}")
