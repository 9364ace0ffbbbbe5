"""CSV / JSON emission, constant fitting and field snapshots.

Floats are written with ``repr`` so that identical runs give identical bytes.
"""
from __future__ import annotations

import csv
import io
import json
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .grids import ChebGrid, FDGrid
from .warped import WarpedField, WarpedMetric

__all__ = ["SCHEMA", "FitResult", "fit_constant", "format_value", "csv_text", "write_csv",
           "write_json", "field_to_json", "field_from_json"]

SCHEMA = 1
log = logging.getLogger(__name__)


@dataclass(frozen=True)
class FitResult:
    exponent: float | None
    constant: float | None
    max_ratio: float
    rows: int


def fit_constant(rows: Sequence[dict], x_col: str, y_col: str,
                 exponent: float | None = None) -> FitResult:
    """Least squares of log y on log x, plus the bound-respecting constant.

    ``max_ratio`` is max y / x^e with e = ``exponent`` if given, else the
    fitted slope.  A fit over less than a factor 4 in x is skipped.
    """
    if len(rows) < 8:
        raise ValueError("need at least 8 rows to fit")
    x = np.array([float(r[x_col]) for r in rows])
    y = np.array([float(r[y_col]) for r in rows])
    if np.any(x <= 0) or np.any(y <= 0):
        raise ValueError("fit needs positive values")
    slope = const = None
    if x.max() / x.min() < 4.0:
        log.warning("x range below a factor 4; fit skipped")
    else:
        A = np.stack([np.log(x), np.ones_like(x)], axis=1)
        (slope, logc), *_ = np.linalg.lstsq(A, np.log(y), rcond=None)
        slope, const = float(slope), float(math.exp(logc))
    e = exponent if exponent is not None else slope
    max_ratio = float(np.max(y / x ** e)) if e is not None else float("nan")
    return FitResult(slope, const, max_ratio, len(rows))


def format_value(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (tuple, list)):
        return ";".join(format_value(a) for a in v)
    return "" if v is None else str(v)


def csv_text(rows: Iterable[dict], columns: Sequence[str]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([format_value(r.get(c)) for c in columns])
    return buf.getvalue()


def write_csv(path: Path, rows: Iterable[dict], columns: Sequence[str]) -> None:
    Path(path).write_text(csv_text(rows, columns))


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(a) for k, a in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(a) for a in v]
    if isinstance(v, (np.bool_,)):
        return bool(v)
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, (float, np.floating)):
        f = float(v)
        return f if math.isfinite(f) else repr(f)
    if isinstance(v, np.ndarray):
        return _jsonable(v.tolist())
    return v


def write_json(path: Path, obj: dict) -> None:
    Path(path).write_text(json.dumps(_jsonable(obj), sort_keys=True, indent=2) + "\n")


def field_to_json(h: WarpedField) -> dict:
    g = h.grid
    if isinstance(g, ChebGrid):
        grid = {"kind": "cheb", "r0": float(g.r[0]), "r1": float(g.r[-1]), "N": g.r.size - 1,
                "Lt": g.Lt}
    else:
        grid = {"kind": "fd", "r0": float(g.r[0]), "r1": float(g.r[-1]), "dr": float(g.hr),
                "Lt": g.Lt, "dt": float(g.ht) if g.t.size > 1 else None,
                "wavenumber": g.wavenumber}
    return {"schema": SCHEMA, "type": "metric" if isinstance(h, WarpedMetric) else "field",
            "n": h.n, "grid": grid,
            **{k: np.real(getattr(h, k)).tolist() for k in ("p", "q", "w", "c")}}


def field_from_json(d: dict) -> WarpedField:
    if d.get("schema") != SCHEMA:
        raise ValueError("unsupported snapshot schema")
    gd = d["grid"]
    if gd["kind"] == "cheb":
        grid = ChebGrid(gd["r0"], gd["r1"], gd["N"], gd["Lt"])
    else:
        grid = FDGrid(gd["r0"], gd["r1"], gd["dr"], gd["Lt"], gd["dt"], gd["wavenumber"])
    cls = WarpedMetric if d["type"] == "metric" else WarpedField
    return cls(grid, d["n"], *(np.array(d[k]) for k in ("p", "q", "w", "c")))
