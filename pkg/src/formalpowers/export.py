"""CSV export with exact round-trip.

Floats are written with 17 significant digits, which reproduces every double
bit for bit on reload. Rows are emitted in a fixed order so identical inputs
give byte-identical files.
"""

from __future__ import annotations

import csv
import hashlib
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

import numpy as np

COEFF_LABELS = ("1", "i")


def fmt(x: float) -> str:
    return "%.17g" % float(x)


def config_hash(doc: Mapping[str, Any], length: int = 12) -> str:
    """Short SHA-256 of the canonical JSON of ``doc``."""
    text = json.dumps(doc, sort_keys=True, separators=(",", ":"), allow_nan=False)
    return hashlib.sha256(text.encode()).hexdigest()[:length]


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) if isinstance(v, (float, np.floating)) else v for v in row])
    return path


def read_csv(path: Path) -> tuple[list[str], list[list[str]]]:
    with Path(path).open(newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


@dataclass(frozen=True)
class PowerValues:
    """Formal-power samples ``values[n, c, t]`` at ``points[t]``, ``c`` indexing coefficient 1 or i."""

    points: np.ndarray
    values: np.ndarray
    refinement: np.ndarray | None = None
    with_path_id: bool = False  # transverse tables: one integration path per target, numbered by target


def write_powers(path: Path, table: PowerValues) -> Path:
    n_max = table.values.shape[0] - 1
    has_ref = table.refinement is not None
    header = ["n", "coeff", "x", "y", "re", "im"]
    header += ["path_id"] if table.with_path_id else []
    header += ["refinement"] if has_ref else []

    def rows():
        for n in range(n_max + 1):
            for c, label in enumerate(COEFF_LABELS):
                for t, z in enumerate(table.points):
                    v = table.values[n, c, t]
                    row = [n, label, float(z.real), float(z.imag), float(v.real), float(v.imag)]
                    if table.with_path_id:
                        row.append(t)
                    if has_ref:
                        row.append(float(table.refinement[n, c, t]))
                    yield row

    return write_csv(path, header, rows())


def read_powers(path: Path) -> PowerValues:
    header, rows = read_csv(path)
    has_ref = "refinement" in header
    ref_col = header.index("refinement") if has_ref else None
    n_max = max(int(r[0]) for r in rows)
    npts = len(rows) // (2 * (n_max + 1))
    values = np.empty((n_max + 1, 2, npts), dtype=complex)
    ref = np.empty((n_max + 1, 2, npts)) if has_ref else None
    points = np.empty(npts, dtype=complex)
    for k, r in enumerate(rows):
        n, c, t = int(r[0]), COEFF_LABELS.index(r[1]), k % npts
        points[t] = complex(float(r[2]), float(r[3]))
        values[n, c, t] = complex(float(r[4]), float(r[5]))
        if has_ref:
            ref[n, c, t] = float(r[ref_col])
    return PowerValues(points, values, ref, "path_id" in header)


def write_xseq(path: Path, grid: np.ndarray, X: np.ndarray, Xt: np.ndarray) -> Path:
    rows = ([n, float(x), float(X[n, j]), float(Xt[n, j])] for n in range(X.shape[0]) for j, x in enumerate(grid))
    return write_csv(path, ["n", "x", "X", "Xt"], rows)


def read_xseq(path: Path) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    _, rows = read_csv(path)
    n_max = max(int(r[0]) for r in rows)
    m = len(rows) // (n_max + 1)
    arr = np.array([[float(v) for v in r[1:]] for r in rows]).reshape(n_max + 1, m, 3)
    return arr[0, :, 0], arr[:, :, 1], arr[:, :, 2]


def write_field_map(path: Path, points: np.ndarray, u: np.ndarray, field: np.ndarray, names: Sequence[str]) -> Path:
    rows = ([float(z.real), float(z.imag), float(u[k]), float(field[0, k]), float(field[1, k])]
            for k, z in enumerate(points))
    return write_csv(path, ["x", "y", "u", *names], rows)


def read_field_map(path: Path) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    _, rows = read_csv(path)
    arr = np.array([[float(v) for v in r] for r in rows])
    return arr[:, 0] + 1j * arr[:, 1], arr[:, 2], arr[:, 3:].T


def write_json(path: Path, doc: Any) -> Path:
    path = Path(path)
    path.write_text(json.dumps(doc, indent=2, sort_keys=True, allow_nan=False) + "\n", encoding="utf-8")
    return path
