"""File outputs: atom / CDF / sample / study CSVs, JSON-lines metadata and
binary PGM density images.

Floats are written with 17 significant digits so doubles round-trip
exactly.  Every file is written to a temporary sibling and renamed into
place.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import os
import re
import tempfile
from pathlib import Path
from typing import Iterable

import numpy as np

from .errors import DimensionMismatch
from .measure import DiscreteMeasure, canonicalize, discretize_to_grid

log = logging.getLogger(__name__)


def fmt(x: float) -> str:
    return format(float(x), ".17g")


def atomic_write(path, data: bytes | str) -> None:
    path = Path(path)
    raw = data.encode() if isinstance(data, str) else data
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent or ".")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(raw)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _csv_text(header: list[str], rows: Iterable[Iterable[str]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def _coord_header(dim: int) -> list[str]:
    return ["x", "y"][:dim]


def atoms_csv(m: DiscreteMeasure) -> str:
    rows = ([fmt(c) for c in a] + [fmt(w)] for a, w in zip(m.atoms, m.weights))
    return _csv_text(_coord_header(m.dim) + ["weight"], rows)


def write_atoms_csv(m: DiscreteMeasure, path) -> None:
    atomic_write(path, atoms_csv(m))


def read_atoms_csv(path) -> DiscreteMeasure:
    """Load an atom file written by :func:`write_atoms_csv`, weights verbatim."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header[-1] != "weight" or header[:-1] not in (["x"], ["x", "y"]):
            raise ValueError(f"unexpected atom header {header}")
        rows = [[float(v) for v in row] for row in reader if row]
    arr = np.array(rows, dtype=float).reshape(-1, len(header))
    return DiscreteMeasure(arr[:, :-1], arr[:, -1], dim=len(header) - 1, normalize=False)


def cdf_rows(m: DiscreteMeasure) -> list[tuple[float, float]]:
    if m.dim != 1:
        raise DimensionMismatch("a CDF table needs a measure on the line")
    c = canonicalize(m)
    cum = np.cumsum(c.weights)
    cum = cum / cum[-1]
    return list(zip(c.atoms[:, 0].tolist(), cum.tolist()))


def export_cdf_csv(m: DiscreteMeasure, path) -> None:
    """``x,cdf`` rows, one per distinct atom position in increasing order."""
    atomic_write(path, _csv_text(["x", "cdf"], ([fmt(x), fmt(f)] for x, f in cdf_rows(m))))


def samples_csv(points: np.ndarray) -> str:
    return _csv_text(_coord_header(points.shape[1]), ([fmt(c) for c in row] for row in points))


def write_samples_csv(points: np.ndarray, path) -> None:
    atomic_write(path, samples_csv(points))


def write_study_csv(rows: Iterable[tuple[float, float]], path, header=("p", "mass")) -> None:
    atomic_write(path, _csv_text(list(header), ([fmt(a), fmt(b)] for a, b in rows)))


def jsonl(records: Iterable[dict]) -> str:
    return "".join(json.dumps(r, sort_keys=True) + "\n" for r in records)


def write_jsonl(records: Iterable[dict], path) -> None:
    atomic_write(path, jsonl(records))


def density_pixels(m: DiscreteMeasure, box, resolution, scale: str = "linear") -> np.ndarray:
    """Grey levels ``floor(255 * s(cell) / s(max cell))`` with the top row at max y."""
    if m.dim != 2:
        raise DimensionMismatch("density rendering needs a measure in the plane")
    if scale not in ("linear", "log"):
        raise ValueError(f"unknown scale {scale!r}")
    grid = discretize_to_grid(m, box, resolution)
    s = np.log1p(grid.cells) if scale == "log" else np.asarray(grid.cells, dtype=float)
    top = s.max()
    if top <= 0:
        log.warning("no mass inside the render box (escaped mass %.17g); writing a blank image", grid.escaped_mass)
        img = np.zeros_like(s, dtype=np.uint8)
    else:
        img = np.floor(255.0 * s / top).astype(np.uint8)
    # cells are indexed (x, y); image rows run from max y down
    return np.ascontiguousarray(img.T[::-1])


def pgm_bytes(pixels: np.ndarray) -> bytes:
    h, w = pixels.shape
    return f"P5\n{w} {h}\n255\n".encode("ascii") + pixels.astype(np.uint8).tobytes()


def render_density(m: DiscreteMeasure, box, resolution, scale: str = "linear", path=None) -> bytes:
    data = pgm_bytes(density_pixels(m, box, resolution, scale))
    if path is not None:
        atomic_write(path, data)
    return data


def read_pgm(path_or_bytes) -> np.ndarray:
    data = path_or_bytes if isinstance(path_or_bytes, bytes) else Path(path_or_bytes).read_bytes()
    head = re.match(rb"P5\s+(\d+)\s+(\d+)\s+(\d+)\s", data)
    if head is None:
        raise ValueError("not a binary PGM")
    w, h, maxval = (int(g) for g in head.groups())
    if maxval != 255:
        raise ValueError("only 8-bit PGM is supported")
    return np.frombuffer(data[head.end() : head.end() + w * h], dtype=np.uint8).reshape(h, w)


def padded_bounds(m: DiscreteMeasure, rel: float = 0.0) -> list[tuple[float, float]]:
    """Bounding box of the atoms; degenerate axes are widened to unit length."""
    lo, hi = m.bounds()
    out = []
    for a, b in zip(lo.tolist(), hi.tolist()):
        if b <= a:
            a, b = a - 0.5, b + 0.5
        pad = rel * (b - a)
        out.append((a - pad, b + pad))
    return out
