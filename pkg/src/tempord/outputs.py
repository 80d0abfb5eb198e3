"""Serialization of matrices, causal vectors, reports and heatmaps."""

from __future__ import annotations

import csv
import hashlib
import json
from pathlib import Path
from typing import Union

import numpy as np

from tempord.types import CausalVector, Method, StabilityReport, TemporalOrderMatrix

PathLike = Union[str, Path]

NA = "NA"
NAVY = np.array([0.0, 0.0, 128.0])
RED = np.array([255.0, 0.0, 0.0])
BLACK = np.array([0, 0, 0], dtype=np.uint8)


def fmt(value: float) -> str:
    s = format(float(value), ".9g")
    return "0" if s == "-0" else s


def write_matrix_csv(matrix: TemporalOrderMatrix, path: PathLike) -> Path:
    """Header ``window_start_s`` then one column per shift (ms); masked cells as ``NA``."""
    path = Path(path)
    shifts_ms = matrix.shifts * (1000.0 / matrix.sample_rate_hz)
    defined = matrix.defined
    data = matrix.scores.data
    lines = [",".join(["window_start_s", *(fmt(s) for s in shifts_ms)])]
    for w, t in enumerate(matrix.window_start_times_s):
        cells = (fmt(v) if ok else NA for v, ok in zip(data[w], defined[w]))
        lines.append(",".join([fmt(t), *cells]))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def read_matrix_csv(path: PathLike) -> tuple[np.ndarray, np.ndarray, np.ma.MaskedArray]:
    """Inverse of :func:`write_matrix_csv`: (window starts s, shifts ms, scores)."""
    with Path(path).open(newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    shifts_ms = np.array([float(v) for v in rows[0][1:]])
    starts = np.array([float(r[0]) for r in rows[1:]])
    cells = [r[1:] for r in rows[1:]]
    mask = np.array([[c == NA for c in r] for r in cells], dtype=bool).reshape(len(cells), shifts_ms.size)
    values = np.array([[0.0 if c == NA else float(c) for c in r] for r in cells]).reshape(mask.shape)
    return starts, shifts_ms, np.ma.array(values, mask=mask)


def write_cv_csv(cv: CausalVector, path: PathLike) -> Path:
    path = Path(path)
    ms = cv.entries_ms
    lines = ["window_start_s,cv_ms"]
    for t, v, ok in zip(cv.window_start_times_s, ms.data, cv.defined):
        lines.append(f"{fmt(t)},{fmt(v) if ok else NA}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def write_json(payload: dict, path: PathLike) -> Path:
    path = Path(path)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def stability_payload(report: StabilityReport, **extra) -> dict:
    payload = report.to_dict()
    payload.update(extra)
    return payload


def heatmap_rgb(matrix: TemporalOrderMatrix) -> np.ndarray:
    """RGB image (height = shifts, largest shift on top; width = windows).

    Best scores are navy and worst are red: adjusted R-squared maps 1 to navy
    and 0 (or below) to red; distances map the smallest defined value in the
    matrix to navy and the largest to red. Undefined cells are black.
    """
    scores = matrix.scores.data
    defined = matrix.defined
    if matrix.method is Method.LM:
        goodness = np.clip(scores, 0.0, 1.0)
    else:
        vals = scores[defined]
        if vals.size and vals.max() > vals.min():
            goodness = (vals.max() - scores) / (vals.max() - vals.min())
        else:
            goodness = np.ones_like(scores)
        goodness = np.clip(goodness, 0.0, 1.0)
    rgb = RED + goodness[..., None] * (NAVY - RED)
    img = np.floor(rgb + 0.5).astype(np.uint8)
    img[~defined] = BLACK
    # (window, shift, 3) -> (shift, window, 3), largest shift first
    return np.ascontiguousarray(img.transpose(1, 0, 2)[::-1])


def write_heatmap(matrix: TemporalOrderMatrix, path: PathLike) -> Path:
    """Binary PPM (P6), one pixel per cell."""
    path = Path(path)
    img = heatmap_rgb(matrix)
    height, width = img.shape[:2]
    path.write_bytes(f"P6\n{width} {height}\n255\n".encode("ascii") + img.tobytes())
    return path


def read_ppm(path: PathLike) -> np.ndarray:
    raw = Path(path).read_bytes()
    magic, dims, maxval, body = raw.split(b"\n", 3)
    if magic != b"P6" or maxval != b"255":
        raise ValueError("not an 8-bit binary PPM")
    width, height = (int(v) for v in dims.split())
    return np.frombuffer(body, dtype=np.uint8).reshape(height, width, 3)


def sha256_file(path: PathLike) -> str:
    h = hashlib.sha256()
    with Path(path).open("rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()
