"""On-disk formats: SPFD field dumps, CSV tables, PGM cell images, JSON reports.

SPFD layout: 16-byte header (magic "SPFD", u32 dimension, u32 per-axis
counts; 1-D pads the second count slot with 1), then 64-bit little-endian
floats in row-major order over the full window, exterior = 0.0.
"""

from __future__ import annotations

import csv
import hashlib
import json
import struct
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .operators import Field

_MAGIC = b"SPFD"


def write_field(field: Field, path) -> None:
    full = field.to_full()
    counts = full.shape
    if len(counts) > 2:
        raise ConfigError("SPFD dumps support 1-D and 2-D grids")
    padded = tuple(counts) + (1,) * (2 - len(counts))
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<III", len(counts), *padded))
        fh.write(full.astype("<f8").tobytes(order="C"))


def read_field(path):
    """Returns (dimension, counts, full-window array)."""
    raw = Path(path).read_bytes()
    if raw[:4] != _MAGIC:
        raise ConfigError(f"{path}: not an SPFD dump")
    dim, n1, n2 = struct.unpack("<III", raw[4:16])
    counts = (n1, n2)[:dim]
    data = np.frombuffer(raw[16:], dtype="<f8")
    expected = int(np.prod(counts))
    if data.size != expected:
        raise ConfigError(f"{path}: payload has {data.size} values, expected {expected}")
    return dim, counts, data.reshape(counts)


def write_eigenvalues_csv(path, lambdas, residuals=None) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["index", "lambda", "residual"])
        for j, lam in enumerate(lambdas):
            res = residuals[j] if residuals is not None else ""
            writer.writerow([j, repr(float(lam)), res if res == "" else repr(float(res))])


def write_sweep_csv(path, sweep) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["r", "lambda", "monotone_ok"])
        for r, lam, ok in sweep.rows():
            writer.writerow([repr(float(r)), repr(float(lam)), int(ok)])


def write_rows_csv(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(x) if isinstance(x, float) else x for x in row])


def write_pgm(path, labels: np.ndarray) -> None:
    """Cell masks as a P5 image: 0 = exterior/released, i = 1-based cell index."""
    if labels.ndim == 1:
        labels = labels[None, :]
    if labels.ndim != 2:
        raise ConfigError("PGM export supports 1-D and 2-D grids")
    pix = (labels + 1).clip(0, 255).astype(np.uint8)
    with open(path, "wb") as fh:
        fh.write(b"P5\n%d %d\n255\n" % (pix.shape[1], pix.shape[0]))
        fh.write(pix.tobytes(order="C"))


def _jsonable(obj):
    """Strict-JSON representation: non-finite floats become strings."""
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        return f if np.isfinite(f) else repr(f)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    return obj


def canonical_json(obj) -> str:
    return json.dumps(_jsonable(obj), sort_keys=True, indent=2, allow_nan=False)


def content_hash(obj) -> str:
    blob = json.dumps(_jsonable(obj), sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(blob.encode()).hexdigest()


def write_report(path, payload: dict) -> None:
    Path(path).write_text(canonical_json(payload) + "\n")
