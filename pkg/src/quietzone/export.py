"""Artifact writers.  Every file is written to a temp name and renamed into place."""
from __future__ import annotations

import json
import math
import os
import tempfile
from pathlib import Path

import numpy as np


def fmt(value):
    """Fixed 17-significant-digit text for floats; ints pass through."""
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    value = float(value)
    if math.isnan(value):
        return "nan"
    return format(value, ".17g")


def atomic_write_bytes(path, data):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except FileNotFoundError:
            pass
        raise


def atomic_write_text(path, text):
    atomic_write_bytes(path, text.encode("utf-8"))


def csv_text(header, rows):
    lines = [",".join(header)]
    lines += [",".join(fmt(v) for v in row) for row in rows]
    return "\n".join(lines) + "\n"


def write_csv(path, header, rows):
    atomic_write_text(path, csv_text(header, rows))


def write_json(path, doc):
    atomic_write_text(path, json.dumps(doc, indent=2, sort_keys=True) + "\n")


def diverging_rgb(values):
    """Map values in [-1, 1] to blue-white-red 8-bit RGB; input is clipped first."""
    v = np.clip(np.nan_to_num(np.asarray(values, dtype=float)), -1.0, 1.0)
    pos = np.clip(v, 0, None)
    neg = np.clip(-v, 0, None)
    r = 1.0 - neg
    g = 1.0 - pos - neg
    b = 1.0 - pos
    rgb = np.stack([r, g, b], axis=-1)
    return np.rint(255 * rgb).astype(np.uint8)


def ppm_bytes(values):
    """Binary PPM (P6) for a (ny, nx) array whose row 0 is the bottom edge (y = ymin)."""
    rgb = diverging_rgb(values)[::-1]
    ny, nx = rgb.shape[:2]
    return b"P6\n%d %d\n255\n" % (nx, ny) + rgb.tobytes()


def write_ppm(path, values):
    atomic_write_bytes(path, ppm_bytes(values))


def read_ppm(path):
    """(ny, nx, 3) uint8 array from a P6 file written by :func:`write_ppm` (top row first)."""
    data = Path(path).read_bytes()
    parts = data.split(b"\n", 3)
    if parts[0] != b"P6":
        raise ValueError(f"{path} is not a binary PPM")
    nx, ny = (int(v) for v in parts[1].split())
    return np.frombuffer(parts[3], dtype=np.uint8).reshape(ny, nx, 3)
