"""Configuration files, report serialization and raster output."""

from __future__ import annotations

import csv
import io as _io
import json
import math
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

from .skew import AttractorSample, SliceCover
from .torus.partition import MarkovPartition


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class Config:
    m: int = 12
    d: int = 1
    eps: float = 0.05
    r0: float = 0.05
    seed: int = 0
    mesh: float = 0.01
    grid: int = 128
    n: int = 10

    def replace(self, **kw) -> "Config":
        vals = asdict(self)
        vals.update({k: v for k, v in kw.items() if v is not None})
        return Config(**vals)


_TYPES = {f.name: f.type for f in fields(Config)}


def _parse_value(key: str, raw: str):
    kind = _TYPES[key]
    try:
        if kind in (int, "int"):
            if not raw.lstrip("-").isdigit():
                raise ValueError
            return int(raw)
        val = float(raw)
        if not math.isfinite(val):
            raise ValueError
        return val
    except ValueError:
        raise ConfigError(f"invalid value for {key!r}: {raw!r}") from None


def parse_config(text: str) -> Config:
    """``key = value`` lines; ``#`` starts a comment; unknown keys are rejected."""
    vals = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value, got {line!r}")
        key, raw = (s.strip() for s in line.split("=", 1))
        if key not in _TYPES:
            raise ConfigError(f"unknown key {key!r}")
        if not raw:
            raise ConfigError(f"missing value for {key!r}")
        vals[key] = _parse_value(key, raw)
    return Config(**vals)


def load_config(path) -> Config:
    return parse_config(Path(path).read_text())


def config_to_text(cfg: Config) -> str:
    return "".join(f"{k} = {v!r}\n" for k, v in asdict(cfg).items())


def save_config(cfg: Config, path) -> None:
    Path(path).write_text(config_to_text(cfg))


# --- reports -----------------------------------------------------------------

def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else str(x)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def dumps(obj) -> str:
    return json.dumps(_clean(obj), sort_keys=True, indent=1) + "\n"


def write_json(obj, path) -> None:
    Path(path).write_text(dumps(obj))


def csv_text(header, rows) -> str:
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    return v


def write_csv(header, rows, path) -> None:
    Path(path).write_text(csv_text(header, rows))


def partition_to_dict(P: MarkovPartition) -> dict:
    rects = []
    for R in P.rectangles:
        rects.append({
            "label": R.label,
            "type": list(R.type),
            "vertices": P.vertices(R.label).tolist(),
            "area": R.area(P.A),
        })
    return {
        "m": P.A.m,
        "rectangles": rects,
        "transitions": np.argwhere(P.transitions).tolist(),
        "marked": None if P.marked is None else {f"{i},{j}": lab for (i, j), lab in sorted(P.marked.items())},
    }


def partition_rows(P: MarkovPartition):
    header = ["label", "type_j", "type_k", "x0", "y0", "x1", "y1", "x2", "y2", "x3", "y3", "area"]
    rows = []
    for R in P.rectangles:
        V = P.vertices(R.label)
        rows.append([R.label, *R.type, *V.ravel().tolist(), R.area(P.A)])
    return header, rows


SLICE_HEADER = ["b_u", "b_v", "n", "diam_inner", "diam_outer", "n_balls"]


def slice_rows(sample: AttractorSample):
    B = sample.bases
    K = sample.centers.shape[1]
    return [[B[i, 0], B[i, 1], sample.n, sample.diam_inner[i], sample.diam_outer[i], K] for i in range(len(sample))]


def cover_text(C: SliceCover) -> str:
    """Structured text of a cover: one ``center... radius`` line per ball, 17 significant digits."""
    head = f"base {C.base.u:.17g} {C.base.v:.17g}\nn {C.n}\nballs {C.n_balls}\n"
    body = "".join(" ".join(f"{v:.17g}" for v in (*c, r)) + "\n" for c, r in zip(C.centers, C.radii))
    return head + body


# --- images --------------------------------------------------------------------

CLASS_LEVELS = {"graph": 0, "undetermined": 128, "bone": 255}


def to_gray(values: np.ndarray) -> np.ndarray:
    """Affine map of finite values onto 0..255; a constant field maps to 128."""
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        raise ValueError("no data to draw")
    lo, hi = float(np.nanmin(v)), float(np.nanmax(v))
    if not hi > lo:
        return np.full(v.shape, 128, dtype=np.uint8)
    return np.round(255 * (v - lo) / (hi - lo)).astype(np.uint8)


def emit_image(data, path) -> None:
    """Write a binary PGM.  ``data`` is a 2-D array of values or of class names."""
    arr = np.asarray(data)
    if arr.size == 0 or arr.ndim != 2:
        raise ValueError("image data must be a nonempty 2-D array")
    if arr.dtype.kind in "USO":
        img = np.vectorize(CLASS_LEVELS.__getitem__, otypes=[np.uint8])(arr)
    else:
        img = to_gray(arr)
    h, w = img.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode())
        fh.write(img.tobytes())


def read_pgm(path) -> np.ndarray:
    raw = Path(path).read_bytes()
    parts = raw.split(b"\n", 3)
    w, h = (int(x) for x in parts[1].split())
    return np.frombuffer(parts[3], dtype=np.uint8).reshape(h, w)
