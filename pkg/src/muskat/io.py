"""Diagnostics CSV, JSON snapshots and the run manifest."""

from __future__ import annotations

import json
import os
from pathlib import Path

import numpy as np

from .diagnostics import CSV_COLUMNS
from .errors import MuskatError
from .spectral import SpectralField, TorusGrid

__all__ = [
    "OutputError",
    "SNAPSHOT_ORDERING",
    "format_csv",
    "write_csv",
    "read_csv",
    "snapshot_to_dict",
    "snapshot_from_dict",
    "save_snapshot",
    "load_snapshot",
    "write_manifest",
    "write_json",
    "write_run",
]

SNAPSHOT_ORDERING = (
    "coeffs lists [re, im] of the unit-amplitude Fourier coefficient for every wavevector k, "
    "each component running from -n/2+1 to n/2, in lexicographic order with the first component slowest"
)


class OutputError(MuskatError):
    """A file could not be read or written."""


def _ordering_index(n: int) -> np.ndarray:
    return np.arange(-n // 2 + 1, n // 2 + 1) % n


def format_csv(rows) -> str:
    lines = [",".join(CSV_COLUMNS)]
    for r in rows:
        lines.append(",".join("%.17g" % float(v) for v in r.csv_values()))
    return "\n".join(lines) + "\n"


def _write_text(path: Path, text: str) -> Path:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc}") from exc
    return path


def write_csv(rows, path) -> Path:
    """Write diagnostics rows with the fixed header and ``%.17g`` values."""
    return _write_text(Path(path), format_csv(rows))


def read_csv(path) -> dict[str, np.ndarray]:
    """Columns of a diagnostics CSV as float arrays."""
    try:
        data = np.genfromtxt(path, delimiter=",", names=True, ndmin=1)
    except OSError as exc:
        raise OutputError(f"cannot read {path}: {exc}") from exc
    return {name: np.asarray(data[name], dtype=float) for name in data.dtype.names}


def snapshot_to_dict(f: SpectralField, t: float, params: dict | None = None) -> dict:
    g = f.grid
    idx = _ordering_index(g.n)
    c = f.coeffs[np.ix_(*([idx] * g.dim))].ravel()
    return {
        "meta": {
            "t": float(t),
            "grid": {"dim": g.dim, "n": g.n, "period": g.period},
            "params": dict(params or {}),
            "ordering": SNAPSHOT_ORDERING,
        },
        "coeffs": [[float(z.real), float(z.imag)] for z in c],
    }


def snapshot_from_dict(doc: dict) -> tuple[SpectralField, dict]:
    meta = doc["meta"]
    g = TorusGrid(int(meta["grid"]["dim"]), int(meta["grid"]["n"]), float(meta["grid"]["period"]))
    arr = np.asarray(doc["coeffs"], dtype=float)
    if arr.shape != (g.size, 2):
        raise ValueError(f"expected {g.size} coefficient pairs, got shape {arr.shape}")
    ordered = (arr[:, 0] + 1j * arr[:, 1]).reshape(g.shape)
    c = np.zeros(g.shape, dtype=complex)
    idx = _ordering_index(g.n)
    c[np.ix_(*([idx] * g.dim))] = ordered
    return SpectralField(g, c), meta


def save_snapshot(path, f: SpectralField, t: float, params: dict | None = None) -> Path:
    """Write a snapshot; floats use shortest round-trip representations."""
    return _write_text(Path(path), json.dumps(snapshot_to_dict(f, t, params)))


def load_snapshot(path) -> tuple[SpectralField, dict]:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise OutputError(f"cannot read {path}: {exc}") from exc
    return snapshot_from_dict(doc)


def write_json(path, obj) -> Path:
    return _write_text(Path(path), json.dumps(obj, indent=2, sort_keys=True, default=_jsonable) + "\n")


def _jsonable(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer, np.bool_)):
        return o.item()
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def write_manifest(out_dir, config: dict, extra: dict | None = None) -> Path:
    from . import __version__

    doc = {"config": config, "code_version": __version__, "snapshot_ordering": SNAPSHOT_ORDERING}
    doc.update(extra or {})
    return write_json(Path(out_dir) / "manifest.json", doc)


def write_run(out_dir, rows, trajectory, config: dict, params: dict | None = None,
              snapshots: bool = True, extra: dict | None = None) -> dict[str, Path]:
    """Write ``diagnostics.csv``, ``snapshots/*.json`` and ``manifest.json`` under ``out_dir``."""
    out = Path(out_dir)
    paths = {"csv": write_csv(rows, out / "diagnostics.csv")}
    if snapshots:
        for i, (t, f) in enumerate(zip(trajectory.times, trajectory.fields)):
            save_snapshot(out / "snapshots" / f"snap_{i:05d}.json", f, t, params)
        paths["snapshots"] = out / "snapshots"
    paths["manifest"] = write_manifest(out, config, extra)
    return paths


def ensure_dir(path) -> Path:
    p = Path(path)
    try:
        p.mkdir(parents=True, exist_ok=True)
        if not os.access(p, os.W_OK):
            raise PermissionError(f"{p} is not writable")
    except OSError as exc:
        raise OutputError(f"cannot create {p}: {exc}") from exc
    return p
