"""Serialized outputs: CSV, JSON and text tables written atomically.

Numbers use Python's shortest round-trip ``repr``, and no timestamps or host
details are embedded, so identical inputs give identical bytes.  Every file
carries the config hash, the seed and the package version.
"""

from __future__ import annotations

import json
import math
import os
import tempfile

import numpy as np

from .errors import ConfigError
from .paths import SpectralPath

__all__ = [
    "Artifact",
    "csv_bytes",
    "format_number",
    "json_bytes",
    "path_csv",
    "read_path_csv",
    "write_artifacts",
    "write_atomic",
]


def format_number(x):
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if x is None:
        return ""
    if isinstance(x, str):
        return x
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "+inf" if x > 0 else "-inf"
    return repr(x)


def _plain(obj):
    """JSON-ready copy: numpy scalars and arrays unwrapped, non-finite floats as strings."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else format_number(x)
    return obj


def _meta_line(meta):
    return "# " + " ".join(f"{k}={meta[k]}" for k in ("config_hash", "seed", "version"))


def csv_bytes(header, rows, meta):
    lines = [_meta_line(meta), ",".join(header)]
    for row in rows:
        lines.append(",".join(format_number(v) for v in row))
    return ("\n".join(lines) + "\n").encode()


def json_bytes(obj, meta):
    doc = {"meta": dict(meta), **_plain(obj)}
    return (json.dumps(doc, indent=2, sort_keys=False, allow_nan=False) + "\n").encode()


def path_csv(path, meta):
    header = ["t"] + [f"mode_{i}" for i in range(1, path.n + 1)]
    rows = ([t, *node] for t, node in zip(path.times, path.nodes))
    return csv_bytes(header, rows, meta)


def read_path_csv(filename):
    """Read a path written by :func:`path_csv` (comment lines are skipped)."""
    try:
        with open(filename, encoding="utf-8") as fh:
            lines = [ln.strip() for ln in fh if ln.strip() and not ln.startswith("#")]
    except OSError as exc:
        raise ConfigError(f"cannot read path file {filename}: {exc.strerror}") from exc
    if len(lines) < 3:
        raise ConfigError(f"{filename}: need a header and at least two rows")
    header = lines[0].split(",")
    if header[0] != "t" or header[1:] != [f"mode_{i}" for i in range(1, len(header))]:
        raise ConfigError(f"{filename}: header must read t,mode_1,...,mode_n")
    try:
        data = np.array([[float(v) for v in ln.split(",")] for ln in lines[1:]])
    except ValueError as exc:
        raise ConfigError(f"{filename}: {exc}") from None
    if data.shape[1] != len(header):
        raise ConfigError(f"{filename}: ragged rows")
    t = data[:, 0]
    h = (t[-1] - t[0]) / (len(t) - 1)
    if abs(t[0]) > 1e-12 or not np.allclose(np.diff(t), h, rtol=1e-9, atol=1e-12):
        raise ConfigError(f"{filename}: times must start at 0 on a uniform grid")
    return SpectralPath(float(h), data[:, 1:])


class Artifact:
    """A named output file held in memory until every result is ready."""

    def __init__(self, name, payload):
        self.name = name
        self.payload = payload if isinstance(payload, bytes) else payload.encode()


def write_atomic(filename, payload):
    directory = os.path.dirname(os.path.abspath(filename))
    fd, tmp = tempfile.mkstemp(prefix=".tmp-", dir=directory)
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.replace(tmp, filename)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_artifacts(directory, artifacts):
    """Write every artifact with write-then-rename; returns the file paths."""
    os.makedirs(directory, exist_ok=True)
    written = []
    for art in artifacts:
        target = os.path.join(directory, art.name)
        write_atomic(target, art.payload)
        written.append(target)
    return written
