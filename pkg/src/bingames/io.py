"""Output writers shared by the command-line tools."""

import csv
import hashlib
import json
import os
import platform

import numpy as np
import scipy

from . import __version__


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, float) and not np.isfinite(obj):
        return None
    return obj


def dumps(obj):
    """Deterministic JSON: sorted keys, NaN and infinities as null."""
    return json.dumps(_plain(obj), indent=2, sort_keys=True, allow_nan=False) + "\n"


def write_json(path, obj):
    with open(path, "w") as fh:
        fh.write(dumps(obj))


def write_rows(path, rows, fieldnames=None):
    """Write dict rows (or ``(header, list rows)``) as CSV with ``\\n`` line ends."""
    with open(path, "w", newline="") as fh:
        if isinstance(rows, tuple):
            header, body = rows
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            w.writerows(body)
            return
        fieldnames = fieldnames or (list(rows[0]) if rows else [])
        w = csv.DictWriter(fh, fieldnames=fieldnames, lineterminator="\n")
        w.writeheader()
        w.writerows(rows)


def digest(obj):
    """sha256 of the deterministic JSON form of ``obj``."""
    return hashlib.sha256(dumps(obj).encode()).hexdigest()


def versions():
    return {"bingames": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
            "python": platform.python_version()}


def write_manifest(directory, command, config_hash, game_hash=None, seed=None, outputs=(),
                   extra=None):
    """Write ``manifest.json`` into ``directory`` and return its path."""
    path = os.path.join(directory or ".", "manifest.json")
    body = {"command": command, "config_hash": config_hash, "game_hash": game_hash,
            "seed": seed, "versions": versions(), "outputs": sorted(outputs)}
    body.update(extra or {})
    write_json(path, body)
    return path
