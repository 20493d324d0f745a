"""Deterministic serialization: CSV curves, JSON pole lists, run manifests.

All floats are written with 17 significant digits (full double round-trip)
and records are sorted, so identical manifests imply byte-identical
payloads.  Manifests accompany every output as a sidecar file; wall time
lives only in the sidecar, never in the payload.
"""

from __future__ import annotations

import json
import time

import numpy as np

from . import __version__
from .model import model_fingerprint

__all__ = [
    "fmt",
    "write_csv",
    "dumps_json",
    "write_json",
    "pole_record",
    "make_manifest",
    "write_manifest",
]


def fmt(x) -> str:
    """Canonical text form of one scalar: 17 significant digits for floats."""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.17g}"
    return str(x)


def write_csv(path, header, columns) -> None:
    """Write named columns; fixed field order, LF line endings."""
    cols = [np.asarray(c) for c in columns]
    n = cols[0].shape[0]
    with open(path, "w", encoding="ascii", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for i in range(n):
            fh.write(",".join(fmt(c[i]) for c in cols) + "\n")


def _serialize(obj, out) -> None:
    if isinstance(obj, dict):
        out.append("{")
        for j, key in enumerate(sorted(obj)):
            if j:
                out.append(",")
            out.append(json.dumps(str(key)))
            out.append(":")
            _serialize(obj[key], out)
        out.append("}")
    elif isinstance(obj, (list, tuple)):
        out.append("[")
        for j, item in enumerate(obj):
            if j:
                out.append(",")
            _serialize(item, out)
        out.append("]")
    elif isinstance(obj, (bool, np.bool_)):
        out.append("true" if obj else "false")
    elif obj is None:
        out.append("null")
    elif isinstance(obj, (int, np.integer)):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        out.append(fmt(obj))
    elif isinstance(obj, complex):
        _serialize({"re": obj.real, "im": obj.imag}, out)
    else:
        out.append(json.dumps(str(obj)))


def dumps_json(obj) -> str:
    """JSON with sorted keys and 17-significant-digit floats."""
    out: list[str] = []
    _serialize(obj, out)
    return "".join(out)


def write_json(path, obj) -> None:
    with open(path, "w", encoding="ascii", newline="") as fh:
        fh.write(dumps_json(obj))
        fh.write("\n")


def pole_record(pole) -> dict:
    return {
        "k": {"re": pole.k.real, "im": pole.k.imag},
        "E": {"re": pole.E.real, "im": pole.E.imag},
        "class": pole.kind,
        "sheet": pole.sheet,
        "residual": pole.residual,
        "newton_iters": pole.newton_iters,
        "certified": pole.certified,
        "note": pole.note,
    }


def make_manifest(subcommand: str, model, parameters: dict,
                  wall_time_s: float) -> dict:
    return {
        "subcommand": subcommand,
        "model_hash": model_fingerprint(model) if model is not None else "",
        "parameters": {k: parameters[k] for k in sorted(parameters)},
        "tool_version": __version__,
        "wall_time_s": wall_time_s,
    }


def write_manifest(out_path, manifest: dict) -> str:
    sidecar = str(out_path) + ".manifest.json"
    write_json(sidecar, manifest)
    return sidecar


def now() -> float:
    return time.perf_counter()
