"""JSON conventions shared by the command-line tools, and published anchor values.

Matrices are stored row-major as lists of ``[re, im]`` pairs per row.  Every
document carries ``schema_version``.  Output is written with sorted keys and a
trailing newline so identical inputs give byte-identical files.
"""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Any

import numpy as np

SCHEMA_VERSION = 1


class SchemaError(ValueError):
    pass


def encode_matrix(m) -> list[list[list[float]]]:
    m = np.atleast_2d(np.asarray(m, dtype=complex))
    return [[[float(z.real) + 0.0, float(z.imag) + 0.0] for z in row] for row in m]


def decode_matrix(data) -> np.ndarray:
    try:
        arr = np.asarray(data, dtype=float)
    except (TypeError, ValueError) as e:
        raise SchemaError(f"bad matrix encoding: {e}") from None
    if arr.ndim != 3 or arr.shape[2] != 2:
        raise SchemaError(f"matrix must be rows of [re, im] pairs, got shape {arr.shape}")
    return arr[..., 0] + 1j * arr[..., 1]


def _clean(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        if not math.isfinite(x):
            return None
        return x + 0.0
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    return obj


def dumps_json(doc: dict) -> str:
    doc = dict(doc)
    doc.setdefault("schema_version", SCHEMA_VERSION)
    return json.dumps(_clean(doc), sort_keys=True, indent=2) + "\n"


def write_json(path: str | Path, doc: dict) -> None:
    Path(path).write_text(dumps_json(doc))


def read_json(path: str | Path, *, kind: str | None = None) -> dict:
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as e:
        raise SchemaError(f"{path}: {e}") from None
    if not isinstance(doc, dict) or doc.get("schema_version") != SCHEMA_VERSION:
        raise SchemaError(f"{path}: missing or unsupported schema_version")
    if kind is not None and doc.get("kind") != kind:
        raise SchemaError(f"{path}: expected kind {kind!r}, got {doc.get('kind')!r}")
    return doc


def value_with_error(value: float, error: float | None) -> dict:
    return {"value": value, "std": error}


# Published experimental values, reproduced only as labelled side-by-side
# anchors in reports; none of them is used as a test oracle.
PUBLISHED = {
    "truth_table": {
        "inquisition": (0.81, 0.03),
        "contrast": {"00": (0.99, 0.01), "01": (0.95, 0.02), "10": (0.80, 0.02), "11": (0.73, 0.05)},
        "contrast_11_quarter_power": (0.83, 0.04),
    },
    "output_states": {
        # (fidelity, linear entropy, tangle)
        "c1t_on": ((0.90, 0.04), (0.21, 0.08), (0.68, 0.10)),
        "c1t_off": ((0.75, 0.06), (0.47, 0.10), (0.04, 0.06)),
        "c2t_on": ((0.81, 0.02), (0.39, 0.05), (0.53, 0.07)),
        "c2t_off": ((0.80, 0.03), (0.40, 0.05), (0.01, 0.01)),
    },
    "gate_processes": {
        # (process fidelity, mean output linear entropy)
        "CT": ((0.982, 0.003), (0.036, 0.004)),
        "CJ": ((0.977, 0.004), (0.047, 0.004)),
        "CL": ((0.940, 0.006), (0.091, 0.005)),
        "CZ": ((0.956, 0.003), (0.086, 0.006)),
    },
}

GATE_NAMES = {math.pi / 4: "CT", math.pi / 2: "CJ", 3 * math.pi / 4: "CL", math.pi: "CZ"}


def gate_name(theta: float, tol: float = 1e-3) -> str:
    for t, name in GATE_NAMES.items():
        if abs(theta - t) < tol:
            return name
    return f"CZ({theta:.6g})"


def anchor(pair) -> dict:
    v, e = pair
    return {"value": v, "std": e}


__all__ = [
    "GATE_NAMES",
    "PUBLISHED",
    "SCHEMA_VERSION",
    "SchemaError",
    "anchor",
    "decode_matrix",
    "dumps_json",
    "encode_matrix",
    "gate_name",
    "read_json",
    "value_with_error",
    "write_json",
]
