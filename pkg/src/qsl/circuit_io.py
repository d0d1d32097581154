"""Line-oriented text format for circuits.

Grammar (one item per line, ``#`` starts a comment)::

    dims=[d_0,d_1,...]
    GATE targets=[t,...] controls=[(c,v),...] params=[p,...]

``GATE`` is one of the named single-qubit gates (I X Y Z H S T TDG), ``ZTHETA``
with ``params=[theta]``, ``SWAPab`` for a level swap of levels ``a`` and ``b``
(``params`` carries ``[a,b]`` as well), or ``MAT`` for an explicit matrix whose
``params`` are the row-major real/imaginary pairs.  ``controls`` and ``params``
may be omitted when empty.  Floats are written with ``repr`` so a dump/parse
cycle is exact.
"""

from __future__ import annotations

import re

import numpy as np

from . import gates as G
from .qudit import Circuit, GateMatrix, LevelSwap, PlacedGate, RegisterShape

FORMAT_HEADER = "# qsl-circuit v1"

_LIST = r"\[([^\]]*)\]"
_DIMS_RE = re.compile(r"^dims\s*=\s*" + _LIST + r"$")
_GATE_RE = re.compile(r"^(?P<name>[A-Z][A-Z0-9]*)(?P<rest>.*)$")
_FIELD_RE = re.compile(r"(\w+)\s*=\s*\[([^\]]*(?:\([^)]*\)[^\]]*)*)\]")
_PAIR_RE = re.compile(r"\(\s*(-?\d+)\s*,\s*(-?\d+)\s*\)")


class CircuitFormatError(ValueError):
    pass


def _fmt(x: float) -> str:
    return repr(float(x))


def _gate_line(g: PlacedGate) -> str:
    gate = g.gate
    params: list[float] = []
    if isinstance(gate, LevelSwap):
        name = gate.label
        params = [gate.a, gate.b]
    elif gate.label == "ZTHETA":
        name = "ZTHETA"
        params = list(gate.params)
    elif gate.label in G.NAMED and np.array_equal(gate.matrix, G.NAMED[gate.label].matrix):
        name = gate.label
    else:
        name = "MAT"
        for z in gate.matrix.reshape(-1):
            params += [z.real, z.imag]
    parts = [name, "targets=[" + ",".join(str(t) for t in g.targets) + "]"]
    if g.controls:
        parts.append("controls=[" + ",".join(f"({c},{v})" for c, v in g.controls) + "]")
    if params:
        if isinstance(gate, LevelSwap):
            parts.append("params=[" + ",".join(str(int(p)) for p in params) + "]")
        else:
            parts.append("params=[" + ",".join(_fmt(p) for p in params) + "]")
    return " ".join(parts)


def dumps(c: Circuit) -> str:
    lines = [FORMAT_HEADER, "dims=[" + ",".join(str(d) for d in c.shape.dims) + "]"]
    lines += [_gate_line(g) for g in c.gates]
    return "\n".join(lines) + "\n"


def _parse_gate(name: str, params: list[float]):
    if name.startswith("SWAP"):
        if len(params) == 2:
            a, b = int(params[0]), int(params[1])
        else:
            digits = name[4:]
            if len(digits) != 2:
                raise CircuitFormatError(f"cannot read levels from {name}")
            a, b = int(digits[0]), int(digits[1])
        return LevelSwap(a, b)
    if name == "ZTHETA":
        if len(params) != 1:
            raise CircuitFormatError("ZTHETA needs exactly one parameter")
        return G.z_theta(params[0])
    if name == "MAT":
        if len(params) % 2:
            raise CircuitFormatError("MAT needs real/imag pairs")
        z = np.array(params[0::2]) + 1j * np.array(params[1::2])
        n = int(round(np.sqrt(z.size)))
        if n * n != z.size:
            raise CircuitFormatError("MAT parameters do not form a square matrix")
        return GateMatrix(z.reshape(n, n), "MAT")
    if name in G.NAMED:
        return G.NAMED[name]
    raise CircuitFormatError(f"unknown gate {name!r}")


def loads(text: str) -> Circuit:
    shape = None
    placed = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = _DIMS_RE.match(line)
        if m:
            if shape is not None:
                raise CircuitFormatError(f"line {lineno}: dims given twice")
            shape = RegisterShape(tuple(int(x) for x in m.group(1).split(",")))
            continue
        m = _GATE_RE.match(line)
        if not m:
            raise CircuitFormatError(f"line {lineno}: cannot parse {raw!r}")
        if shape is None:
            raise CircuitFormatError(f"line {lineno}: gate before dims")
        fields = dict(_FIELD_RE.findall(m.group("rest")))
        if "targets" not in fields:
            raise CircuitFormatError(f"line {lineno}: missing targets")
        targets = tuple(int(x) for x in fields["targets"].split(",") if x.strip())
        controls = tuple(
            (int(c), int(v)) for c, v in _PAIR_RE.findall(fields.get("controls", ""))
        )
        params = [float(x) for x in fields.get("params", "").split(",") if x.strip()]
        try:
            gate = _parse_gate(m.group("name"), params)
            placed.append(PlacedGate(gate, targets, controls))
        except ValueError as exc:
            raise CircuitFormatError(f"line {lineno}: {exc}") from exc
    if shape is None:
        raise CircuitFormatError("no dims line")
    return Circuit(shape, tuple(placed))
