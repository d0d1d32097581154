"""Versioned text description of an :class:`OpticalExperiment`.

Example::

    # qsl-experiment v1
    name = cz
    modes = c t
    qubit C1 = c -> c
    qubit T = t -> t
    pass = c t
    detector D1 = c HV
    detector D2 = t HV
    number_resolving = false
    attenuation Lc = 0.5773502691896258
    prebias C1 = 0.5773502691896258 1.0
    target = 1.0,0.0,0.0,0.0,...
    layer PPBS modes=c:H,c:V,t:H,t:V matrix=1.0,0.0,...
    layer loss:Lc modes=c:H slot=Lc

Matrices are row-major lists of real/imaginary pairs written with ``repr``
so a dump/parse cycle is exact.  Key-value lines may appear in any order;
``layer`` lines are applied in file order.
"""

from __future__ import annotations

import math

import numpy as np

from .elements import POL_NAMES, Detector, HeraldPattern, Layer, LogicalQubit
from .experiment import OpticalExperiment

EXPERIMENT_HEADER = "# qsl-experiment v1"


class DescriptionError(ValueError):
    pass


def _fmt_matrix(m: np.ndarray) -> str:
    vals = []
    for z in np.asarray(m, dtype=complex).reshape(-1):
        vals += [repr(float(z.real) + 0.0), repr(float(z.imag) + 0.0)]
    return ",".join(vals)


def _parse_matrix(text: str, n: int) -> np.ndarray:
    vals = [float(x) for x in text.replace(",", " ").split()]
    if len(vals) != 2 * n * n:
        raise DescriptionError(f"matrix needs {2 * n * n} numbers, got {len(vals)}")
    arr = np.array(vals[0::2]) + 1j * np.array(vals[1::2])
    return arr.reshape(n, n)


def _fmt_modes(modes) -> str:
    return ",".join(f"{s}:{POL_NAMES[p]}" for s, p in modes)


def _parse_modes(text: str):
    out = []
    for item in text.split(","):
        s, _, p = item.partition(":")
        if p not in POL_NAMES:
            raise DescriptionError(f"bad mode {item!r}")
        out.append((s, POL_NAMES.index(p)))
    return tuple(out)


def dumps_experiment(exp: OpticalExperiment) -> str:
    lines = [EXPERIMENT_HEADER, f"name = {exp.name}", "modes = " + " ".join(exp.spatial_modes)]
    for q in exp.qubits:
        lines.append(f"qubit {q.name} = {q.input} -> {q.output}")
    for a, b in exp.passes:
        lines.append(f"pass = {a} {b}")
    for d in exp.herald.detectors:
        lines.append(f"detector {d.name} = {d.spatial} " + "".join(POL_NAMES[p] for p in d.pols))
    lines.append(f"number_resolving = {'true' if exp.herald.number_resolving else 'false'}")
    for k in sorted(exp.attenuations):
        lines.append(f"attenuation {k} = {exp.attenuations[k]!r}")
    for k in sorted(exp.prebias):
        h, v = exp.prebias[k]
        lines.append(f"prebias {k} = {float(h)!r} {float(v)!r}")
    if exp.target is not None:
        lines.append("target = " + _fmt_matrix(exp.target))
    for layer in exp.layers:
        head = f"layer {layer.name} modes={_fmt_modes(layer.modes)}"
        if layer.slot is not None:
            lines.append(f"{head} slot={layer.slot}")
        else:
            lines.append(f"{head} matrix={_fmt_matrix(layer.matrix)}")
    return "\n".join(lines) + "\n"


def loads_experiment(text: str) -> OpticalExperiment:
    lines = [ln.strip() for ln in text.splitlines()]
    if not lines or lines[0] != EXPERIMENT_HEADER:
        raise DescriptionError(f"missing header {EXPERIMENT_HEADER!r}")
    fields: dict = {"qubits": [], "passes": [], "detectors": [], "attenuations": {},
                    "prebias": {}, "layers": []}
    for lineno, line in enumerate(lines[1:], start=2):
        if not line or line.startswith("#"):
            continue
        try:
            if line.startswith("layer "):
                parts = line.split()
                name = parts[1]
                kv = dict(p.split("=", 1) for p in parts[2:])
                modes = _parse_modes(kv["modes"])
                if "slot" in kv:
                    fields["layers"].append(Layer(name, modes, slot=kv["slot"]))
                else:
                    m = _parse_matrix(kv["matrix"], len(modes))
                    fields["layers"].append(Layer(name, modes, m))
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise DescriptionError("expected 'key = value'")
            key, value = key.strip(), value.strip()
            word, _, arg = key.partition(" ")
            if word == "name":
                fields["name"] = value
            elif word == "modes":
                fields["modes"] = tuple(value.split())
            elif word == "qubit":
                src, _, dst = value.partition("->")
                fields["qubits"].append(LogicalQubit(arg, src.strip(), dst.strip()))
            elif word == "pass":
                a, b = value.split()
                fields["passes"].append((a, b))
            elif word == "detector":
                spatial, pols = value.split()
                fields["detectors"].append(Detector(arg, spatial, tuple(POL_NAMES.index(p) for p in pols)))
            elif word == "number_resolving":
                fields["number_resolving"] = value.lower() == "true"
            elif word == "attenuation":
                fields["attenuations"][arg] = float(value)
            elif word == "prebias":
                h, v = (float(x) for x in value.split())
                fields["prebias"][arg] = (h, v)
            elif word == "target":
                n = int(round(math.sqrt(len(value.replace(",", " ").split()) / 2)))
                fields["target"] = _parse_matrix(value, n)
            else:
                raise DescriptionError(f"unknown key {word!r}")
        except DescriptionError as e:
            raise DescriptionError(f"line {lineno}: {e}") from None
        except (KeyError, ValueError) as e:
            raise DescriptionError(f"line {lineno}: {e}") from None
    for req in ("name", "modes"):
        if req not in fields:
            raise DescriptionError(f"missing {req!r}")
    try:
        return OpticalExperiment(
            name=fields["name"],
            spatial_modes=fields["modes"],
            qubits=tuple(fields["qubits"]),
            passes=tuple(fields["passes"]),
            layers=tuple(fields["layers"]),
            herald=HeraldPattern(tuple(fields["detectors"]), fields.get("number_resolving", False)),
            attenuations=fields["attenuations"],
            prebias=fields["prebias"],
            target=fields.get("target"),
        )
    except ValueError as e:
        raise DescriptionError(str(e)) from None


__all__ = ["DescriptionError", "EXPERIMENT_HEADER", "dumps_experiment", "loads_experiment"]
