"""Optical elements as small mode-transformation blocks.

A :class:`Layer` names the (spatial, polarisation) modes it touches and
carries the block matrix on those modes; unlisted modes pass unchanged.
Attenuators may instead name a loss *slot* whose amplitude transmission is
looked up in the experiment's attenuation settings.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

H, V = 0, 1
POL_NAMES = ("H", "V")

SQRT_THIRD = 1 / math.sqrt(3)

Mode = tuple[str, int]


@dataclass(frozen=True)
class ModeIndex:
    """One optical mode: spatial path, polarisation, distinguishability label."""

    spatial: int
    polarization: int
    label: int = 0

    def __post_init__(self):
        if self.polarization not in (H, V):
            raise ValueError("polarization must be 0 (H) or 1 (V)")
        if self.spatial < 0 or self.label < 0:
            raise ValueError("mode indices must be non-negative")


@dataclass(frozen=True, eq=False)
class Layer:
    name: str
    modes: tuple[Mode, ...]
    matrix: np.ndarray | None = None
    slot: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "modes", tuple((str(s), int(p)) for s, p in self.modes))
        if len(set(self.modes)) != len(self.modes):
            raise ValueError(f"layer {self.name} lists a mode twice")
        if self.slot is None:
            m = np.asarray(self.matrix, dtype=complex)
            if m.shape != (len(self.modes), len(self.modes)):
                raise ValueError(f"layer {self.name}: matrix shape {m.shape} vs {len(self.modes)} modes")
            s = np.linalg.svd(m, compute_uv=False)
            if s.max() > 1 + 1e-12:
                raise ValueError(f"layer {self.name} amplifies (singular value {s.max():.6g})")
            object.__setattr__(self, "matrix", m)

    def block(self, attenuations: Mapping[str, float]) -> np.ndarray:
        if self.slot is None:
            return self.matrix
        try:
            a = float(attenuations[self.slot])
        except KeyError:
            raise KeyError(f"no attenuation set for slot {self.slot!r}") from None
        if not 0.0 <= a <= 1.0:
            raise ValueError(f"slot {self.slot!r} amplitude {a} outside [0, 1]")
        return a * np.eye(len(self.modes), dtype=complex)


def pol_unitary(spatial: str, u, name: str = "waveplate") -> Layer:
    """Arbitrary polarisation unitary on one spatial mode (waveplate stack)."""
    return Layer(name, ((spatial, H), (spatial, V)), np.asarray(u, dtype=complex))


def half_wave_plate(angle: float) -> np.ndarray:
    c, s = math.cos(2 * angle), math.sin(2 * angle)
    return np.array([[c, s], [s, -c]], dtype=complex)


def quarter_wave_plate(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    rot = np.array([[c, -s], [s, c]])
    return rot @ np.diag([1, 1j]) @ rot.T


def polarizer(spatial: str, keep, out_pol: int = V, name: str = "polarizer") -> Layer:
    """Project onto polarisation ``keep`` and re-emit it as ``out_pol``."""
    w = np.asarray(keep, dtype=complex)
    w = w / np.linalg.norm(w)
    m = np.zeros((2, 2), dtype=complex)
    m[out_pol, :] = w.conj()
    return Layer(name, ((spatial, H), (spatial, V)), m)


def partially_polarizing_bs(a: str, b: str, t_h: float = 1.0, t_v: float = SQRT_THIRD,
                            name: str = "ppbs") -> Layer:
    """Beamsplitter with polarisation-dependent amplitude transmission.

    Convention per polarisation: ``a+ -> t a+ + r b+`` and ``b+ -> t b+ - r a+``
    with real ``r = sqrt(1 - t^2)``.
    """
    modes = ((a, H), (a, V), (b, H), (b, V))
    m = np.zeros((4, 4), dtype=complex)
    for pol, t in ((H, t_h), (V, t_v)):
        r = math.sqrt(max(0.0, 1 - t * t))
        ia, ib = pol, 2 + pol
        m[ia, ia] = t
        m[ib, ia] = r
        m[ib, ib] = t
        m[ia, ib] = -r
    return Layer(name, modes, m)


def beam_splitter(a: str, b: str, reflectivity: float, name: str = "bs") -> Layer:
    """Polarisation-independent beamsplitter with intensity reflectivity R."""
    t = math.sqrt(1 - reflectivity)
    return partially_polarizing_bs(a, b, t, t, name)


def pbs_exchange(a: str, b: str, pol: int = H, name: str = "pbs") -> Layer:
    """Polarising beamsplitter swapping polarisation ``pol`` between two paths."""
    m = np.array([[0, 1], [1, 0]], dtype=complex)
    return Layer(name, ((a, pol), (b, pol)), m)


def attenuator(spatial: str, pols: Sequence[int], slot: str, name: str | None = None) -> Layer:
    return Layer(name or f"loss:{slot}", tuple((spatial, p) for p in pols), slot=slot)


def fixed_attenuator(spatial: str, pols: Sequence[int], amplitude: float,
                     name: str = "attenuator") -> Layer:
    modes = tuple((spatial, p) for p in pols)
    return Layer(name, modes, amplitude * np.eye(len(modes)))


# Projector vectors of the six-state set; the first of each pair sits on the H port.
PROJECTORS = {
    "H": np.array([1, 0], dtype=complex),
    "V": np.array([0, 1], dtype=complex),
    "D": np.array([1, 1], dtype=complex) / math.sqrt(2),
    "A": np.array([1, -1], dtype=complex) / math.sqrt(2),
    "R": np.array([1, 1j], dtype=complex) / math.sqrt(2),
    "L": np.array([1, -1j], dtype=complex) / math.sqrt(2),
}
BASIS_OF = {"H": "Z", "V": "Z", "D": "X", "A": "X", "R": "Y", "L": "Y"}
PORT_OF = {"H": H, "V": V, "D": H, "A": V, "R": H, "L": V}
BASES = {"Z": ("H", "V"), "X": ("D", "A"), "Y": ("R", "L")}


def analyser(basis: str) -> np.ndarray:
    """Polarisation rotation mapping the basis' first state to H and second to V."""
    first, second = BASES[basis]
    return np.vstack([PROJECTORS[first].conj(), PROJECTORS[second].conj()])


@dataclass(frozen=True)
class Detector:
    name: str
    spatial: str
    pols: tuple[int, ...] = (H, V)


@dataclass(frozen=True)
class HeraldPattern:
    """Detectors that must fire for a run to count.

    ``number_resolving`` demands exactly one photon per detector, otherwise a
    detector fires on one or more photons.
    """

    detectors: tuple[Detector, ...]
    number_resolving: bool = False

    def __post_init__(self):
        names = [d.name for d in self.detectors]
        if len(set(names)) != len(names):
            raise ValueError("duplicate detector names")


@dataclass(frozen=True)
class LogicalQubit:
    name: str
    input: str
    output: str


def rotation_to(state) -> np.ndarray:
    """Unitary taking H to ``state`` (used for input preparation)."""
    v = np.asarray(state, dtype=complex)
    v = v / np.linalg.norm(v)
    perp = np.array([-v[1].conj(), v[0].conj()])
    return np.column_stack([v, perp])


__all__ = [
    "BASES",
    "BASIS_OF",
    "Detector",
    "H",
    "HeraldPattern",
    "Layer",
    "LogicalQubit",
    "ModeIndex",
    "PORT_OF",
    "PROJECTORS",
    "V",
    "analyser",
    "attenuator",
    "beam_splitter",
    "fixed_attenuator",
    "half_wave_plate",
    "partially_polarizing_bs",
    "pbs_exchange",
    "pol_unitary",
    "polarizer",
    "quarter_wave_plate",
    "rotation_to",
]
