"""Fock-space bookkeeping for passive linear optics.

States are stored sparsely: a configuration is the sorted tuple of the mode
index of every photon (a multiset), mapped to its complex amplitude in the
normalised occupation basis.  A linear layer ``M`` rewrites creation operators
as ``a_j^+ -> sum_k M[k, j] a_k^+``; propagating a configuration is expansion
of a product of linear forms.
"""

from __future__ import annotations

import math
from collections import Counter, defaultdict
from typing import Iterable, Mapping, Sequence

import numpy as np
import scipy.linalg

AMP_TOL = 1e-12
DEFAULT_N_MAX = 6


class CutoffError(ValueError):
    """A configuration holds more photons than the configured cutoff."""


def occupation(key: Sequence[int], n_modes: int) -> tuple[int, ...]:
    occ = [0] * n_modes
    for m in key:
        occ[m] += 1
    return tuple(occ)


def key_from_occupation(occ: Sequence[int]) -> tuple[int, ...]:
    return tuple(m for m, n in enumerate(occ) for _ in range(int(n)))


def _norm_factor(key: Sequence[int]) -> float:
    """sqrt(prod n_i!) for the occupation numbers of ``key``."""
    f = 1
    for n in Counter(key).values():
        f *= math.factorial(n)
    return math.sqrt(f)


class FockState:
    """Sparse superposition of photon configurations over ``n_modes`` modes."""

    def __init__(self, n_modes: int, amplitudes: Mapping[tuple[int, ...], complex] | None = None,
                 n_max: int = DEFAULT_N_MAX):
        self.n_modes = int(n_modes)
        self.n_max = int(n_max)
        self.amplitudes: dict[tuple[int, ...], complex] = {}
        for key, amp in (amplitudes or {}).items():
            key = tuple(sorted(int(k) for k in key))
            if len(key) > self.n_max:
                raise CutoffError(f"{len(key)} photons exceed cutoff {self.n_max}")
            if key and (key[0] < 0 or key[-1] >= self.n_modes):
                raise ValueError(f"mode index out of range in {key}")
            self.amplitudes[key] = self.amplitudes.get(key, 0) + complex(amp)

    @classmethod
    def vacuum(cls, n_modes: int, n_max: int = DEFAULT_N_MAX) -> "FockState":
        return cls(n_modes, {(): 1.0}, n_max)

    @classmethod
    def from_occupation(cls, occ: Sequence[int], n_max: int = DEFAULT_N_MAX) -> "FockState":
        return cls(len(occ), {key_from_occupation(occ): 1.0}, n_max)

    def norm_squared(self) -> float:
        return float(sum(abs(a) ** 2 for a in self.amplitudes.values()))

    def probabilities(self) -> dict[tuple[int, ...], float]:
        return {k: abs(a) ** 2 for k, a in self.amplitudes.items() if abs(a) > AMP_TOL}

    def occupation_probabilities(self) -> dict[tuple[int, ...], float]:
        return {occupation(k, self.n_modes): p for k, p in self.probabilities().items()}

    def amplitude(self, occ: Sequence[int]) -> complex:
        return self.amplitudes.get(key_from_occupation(occ), 0j)

    def photon_numbers(self) -> set[int]:
        return {len(k) for k, a in self.amplitudes.items() if abs(a) > AMP_TOL}

    def __repr__(self):
        return f"FockState(n_modes={self.n_modes}, terms={len(self.amplitudes)})"


def _columns(matrix: np.ndarray, tol: float = AMP_TOL) -> list[list[tuple[int, complex]]]:
    cols = []
    for j in range(matrix.shape[1]):
        col = matrix[:, j]
        nz = np.flatnonzero(np.abs(col) > tol)
        cols.append([(int(k), complex(col[k])) for k in nz])
    return cols


def expand_product(forms: Iterable[Sequence[tuple[int, complex]]],
                   coeff: complex = 1.0) -> dict[tuple[int, ...], complex]:
    """Expand ``coeff * prod_p (sum_k c_pk a_k^+)`` into monomial coefficients."""
    poly: dict[tuple[int, ...], complex] = {(): complex(coeff)}
    for form in forms:
        nxt: dict[tuple[int, ...], complex] = defaultdict(complex)
        for key, c in poly.items():
            for mode, a in form:
                nxt[tuple(sorted(key + (mode,)))] += c * a
        poly = nxt
    return poly


def monomials_to_state(poly: Mapping[tuple[int, ...], complex]) -> dict[tuple[int, ...], complex]:
    """Convert monomial coefficients to normalised occupation-basis amplitudes."""
    return {k: c * _norm_factor(k) for k, c in poly.items() if abs(c) > AMP_TOL}


def propagate(state: FockState, matrix: np.ndarray) -> dict[tuple[int, ...], complex]:
    """Amplitudes after rewriting every creation operator with ``matrix``.

    ``matrix`` has shape (n_out, state.n_modes); no normalisation is imposed.
    """
    matrix = np.asarray(matrix, dtype=complex)
    if matrix.shape[1] != state.n_modes:
        raise ValueError(f"layer acts on {matrix.shape[1]} modes, state has {state.n_modes}")
    cols = _columns(matrix)
    out: dict[tuple[int, ...], complex] = defaultdict(complex)
    for key, amp in state.amplitudes.items():
        if abs(amp) <= AMP_TOL:
            continue
        poly = expand_product((cols[m] for m in key), amp / _norm_factor(key))
        for k, c in poly.items():
            out[k] += c * _norm_factor(k)
    return {k: a for k, a in out.items() if abs(a) > AMP_TOL}


def loss_dilation(matrix: np.ndarray) -> np.ndarray:
    """Stack ``matrix`` on ``sqrt(I - M^dagger M)`` so every column has unit norm.

    The lower block feeds untracked sink modes; any isometric completion gives
    the same reduced state on the tracked modes.
    """
    m = np.asarray(matrix, dtype=complex)
    gram = np.eye(m.shape[1]) - m.conj().T @ m
    gram = (gram + gram.conj().T) / 2
    w, v = np.linalg.eigh(gram)
    if w.min() < -1e-10:
        raise ValueError("layer is not a contraction (singular value > 1)")
    sink = (v * np.sqrt(np.clip(w, 0, None))) @ v.conj().T
    return np.vstack([m, sink])


def check_contraction(matrix: np.ndarray, tol: float = 1e-12) -> None:
    s = scipy.linalg.svdvals(np.asarray(matrix, dtype=complex))
    if s.size and s.max() > 1 + tol:
        raise ValueError(f"layer singular value {s.max():.6g} exceeds 1")


def apply_linear_layer(matrix: np.ndarray, state: FockState, *,
                       track_loss: bool = False) -> FockState:
    """Send ``state`` through a (possibly lossy) square layer.

    Photons coupled out by loss either disappear (default, leaving a
    subnormalised state) or, with ``track_loss``, land in ``n`` appended sink
    modes so the result stays normalised.
    """
    m = np.asarray(matrix, dtype=complex)
    if m.shape != (state.n_modes, state.n_modes):
        raise ValueError(f"layer shape {m.shape} does not match {state.n_modes} modes")
    check_contraction(m)
    if track_loss:
        out = propagate(state, loss_dilation(m))
        return FockState(2 * state.n_modes, out, state.n_max)
    return FockState(state.n_modes, propagate(state, m), state.n_max)


def beamsplitter(t: float, r: float | None = None) -> np.ndarray:
    """Two-mode layer ``a -> t a + r b``, ``b -> t b - r a`` (real amplitudes)."""
    if r is None:
        r = math.sqrt(max(0.0, 1 - t * t))
    return np.array([[t, -r], [r, t]], dtype=complex)


__all__ = [
    "AMP_TOL",
    "CutoffError",
    "DEFAULT_N_MAX",
    "FockState",
    "apply_linear_layer",
    "beamsplitter",
    "expand_product",
    "key_from_occupation",
    "loss_dilation",
    "monomials_to_state",
    "occupation",
    "propagate",
]
