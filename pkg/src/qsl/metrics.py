"""Figures of merit for states, processes and truth tables."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

PSD_TOL = 1e-8
EIG_CUT = 1e-13  # eigenvalues below this are rounding noise

_Y2 = np.array([[0, -1j], [1j, 0]])
_YY = np.kron(_Y2, _Y2)


class MetricError(ValueError):
    pass


def _hermitian(m) -> np.ndarray:
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise MetricError(f"expected a square matrix, got shape {m.shape}")
    return (m + m.conj().T) / 2


def _psd_sqrt(m: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(m)
    if w.min() < -PSD_TOL:
        raise MetricError(f"matrix is not positive semidefinite (eigenvalue {w.min():.3g})")
    w = np.where(w > EIG_CUT * max(w.max(), 1.0), w, 0.0)
    return (v * np.sqrt(w)) @ v.conj().T


def fidelity(rho, sigma) -> float:
    """Uhlmann fidelity ``(Tr sqrt(sqrt(rho) sigma sqrt(rho)))**2``."""
    rho, sigma = _hermitian(rho), _hermitian(sigma)
    if rho.shape != sigma.shape:
        raise MetricError("dimension mismatch")
    s = _psd_sqrt(rho)
    inner = _hermitian(s @ sigma @ s)
    w = np.linalg.eigvalsh(inner)
    if w.min() < -PSD_TOL:
        raise MetricError("sigma is not positive semidefinite")
    w = np.where(w > EIG_CUT * max(w.max(), 1.0), w, 0.0)
    return float(min(1.0, np.sum(np.sqrt(w)) ** 2))


def purity(rho) -> float:
    rho = _hermitian(rho)
    return float(np.real(np.trace(rho @ rho)))


def linear_entropy(rho) -> float:
    """``d (1 - Tr rho^2) / (d - 1)``: 0 for pure states, 1 for the maximally mixed state."""
    rho = _hermitian(rho)
    d = rho.shape[0]
    if d < 2:
        raise MetricError("linear entropy needs d >= 2")
    return d * (1 - purity(rho)) / (d - 1)


def concurrence(rho) -> float:
    rho = _hermitian(rho)
    if rho.shape != (4, 4):
        raise MetricError("concurrence is defined for two-qubit states")
    tilde = _YY @ rho.conj() @ _YY
    ev = np.linalg.eigvals(rho @ tilde)
    lam = np.sort(np.sqrt(np.clip(ev.real, 0, None)))[::-1]
    return float(max(0.0, lam[0] - lam[1] - lam[2] - lam[3]))


def tangle(rho) -> float:
    """Squared concurrence of a two-qubit density matrix."""
    return concurrence(rho) ** 2


def werner_state(v: float) -> np.ndarray:
    """``v |Psi-><Psi-| + (1 - v) I/4``."""
    psi = np.array([0, 1, -1, 0]) / math.sqrt(2)
    return v * np.outer(psi, psi) + (1 - v) * np.eye(4) / 4


# -- truth tables -----------------------------------------------------------------

class TruthTableError(RuntimeError):
    pass


@dataclass(frozen=True)
class TruthTable:
    """Row-stochastic table ``M[input, output]`` in big-endian qubit order."""

    matrix: np.ndarray
    qubit_count: int
    errors: np.ndarray | None = None

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        d = 2**self.qubit_count
        if m.shape != (d, d):
            raise ValueError(f"table must be {d}x{d}, got {m.shape}")
        if np.any(m < -1e-12) or np.any(m > 1 + 1e-12):
            raise ValueError("table entries must lie in [0, 1]")
        if np.any(np.abs(m.sum(axis=1) - 1) > 1e-6):
            raise ValueError("rows must sum to 1")
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


def normalize_rows(m) -> np.ndarray:
    m = np.asarray(m, dtype=float)
    tot = m.sum(axis=1, keepdims=True)
    if np.any(tot <= 0):
        raise TruthTableError("a row has no events")
    return m / tot


def truth_table(runner: Callable[[int], Sequence[float]], qubit_count: int) -> TruthTable:
    """Tabulate ``runner(j)`` (output estimates for basis input ``j``), normalising rows."""
    d = 2**qubit_count
    rows = []
    for j in range(d):
        try:
            row = np.asarray(runner(j), dtype=float)
        except Exception as e:  # runner failures are reported with the input index
            raise TruthTableError(f"runner failed on input {j}: {e}") from e
        if row.shape != (d,):
            raise TruthTableError(f"runner returned shape {row.shape} for input {j}")
        rows.append(row)
    return TruthTable(normalize_rows(rows), qubit_count)


def ideal_truth_table(u) -> TruthTable:
    u = np.asarray(u, dtype=complex)
    n = int(round(math.log2(u.shape[0])))
    return TruthTable((np.abs(u) ** 2).T, n)


def inquisition(m_exp, m_ideal) -> float:
    """Mean probability of the ideal output, ``Tr(M_exp M_ideal^T) / d``."""
    a = np.asarray(getattr(m_exp, "matrix", m_exp), dtype=float)
    b = np.asarray(getattr(m_ideal, "matrix", m_ideal), dtype=float)
    if a.shape != b.shape or a.shape[0] != a.shape[1]:
        raise MetricError(f"dimension mismatch {a.shape} vs {b.shape}")
    return float(np.trace(a @ b.T) / a.shape[0])


def flipping_contrast(p_ideal: float, p_flip: float) -> float:
    """``(1 + (P_ideal - P_flip) / (P_ideal + P_flip)) / 2``."""
    if p_ideal < 0 or p_flip < 0:
        raise MetricError("probabilities must be non-negative")
    tot = p_ideal + p_flip
    if tot <= 0:
        raise MetricError("both probabilities are zero")
    return 0.5 * (1 + (p_ideal - p_flip) / tot)


def control_contrasts(table, ideal) -> dict[tuple[int, ...], float]:
    """Flipping contrast per control pattern, averaged over the target inputs.

    The target is the least significant qubit.  For each input, ``P_ideal`` is
    the probability of the ideal output and ``P_flip`` that of the same output
    with the target bit inverted.
    """
    m = np.asarray(getattr(table, "matrix", table), dtype=float)
    mi = np.asarray(getattr(ideal, "matrix", ideal), dtype=float)
    d = m.shape[0]
    n = int(round(math.log2(d)))
    out = {}
    for ctrl in range(d // 2):
        vals = []
        for t in (0, 1):
            j = 2 * ctrl + t
            k = int(np.argmax(mi[j]))
            vals.append(flipping_contrast(m[j, k], m[j, k ^ 1]))
        bits = tuple((ctrl >> (n - 2 - i)) & 1 for i in range(n - 1))
        out[bits] = float(np.mean(vals))
    return out


__all__ = [
    "MetricError",
    "TruthTable",
    "TruthTableError",
    "concurrence",
    "control_contrasts",
    "fidelity",
    "flipping_contrast",
    "ideal_truth_table",
    "inquisition",
    "linear_entropy",
    "normalize_rows",
    "purity",
    "tangle",
    "truth_table",
    "werner_state",
]
