"""State and process reconstruction from six-state projective counts.

State tomography fits ``Tr(Pi_s rho)`` to the group-normalised frequencies
by least squares restricted to density matrices (projected, accelerated
gradient descent; the projection is eigenvalue clipping onto the simplex).
Process tomography inverts the input/output relation of an informationally
complete preparation set and expresses the map in the Pauli basis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import reduce
from itertools import product
from typing import Callable, Mapping, Sequence

import numpy as np

from .metrics import fidelity
from .optics.elements import PROJECTORS
from .records import CountRecord, MeasurementSetting, group_records, tomography_settings

PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}
DEFAULT_PREPARATIONS = ("H", "V", "D", "R")


class TomographyError(ValueError):
    pass


# -- helpers -------------------------------------------------------------------------

def ket(label: str) -> np.ndarray:
    return reduce(np.kron, [PROJECTORS[c] for c in label])


def density(label: str) -> np.ndarray:
    v = ket(label)
    return np.outer(v, v.conj())


def projector(setting: MeasurementSetting) -> np.ndarray:
    ops = [np.eye(2) if p is None else np.outer(PROJECTORS[p], PROJECTORS[p].conj())
           for p in setting.projectors]
    return reduce(np.kron, ops)


def pauli_basis(n_qubits: int) -> list[tuple[str, np.ndarray]]:
    """``{I,X,Y,Z}^n`` with the first qubit most significant."""
    out = []
    for names in product("IXYZ", repeat=n_qubits):
        out.append(("".join(names), reduce(np.kron, [PAULI[c] for c in names])))
    return out


def project_to_density(m: np.ndarray) -> np.ndarray:
    """Closest (Frobenius) Hermitian PSD unit-trace matrix."""
    m = (np.asarray(m, dtype=complex) + np.asarray(m, dtype=complex).conj().T) / 2
    w, v = np.linalg.eigh(m)
    # Euclidean projection of the spectrum onto the probability simplex
    u = np.sort(w)[::-1]
    css = np.cumsum(u)
    k = np.arange(1, len(u) + 1)
    rho = k[u - (css - 1) / k > 0][-1]
    tau = (css[rho - 1] - 1) / rho
    lam = np.clip(w - tau, 0, None)
    return (v * lam) @ v.conj().T


# -- state tomography ----------------------------------------------------------------

def frequencies(records: Sequence[CountRecord]) -> list[tuple[MeasurementSetting, float]]:
    """Counts normalised within each complete outcome group (same analysis bases)."""
    groups: dict[str, list[CountRecord]] = {}
    for r in records:
        groups.setdefault(r.setting.bases, []).append(r)
    out = []
    for bases, recs in groups.items():
        tot = sum(r.counts for r in recs)
        if tot == 0:
            continue
        for r in recs:
            out.append((r.setting, r.counts / tot))
    if not out:
        raise TomographyError("all counts are zero")
    return out


def _check_complete(records: Sequence[CountRecord], n_qubits: int) -> None:
    have = {r.setting.spec for r in records}
    missing = [s.spec for s in tomography_settings(n_qubits) if s.spec not in have]
    if missing:
        raise TomographyError(f"missing {len(missing)} settings, e.g. {missing[:3]}")


@dataclass(frozen=True)
class StateEstimate:
    rho: np.ndarray
    iterations: int
    residual: float


def _design(settings: Sequence[MeasurementSetting]) -> np.ndarray:
    # Tr(P rho) = vec(P^T) . vec(rho)
    return np.array([projector(s).T.reshape(-1) for s in settings])


def fit_density(settings: Sequence[MeasurementSetting], freqs: Sequence[float], *,
                max_iter: int = 5000, tol: float = 1e-13, method: str = "lsq") -> StateEstimate:
    """Constrained least squares ``min sum_s (Tr(Pi_s rho) - f_s)^2`` over density matrices.

    ``method="mle"`` follows with iterative likelihood refinement (R rho R).
    """
    a = _design(settings)
    f = np.asarray(freqs, dtype=float)
    d = int(round(math.sqrt(a.shape[1])))
    x0, *_ = np.linalg.lstsq(a, f.astype(complex), rcond=None)
    rho = project_to_density(x0.reshape(d, d))
    lip = 2 * np.linalg.eigvalsh(a.conj().T @ a).max()
    pis = a.reshape(len(f), d, d).transpose(0, 2, 1)  # Pi_s

    def grad(r):
        res = np.real(a @ r.reshape(-1)) - f
        return 2 * np.einsum("s,sij->ij", res, pis)

    y, t = rho.copy(), 1.0
    it = 0
    for it in range(1, max_iter + 1):
        new = project_to_density(y - grad(y) / lip)
        t_new = (1 + math.sqrt(1 + 4 * t * t)) / 2
        y = new + ((t - 1) / t_new) * (new - rho)
        step = np.linalg.norm(new - rho)
        rho, t = new, t_new
        if step < tol:
            break
    if method == "mle":
        rho = _mle_refine(pis, f, rho)
    elif method != "lsq":
        raise ValueError(f"unknown method {method!r}")
    res = float(np.sum((np.real(a @ rho.reshape(-1)) - f) ** 2))
    return StateEstimate(rho, it, res)


def _mle_refine(pis: np.ndarray, f: np.ndarray, rho: np.ndarray, iters: int = 500) -> np.ndarray:
    d = rho.shape[0]
    rho = 0.999 * rho + 0.001 * np.eye(d) / d
    for _ in range(iters):
        p = np.clip(np.real(np.einsum("sij,ji->s", pis, rho)), 1e-15, None)
        r = np.einsum("s,sij->ij", f / p, pis)
        rho = r @ rho @ r
        rho = rho / np.trace(rho).real
    return project_to_density(rho)


def state_tomography(records: Sequence[CountRecord], n_qubits: int | None = None,
                     method: str = "lsq") -> np.ndarray:
    """Density matrix from the complete six-state set of one preparation."""
    if not records:
        raise TomographyError("no records")
    preps = {r.prep for r in records}
    if len(preps) != 1:
        raise TomographyError(f"records mix preparations {sorted(preps)}")
    # unanalysed qubits are ignored; the estimate covers the analysed ones
    keep = [i for i, p in enumerate(records[0].setting.projectors) if p is not None]
    recs = []
    for r in records:
        proj = tuple(p for p in r.setting.projectors if p is not None)
        if [i for i, p in enumerate(r.setting.projectors) if p is not None] != keep:
            raise TomographyError("records analyse different qubits")
        recs.append(CountRecord(r.prep, MeasurementSetting(proj), r.shots, r.counts))
    n = len(keep) if n_qubits is None else n_qubits
    _check_complete(recs, n)
    pairs = frequencies(recs)
    return fit_density([s for s, _ in pairs], [f for _, f in pairs], method=method).rho


def simulate_state_counts(rho: np.ndarray, shots: int, rng: np.random.Generator,
                          prep: str = "state") -> list[CountRecord]:
    """Poisson counts for all six-state settings of ``rho``."""
    n = int(round(math.log2(rho.shape[0])))
    out = []
    for s in tomography_settings(n):
        p = max(0.0, float(np.real(np.trace(projector(s) @ rho))))
        out.append(CountRecord(prep, s, shots, int(rng.poisson(shots * p))))
    return out


# -- process tomography --------------------------------------------------------------

@dataclass(frozen=True)
class ProcessEstimate:
    """Pauli-basis process matrix, plus the renormalised success probability if known."""

    chi: np.ndarray
    labels: tuple[str, ...]
    raw_chi: np.ndarray
    success_probability: float | None = None
    trace_residual: float = 0.0

    def fidelity(self, chi_ideal: np.ndarray) -> float:
        return process_fidelity(self.chi, chi_ideal)


def superoperator(inputs: Sequence[np.ndarray], outputs: Sequence[np.ndarray]) -> np.ndarray:
    """Linear map ``S`` with ``vec(E(rho)) = S vec(rho)`` (column stacking)."""
    a = np.array([np.asarray(r).reshape(-1, order="F") for r in inputs]).T
    b = np.array([np.asarray(r).reshape(-1, order="F") for r in outputs]).T
    d2 = a.shape[0]
    if np.linalg.matrix_rank(a, tol=1e-9) < d2:
        raise TomographyError("preparation set is not informationally complete")
    return b @ np.linalg.pinv(a)


def chi_from_superoperator(s: np.ndarray) -> tuple[np.ndarray, tuple[str, ...]]:
    d = int(round(math.sqrt(s.shape[0])))
    n = int(round(math.log2(d)))
    basis = pauli_basis(n)
    labels = tuple(name for name, _ in basis)
    # S = sum_mn chi_mn conj(P_n) (x) P_m ; these d^2 operators are orthogonal with norm^2 d^2
    m = len(basis)
    chi = np.zeros((m, m), dtype=complex)
    for i, (_, pm) in enumerate(basis):
        for j, (_, pn) in enumerate(basis):
            op = np.kron(pn.conj(), pm)
            chi[i, j] = np.vdot(op, s) / d**2
    return chi, labels


def chi_from_kraus(kraus: Sequence[np.ndarray]) -> np.ndarray:
    """Process matrix of ``rho -> sum K rho K^dagger``."""
    d = kraus[0].shape[0]
    n = int(round(math.log2(d)))
    basis = pauli_basis(n)
    coeffs = np.array([[np.trace(p.conj().T @ k) / d for _, p in basis] for k in kraus])
    return coeffs.T @ coeffs.conj()


def chi_of_unitary(u: np.ndarray) -> np.ndarray:
    return chi_from_kraus([np.asarray(u, dtype=complex)])


def project_chi(chi: np.ndarray) -> np.ndarray:
    """Closest (Frobenius) PSD matrix of unit trace.

    Projecting onto the cone and the trace constraint together shifts the
    spectrum before clipping, so shot noise in the many null directions is
    removed instead of accumulating as spurious positive weight.
    """
    return project_to_density(chi)


def process_fidelity(chi: np.ndarray, chi_ideal: np.ndarray) -> float:
    return fidelity(chi / np.trace(chi).real, chi_ideal / np.trace(chi_ideal).real)


def process_tomography(outputs: Mapping[str, np.ndarray],
                       success_probability: float | None = None) -> ProcessEstimate:
    """Pauli-basis chi from reconstructed output states keyed by preparation label.

    Outputs are taken as normalised states, i.e. a heralded map is
    renormalised; ``success_probability`` is carried along for reporting.
    """
    if not outputs:
        raise TomographyError("no preparations")
    labels = sorted(outputs)
    inputs = [density(lbl) for lbl in labels]
    outs = []
    for lbl in labels:
        r = np.asarray(outputs[lbl], dtype=complex)
        outs.append(r / np.trace(r).real)
    s = superoperator(inputs, outs)
    raw, names = chi_from_superoperator(s)
    d = inputs[0].shape[0]
    # trace preservation: sum_mn chi_mn P_n^dag P_m = I
    basis = [p for _, p in pauli_basis(int(round(math.log2(d))))]
    tp = sum(raw[i, j] * basis[j].conj().T @ basis[i] for i in range(len(basis)) for j in range(len(basis)))
    resid = float(np.abs(tp - np.eye(d)).max())
    return ProcessEstimate(project_chi(raw), names, raw, success_probability, resid)


def preparation_labels(n_qubits: int, states: Sequence[str] = DEFAULT_PREPARATIONS) -> list[str]:
    return ["".join(p) for p in product(states, repeat=n_qubits)]


def process_tomography_from_records(records: Sequence[CountRecord], method: str = "lsq",
                                    success_probability: float | None = None) -> ProcessEstimate:
    grouped = group_records(records)
    outputs = {}
    for prep in grouped:
        recs = [r for r in records if r.prep == prep]
        outputs[prep] = state_tomography(recs, method=method)
    return process_tomography(outputs, success_probability)


# -- Monte-Carlo error bars ----------------------------------------------------------

@dataclass(frozen=True)
class MonteCarloResult:
    mean: dict[str, float]
    std: dict[str, float]
    n_samples: int
    n_failed: int = 0
    samples: dict[str, list[float]] = field(default_factory=dict, repr=False)

    @property
    def failure_fraction(self) -> float:
        return self.n_failed / self.n_samples if self.n_samples else 0.0


def resample(records: Sequence[CountRecord], rng: np.random.Generator) -> list[CountRecord]:
    counts = rng.poisson([r.counts for r in records])
    return [r.with_counts(int(c)) for r, c in zip(records, counts)]


def monte_carlo_errors(records: Sequence[CountRecord],
                       estimator: Callable[[Sequence[CountRecord]], Mapping[str, float]],
                       n_samples: int, seed: int) -> MonteCarloResult:
    """Poisson-resample every count, re-run ``estimator``, report mean and std.

    Sample ``i`` uses a generator seeded with ``[seed, i]`` and results are
    reduced in index order, so the output does not depend on scheduling.
    Failed resamples are skipped and counted.
    """
    if n_samples < 2:
        raise ValueError("need at least two samples")
    collected: dict[str, list[float]] = {}
    failed = 0
    for i in range(n_samples):
        rng = np.random.default_rng([seed, i])
        try:
            vals = estimator(resample(records, rng))
        except (TomographyError, ValueError, np.linalg.LinAlgError):
            failed += 1
            continue
        for k, v in vals.items():
            collected.setdefault(k, []).append(float(v))
    mean = {k: float(np.mean(v)) for k, v in collected.items()}
    std = {k: float(np.std(v, ddof=1)) if len(v) > 1 else 0.0 for k, v in collected.items()}
    return MonteCarloResult(mean, std, n_samples, failed, collected)


__all__ = [
    "DEFAULT_PREPARATIONS",
    "MonteCarloResult",
    "PAULI",
    "ProcessEstimate",
    "StateEstimate",
    "TomographyError",
    "chi_from_kraus",
    "chi_from_superoperator",
    "chi_of_unitary",
    "density",
    "fit_density",
    "frequencies",
    "ket",
    "monte_carlo_errors",
    "pauli_basis",
    "preparation_labels",
    "process_fidelity",
    "process_tomography",
    "process_tomography_from_records",
    "project_chi",
    "project_to_density",
    "projector",
    "resample",
    "simulate_state_counts",
    "state_tomography",
    "superoperator",
]
