"""Shelving circuits that borrow extra levels of one carrier.

Register layout for every builder here is ``(C_n, ..., C_1, T)``: controls
first with ``C_1`` adjacent to the target, target last.  Fire patterns are
given as ``(p_1, ..., p_n)``, i.e. indexed by control number, not by carrier
position.

Control senses follow one rule throughout: every conjugating ``CX(C_i -> T)``
fires on ``1 - p_i`` and the central gate fires on ``p_n``.  A control that
does not match its pattern bit knocks the target's ``|1>`` down to ``|0>``,
and the next level swap parks it on a fresh shelf where every later
two-qubit gate acts trivially.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np
import scipy.linalg

from . import gates as G
from .qudit import (
    Circuit,
    GateMatrix,
    LevelSwap,
    PlacedGate,
    RegisterShape,
    is_unitary,
    unitary_of,
)


def _check_pattern(p: Sequence[int], n: int) -> tuple[int, ...]:
    p = tuple(int(b) for b in p)
    if len(p) != n:
        raise ValueError(f"fire pattern {p} has length {len(p)}, expected {n}")
    if any(b not in (0, 1) for b in p):
        raise ValueError(f"fire pattern bits must be 0/1, got {p}")
    return p


def _shelf_prefix(target: int, control_carriers: Sequence[int], pattern: Sequence[int],
                  first_level: int = 2) -> list[PlacedGate]:
    gates: list[PlacedGate] = []
    for i, (c, bit) in enumerate(zip(control_carriers, pattern)):
        gates.append(G.swap_levels(target, 0, first_level + i))
        gates.append(G.cx(c, target, 1 - bit))
    return gates


def _sandwich(shape: RegisterShape, prefix: list[PlacedGate],
              center: list[PlacedGate]) -> Circuit:
    return Circuit(shape, tuple(prefix + center + prefix[::-1]))


def build_n_toffoli_sign(n: int, p: Sequence[int]) -> Circuit:
    """n-control Toffoli-sign with 2n-1 two-qubit gates on an (n+1)-level target.

    The result applies -1 to exactly ``|C = p, T = 1>``; n = 1 degenerates to
    a single CZ on a qubit target.
    """
    if n < 1:
        raise ValueError("need at least one control")
    p = _check_pattern(p, n)
    shape = RegisterShape((2,) * n + (n + 1,))
    t = n
    ctrl = [n - i for i in range(1, n + 1)]  # carrier index of C_i
    prefix = _shelf_prefix(t, ctrl[: n - 1], p[: n - 1])
    center = [G.cz(ctrl[n - 1], t, p[n - 1])]
    return _sandwich(shape, prefix, center)


def build_ts() -> Circuit:
    """Three-qubit Toffoli-sign on (C_2, C_1, T) firing on ``|1,0,1>``."""
    return build_n_toffoli_sign(2, (0, 1))


def build_cn_z_theta(n: int, theta: float, p: Sequence[int], *,
                     central_two_qubit: bool = False) -> Circuit:
    """Multi-controlled Z_theta, phase e^{i theta} on ``|C = p, T = 1>``.

    The default shelves once per control (target dimension n+2, 2n two-qubit
    gates).  ``central_two_qubit`` lets the last control drive a CZ_theta
    directly instead (target dimension n+1, 2n-1 two-qubit gates).
    """
    if n < 1:
        raise ValueError("need at least one control")
    p = _check_pattern(p, n)
    ctrl = [n - i for i in range(1, n + 1)]
    t = n
    if central_two_qubit:
        shape = RegisterShape((2,) * n + (n + 1,))
        prefix = _shelf_prefix(t, ctrl[: n - 1], p[: n - 1])
        center = [G.controlled(G.z_theta(theta), ctrl[n - 1], t, p[n - 1])]
    else:
        shape = RegisterShape((2,) * n + (n + 2,))
        prefix = _shelf_prefix(t, ctrl, p)
        center = [G.single(G.z_theta(theta), t)]
    return _sandwich(shape, prefix, center)


def build_cu_theta(theta: float, fire: int = 1) -> Circuit:
    """Controlled-Z_theta on (C_1, T) with a qutrit target.

    ``fire=1`` gives diag(1, 1, 1, e^{i theta}); ``fire=0`` is the orientation
    with plain controls on both CNOTs and gives diag(1, e^{i theta}, 1, 1).
    """
    return build_cn_z_theta(1, theta, (fire,))


@dataclass(frozen=True)
class SpectralDecomposition2x2:
    V: np.ndarray
    theta: float
    alpha: float

    def reconstruct(self) -> np.ndarray:
        return np.exp(1j * self.alpha) * self.V @ G.z_theta_matrix(self.theta) @ self.V.conj().T


def _canonical_phase(v: np.ndarray) -> np.ndarray:
    k = int(np.argmax(np.abs(v) > 1e-12))
    return v * (abs(v[k]) / v[k])


def spectral_decompose_2x2(u) -> SpectralDecomposition2x2:
    """Write ``u = e^{i alpha} V Z_theta V^dagger``.

    The eigenvalue nearest +1 is taken as e^{i alpha}; eigenvector phases are
    fixed so each column's first nonzero entry is real and positive.
    """
    u = np.asarray(u, dtype=complex)
    if u.shape != (2, 2) or not is_unitary(u, 1e-9):
        raise ValueError("spectral_decompose_2x2 needs a 2x2 unitary")
    tri, vecs = scipy.linalg.schur(u, output="complex")
    lam = np.diag(tri)
    order = sorted(range(2), key=lambda i: (abs(np.angle(lam[i])), -lam[i].real, i))
    lam = lam[order]
    vecs = np.column_stack([_canonical_phase(vecs[:, i]) for i in order])
    alpha = float(np.angle(lam[0]))
    theta = float(np.angle(lam[1] / lam[0]))
    if abs(theta + np.pi) < 1e-12:
        theta = float(np.pi)
    dec = SpectralDecomposition2x2(vecs, theta, alpha)
    if np.max(np.abs(dec.reconstruct() - u)) > 1e-9:
        raise ValueError("spectral decomposition failed to reconstruct input")
    return dec


def build_cn_u(n: int, u, p: Sequence[int]) -> tuple[Circuit, float]:
    """C^n(e^{-i alpha} U) by conjugating C^n Z_theta with V; returns (circuit, alpha)."""
    dec = spectral_decompose_2x2(u)
    core = build_cn_z_theta(n, dec.theta, p)
    t = n
    v = G.matrix_gate(dec.V, "V")
    gates = (G.single(v.dagger(), t),) + core.gates + (G.single(v, t),)
    return Circuit(core.shape, gates), dec.alpha


def add_controls(inner: Circuit, n: int, q: Sequence[int], c1: int = 0) -> Circuit:
    """Prepend n control qubits D_n..D_1 to a circuit conditioned on ``C_1 = 1``.

    Carrier ``c1`` of ``inner`` gains n fresh levels above its current
    dimension; the result fires iff ``C_1 = 1`` and every ``D_i = q_i``.
    """
    q = _check_pattern(q, n)
    if n == 0:
        return inner
    for g in inner.gates:
        for c, v in g.controls:
            if c == c1 and v != 1:
                raise ValueError("inner circuit conditions on C_1 = 0; rewrite it first")
    d = inner.shape.dims[c1]
    dims = (2,) * n + inner.shape.with_dim(c1, d + n).dims
    shape = RegisterShape(dims)
    shifted = []
    for g in inner.gates:
        shifted.append(
            PlacedGate(g.gate, tuple(t + n for t in g.targets),
                       tuple((c + n, v) for c, v in g.controls))
        )
    target = c1 + n
    ctrl = [n - i for i in range(1, n + 1)]  # carrier index of D_i
    prefix = _shelf_prefix(target, ctrl, q, first_level=d)
    return Circuit(shape, tuple(prefix + shifted + prefix[::-1]))


def single_control_fixture(k: int) -> tuple[Circuit, np.ndarray]:
    """C^1(U_k): a fixed k-qubit unitary on targets 1..k, fired by ``C_1 = 1`` on carrier 0."""
    if k == 1:
        u = G.z_theta_matrix(np.pi / 3) @ G.H_MAT
    elif k == 2:
        u = np.diag([1, 1, 1, -1]).astype(complex) @ np.kron(G.H_MAT, np.diag([1, 1j]))
    else:
        raise ValueError("fixtures exist for k = 1 and k = 2")
    gate = G.matrix_gate(u, f"U{k}")
    placed = PlacedGate(gate, tuple(range(1, k + 1)), ((0, 1),))
    return Circuit(RegisterShape((2,) * (k + 1)), (placed,)), u


def toffoli_from_ts(flip_pattern: Sequence[int] = (0, 0)) -> Circuit:
    """Toffoli flipping T exactly when ``(C_2, C_1) == flip_pattern``."""
    f2, f1 = _check_pattern(flip_pattern, 2)
    ts = build_ts()
    c2, c1, t = 0, 1, 2
    pre = [G.single(G.H, t)]
    if f2 != 1:
        pre.append(G.single(G.X, c2))
    if f1 != 0:
        pre.append(G.single(G.X, c1))
    return Circuit(ts.shape, tuple(pre) + ts.gates + tuple(pre[::-1]))


def textbook_toffoli_6cnot() -> Circuit:
    """Qubit-only Toffoli on (C_2, C_1, T) from H, T, T^dagger and six CNOTs."""
    a, b, c = 0, 1, 2
    seq = [
        G.single(G.H, c),
        G.cx(b, c), G.single(G.TDG, c),
        G.cx(a, c), G.single(G.T, c),
        G.cx(b, c), G.single(G.TDG, c),
        G.cx(a, c), G.single(G.T, b), G.single(G.T, c),
        G.single(G.H, c),
        G.cx(a, b), G.single(G.T, a), G.single(G.TDG, b),
        G.cx(a, b),
    ]
    return Circuit(RegisterShape((2, 2, 2)), tuple(seq))


def ideal_multi_controlled(n: int, gate, p: Sequence[int]) -> np.ndarray:
    """Direct block-diagonal construction: ``gate`` on the target iff controls == p.

    Layout is (C_n, ..., C_1, target qubits) with ``p = (p_1, ..., p_n)``.
    """
    p = _check_pattern(p, n)
    m = gate.matrix if isinstance(gate, GateMatrix) else np.asarray(gate, dtype=complex)
    k = m.shape[0]
    fire = sum(bit << (i) for i, bit in enumerate(p))  # C_1 least significant
    blocks = [m if c == fire else np.eye(k) for c in range(2**n)]
    return scipy.linalg.block_diag(*blocks).astype(complex)


def qubit_indices(shape: RegisterShape) -> np.ndarray:
    """Basis indices whose every carrier sits in {0, 1}, in qubit order."""
    levels = shape.all_levels()
    return np.flatnonzero(np.all(levels <= 1, axis=1))


def restrict_to_qubits(u: np.ndarray, shape: RegisterShape) -> np.ndarray:
    idx = qubit_indices(shape)
    return u[np.ix_(idx, idx)]


def leakage(u: np.ndarray, shape: RegisterShape) -> float:
    """Largest amplitude moving between the qubit subspace and the shelf levels."""
    idx = qubit_indices(shape)
    mask = np.ones(shape.total_dim, dtype=bool)
    mask[idx] = False
    if not mask.any():
        return 0.0
    return float(max(np.max(np.abs(u[np.ix_(mask, idx)])),
                     np.max(np.abs(u[np.ix_(idx, mask)]))))


def shelf_deviation(u: np.ndarray, shape: RegisterShape) -> float:
    """Max deviation from identity on rows/columns touching a shelf level.

    Shelving circuits swap shelf inputs into the logical levels while they
    run, so this is generally nonzero; :func:`leakage` is the quantity that
    vanishes for a correct construction.
    """
    idx = qubit_indices(shape)
    mask = np.ones(shape.total_dim, dtype=bool)
    mask[idx] = False
    eye = np.eye(shape.total_dim)
    if not mask.any():
        return 0.0
    dev_rows = np.max(np.abs(u[mask, :] - eye[mask, :]))
    dev_cols = np.max(np.abs(u[:, mask] - eye[:, mask]))
    return float(max(dev_rows, dev_cols))


@dataclass(frozen=True)
class CostReport:
    two_qubit_gate_count: int
    single_carrier_gate_count: int
    max_carrier_dimension: int
    ancilla_count: int
    multi_carrier_gate_count: int = 0

    def as_dict(self) -> dict:
        return asdict(self)


def cost_of(c: Circuit) -> CostReport:
    return CostReport(
        two_qubit_gate_count=c.two_qubit_gate_count(),
        single_carrier_gate_count=c.single_carrier_gate_count(),
        max_carrier_dimension=max(c.shape.dims),
        ancilla_count=0,
        multi_carrier_gate_count=c.multi_carrier_gate_count(),
    )


# Qubit-only textbook decomposition with (n - 1) ancillas; at n = 5 the usual
# side-by-side comparison rounds both kinds to this figure.
QUBIT_ONLY_N5_REFERENCE = 50


def qubit_only_cost(kind: str, n: int) -> CostReport:
    if n < 2:
        raise ValueError("qubit-only cost formulas need n >= 2")
    if kind == "nT":
        count = 12 * n - 11
    elif kind == "cnU":
        count = 12 * n - 10
    else:
        raise ValueError(f"unknown kind {kind!r}; expected 'nT' or 'cnU'")
    return CostReport(
        two_qubit_gate_count=count,
        single_carrier_gate_count=0,
        max_carrier_dimension=2,
        ancilla_count=n - 1,
    )


def shortcut_cost(kind: str, n: int) -> CostReport:
    """Cost of the shelving construction for the same job."""
    if kind == "nT":
        return cost_of(build_n_toffoli_sign(n, (1,) * n))
    if kind == "cnU":
        return cost_of(build_cn_z_theta(n, np.pi / 2, (1,) * n))
    raise ValueError(f"unknown kind {kind!r}")


def circuit_unitary_restricted(c: Circuit) -> np.ndarray:
    return restrict_to_qubits(unitary_of(c), c.shape)


__all__ = [
    "CostReport",
    "LevelSwap",
    "QUBIT_ONLY_N5_REFERENCE",
    "SpectralDecomposition2x2",
    "add_controls",
    "build_cn_u",
    "build_cn_z_theta",
    "build_cu_theta",
    "build_n_toffoli_sign",
    "build_ts",
    "circuit_unitary_restricted",
    "cost_of",
    "ideal_multi_controlled",
    "leakage",
    "qubit_indices",
    "qubit_only_cost",
    "restrict_to_qubits",
    "shelf_deviation",
    "shortcut_cost",
    "single_control_fixture",
    "spectral_decompose_2x2",
    "textbook_toffoli_6cnot",
    "toffoli_from_ts",
]
