"""Standard gate matrices and placement helpers."""

from __future__ import annotations

import numpy as np

from .qudit import GateMatrix, LevelSwap, PlacedGate

_S2 = 1 / np.sqrt(2)

I2 = np.eye(2, dtype=complex)
X_MAT = np.array([[0, 1], [1, 0]], dtype=complex)
Y_MAT = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z_MAT = np.array([[1, 0], [0, -1]], dtype=complex)
H_MAT = np.array([[1, 1], [1, -1]], dtype=complex) * _S2

I = GateMatrix(I2, "I")
X = GateMatrix(X_MAT, "X")
Y = GateMatrix(Y_MAT, "Y")
Z = GateMatrix(Z_MAT, "Z")
H = GateMatrix(H_MAT, "H")
S = GateMatrix(np.diag([1, 1j]), "S")
T = GateMatrix(np.diag([1, np.exp(1j * np.pi / 4)]), "T")
TDG = GateMatrix(np.diag([1, np.exp(-1j * np.pi / 4)]), "TDG")

NAMED = {g.label: g for g in (I, X, Y, Z, H, S, T, TDG)}


def z_theta_matrix(theta: float) -> np.ndarray:
    return np.diag([1.0, np.exp(1j * theta)])


def z_theta(theta: float) -> GateMatrix:
    return GateMatrix(z_theta_matrix(theta), "ZTHETA", (theta,))


def matrix_gate(m, label: str = "U") -> GateMatrix:
    return GateMatrix(np.asarray(m, dtype=complex), label)


def swap_levels(carrier: int, a: int, b: int) -> PlacedGate:
    return PlacedGate(LevelSwap(a, b), (carrier,))


def single(gate: GateMatrix, carrier: int) -> PlacedGate:
    return PlacedGate(gate, (carrier,))


def controlled(gate: GateMatrix, control: int, target: int, value: int = 1) -> PlacedGate:
    return PlacedGate(gate, (target,), ((control, value),))


def cx(control: int, target: int, value: int = 1) -> PlacedGate:
    return controlled(X, control, target, value)


def cz(control: int, target: int, value: int = 1) -> PlacedGate:
    return controlled(Z, control, target, value)
