"""Mixed-dimension register algebra.

Carriers are ordered with the leftmost carrier most significant, so a ket
``|C2, C1, T>`` on dims ``(2, 2, 3)`` has basis index ``C2*6 + C1*3 + T``.
Gates act on the logical qubit levels {0, 1} of the carriers they touch and
leave any basis state with a targeted level >= 2 untouched.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence, Union

import numpy as np

UNITARY_TOL = 1e-10
EQUAL_TOL = 1e-9


class PlacementError(ValueError):
    """A gate does not fit the register it is placed on."""


class ShapeMismatchError(ValueError):
    pass


@dataclass(frozen=True)
class RegisterShape:
    dims: tuple[int, ...]

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        if not dims:
            raise ValueError("a register needs at least one carrier")
        if any(d < 2 for d in dims):
            raise ValueError(f"carrier dimensions must be >= 2, got {dims}")
        object.__setattr__(self, "dims", dims)

    @property
    def n_carriers(self) -> int:
        return len(self.dims)

    @property
    def total_dim(self) -> int:
        return math.prod(self.dims)

    def index(self, levels: Sequence[int]) -> int:
        if len(levels) != len(self.dims):
            raise ValueError("multi-index length does not match shape")
        idx = 0
        for level, d in zip(levels, self.dims):
            if not 0 <= level < d:
                raise ValueError(f"level {level} out of range for dimension {d}")
            idx = idx * d + int(level)
        return idx

    def levels(self, index: int) -> tuple[int, ...]:
        if not 0 <= index < self.total_dim:
            raise ValueError(f"index {index} out of range")
        out = []
        for d in reversed(self.dims):
            index, r = divmod(index, d)
            out.append(r)
        return tuple(reversed(out))

    def all_levels(self) -> np.ndarray:
        """(total_dim, n_carriers) array of multi-indices in basis order."""
        grids = np.indices(self.dims).reshape(len(self.dims), -1)
        return grids.T.copy()

    def with_dim(self, carrier: int, dim: int) -> "RegisterShape":
        dims = list(self.dims)
        dims[carrier] = dim
        return RegisterShape(tuple(dims))


class StateVector:
    """Normalised amplitudes over a register shape."""

    def __init__(self, shape: RegisterShape, amplitudes, *, unnormalized: bool = False):
        amps = np.asarray(amplitudes, dtype=complex).reshape(-1)
        if amps.size != shape.total_dim:
            raise ShapeMismatchError(
                f"{amps.size} amplitudes for total dimension {shape.total_dim}"
            )
        if not unnormalized and abs(np.vdot(amps, amps).real - 1.0) > 1e-9:
            raise ValueError("state vector is not normalised")
        self.shape = shape
        self.amplitudes = amps
        self.unnormalized = unnormalized

    @classmethod
    def basis(cls, shape: RegisterShape, levels: Sequence[int]) -> "StateVector":
        amps = np.zeros(shape.total_dim, dtype=complex)
        amps[shape.index(levels)] = 1.0
        return cls(shape, amps)

    def __repr__(self):
        return f"StateVector(dims={self.shape.dims})"


@dataclass(frozen=True, eq=False)
class GateMatrix:
    """Unitary acting on the logical qubit subspace of ``arity`` carriers."""

    matrix: np.ndarray
    label: str = "U"
    params: tuple[float, ...] = ()

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("gate matrix must be square")
        k = int(round(math.log2(m.shape[0])))
        if 2**k != m.shape[0] or k < 1:
            raise ValueError("gate matrix dimension must be a power of two")
        if not is_unitary(m, UNITARY_TOL):
            raise ValueError(f"gate {self.label} is not unitary")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "params", tuple(float(p) for p in self.params))

    @property
    def arity(self) -> int:
        return int(round(math.log2(self.matrix.shape[0])))

    def dagger(self) -> "GateMatrix":
        label = self.label[:-3] if self.label.endswith("DAG") else self.label + "DAG"
        return GateMatrix(self.matrix.conj().T, label)


@dataclass(frozen=True)
class LevelSwap:
    """Exchange two levels of a single carrier; identity on every other level."""

    a: int
    b: int

    def __post_init__(self):
        if self.a == self.b or self.a < 0 or self.b < 0:
            raise ValueError(f"invalid level pair ({self.a}, {self.b})")

    @property
    def label(self) -> str:
        return f"SWAP{self.a}{self.b}"


Gate = Union[GateMatrix, LevelSwap]


@dataclass(frozen=True)
class PlacedGate:
    gate: Gate
    targets: tuple[int, ...]
    controls: tuple[tuple[int, int], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "targets", tuple(int(t) for t in self.targets))
        object.__setattr__(
            self, "controls", tuple((int(c), int(v)) for c, v in self.controls)
        )
        if len(set(self.targets)) != len(self.targets):
            raise PlacementError("target indices must be distinct")
        for _, v in self.controls:
            if v not in (0, 1):
                raise PlacementError("control values must be 0 or 1")
        control_carriers = [c for c, _ in self.controls]
        if len(set(control_carriers)) != len(control_carriers):
            raise PlacementError("duplicate control carrier")
        if set(control_carriers) & set(self.targets):
            raise PlacementError("a carrier cannot be both control and target")
        if isinstance(self.gate, LevelSwap):
            if len(self.targets) != 1 or self.controls:
                raise PlacementError("a level swap acts on exactly one carrier")
        elif self.gate.arity != len(self.targets):
            raise PlacementError(
                f"{self.gate.label} has arity {self.gate.arity} but "
                f"{len(self.targets)} targets"
            )

    @property
    def carriers(self) -> tuple[int, ...]:
        return tuple(c for c, _ in self.controls) + self.targets

    @property
    def n_carriers(self) -> int:
        return len(self.carriers)

    def validate(self, shape: RegisterShape) -> None:
        for c in self.carriers:
            if not 0 <= c < shape.n_carriers:
                raise PlacementError(f"carrier {c} out of range for {shape.dims}")
        if isinstance(self.gate, LevelSwap):
            d = shape.dims[self.targets[0]]
            if max(self.gate.a, self.gate.b) >= d:
                raise PlacementError(
                    f"{self.gate.label} needs dimension > {max(self.gate.a, self.gate.b)}"
                )


@dataclass(frozen=True)
class Circuit:
    shape: RegisterShape
    gates: tuple[PlacedGate, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))
        for g in self.gates:
            g.validate(self.shape)

    def then(self, other: "Circuit | Iterable[PlacedGate]") -> "Circuit":
        """Circuit running ``self`` first, then ``other``."""
        if isinstance(other, Circuit):
            if other.shape != self.shape:
                raise ShapeMismatchError("cannot compose circuits of different shapes")
            other = other.gates
        return Circuit(self.shape, self.gates + tuple(other))

    def __len__(self):
        return len(self.gates)

    def two_qubit_gate_count(self) -> int:
        return sum(1 for g in self.gates if g.n_carriers == 2)

    def single_carrier_gate_count(self) -> int:
        return sum(1 for g in self.gates if g.n_carriers == 1)

    def multi_carrier_gate_count(self) -> int:
        return sum(1 for g in self.gates if g.n_carriers > 2)


def is_unitary(m: np.ndarray, tol: float = EQUAL_TOL) -> bool:
    m = np.asarray(m)
    return bool(np.max(np.abs(m.conj().T @ m - np.eye(m.shape[0]))) <= tol)


def embed_gate(g: PlacedGate, shape: RegisterShape) -> np.ndarray:
    """Full-space unitary of a placed gate."""
    g.validate(shape)
    dim = shape.total_dim
    levels = shape.all_levels()

    if isinstance(g.gate, LevelSwap):
        t = g.targets[0]
        a, b = g.gate.a, g.gate.b
        new = levels.copy()
        col = new[:, t]
        swapped = np.where(col == a, b, np.where(col == b, a, col))
        new[:, t] = swapped
        dest = np.ravel_multi_index(new.T, shape.dims)
        u = np.zeros((dim, dim), dtype=complex)
        u[dest, np.arange(dim)] = 1.0
        return u

    targets = list(g.targets)
    active = np.all(levels[:, targets] <= 1, axis=1)
    for c, v in g.controls:
        active &= levels[:, c] == v

    u = np.eye(dim, dtype=complex)
    m = g.gate.matrix
    k = len(targets)
    # logical sub-index of each active basis state over its targets, MSB first
    sub = np.zeros(dim, dtype=int)
    for t in targets:
        sub = sub * 2 + levels[:, t]
    rest = levels.copy()
    rest[:, targets] = 0
    rest_key = np.ravel_multi_index(rest.T, shape.dims)

    blocks: dict[int, np.ndarray] = {}
    for i in np.flatnonzero(active):
        blocks.setdefault(int(rest_key[i]), np.full(2**k, -1, dtype=int))[sub[i]] = i
    for idx in blocks.values():
        u[np.ix_(idx, idx)] = m
    return u


def unitary_of(c: Circuit) -> np.ndarray:
    """Product of the embedded gates, earliest gate rightmost."""
    u = np.eye(c.shape.total_dim, dtype=complex)
    for g in c.gates:
        u = embed_gate(g, c.shape) @ u
    return u


def apply(c: Union[Circuit, PlacedGate], s: StateVector) -> StateVector:
    if isinstance(c, PlacedGate):
        out = embed_gate(c, s.shape) @ s.amplitudes
    else:
        if c.shape != s.shape:
            raise ShapeMismatchError(f"circuit {c.shape.dims} vs state {s.shape.dims}")
        out = s.amplitudes
        for g in c.gates:
            out = embed_gate(g, c.shape) @ out
    return StateVector(s.shape, out, unnormalized=s.unnormalized)


def equal_up_to_global_phase(u, v, tol: float = EQUAL_TOL) -> bool:
    u = np.asarray(u, dtype=complex)
    v = np.asarray(v, dtype=complex)
    if u.shape != v.shape:
        raise ShapeMismatchError(f"{u.shape} vs {v.shape}")
    k = np.unravel_index(np.argmax(np.abs(v)), v.shape)
    if abs(v[k]) == 0:
        return bool(np.max(np.abs(u)) <= tol)
    c = u[k] / v[k]
    if abs(c) == 0:
        return False
    c /= abs(c)
    return bool(np.max(np.abs(u - c * v)) <= tol)


def max_deviation_up_to_phase(u, v) -> float:
    u = np.asarray(u, dtype=complex)
    v = np.asarray(v, dtype=complex)
    k = np.unravel_index(np.argmax(np.abs(v)), v.shape)
    c = u[k] / v[k] if abs(v[k]) else 1.0
    c = c / abs(c) if abs(c) else 1.0
    return float(np.max(np.abs(u - c * v)))


@dataclass(frozen=True)
class LocalPhases:
    """Per-carrier Z_phi angles and a global phase with (x) Z_phi . U = phase . V."""

    angles: tuple[float, ...]
    global_phase: complex


def local_phase_equivalence(u, v, n_qubits: int | None = None, tol: float = 1e-8):
    """Find single-qubit Z rotations taking diagonal ``u`` to ``v`` up to a phase.

    Returns ``None`` when no assignment exists. The phase exponents satisfy
    ``arg v_k - arg u_k = g + sum_i b_i(k) phi_i (mod 2 pi)`` for every basis
    index ``k``; with the first basis state fixing ``g`` the angles follow from
    the single-excitation states and the rest are checked.
    """
    u = np.asarray(u, dtype=complex)
    v = np.asarray(v, dtype=complex)
    if u.shape != v.shape:
        raise ShapeMismatchError(f"{u.shape} vs {v.shape}")
    for m in (u, v):
        if np.max(np.abs(m - np.diag(np.diag(m)))) > tol:
            raise ValueError("local_phase_equivalence needs diagonal unitaries")
    du, dv = np.diag(u), np.diag(v)
    dim = du.size
    n = n_qubits if n_qubits is not None else int(round(math.log2(dim)))
    if 2**n != dim:
        raise ValueError("diagonal length is not 2**n")
    if np.any(np.abs(np.abs(du) - np.abs(dv)) > tol):
        return None
    ratio = dv / du
    g = ratio[0]
    angles = []
    for i in range(n):
        k = 1 << (n - 1 - i)
        angles.append(float(np.angle(ratio[k] / g)))
    bits = (np.arange(dim)[:, None] >> np.arange(n - 1, -1, -1)[None, :]) & 1
    predicted = g * np.exp(1j * bits @ np.array(angles))
    if np.max(np.abs(predicted - ratio)) > tol:
        return None
    return LocalPhases(tuple(angles), complex(1.0 / g))


def local_z(angles: Sequence[float]) -> np.ndarray:
    out = np.ones(1, dtype=complex)
    for a in angles:
        out = np.kron(out, np.array([1.0, np.exp(1j * a)]))
    return np.diag(out)
