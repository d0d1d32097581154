"""Concrete heralded-gate layouts and the attenuation balancing search.

Polarisation encodes the logical value (H=0, V=1).  The target photon of the
CU and Toffoli layouts is expanded at a polarising beamsplitter: its H part
is parked on a bottom rail that bypasses all interference, only the V part
meets the control photons, and a polariser plus a recombining PBS bring both
parts back into one output mode (non-deterministically, heralded by a
detection there).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from importlib import resources

import numpy as np
import scipy.optimize

from ..gates import H_MAT, z_theta_matrix
from .elements import (
    SQRT_THIRD,
    H,
    V,
    Detector,
    HeraldPattern,
    LogicalQubit,
    attenuator,
    partially_polarizing_bs,
    pbs_exchange,
    pol_unitary,
    polarizer,
)
from .experiment import HeraldError, OpticalExperiment, heralded_map

FIXTURE = "balanced_layouts.json"


def _qubit_herald(*spatial: str) -> HeraldPattern:
    return HeraldPattern(tuple(Detector(f"D{i + 1}", s) for i, s in enumerate(spatial)))


def identity_layout(n_qubits: int = 2) -> OpticalExperiment:
    """Lossless pass-through: every qubit goes straight to its detector."""
    names = [f"q{i}" for i in range(n_qubits)]
    trig = ["trig"] if n_qubits % 2 else []
    modes = names + trig
    pairs = [tuple(modes[i:i + 2]) for i in range(0, len(modes), 2)]
    return OpticalExperiment(
        name="identity",
        spatial_modes=tuple(modes),
        qubits=tuple(LogicalQubit(n, n, n) for n in names),
        passes=tuple(pairs),
        layers=(attenuator(names[0], (H, V), "free"),),
        herald=_qubit_herald(*modes),
        attenuations={"free": 1.0},
        target=np.eye(2**n_qubits),
    )


def ppbs_cz_layout(balance: float | None = SQRT_THIRD) -> OpticalExperiment:
    """Two photons from one pass meet at a PPBS; H light is attenuated on both rails.

    ``balance`` sets both H-attenuator slots; pass ``None`` to leave them at 1
    as the starting point for :func:`balance_attenuations`.
    """
    a = 1.0 if balance is None else float(balance)
    layers = (
        partially_polarizing_bs("c", "t", name="PPBS"),
        attenuator("c", (H,), "Lc"),
        attenuator("t", (H,), "Lt"),
    )
    return OpticalExperiment(
        name="cz",
        spatial_modes=("c", "t"),
        qubits=(LogicalQubit("C1", "c", "c"), LogicalQubit("T", "t", "t")),
        passes=(("c", "t"),),
        layers=layers,
        herald=_qubit_herald("c", "t"),
        attenuations={"Lc": a, "Lt": a},
        target=np.diag([1, 1, 1, -1]).astype(complex),
    )


def cu_layout(theta: float, prebias: bool = False, correct_local: bool = True) -> OpticalExperiment:
    """Controlled-Z_theta with the target expanded into a four-level carrier.

    The top rail sees a Hadamard-conjugated CZ with C1 (a CNOT), then
    R = Z_{-theta} and a polariser onto D.  The bottom rail is attenuated to
    match.  ``correct_local`` appends the Z_theta waveplate on the target
    output so the map is exactly CZ_theta rather than a local-phase relative.
    ``prebias`` drops the C1 attenuator and instead weakens C1's H input.
    """
    layers = [
        pbs_exchange("t", "b", H, name="PBS1"),
        pol_unitary("t", H_MAT, "HWP-in"),
        partially_polarizing_bs("c1", "t", name="PPBS"),
        attenuator("t", (H,), "Lt"),
    ]
    att = {"Lt": SQRT_THIRD, "Lb": 1 / math.sqrt(6)}
    if not prebias:
        layers.append(attenuator("c1", (H,), "L1"))
        att["L1"] = SQRT_THIRD
    layers += [
        pol_unitary("t", H_MAT, "HWP-out"),
        pol_unitary("t", z_theta_matrix(-theta), "R"),
        polarizer("t", (1, 1), V, name="POL"),
        attenuator("b", (H,), "Lb"),
        pbs_exchange("t", "b", H, name="PBS2"),
    ]
    if correct_local:
        layers.append(pol_unitary("t", z_theta_matrix(theta), "Zcorr"))
    return OpticalExperiment(
        name=f"cu:{theta!r}",
        spatial_modes=("c1", "t", "b"),
        qubits=(LogicalQubit("C1", "c1", "c1"), LogicalQubit("T", "t", "t")),
        passes=(("c1", "t"),),
        layers=tuple(layers),
        herald=_qubit_herald("c1", "t"),
        attenuations=att,
        prebias={"C1": (SQRT_THIRD, 1.0)} if prebias else {},
        target=np.diag([1, 1, 1, np.exp(1j * theta)]),
    )


# Waveplates around the two PPBSs of the Toffoli layout.
_W1 = np.array([[math.sqrt(3) / 2, 0.5], [-0.5, math.sqrt(3) / 2]], dtype=complex)
_W2 = np.array([[1, -1], [-1, -1]], dtype=complex) / math.sqrt(2)
_KEEP = (0.5, math.sqrt(3) / 2)


def toffoli_layout(attenuations: dict[str, float] | None = None) -> OpticalExperiment:
    """Three-photon Toffoli from two down-conversion passes and a trigger.

    Pass 0 feeds (C1, T), pass 1 feeds (C2, trigger).  The sign lands on
    C2 = C1 = H, so the heralded map is the Toffoli conjugated by X on both
    controls.  ``attenuations`` defaults to the committed balanced fixture.
    """
    layers = (
        pol_unitary("t", H_MAT, "HWP-in"),
        pbs_exchange("t", "b", H, name="PBS1"),
        pol_unitary("t", _W1, "W1"),
        partially_polarizing_bs("c1", "t", name="PPBS1"),
        pol_unitary("t", _W2, "W2"),
        partially_polarizing_bs("c2", "t", name="PPBS2"),
        attenuator("c1", (H,), "L1"),
        attenuator("c2", (H,), "L2"),
        polarizer("t", _KEEP, V, name="POL"),
        attenuator("b", (H,), "L3"),
        pbs_exchange("t", "b", H, name="PBS2"),
        pol_unitary("t", H_MAT, "HWP-out"),
    )
    if attenuations is None:
        attenuations = load_fixture()["toffoli"]["attenuations"]
    from ..shortcuts import circuit_unitary_restricted, toffoli_from_ts

    return OpticalExperiment(
        name="toffoli",
        spatial_modes=("c2", "c1", "t", "b", "trig"),
        qubits=(LogicalQubit("C2", "c2", "c2"), LogicalQubit("C1", "c1", "c1"),
                LogicalQubit("T", "t", "t")),
        passes=(("c1", "t"), ("c2", "trig")),
        layers=layers,
        herald=_qubit_herald("c2", "c1", "t", "trig"),
        attenuations=dict(attenuations),
        target=circuit_unitary_restricted(toffoli_from_ts((0, 0))),
    )


def load_fixture() -> dict:
    text = resources.files(__package__).joinpath(FIXTURE).read_text()
    return json.loads(text)


def build_layout(spec: str) -> OpticalExperiment:
    """Layout from a short name: ``cz``, ``cu:<theta>``, ``toffoli`` or ``identity``."""
    name, _, arg = spec.partition(":")
    if name == "cz":
        return ppbs_cz_layout()
    if name == "cu":
        return cu_layout(float(arg) if arg else math.pi)
    if name == "toffoli":
        return toffoli_layout()
    if name == "identity":
        return identity_layout(int(arg) if arg else 2)
    raise ValueError(f"unknown layout {spec!r}")


# -- balancing ------------------------------------------------------------------

class BalanceError(RuntimeError):
    def __init__(self, message: str, result: "BalanceResult"):
        super().__init__(message)
        self.result = result


@dataclass(frozen=True)
class BalanceResult:
    attenuations: dict[str, float]
    success_probability: float
    deviation: float

    def as_dict(self) -> dict:
        return {
            "attenuations": dict(sorted(self.attenuations.items())),
            "success_probability": self.success_probability,
            "deviation": self.deviation,
        }


def proportionality_deviation(k: np.ndarray, target: np.ndarray) -> float:
    """``min_lambda ||K - lambda U|| / ||K||`` for unitary ``U`` (Frobenius)."""
    nk = np.linalg.norm(k)
    if nk == 0:
        return 1.0
    lam = np.trace(target.conj().T @ k) / target.shape[0]
    return float(np.linalg.norm(k - lam * target) / nk)


def _evaluate(exp: OpticalExperiment, slots, x, target) -> tuple[float, float]:
    trial = exp.with_attenuations(**dict(zip(slots, x)))
    try:
        hm = heralded_map(trial, allow_unheralded=True)
    except HeraldError:
        return 1.0, 0.0
    k = sum(hm.kraus) if len(hm.kraus) > 1 else hm.kraus[0]
    return proportionality_deviation(k, target), hm.success_probability


def balance_attenuations(exp: OpticalExperiment, target: np.ndarray | None = None, *,
                         seed: int = 0, tol: float = 1e-6, sweeps: int = 40,
                         restarts: int = 4) -> BalanceResult:
    """Per-slot amplitude transmissions making the heralded map proportional to ``target``.

    Coordinate descent (bounded scalar minimisation, one slot at a time) from
    seeded random starts, a bounded least-squares polish, then each slot is
    pushed upward as far as the deviation stays below ``tol`` so the most
    efficient balanced setting is returned.
    """
    target = np.asarray(exp.target if target is None else target, dtype=complex)
    slots = list(exp.slots)
    if not slots:
        dev, p = _evaluate(exp, slots, [], target)
        result = BalanceResult({}, p, dev)
        if dev > tol:
            raise BalanceError(f"no free slots and deviation {dev:.3g}", result)
        return result
    rng = np.random.default_rng(seed)

    def dev_of(x):
        return _evaluate(exp, slots, x, target)[0]

    def residual(x):
        trial = exp.with_attenuations(**dict(zip(slots, x)))
        hm = heralded_map(trial, allow_unheralded=True)
        k = hm.kraus[0]
        nk = np.linalg.norm(k)
        lam = np.trace(target.conj().T @ k) / target.shape[0]
        r = (k - lam * target) / max(nk, 1e-300)
        return np.concatenate([r.real.ravel(), r.imag.ravel()])

    starts = [np.ones(len(slots))] + [rng.uniform(0.1, 1.0, len(slots)) for _ in range(restarts)]
    best_x, best_dev = None, math.inf
    for x0 in starts:
        x = x0.copy()
        dev = dev_of(x)
        for _ in range(sweeps):
            prev = dev
            for i in range(len(slots)):
                def f(v, i=i):
                    y = x.copy()
                    y[i] = v
                    return dev_of(y)
                r = scipy.optimize.minimize_scalar(f, bounds=(0.0, 1.0), method="bounded",
                                                   options={"xatol": 1e-10})
                if r.fun < dev:
                    x[i], dev = r.x, r.fun
            if prev - dev < 1e-12:
                break
        if dev > 1e-14:
            try:
                ls = scipy.optimize.least_squares(residual, x, bounds=(0.0, 1.0),
                                                  xtol=1e-15, ftol=1e-15, gtol=1e-15)
                d2 = dev_of(ls.x)
                if d2 < dev:
                    x, dev = ls.x, d2
            except (ValueError, np.linalg.LinAlgError):
                pass
        if dev < best_dev:
            best_x, best_dev = x.copy(), dev
        if best_dev <= tol:
            break
    x = best_x
    # push every slot up along directions where the deviation stays flat
    flat = max(2 * best_dev, 1e-12)
    if best_dev <= tol:
        for _ in range(3):
            for i in range(len(slots)):
                lo, hi = x[i], 1.0
                y = x.copy()
                y[i] = hi
                if dev_of(y) <= flat:
                    x[i] = hi
                    continue
                for _ in range(60):
                    mid = (lo + hi) / 2
                    y[i] = mid
                    if dev_of(y) <= flat:
                        lo = mid
                    else:
                        hi = mid
                x[i] = lo
    dev, p = _evaluate(exp, slots, x, target)
    result = BalanceResult({s: float(v) for s, v in zip(slots, x)}, p, dev)
    if dev > tol:
        raise BalanceError(f"best deviation {dev:.3g} exceeds {tol:g}", result)
    return result


__all__ = [
    "BalanceError",
    "BalanceResult",
    "balance_attenuations",
    "build_layout",
    "cu_layout",
    "identity_layout",
    "load_fixture",
    "ppbs_cz_layout",
    "proportionality_deviation",
    "toffoli_layout",
]
