"""Two-photon interference at a beamsplitter with partially distinguishable photons."""

from __future__ import annotations

import math

import numpy as np

from .fock import FockState, beamsplitter, propagate


def _check(reflectivity: float, overlap: float) -> None:
    if not 0.0 <= reflectivity <= 1.0:
        raise ValueError("reflectivity must lie in [0, 1]")
    if not 0.0 <= overlap <= 1.0:
        raise ValueError("overlap must lie in [0, 1]")


def hom_coincidence(reflectivity: float, overlap: float = 1.0) -> tuple[float, float]:
    """Coincidence probability and visibility for one photon in each input port.

    The visibility compares the coincidence rate at ``overlap`` with the fully
    distinguishable rate ``T^2 + R^2``.
    """
    _check(reflectivity, overlap)
    r = reflectivity
    t = 1.0 - r
    classical = t * t + r * r
    quantum = (t - r) ** 2
    coincidence = overlap * quantum + (1 - overlap) * classical
    visibility = (classical - coincidence) / classical
    return coincidence, visibility


def hom_coincidence_fock(reflectivity: float, overlap: float = 1.0) -> float:
    """Same coincidence probability from an explicit Fock-space propagation.

    Modes are (port, label); the second photon's label state has squared
    overlap ``overlap`` with the first photon's.
    """
    _check(reflectivity, overlap)
    bs = beamsplitter(math.sqrt(1 - reflectivity), math.sqrt(reflectivity))
    m = np.kron(bs, np.eye(2))  # mode index = 2 * port + label
    a, b = math.sqrt(overlap), math.sqrt(1 - overlap)
    # a_{0,0}^+ (a b_{1,0}^+ + b b_{1,1}^+) |0>
    state = FockState(4, {(0, 2): a, (0, 3): b})
    out = propagate(state, m)
    return float(sum(abs(amp) ** 2 for key, amp in out.items()
                     if len({k // 2 for k in key}) == 2))


__all__ = ["hom_coincidence", "hom_coincidence_fock"]
