"""Poissonian count generation from simulated heralded experiments."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from ..records import CountRecord, MeasurementSetting, basis_group
from .elements import PROJECTORS
from .experiment import OpticalExperiment, coincidence_probabilities
from .fock import DEFAULT_N_MAX
from .source import SourceConfig


def prep_states(label: str) -> list[np.ndarray]:
    """Per-qubit input polarisations from a label such as ``"HDV"``."""
    try:
        return [PROJECTORS[c] for c in label]
    except KeyError as e:
        raise ValueError(f"unknown preparation {e.args[0]!r} in {label!r}") from None


def outcome_probabilities(exp: OpticalExperiment, prep: str,
                          settings: Sequence[MeasurementSetting],
                          source: SourceConfig | None = None,
                          n_max: int = DEFAULT_N_MAX) -> list[float]:
    """Heralded coincidence probability of each setting for input ``prep``."""
    states = prep_states(prep)
    if len(states) != exp.n_qubits:
        raise ValueError(f"preparation {prep!r} has {len(states)} qubits, layout has {exp.n_qubits}")
    cache: dict[str, dict] = {}
    out = []
    for s in settings:
        if len(s) != exp.n_qubits:
            raise ValueError(f"setting {s.spec!r} does not cover {exp.n_qubits} qubits")
        if s.bases not in cache:
            cache[s.bases] = coincidence_probabilities(exp, states, s.projectors, source, n_max)
        out.append(cache[s.bases][s.projectors])
    return out


def poisson_records(prep: str, settings: Sequence[MeasurementSetting], probabilities: Sequence[float],
                    shots: int, rng: np.random.Generator) -> list[CountRecord]:
    """Counts ~ Poisson(shots * p) for each setting, drawn in order."""
    if shots <= 0:
        raise ValueError("shots must be positive")
    lam = shots * np.clip(np.asarray(probabilities, dtype=float), 0.0, None)
    counts = rng.poisson(lam)
    return [CountRecord(prep, s, shots, int(c)) for s, c in zip(settings, counts)]


def sample_counts(exp: OpticalExperiment, logical_inputs: Sequence[str],
                  measurement_settings: Sequence[MeasurementSetting], shots: int, seed: int,
                  source: SourceConfig | None = None,
                  n_max: int = DEFAULT_N_MAX) -> list[CountRecord]:
    """Simulated counts for every (input, setting) pair.

    Each input draws from its own generator seeded with ``[seed, index]`` so
    results do not depend on evaluation order.
    """
    records = []
    for i, prep in enumerate(logical_inputs):
        probs = outcome_probabilities(exp, prep, measurement_settings, source, n_max)
        rng = np.random.default_rng([seed, i])
        records += poisson_records(prep, measurement_settings, probs, shots, rng)
    return records


def truth_table_probabilities(exp: OpticalExperiment, source: SourceConfig | None = None,
                              n_max: int = DEFAULT_N_MAX) -> np.ndarray:
    """Unnormalised d x d table of P(herald and output k | input j) in the Z basis."""
    nq = exp.n_qubits
    d = 2**nq
    table = np.zeros((d, d))
    group = basis_group("Z" * nq)
    for j in range(d):
        prep = "".join("HV"[(j >> (nq - 1 - q)) & 1] for q in range(nq))
        probs = outcome_probabilities(exp, prep, group, source, n_max)
        for s, p in zip(group, probs):
            k = int("".join("0" if x == "H" else "1" for x in s.projectors), 2)
            table[j, k] = p
    return table


__all__ = [
    "outcome_probabilities",
    "poisson_records",
    "prep_states",
    "sample_counts",
    "truth_table_probabilities",
]
