"""Pulsed down-conversion sources with multi-pair emission.

Each pass emits the two-mode squeezed vacuum ``sum_n eps^n |n, n>``
(normalised after truncation) into its two collection modes, so the
double-pair to single-pair probability ratio is ``eps^2`` and scales
linearly with pump power.  Photons from pass 0 carry the reference
distinguishability label; photons from later passes carry the label state
``sqrt(xi)|0> + sqrt(1 - xi)|1>``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product
from typing import Sequence

import numpy as np

from .fock import DEFAULT_N_MAX, CutoffError, FockState, expand_product, monomials_to_state

# Calibration knobs: pair amplitude at full pump power and the mode overlap of
# photons from different passes.  Neither is derivable from first principles.
EPS_FULL_POWER = 0.3
DEFAULT_OVERLAP = 0.92


@dataclass(frozen=True)
class SourceConfig:
    pair_amplitude: float = 0.0
    mode_overlap: float = 1.0
    truncation: int = 2

    def __post_init__(self):
        if self.pair_amplitude < 0:
            raise ValueError("pair amplitude must be non-negative")
        if not 0.0 <= self.mode_overlap <= 1.0:
            raise ValueError("mode overlap must lie in [0, 1]")
        if self.truncation < 1:
            raise ValueError("truncation must be >= 1")

    @classmethod
    def from_power(cls, power: float, eps_full_power: float = EPS_FULL_POWER,
                   mode_overlap: float = DEFAULT_OVERLAP, truncation: int = 2) -> "SourceConfig":
        """Pair amplitude at a fraction ``power`` of full pump power (eps^2 ~ power)."""
        if power < 0:
            raise ValueError("power must be non-negative")
        return cls(eps_full_power * math.sqrt(power), mode_overlap, truncation)

    @property
    def ideal(self) -> bool:
        return self.pair_amplitude == 0.0

    def n_labels(self, passes: int) -> int:
        return 1 if passes < 2 or self.mode_overlap == 1.0 else 2

    def label_vector(self, pass_index: int, n_labels: int) -> np.ndarray:
        v = np.zeros(n_labels, dtype=complex)
        if pass_index == 0 or n_labels == 1:
            v[0] = 1.0
        else:
            v[0] = math.sqrt(self.mode_overlap)
            v[1] = math.sqrt(1.0 - self.mode_overlap)
        return v


def pair_probabilities(cfg: SourceConfig) -> np.ndarray:
    """P(n pairs) for n = 0..truncation of one pass."""
    w = np.array([cfg.pair_amplitude ** (2 * n) for n in range(cfg.truncation + 1)])
    return w / w.sum()


def double_to_single_ratio(cfg: SourceConfig) -> float:
    p = pair_probabilities(cfg)
    if cfg.truncation < 2:
        return 0.0
    return float(p[2] / p[1]) if p[1] > 0 else 0.0


@dataclass(frozen=True)
class SourceTerm:
    """``coeff * prod(photon creation operators)`` applied to vacuum.

    ``photons`` are (mode, label-vector) pairs; ``pairs`` records how many
    pairs each pass contributed.
    """

    coeff: complex
    photons: tuple[tuple[int, np.ndarray], ...]
    pairs: tuple[int, ...]


def source_terms(cfg: SourceConfig, pass_modes: Sequence[tuple[int, int]], n_labels: int,
                 n_max: int = DEFAULT_N_MAX, *, single_pair: bool | None = None) -> list[SourceTerm]:
    """Creation-polynomial terms of the joint multi-pass source state.

    ``single_pair`` (default: ``cfg.ideal``) keeps only the one-pair-per-pass
    term with unit weight, which is the post-selected limit eps -> 0.  Terms
    whose photon number exceeds ``n_max`` are dropped; if even the single-pair
    term does not fit, :class:`CutoffError` is raised.
    """
    if single_pair is None:
        single_pair = cfg.ideal
    n_pass = len(pass_modes)
    if 2 * n_pass > n_max:
        raise CutoffError(f"{2 * n_pass} photons needed, cutoff is {n_max}")
    if single_pair:
        counts = [(1,) * n_pass]
        amps = {1: 1.0}
    else:
        counts = [c for c in product(range(cfg.truncation + 1), repeat=n_pass)
                  if 2 * sum(c) <= n_max]
        z = sum(cfg.pair_amplitude ** (2 * n) for n in range(cfg.truncation + 1))
        amps = {n: cfg.pair_amplitude**n / math.sqrt(z) for n in range(cfg.truncation + 1)}
    terms = []
    for c in counts:
        coeff = 1.0
        photons = []
        for i, (n, (ma, mb)) in enumerate(zip(c, pass_modes)):
            # (a+ b+)^n / n! |0> = |n, n>
            coeff *= amps[n] / math.factorial(n)
            lab = cfg.label_vector(i, n_labels)
            photons += [(ma, lab)] * n + [(mb, lab)] * n
        if coeff != 0:
            terms.append(SourceTerm(complex(coeff), tuple(photons), tuple(c)))
    return terms


def spdc_state(cfg: SourceConfig, passes: int, n_max: int = DEFAULT_N_MAX) -> FockState:
    """Joint source state over modes ``(2*pass + arm) * n_labels + label``."""
    if passes < 1:
        raise ValueError("need at least one pass")
    n_labels = cfg.n_labels(passes)
    pass_modes = [(2 * i, 2 * i + 1) for i in range(passes)]
    terms = source_terms(cfg, pass_modes, n_labels, n_max, single_pair=False)
    amps: dict[tuple[int, ...], complex] = {}
    for term in terms:
        forms = []
        for mode, lab in term.photons:
            forms.append([(mode * n_labels + l, complex(a)) for l, a in enumerate(lab) if a != 0])
        for k, a in monomials_to_state(expand_product(forms, term.coeff)).items():
            amps[k] = amps.get(k, 0) + a
    return FockState(2 * passes * n_labels, amps, n_max)


__all__ = [
    "DEFAULT_OVERLAP",
    "EPS_FULL_POWER",
    "SourceConfig",
    "SourceTerm",
    "double_to_single_ratio",
    "pair_probabilities",
    "source_terms",
    "spdc_state",
]
