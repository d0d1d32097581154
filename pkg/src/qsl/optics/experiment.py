"""Heralded linear-optical experiments: propagation, detection, heralded maps."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence

import numpy as np

from .elements import (
    BASES,
    BASIS_OF,
    PORT_OF,
    PROJECTORS,
    H,
    V,
    HeraldPattern,
    Layer,
    LogicalQubit,
    analyser,
    rotation_to,
)
from .fock import AMP_TOL, DEFAULT_N_MAX, expand_product, loss_dilation, monomials_to_state
from .source import SourceConfig, source_terms


class HeraldError(RuntimeError):
    """Some logical input is never heralded."""

    def __init__(self, message: str, per_input: Sequence[float]):
        super().__init__(message)
        self.per_input = list(per_input)


@dataclass(frozen=True, eq=False)
class OpticalExperiment:
    """Immutable description of a heralded gate.

    ``qubits`` are ordered most significant first.  Each entry of ``passes``
    names the two collection modes of one down-conversion pass; every source
    photon leaves the crystal H-polarised and a qubit's input waveplate turns
    it into the prepared state.  Source modes that are not a qubit input are
    trigger arms.
    """

    name: str
    spatial_modes: tuple[str, ...]
    qubits: tuple[LogicalQubit, ...]
    passes: tuple[tuple[str, str], ...]
    layers: tuple[Layer, ...]
    herald: HeraldPattern
    attenuations: Mapping[str, float] = field(default_factory=dict)
    prebias: Mapping[str, tuple[float, float]] = field(default_factory=dict)
    target: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "spatial_modes", tuple(self.spatial_modes))
        object.__setattr__(self, "qubits", tuple(self.qubits))
        object.__setattr__(self, "passes", tuple(tuple(p) for p in self.passes))
        object.__setattr__(self, "layers", tuple(self.layers))
        object.__setattr__(self, "attenuations", dict(self.attenuations))
        object.__setattr__(self, "prebias", {k: tuple(v) for k, v in self.prebias.items()})
        known = set(self.spatial_modes)
        for layer in self.layers:
            for s, _ in layer.modes:
                if s not in known:
                    raise ValueError(f"layer {layer.name} uses unknown mode {s!r}")
            if layer.slot is not None and layer.slot not in self.attenuations:
                raise ValueError(f"slot {layer.slot!r} has no attenuation setting")
        for d in self.herald.detectors:
            if d.spatial not in known:
                raise ValueError(f"detector {d.name} watches unknown mode {d.spatial!r}")
        for q in self.qubits:
            if q.input not in known or q.output not in known:
                raise ValueError(f"qubit {q.name} uses an unknown mode")
        outs = [q.output for q in self.qubits]
        if len(set(outs)) != len(outs):
            raise ValueError("two logical qubits share an output mode")
        for pair in self.passes:
            for s in pair:
                if s not in known:
                    raise ValueError(f"source mode {s!r} unknown")
        for q in self.prebias:
            if q not in self.qubit_names:
                raise ValueError(f"prebias names unknown qubit {q!r}")

    # -- indexing -----------------------------------------------------------
    @property
    def n_modes(self) -> int:
        return 2 * len(self.spatial_modes)

    @property
    def n_qubits(self) -> int:
        return len(self.qubits)

    @property
    def qubit_names(self) -> tuple[str, ...]:
        return tuple(q.name for q in self.qubits)

    @property
    def slots(self) -> tuple[str, ...]:
        return tuple(dict.fromkeys(l.slot for l in self.layers if l.slot is not None))

    def mode(self, spatial: str, pol: int) -> int:
        return 2 * self.spatial_modes.index(spatial) + pol

    def with_attenuations(self, **settings: float) -> "OpticalExperiment":
        att = dict(self.attenuations)
        for k, v in settings.items():
            if k not in att:
                raise KeyError(f"unknown slot {k!r}")
            att[k] = float(v)
        return replace(self, attenuations=att)

    def trigger_modes(self) -> list[str]:
        inputs = {q.input for q in self.qubits}
        return [s for pair in self.passes for s in pair if s not in inputs]

    # -- linear network -----------------------------------------------------
    def _embed(self, layer_modes, block) -> np.ndarray:
        m = np.eye(self.n_modes, dtype=complex)
        idx = [self.mode(s, p) for s, p in layer_modes]
        m[np.ix_(idx, idx)] = block
        return m

    def network(self) -> np.ndarray:
        """Transfer matrix of the fixed layers (no preparation or analysis)."""
        m = np.eye(self.n_modes, dtype=complex)
        for layer in self.layers:
            m = self._embed(layer.modes, layer.block(self.attenuations)) @ m
        return m

    def full_network(self, preparations: Sequence[np.ndarray] | None = None,
                     analysers: Sequence[np.ndarray | None] | None = None) -> np.ndarray:
        m = self.network()
        if preparations is not None:
            prep = np.eye(self.n_modes, dtype=complex)
            for q, u in zip(self.qubits, preparations):
                idx = [self.mode(q.input, H), self.mode(q.input, V)]
                prep[np.ix_(idx, idx)] = u
            m = m @ prep
        if analysers is not None:
            ana = np.eye(self.n_modes, dtype=complex)
            for q, u in zip(self.qubits, analysers):
                if u is None:
                    continue
                idx = [self.mode(q.output, H), self.mode(q.output, V)]
                ana[np.ix_(idx, idx)] = u
            m = ana @ m
        return m


# -- propagation ------------------------------------------------------------

def _output_state(exp: OpticalExperiment, matrix: np.ndarray, source: SourceConfig,
                  n_max: int, single_pair: bool) -> tuple[dict[tuple[int, ...], complex], int]:
    """Amplitudes over (tracked + sink modes) x labels for the given network."""
    n_labels = source.n_labels(len(exp.passes))
    dil = loss_dilation(matrix)  # (2n, n)
    pass_modes = [(exp.mode(a, H), exp.mode(b, H)) for a, b in exp.passes]
    terms = source_terms(source, pass_modes, n_labels, n_max, single_pair=single_pair)
    cache: dict[tuple[int, bytes], list[tuple[int, complex]]] = {}
    out: dict[tuple[int, ...], complex] = {}
    for term in terms:
        forms = []
        for mode, lab in term.photons:
            key = (mode, lab.tobytes())
            if key not in cache:
                col = dil[:, mode]
                form = []
                for k in np.flatnonzero(np.abs(col) > AMP_TOL):
                    for l, a in enumerate(lab):
                        if a != 0:
                            form.append((int(k) * n_labels + l, complex(col[k] * a)))
                cache[key] = form
            forms.append(cache[key])
        for k, a in monomials_to_state(expand_product(forms, term.coeff)).items():
            out[k] = out.get(k, 0) + a
    return out, n_labels


def detection_distribution(exp: OpticalExperiment, preparations: Sequence[np.ndarray],
                           analysers: Sequence[np.ndarray | None] | None = None,
                           source: SourceConfig | None = None,
                           n_max: int = DEFAULT_N_MAX) -> dict[tuple[int, ...], float]:
    """Probability of each photon-count record on the tracked modes.

    Sink photons and distinguishability labels are summed over.  With an ideal
    (or absent) source exactly one pair per pass is injected.
    """
    source = source or SourceConfig()
    m = exp.full_network(preparations, analysers)
    amps, n_labels = _output_state(exp, m, source, n_max, single_pair=source.ideal)
    n = exp.n_modes
    dist: dict[tuple[int, ...], float] = {}
    for key, a in amps.items():
        p = abs(a) ** 2
        if p <= AMP_TOL**2:
            continue
        counts = [0] * n
        for g in key:
            mode = g // n_labels
            if mode < n:
                counts[mode] += 1
        rec = tuple(counts)
        dist[rec] = dist.get(rec, 0.0) + p
    return dist


def _prep_unitaries(exp: OpticalExperiment, states: Sequence[np.ndarray]) -> tuple[list[np.ndarray], float]:
    """Input waveplates for the requested states, with any prebias folded in.

    Returns the unitaries and the squared norm of the biased (unnormalised)
    product state, so callers can rescale to the intended input.
    """
    preps = []
    weight = 1.0
    for q, st in zip(exp.qubits, states):
        v = np.asarray(st, dtype=complex)
        if q.name in exp.prebias:
            v = v * np.asarray(exp.prebias[q.name])
        nrm = np.linalg.norm(v)
        weight *= nrm**2
        preps.append(rotation_to(v / nrm))
    return preps, weight


def _fires(counts: Sequence[int], modes: Sequence[int], number_resolving: bool) -> bool:
    c = sum(counts[m] for m in modes)
    return c == 1 if number_resolving else c >= 1


def coincidence_probabilities(exp: OpticalExperiment, input_states: Sequence[np.ndarray],
                              setting: Sequence[str | None], source: SourceConfig | None = None,
                              n_max: int = DEFAULT_N_MAX) -> dict[tuple[str | None, ...], float]:
    """Coincidence probability of every outcome sharing ``setting``'s analysis bases.

    ``setting`` gives one projector name per qubit (or ``None`` for a detector
    that sees both polarisations).  Returns a map from projector tuples (all
    outcomes in the same bases) to the probability that every qubit detector
    and every extra herald detector fires.
    """
    bases = [None if s is None else BASIS_OF[s] for s in setting]
    analysers = [None if b is None else analyser(b) for b in bases]
    preps, _ = _prep_unitaries(exp, input_states)
    dist = detection_distribution(exp, preps, analysers, source, n_max)
    nr = exp.herald.number_resolving
    qubit_out = {q.output for q in exp.qubits}
    extra = [d for d in exp.herald.detectors if d.spatial not in qubit_out]
    extra_modes = [[exp.mode(d.spatial, p) for p in d.pols] for d in extra]
    outcome_lists = [[None] if b is None else list(BASES[b]) for b in bases]
    result = {}
    for outcome in itertools.product(*outcome_lists):
        port_modes = []
        for q, proj in zip(exp.qubits, outcome):
            if proj is None:
                port_modes.append([exp.mode(q.output, H), exp.mode(q.output, V)])
            else:
                port_modes.append([exp.mode(q.output, PORT_OF[proj])])
        total = 0.0
        for rec, p in dist.items():
            if all(_fires(rec, pm, nr) for pm in port_modes) and all(
                _fires(rec, em, nr) for em in extra_modes
            ):
                total += p
        result[outcome] = total
    return result


# -- heralded maps ----------------------------------------------------------

@dataclass(frozen=True)
class HeraldedMap:
    """Kraus decomposition of the heralded logical map.

    ``kraus`` operators act on the logical register (most significant qubit
    first); their columns are not renormalised, so ``success_per_input[j]``
    is the herald probability of basis input ``j``.
    """

    kraus: tuple[np.ndarray, ...]
    success_per_input: np.ndarray

    @property
    def dim(self) -> int:
        return self.kraus[0].shape[0]

    @property
    def success_probability(self) -> float:
        return float(np.min(self.success_per_input))

    @property
    def is_pure(self) -> bool:
        return len(self.kraus) == 1

    @property
    def matrix(self) -> np.ndarray:
        if not self.is_pure:
            raise ValueError("map has several Kraus operators")
        return self.kraus[0]

    def normalized(self) -> np.ndarray:
        """The single Kraus operator scaled by the mean herald probability."""
        k = self.matrix
        return k / math.sqrt(np.mean(self.success_per_input))

    def choi(self) -> np.ndarray:
        """Choi matrix sum_e |K_e>><<K_e| with column-stacking vectorisation."""
        d = self.dim
        j = np.zeros((d * d, d * d), dtype=complex)
        for k in self.kraus:
            v = k.reshape(-1, order="F")
            j += np.outer(v, v.conj())
        return j

    def process_fidelity(self, u: np.ndarray) -> float:
        """Entanglement fidelity of the renormalised map with unitary ``u``."""
        u = np.asarray(u, dtype=complex)
        d = self.dim
        num = sum(abs(np.trace(u.conj().T @ k)) ** 2 for k in self.kraus)
        den = d * sum(np.trace(k.conj().T @ k).real for k in self.kraus)
        return float(num / den)

    def apply(self, rho: np.ndarray) -> np.ndarray:
        return sum(k @ rho @ k.conj().T for k in self.kraus)


def heralded_map(exp: OpticalExperiment, source: SourceConfig | None = None,
                 n_max: int = DEFAULT_N_MAX, *, allow_unheralded: bool = False) -> HeraldedMap:
    """Logical map heralded by one photon in every qubit output and the extra detectors.

    Uses the single-pair source term; ``source.mode_overlap < 1`` makes the
    independent photons partially distinguishable and the map becomes a
    Kraus sum over the unobserved label configurations.
    """
    source = source or SourceConfig()
    nq = exp.n_qubits
    d = 2**nq
    nr = exp.herald.number_resolving
    qubit_modes = [(exp.mode(q.output, H), exp.mode(q.output, V)) for q in exp.qubits]
    qubit_out = {q.output for q in exp.qubits}
    extra_modes = [[exp.mode(dd.spatial, p) for p in dd.pols]
                   for dd in exp.herald.detectors if dd.spatial not in qubit_out]
    n = exp.n_modes
    columns: list[dict] = []
    weights = []
    for j in range(d):
        bits = [(j >> (nq - 1 - i)) & 1 for i in range(nq)]
        states = [PROJECTORS["H"] if b == 0 else PROJECTORS["V"] for b in bits]
        preps, w = _prep_unitaries(exp, states)
        weights.append(w)
        m = exp.full_network(preps)
        amps, n_labels = _output_state(exp, m, replace(source, pair_amplitude=0.0), n_max, True)
        col: dict[tuple, np.ndarray] = {}
        for key, a in amps.items():
            counts = [0] * n
            for g in key:
                if g // n_labels < n:
                    counts[g // n_labels] += 1
            # exactly one photon per qubit output is needed to decode a logical value
            if any(counts[h] + counts[v] != 1 for h, v in qubit_modes):
                continue
            if not all(_fires(counts, em, nr) for em in extra_modes):
                continue
            out = 0
            env = []
            rest = []
            for h, v in qubit_modes:
                out = 2 * out + (1 if counts[v] else 0)
            qubit_mode_set = {mm for pair in qubit_modes for mm in pair}
            for g in key:
                if g // n_labels in qubit_mode_set:
                    env.append(g % n_labels)
                else:
                    rest.append(g)
            env_key = (tuple(env), tuple(rest))
            vec = col.setdefault(env_key, np.zeros(d, dtype=complex))
            vec[out] += a
        columns.append(col)
    env_keys = sorted({k for col in columns for k in col})
    kraus = []
    for ek in env_keys:
        k = np.zeros((d, d), dtype=complex)
        for j, col in enumerate(columns):
            if ek in col:
                k[:, j] = col[ek]
        kraus.append(k)
    if not kraus:
        raise HeraldError("no input is ever heralded", [0.0] * d)
    success = np.array([sum(np.linalg.norm(k[:, j]) ** 2 for k in kraus) for j in range(d)])
    if exp.prebias:
        # a prebiased input B|j> is injected; the map on intended states is K B
        bias = np.sqrt(np.array(weights))
        kraus = [k * bias[None, :] for k in kraus]
    if not allow_unheralded and np.any(success < 1e-15):
        raise HeraldError("some logical inputs are never heralded", success)
    return HeraldedMap(tuple(kraus), success)


__all__ = [
    "HeraldError",
    "HeraldedMap",
    "OpticalExperiment",
    "coincidence_probabilities",
    "detection_distribution",
    "heralded_map",
]
