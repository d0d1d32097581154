"""Measurement settings and photon-count records, with a versioned CSV form.

CSV layout::

    # qsl-counts v1
    setting_id,projector_spec,shots,counts
    HD|ZX,HA,100000,2481

``setting_id`` is ``<preparation>|<bases>``: the logical input label and the
analysis basis per qubit (``Z``, ``X``, ``Y`` or ``-`` for an unanalysed
qubit).  Records sharing a ``setting_id`` form one complete outcome group,
against whose total the counts are normalised.  ``projector_spec`` lists one
projector per qubit from ``H V D A R L`` (``-`` for unanalysed).
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from itertools import product
from typing import Iterable, Sequence

from .optics.elements import BASES, BASIS_OF

COUNTS_HEADER = "# qsl-counts v1"
COLUMNS = ("setting_id", "projector_spec", "shots", "counts")
SIX_STATES = ("H", "V", "D", "A", "R", "L")
UNMEASURED = "-"


class RecordFormatError(ValueError):
    pass


@dataclass(frozen=True)
class MeasurementSetting:
    """One projector per qubit; ``None`` marks an unanalysed qubit."""

    projectors: tuple[str | None, ...]

    def __post_init__(self):
        p = tuple(None if x in (None, UNMEASURED) else str(x) for x in self.projectors)
        for x in p:
            if x is not None and x not in BASIS_OF:
                raise ValueError(f"unknown projector {x!r}")
        if not p:
            raise ValueError("empty measurement setting")
        object.__setattr__(self, "projectors", p)

    @classmethod
    def parse(cls, spec: str) -> "MeasurementSetting":
        return cls(tuple(spec))

    @property
    def spec(self) -> str:
        return "".join(UNMEASURED if x is None else x for x in self.projectors)

    @property
    def bases(self) -> str:
        return "".join(UNMEASURED if x is None else BASIS_OF[x] for x in self.projectors)

    def __len__(self):
        return len(self.projectors)


def tomography_settings(n_qubits: int) -> list[MeasurementSetting]:
    """The over-complete six-state set: 6**n projector combinations."""
    return [MeasurementSetting(p) for p in product(SIX_STATES, repeat=n_qubits)]


def basis_group(bases: str) -> list[MeasurementSetting]:
    """All projector combinations of one analysis-basis string."""
    opts = [[None] if b == UNMEASURED else list(BASES[b]) for b in bases]
    return [MeasurementSetting(p) for p in product(*opts)]


@dataclass(frozen=True)
class CountRecord:
    prep: str
    setting: MeasurementSetting
    shots: int
    counts: int

    def __post_init__(self):
        if "|" in self.prep or "," in self.prep:
            raise ValueError("preparation label may not contain '|' or ','")
        if self.shots <= 0:
            raise ValueError("shots must be positive")
        if self.counts < 0:
            raise ValueError("counts must be non-negative")

    @property
    def setting_id(self) -> str:
        return f"{self.prep}|{self.setting.bases}"

    def with_counts(self, counts: int) -> "CountRecord":
        return CountRecord(self.prep, self.setting, self.shots, int(counts))


def dumps_counts(records: Iterable[CountRecord]) -> str:
    buf = io.StringIO()
    buf.write(COUNTS_HEADER + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COLUMNS)
    for r in records:
        w.writerow([r.setting_id, r.setting.spec, r.shots, r.counts])
    return buf.getvalue()


def loads_counts(text: str) -> list[CountRecord]:
    lines = text.splitlines()
    if not lines or lines[0].strip() != COUNTS_HEADER:
        raise RecordFormatError(f"missing header {COUNTS_HEADER!r}")
    reader = csv.reader(lines[1:])
    try:
        header = next(reader)
    except StopIteration:
        raise RecordFormatError("missing column row") from None
    if tuple(h.strip() for h in header) != COLUMNS:
        raise RecordFormatError(f"expected columns {COLUMNS}, got {header}")
    out = []
    for lineno, row in enumerate(reader, start=3):
        if not row:
            continue
        if len(row) != 4:
            raise RecordFormatError(f"line {lineno}: expected 4 fields")
        sid, spec, shots, counts = (x.strip() for x in row)
        prep, sep, bases = sid.partition("|")
        try:
            setting = MeasurementSetting.parse(spec)
            rec = CountRecord(prep, setting, int(shots), int(counts))
        except ValueError as e:
            raise RecordFormatError(f"line {lineno}: {e}") from None
        if not sep or setting.bases != bases:
            raise RecordFormatError(f"line {lineno}: setting_id {sid!r} does not match {spec!r}")
        out.append(rec)
    return out


def group_records(records: Sequence[CountRecord]) -> dict[str, dict[str, list[CountRecord]]]:
    """``{prep: {bases: [records]}}`` preserving input order."""
    out: dict[str, dict[str, list[CountRecord]]] = {}
    for r in records:
        out.setdefault(r.prep, {}).setdefault(r.setting.bases, []).append(r)
    return out


__all__ = [
    "COUNTS_HEADER",
    "CountRecord",
    "MeasurementSetting",
    "RecordFormatError",
    "SIX_STATES",
    "basis_group",
    "dumps_counts",
    "group_records",
    "loads_counts",
    "tomography_settings",
]
