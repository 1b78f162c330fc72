"""Storage-size models, the MCIC efficiency coefficient and linear size fits."""

from __future__ import annotations

import math
import statistics
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field

from coreforge.errors import DegenerateInput, DivisionByZeroHC, MissingSizeEntry
from coreforge.factorization import MCIC, CoreKey, Variant
from coreforge.model import ComponentKind, TypeDef, Unit, UnitKind

MIB = 1_048_576


@dataclass(frozen=True)
class SizeModel:
    """Memory sizes of cores, projections and homogeneous types.

    Projection and type sizes are per object; ``object_counts`` gives the
    number of objects of each type.
    """

    core_sizes: Mapping[CoreKey, float] = field(default_factory=dict)
    projection_sizes: Mapping[str, float] = field(default_factory=dict)
    hc_type_sizes: Mapping[str, float] = field(default_factory=dict)
    object_counts: Mapping[str, int] = field(default_factory=dict)

    def __post_init__(self):
        for table in (self.core_sizes, self.projection_sizes, self.hc_type_sizes, self.object_counts):
            for key, size in table.items():
                if size < 0:
                    raise ValueError(f"negative size {size!r} for {key!r}")

    def with_counts(self, counts: Mapping[str, int]) -> SizeModel:
        return SizeModel(self.core_sizes, self.projection_sizes, self.hc_type_sizes, dict(counts))


def estimate_storage(model: SizeModel, variant: Variant | str) -> float:
    """M_HC = sum T_i*m_i; M_MCIC = sum of core sizes + sum Pr_i*m_i."""
    variant = Variant(variant)
    if variant is Variant.HC:
        per_object = model.hc_type_sizes
        fixed = 0.0
    elif variant is Variant.MCIC:
        per_object = model.projection_sizes
        fixed = math.fsum(model.core_sizes.values())
    else:
        raise ValueError("estimate_storage covers hc and mcic; pass SCIC sizes as hc_type_sizes instead")
    missing = [t for t in model.object_counts if t not in per_object]
    if missing:
        raise MissingSizeEntry(f"no {variant.value} size for type(s) {missing}")
    return fixed + math.fsum(per_object[t] * m for t, m in model.object_counts.items())


def efficiency_coefficient(m_mcic: float, m_hc: float) -> float:
    """Percentage of HC storage saved by the MCIC layout: 100 - M_MCIC/M_HC*100."""
    if m_hc <= 0:
        raise DivisionByZeroHC(f"M_HC must be positive, got {m_hc!r}")
    return 100.0 - m_mcic / m_hc * 100.0


# -- size models ------------------------------------------------------------


def unit_count_model(mcic: MCIC, types: Sequence[TypeDef], counts: Mapping[str, int]) -> SizeModel:
    """Every unit weighs one size unit."""
    return SizeModel(
        core_sizes={k: float(len(units)) for k, units in mcic.cores.items()},
        projection_sizes={t: float(len(units)) for t, units in mcic.projections.items()},
        hc_type_sizes={t.name: float(len(t.units)) for t in types},
        object_counts=dict(counts),
    )


# Largest encodings in an SQLite record: one serial-type header byte plus the
# value itself (8-byte integer or float, label text).
MAX_NUMBER_BYTES = 9
RECORD_HEADER_BYTES = 3


def _label_bytes(label_bytes: int) -> int:
    return 2 + label_bytes


def unit_max_bytes(unit: Unit, label_bytes: int) -> int:
    """Upper bound on the bytes one unit occupies in a stored row."""
    if unit.kind is UnitKind.VERIFICATION:
        return MAX_NUMBER_BYTES
    if unit.kind is UnitKind.METHOD:
        return MAX_NUMBER_BYTES + (_label_bytes(label_bytes) if unit.result_label is not None else 0)
    size = 0
    for kind in unit.value_schema:
        size += MAX_NUMBER_BYTES
        if kind is ComponentKind.LABELED:
            size += _label_bytes(label_bytes)
    return size


def column_size_model(mcic: MCIC, types: Sequence[TypeDef], counts: Mapping[str, int],
                      label_bytes: int = 16) -> SizeModel:
    """Per-row byte bounds under the relational layout of :mod:`coreforge.store`.

    Every row pays a record header and an object or surrogate key; projection
    rows also pay one key per covering core. A core can hold one distinct
    row per type it covers (values of its methods and verifications differ
    between types, never within one type when objects are initialized
    identically), so its size is scaled by the number of types it covers.
    """
    key = MAX_NUMBER_BYTES

    def row(units) -> float:
        return float(RECORD_HEADER_BYTES + key + sum(unit_max_bytes(u, label_bytes) for u in units))

    core_sizes = {k: row(units) * len(k) for k, units in mcic.cores.items()}
    projection_sizes = {
        t: row(units) + key * len(mcic.covering(t)) for t, units in mcic.projections.items()
    }
    hc_sizes = {t.name: row(t.units) for t in types}
    return SizeModel(core_sizes, projection_sizes, hc_sizes, dict(counts))


# -- linear fits ------------------------------------------------------------


@dataclass(frozen=True)
class LinearFit:
    slope: float
    intercept: float
    r_squared: float

    def __call__(self, q: float) -> float:
        return self.slope * q + self.intercept


def fit_linear(points: Sequence[tuple[float, float]]) -> LinearFit:
    """Ordinary least squares fit of size against object count."""
    if len(points) < 2:
        raise DegenerateInput(f"need at least 2 points, got {len(points)}")
    qs = [float(q) for q, _ in points]
    ys = [float(y) for _, y in points]
    try:
        slope, intercept = statistics.linear_regression(qs, ys)
    except statistics.StatisticsError as exc:
        raise DegenerateInput(f"cannot fit a line: {exc}") from None
    mean_y = math.fsum(ys) / len(ys)
    ss_tot = math.fsum((y - mean_y) ** 2 for y in ys)
    ss_res = math.fsum((y - (slope * q + intercept)) ** 2 for q, y in zip(qs, ys))
    r2 = 1.0 if ss_tot == 0 else 1.0 - ss_res / ss_tot
    return LinearFit(slope, intercept, min(1.0, max(0.0, r2)))
