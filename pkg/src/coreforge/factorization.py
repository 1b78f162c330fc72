"""Factor a family of types into single-core and multi-core inhomogeneous classes.

A unit is *shared* by every type that holds an equivalent copy of it. The
multi-core class files each type-level unit under the core keyed by its
maximal sharing set; instance-level units vary per object and always stay
in their type's projection. The single-core class keeps only the units
shared by all types in its core.
"""

from __future__ import annotations

from collections import Counter
from collections.abc import Sequence
from dataclasses import dataclass
from enum import Enum
from typing import Union

from coreforge.errors import DuplicateTypeName, TooFewTypes, UnknownTypeName
from coreforge.model import Binding, TypeDef, Unit, UnitKind, unit_key

CoreKey = tuple[str, ...]


class Variant(str, Enum):
    HC = "hc"
    SCIC = "scic"
    MCIC = "mcic"


@dataclass(frozen=True)
class SCIC:
    name: str
    type_names: tuple[str, ...]
    core: tuple[Unit, ...]
    projections: dict[str, tuple[Unit, ...]]

    @property
    def cores(self) -> dict[CoreKey, tuple[Unit, ...]]:
        """The single core keyed by the full type set (empty when nothing is shared)."""
        return {self.type_names: self.core} if self.core else {}


@dataclass(frozen=True)
class MCIC:
    name: str
    type_names: tuple[str, ...]
    cores: dict[CoreKey, tuple[Unit, ...]]
    projections: dict[str, tuple[Unit, ...]]

    def covering(self, type_name: str) -> list[CoreKey]:
        """Keys of all cores that contribute units to *type_name*, in core order."""
        return [key for key in self.cores if type_name in key]

    def core_label(self, key: CoreKey) -> str:
        level = len(key)
        same_level = [k for k in self.cores if len(k) == level]
        return f"Core^{level}_{same_level.index(key) + 1}"


InhomogeneousClass = Union[SCIC, MCIC]


def _check_names(types: Sequence[TypeDef]) -> None:
    seen = set()
    for t in types:
        if t.name in seen:
            raise DuplicateTypeName(f"type {t.name!r} appears twice")
        seen.add(t.name)


def _sharing_sets(types: Sequence[TypeDef]) -> dict[tuple, CoreKey]:
    """Map each unit key to the ordered tuple of types holding that unit."""
    holders: dict[tuple, list[str]] = {}
    for t in types:
        for u in t.units:
            holders.setdefault(unit_key(u), []).append(t.name)
    return {k: tuple(v) for k, v in holders.items()}


def _core_order(type_names: Sequence[str]):
    position = {name: i for i, name in enumerate(type_names)}

    def order(key: CoreKey):
        return (-len(key), [position[n] for n in key])

    return order


def build_scic(types: Sequence[TypeDef], name: str = "T") -> SCIC:
    if len(types) < 2:
        raise TooFewTypes(f"a single-core class needs at least 2 types, got {len(types)}")
    _check_names(types)
    n = len(types)
    shared = _sharing_sets(types)

    def in_core(u: Unit) -> bool:
        return u.binding is Binding.TYPE and len(shared[unit_key(u)]) == n

    first = types[0]
    core = tuple(u for u in first.units if in_core(u))
    projections = {t.name: tuple(u for u in t.units if not in_core(u)) for t in types}
    return SCIC(name, tuple(t.name for t in types), core, projections)


def build_mcic(types: Sequence[TypeDef], name: str = "T") -> MCIC:
    if not types:
        raise TooFewTypes("a multi-core class needs at least 1 type")
    _check_names(types)
    shared = _sharing_sets(types)
    type_names = tuple(t.name for t in types)

    cores: dict[CoreKey, list[Unit]] = {}
    placed: set[tuple] = set()
    projections: dict[str, tuple[Unit, ...]] = {}
    for t in types:
        for u in t.units:
            if u.binding is not Binding.TYPE:
                continue
            key = unit_key(u)
            if key in placed:
                continue
            placed.add(key)
            cores.setdefault(shared[key], []).append(u)
        projections[t.name] = tuple(u for u in t.units if u.binding is Binding.INSTANCE)

    ordered = sorted(cores, key=_core_order(type_names))
    return MCIC(name, type_names, {k: tuple(cores[k]) for k in ordered}, projections)


def extract_type(cls: InhomogeneousClass, type_name: str) -> TypeDef:
    """Rebuild the homogeneous class of one type: covering cores, then projection."""
    if type_name not in cls.type_names:
        raise UnknownTypeName(f"class {cls.name!r} has no type {type_name!r}")
    units = [u for key, core in cls.cores.items() if type_name in key for u in core]
    units.extend(cls.projections[type_name])
    spec = [u for u in units if u.kind is not UnitKind.METHOD]
    sig = [u for u in units if u.kind is UnitKind.METHOD]
    return TypeDef(type_name, tuple(spec), tuple(sig))


def core_census(cls: InhomogeneousClass) -> dict[int, int]:
    """Number of cores per level, highest level first."""
    counts = Counter(len(key) for key in cls.cores)
    return dict(sorted(counts.items(), reverse=True))


def _split(units) -> tuple[int, int]:
    units = list(units)
    methods = sum(1 for u in units if u.kind is UnitKind.METHOD)
    return len(units) - methods, methods


def unit_counts(variant: Variant | str, types: Sequence[TypeDef]) -> tuple[int, int]:
    """(properties, methods) that must be described under *variant*."""
    variant = Variant(variant)
    if variant is Variant.HC:
        return _split(u for t in types for u in t.units)
    cls = build_scic(types) if variant is Variant.SCIC else build_mcic(types)
    return class_unit_counts(cls)


def class_unit_counts(cls: InhomogeneousClass) -> tuple[int, int]:
    stored = [u for core in cls.cores.values() for u in core]
    stored += [u for proj in cls.projections.values() for u in proj]
    return _split(stored)


def census_table(cls: InhomogeneousClass) -> str:
    """Plain-text table of cores, their units and the types they are common to."""
    rows = [("Core", "Properties / Methods", "Common for types")]
    if isinstance(cls, MCIC):
        for key, units in cls.cores.items():
            rows.append((cls.core_label(key), ", ".join(u.name for u in units), ", ".join(key)))
    else:
        for key, units in cls.cores.items():
            rows.append(("Core", ", ".join(u.name for u in units), ", ".join(key)))
    for t, units in cls.projections.items():
        rows.append((f"pr({t})", ", ".join(u.name for u in units) or "-", t))
    widths = [max(len(r[i]) for r in rows) for i in range(3)]
    lines = ["  ".join(cell.ljust(w) for cell, w in zip(r, widths)).rstrip() for r in rows]
    lines.insert(1, "  ".join("-" * w for w in widths))
    census = ", ".join(f"level {lvl}: {k}" for lvl, k in core_census(cls).items())
    lines.append("")
    lines.append(f"census: {census or 'no cores'}")
    return "\n".join(lines)
