"""Units, homogeneous classes (types) and object instances."""

from __future__ import annotations

import math
import re
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field
from enum import Enum

from coreforge.errors import (
    DanglingReference,
    DuplicateUnitName,
    InvalidUnit,
    MissingValue,
    SchemaArityMismatch,
    SchemaError,
)
from coreforge.expr import (
    CanonicalExpr,
    Expr,
    Selector,
    alpha_canonicalize,
    evaluate,
    parse_expression,
    referenced_units,
    selectors,
    to_text,
)

IDENTIFIER_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")


class ComponentKind(str, Enum):
    NUMERIC = "numeric"
    LABELED = "numeric-with-unit-label"
    ANGLE = "angle-degrees"


class UnitKind(str, Enum):
    DATA = "data-property"
    VERIFICATION = "verification-function"
    METHOD = "method"


class Binding(str, Enum):
    TYPE = "type-level"
    INSTANCE = "instance-level"


def check_identifier(name: str, what: str = "name") -> str:
    if not isinstance(name, str) or not IDENTIFIER_RE.fullmatch(name):
        raise SchemaError(f"invalid {what} {name!r}: must match {IDENTIFIER_RE.pattern}")
    return name


@dataclass(frozen=True)
class Component:
    magnitude: float
    label: str | None = None


@dataclass(frozen=True)
class ValueTuple:
    """Positional (magnitude, unit label) components of one property value."""

    components: tuple[Component, ...]

    def __post_init__(self):
        if len(self.components) < 1:
            raise SchemaArityMismatch("a value tuple needs at least one component")
        for c in self.components:
            if not math.isfinite(c.magnitude):
                raise SchemaError(f"non-finite magnitude {c.magnitude!r}")

    @classmethod
    def of(cls, *items: float | tuple[float, str | None]) -> ValueTuple:
        """``ValueTuple.of((2, "cm"), (2, "cm"))`` or ``ValueTuple.of(90, 90)``."""
        comps = []
        for item in items:
            if isinstance(item, tuple):
                magnitude, label = item
            else:
                magnitude, label = item, None
            comps.append(Component(float(magnitude), label))
        return cls(tuple(comps))

    @property
    def magnitudes(self) -> tuple[float, ...]:
        return tuple(c.magnitude for c in self.components)

    def __len__(self) -> int:
        return len(self.components)

    def check_schema(self, schema: tuple[ComponentKind, ...], where: str) -> None:
        if len(self.components) != len(schema):
            raise SchemaArityMismatch(
                f"{where}: value has {len(self.components)} components, schema has {len(schema)}"
            )
        for i, (comp, kind) in enumerate(zip(self.components, schema), start=1):
            if kind is ComponentKind.LABELED:
                if not comp.label:
                    raise SchemaError(f"{where}: component {i} needs a unit label")
            elif comp.label is not None:
                raise SchemaError(f"{where}: component {i} ({kind.value}) takes no unit label")
            if kind is ComponentKind.ANGLE and not 0.0 <= comp.magnitude < 360.0:
                raise SchemaError(f"{where}: angle component {i} = {comp.magnitude} not in [0, 360)")


@dataclass(frozen=True)
class Unit:
    """One property, verification function or method of a class.

    ``result_label`` is the unit label attached to a method's result
    (``cm^2`` for an area); it is ``None`` for every other kind.
    """

    name: str
    kind: UnitKind
    binding: Binding = Binding.TYPE
    value_schema: tuple[ComponentKind, ...] = ()
    expression: Expr | None = None
    constant_value: ValueTuple | None = None
    result_label: str | None = None

    def __post_init__(self):
        check_identifier(self.name, "unit name")
        object.__setattr__(self, "kind", UnitKind(self.kind))
        object.__setattr__(self, "binding", Binding(self.binding))
        object.__setattr__(self, "value_schema", tuple(ComponentKind(k) for k in self.value_schema))
        if isinstance(self.expression, str):
            object.__setattr__(self, "expression", parse_expression(self.expression))

        where = f"unit {self.name!r}"
        if self.kind is UnitKind.DATA:
            if self.expression is not None:
                raise InvalidUnit(f"{where}: data properties carry no expression")
            if not self.value_schema:
                raise InvalidUnit(f"{where}: data properties need a value schema")
        elif self.expression is None:
            raise InvalidUnit(f"{where}: {self.kind.value} units need an expression")

        if self.kind is UnitKind.DATA and self.binding is Binding.TYPE:
            if self.constant_value is None:
                raise InvalidUnit(f"{where}: type-level data properties need a constant value")
            self.constant_value.check_schema(self.value_schema, where)
        elif self.constant_value is not None:
            raise InvalidUnit(f"{where}: only type-level data properties carry a constant value")

        if self.result_label is not None and self.kind is not UnitKind.METHOD:
            raise InvalidUnit(f"{where}: only methods carry a result label")

    @property
    def is_property(self) -> bool:
        """Data properties and verification functions both count as properties."""
        return self.kind is not UnitKind.METHOD

    @property
    def is_instance_data(self) -> bool:
        return self.kind is UnitKind.DATA and self.binding is Binding.INSTANCE

    def canonical_expression(self) -> CanonicalExpr | None:
        return None if self.expression is None else alpha_canonicalize(self.expression)

    def definition(self) -> str:
        """Human-readable one-line definition, used in storage metadata."""
        if self.expression is not None:
            text = to_text(self.expression)
            return f"{text} [{self.result_label}]" if self.result_label else text
        if self.constant_value is not None:
            parts = [
                f"{c.magnitude:g} {c.label}" if c.label else f"{c.magnitude:g}"
                for c in self.constant_value.components
            ]
            return "(" + ", ".join(parts) + ")"
        return "(" + ", ".join(k.value for k in self.value_schema) + ")"


def unit_key(unit: Unit) -> tuple:
    """Hashable key such that ``unit_key(a) == unit_key(b)`` iff the units are equivalent."""
    return (
        unit.name,
        unit.kind,
        unit.binding,
        unit.value_schema,
        unit.constant_value if unit.kind is UnitKind.DATA and unit.binding is Binding.TYPE else None,
        unit.canonical_expression(),
        unit.result_label,
    )


def unit_equivalent(a: Unit, b: Unit) -> bool:
    return unit_key(a) == unit_key(b)


@dataclass(frozen=True)
class TypeDef:
    """A homogeneous class: an ordered specification plus a signature."""

    name: str
    specification: tuple[Unit, ...] = ()
    signature: tuple[Unit, ...] = ()

    def __post_init__(self):
        check_identifier(self.name, "type name")
        object.__setattr__(self, "specification", tuple(self.specification))
        object.__setattr__(self, "signature", tuple(self.signature))
        for u in self.specification:
            if u.kind is UnitKind.METHOD:
                raise InvalidUnit(f"type {self.name!r}: method {u.name!r} belongs in the signature")
        for u in self.signature:
            if u.kind is not UnitKind.METHOD:
                raise InvalidUnit(f"type {self.name!r}: {u.name!r} is not a method")

        seen = set()
        for u in self.units:
            if u.name in seen:
                raise DuplicateUnitName(f"type {self.name!r}: unit name {u.name!r} used twice")
            seen.add(u.name)

        spec = {u.name: u for u in self.specification}
        for u in self.units:
            if u.expression is None:
                continue
            missing = referenced_units(u.expression) - spec.keys()
            if missing:
                raise DanglingReference(
                    f"type {self.name!r}: {u.name!r} references undeclared unit(s) {sorted(missing)}"
                )
            for sel in selectors(u.expression):
                target = spec[sel.unit]
                if target.kind is UnitKind.DATA and sel.index > len(target.value_schema):
                    raise SchemaArityMismatch(
                        f"type {self.name!r}: {u.name!r} selects component {sel.index} "
                        f"of {sel.unit!r}, which has {len(target.value_schema)}"
                    )
                if target.kind is UnitKind.VERIFICATION and sel.index != 1:
                    raise SchemaArityMismatch(
                        f"type {self.name!r}: verification {sel.unit!r} has a single component"
                    )

    @property
    def units(self) -> tuple[Unit, ...]:
        return self.specification + self.signature

    def unit(self, name: str) -> Unit:
        for u in self.units:
            if u.name == name:
                return u
        raise KeyError(name)

    @property
    def instance_units(self) -> tuple[Unit, ...]:
        return tuple(u for u in self.specification if u.is_instance_data)

    @property
    def verifications(self) -> tuple[Unit, ...]:
        return tuple(u for u in self.specification if u.kind is UnitKind.VERIFICATION)

    @property
    def methods(self) -> tuple[Unit, ...]:
        return self.signature


def define_type(name: str, spec: Iterable[Unit], sig: Iterable[Unit] = ()) -> TypeDef:
    """Build a validated :class:`TypeDef`; invalid definitions raise a SchemaError."""
    return TypeDef(name, tuple(spec), tuple(sig))


@dataclass(frozen=True)
class ObjectInstance:
    object_id: int
    type_name: str
    values: Mapping[str, ValueTuple] = field(default_factory=dict)

    def __post_init__(self):
        if not isinstance(self.object_id, int) or self.object_id < 0:
            raise SchemaError(f"object_id must be an unsigned integer, got {self.object_id!r}")
        object.__setattr__(self, "values", dict(self.values))

    def __hash__(self):
        return hash((self.object_id, self.type_name, tuple(sorted(self.values.items(), key=lambda kv: kv[0]))))


def check_instance(obj: ObjectInstance, typedef: TypeDef) -> None:
    """Raise unless *obj* supplies exactly the instance-level data of *typedef*."""
    if obj.type_name != typedef.name:
        raise SchemaError(f"object {obj.object_id} is of type {obj.type_name!r}, not {typedef.name!r}")
    expected = {u.name: u for u in typedef.instance_units}
    for name, unit in expected.items():
        if name not in obj.values:
            raise MissingValue(f"object {obj.object_id}: no value for {name!r}")
        obj.values[name].check_schema(unit.value_schema, f"object {obj.object_id}, unit {name!r}")
    extra = obj.values.keys() - expected.keys()
    if extra:
        raise SchemaError(f"object {obj.object_id}: unexpected values for {sorted(extra)}")


def environment(obj: ObjectInstance, typedef: TypeDef) -> dict[str, tuple[float, ...]]:
    """Magnitudes visible to expressions: constants plus the object's own values.

    Verification functions are evaluated in specification order and become
    visible to later expressions as one-component values.
    """
    env: dict[str, tuple[float, ...]] = {}
    for u in typedef.specification:
        if u.kind is UnitKind.DATA:
            if u.binding is Binding.TYPE:
                env[u.name] = u.constant_value.magnitudes
            elif u.name in obj.values:
                env[u.name] = obj.values[u.name].magnitudes
            else:
                raise MissingValue(f"object {obj.object_id}: no value for {u.name!r}")
    for u in typedef.verifications:
        env[u.name] = (evaluate(u.expression, env, expect_boolean=True),)
    return env


@dataclass(frozen=True)
class VerificationReport:
    results: dict[str, int]

    @property
    def valid(self) -> bool:
        return all(v == 1 for v in self.results.values())


def validate_instance(obj: ObjectInstance, typedef: TypeDef) -> VerificationReport:
    """Evaluate every verification function of *typedef* on *obj*."""
    check_instance(obj, typedef)
    env = environment(obj, typedef)
    return VerificationReport({u.name: int(env[u.name][0]) for u in typedef.verifications})


def evaluate_methods(obj: ObjectInstance, typedef: TypeDef, env=None) -> dict[str, float]:
    env = environment(obj, typedef) if env is None else env
    return {u.name: evaluate(u.expression, env) for u in typedef.signature}


__all__ = [
    "Binding",
    "Component",
    "ComponentKind",
    "ObjectInstance",
    "TypeDef",
    "Unit",
    "UnitKind",
    "ValueTuple",
    "VerificationReport",
    "check_instance",
    "define_type",
    "environment",
    "evaluate_methods",
    "unit_equivalent",
    "unit_key",
    "validate_instance",
]
