"""The quadrangle family and object generators for populating stores."""

from __future__ import annotations

import random
from collections.abc import Iterator, Sequence
from enum import Enum
from importlib import resources

from coreforge.errors import ConfigError
from coreforge.model import ComponentKind, ObjectInstance, TypeDef, ValueTuple
from coreforge.schemafile import SchemaDocument, Samples, load_document


class Regime(str, Enum):
    IDENTICAL = "identical"
    RANDOMIZED = "randomized"


def fixture_text() -> str:
    return resources.files("coreforge").joinpath("data/quadrangles.yaml").read_text(encoding="utf-8")


def quadrangles() -> SchemaDocument:
    """Square, rectangle and rhombus with their reference sample values."""
    return load_document(fixture_text())


def quadrangle_types() -> tuple[TypeDef, ...]:
    return quadrangles().types


def random_quadrangle(type_name: str, object_id: int, rng: random.Random) -> ObjectInstance:
    """A random instance of ``t_S``, ``t_R`` or ``t_Rb`` that passes every verification."""

    def side() -> float:
        return round(rng.uniform(0.5, 50.0), 3)

    if type_name == "t_S":
        sides = [side()] * 4
    elif type_name == "t_R":
        a, b = side(), side()
        sides = [a, b, a, b]
    elif type_name == "t_Rb":
        sides = [side()] * 4
    else:
        raise KeyError(type_name)
    values = {"sides": ValueTuple.of(*((s, "cm") for s in sides))}
    if type_name == "t_Rb":
        alpha = round(rng.uniform(1.0, 179.0), 3)
        values["angles"] = ValueTuple.of(alpha, 180.0 - alpha, alpha, 180.0 - alpha)
    return ObjectInstance(object_id, type_name, values)


def _random_value(schema, sample: ValueTuple | None, rng: random.Random) -> ValueTuple:
    comps = []
    for i, kind in enumerate(schema):
        if kind is ComponentKind.ANGLE:
            comps.append(round(rng.uniform(0.0, 359.999), 3))
            continue
        magnitude = round(rng.uniform(0.5, 50.0), 3)
        if kind is ComponentKind.LABELED:
            label = sample.components[i].label if sample is not None else "u"
            comps.append((magnitude, label))
        else:
            comps.append(magnitude)
    return ValueTuple.of(*comps)


class ObjectFactory:
    """Produce objects for a type family with globally increasing ids.

    Under the identical regime every object of a type carries the type's
    sample values; under the randomized regime each instance-level
    component is drawn from a seeded generator.
    """

    def __init__(self, types: Sequence[TypeDef], samples: Samples, regime: Regime | str = Regime.IDENTICAL,
                 seed: int = 0, start_id: int = 1):
        self.types = tuple(types)
        self.samples = samples
        self.regime = Regime(regime)
        self.rng = random.Random(seed)
        self.next_id = start_id
        if self.regime is Regime.IDENTICAL:
            for t in self.types:
                missing = [u.name for u in t.instance_units if u.name not in samples.get(t.name, {})]
                if missing:
                    raise ConfigError(f"identical regime needs sample values for {t.name}: {missing}")

    def make(self, typedef: TypeDef) -> ObjectInstance:
        sample = self.samples.get(typedef.name, {})
        if self.regime is Regime.IDENTICAL:
            values = {u.name: sample[u.name] for u in typedef.instance_units}
        else:
            values = {u.name: _random_value(u.value_schema, sample.get(u.name), self.rng)
                      for u in typedef.instance_units}
        obj = ObjectInstance(self.next_id, typedef.name, values)
        self.next_id += 1
        return obj

    def batch(self, per_type: int) -> list[ObjectInstance]:
        """``per_type`` new objects of every type, grouped by type."""
        return [self.make(t) for t in self.types for _ in range(per_type)]

    def __iter__(self) -> Iterator[ObjectInstance]:
        while True:
            yield from self.batch(1)
