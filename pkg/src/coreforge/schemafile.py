"""Read and write type-definition documents.

Documents are YAML with one unit per line, so edits show up as one-line
diffs::

    class: quadrangles
    types:
    - name: t_S
      specification:
      - {name: sides, kind: data-property, binding: instance-level, schema: [numeric-with-unit-label, ...]}
      - {name: all_sides_equal, kind: verification-function, binding: type-level, expr: v1(sides) = v2(sides)}
      signature:
      - {name: area, kind: method, binding: type-level, expr: v1(sides) ^ 2, label: cm^2}
      sample:
        sides: [[2, cm], [2, cm], [2, cm], [2, cm]]

Unit fields: ``name``, ``kind`` (data-property, verification-function,
method), ``binding`` (type-level or instance-level, default type-level),
``schema`` (component kinds: numeric, numeric-with-unit-label,
angle-degrees), ``value`` (constant of a type-level property), ``expr``
and ``label`` (result unit of a method). A component is written as a bare
number or as ``[magnitude, label]``. ``sample`` holds per-type values of the
instance-level properties, used when generating objects.

A factored class (``variant: scic`` or ``mcic``) lists ``cores`` (each with
the ``types`` it is common to and its ``units``) and ``projections`` keyed
by type name instead of ``types``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import yaml

from coreforge.errors import SchemaError
from coreforge.expr import to_text
from coreforge.factorization import MCIC, SCIC, InhomogeneousClass
from coreforge.model import TypeDef, Unit, ValueTuple, define_type

Samples = dict[str, dict[str, ValueTuple]]


@dataclass(frozen=True)
class SchemaDocument:
    class_name: str
    types: tuple[TypeDef, ...]
    samples: Samples = field(default_factory=dict)

    def type(self, name: str) -> TypeDef:
        for t in self.types:
            if t.name == name:
                return t
        raise KeyError(name)


# -- values -----------------------------------------------------------------


def _num(x: float):
    return int(x) if float(x).is_integer() and abs(x) < 1e15 else float(x)


def value_to_yaml(value: ValueTuple) -> list:
    return [_num(c.magnitude) if c.label is None else [_num(c.magnitude), c.label] for c in value.components]


def value_from_yaml(raw, where: str) -> ValueTuple:
    if not isinstance(raw, list) or not raw:
        raise SchemaError(f"{where}: value must be a non-empty list of components")
    items = []
    for comp in raw:
        if isinstance(comp, list):
            if len(comp) != 2 or not isinstance(comp[0], (int, float)):
                raise SchemaError(f"{where}: component {comp!r} must be [magnitude, label]")
            items.append((float(comp[0]), str(comp[1])))
        elif isinstance(comp, (int, float)) and not isinstance(comp, bool):
            items.append(float(comp))
        else:
            raise SchemaError(f"{where}: bad component {comp!r}")
    return ValueTuple.of(*items)


# -- units ------------------------------------------------------------------

_UNIT_FIELDS = {"name", "kind", "binding", "schema", "value", "expr", "label"}


def unit_to_yaml(u: Unit) -> dict:
    d = {"name": u.name, "kind": u.kind.value, "binding": u.binding.value}
    if u.value_schema:
        d["schema"] = [k.value for k in u.value_schema]
    if u.constant_value is not None:
        d["value"] = value_to_yaml(u.constant_value)
    if u.expression is not None:
        d["expr"] = to_text(u.expression)
    if u.result_label is not None:
        d["label"] = u.result_label
    return d


def unit_from_yaml(raw: dict, where: str) -> Unit:
    if not isinstance(raw, dict) or "name" not in raw or "kind" not in raw:
        raise SchemaError(f"{where}: each unit needs at least 'name' and 'kind'")
    unknown = raw.keys() - _UNIT_FIELDS
    if unknown:
        raise SchemaError(f"{where}: unknown unit field(s) {sorted(unknown)}")
    where = f"{where}, unit {raw['name']!r}"
    try:
        return Unit(
            name=raw["name"],
            kind=raw["kind"],
            binding=raw.get("binding", "type-level"),
            value_schema=tuple(raw.get("schema", ())),
            expression=str(raw["expr"]) if "expr" in raw else None,
            constant_value=value_from_yaml(raw["value"], where) if "value" in raw else None,
            result_label=raw.get("label"),
        )
    except ValueError as exc:  # bad enum member
        raise SchemaError(f"{where}: {exc}") from None


def _flow(d) -> str:
    return yaml.safe_dump(d, default_flow_style=True, sort_keys=False, width=1 << 30, allow_unicode=True).strip()


def _unit_lines(units, indent: str) -> list[str]:
    return [f"{indent}- {_flow(unit_to_yaml(u))}" for u in units]


# -- plain documents --------------------------------------------------------


def _load_yaml(source: str | Path) -> dict:
    if isinstance(source, Path) or (isinstance(source, str) and "\n" not in source and Path(source).exists()):
        text = Path(source).read_text(encoding="utf-8")
    else:
        text = source
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise SchemaError(f"not a valid YAML document: {exc}") from None
    if not isinstance(data, dict):
        raise SchemaError("a schema document must be a mapping")
    return data


def load_document(source: str | Path) -> SchemaDocument:
    """Parse a type-definition document from a path or YAML text."""
    data = _load_yaml(source)
    if data.get("variant", "hc") != "hc":
        raise SchemaError("this is a factored class; use load_class()")
    types = []
    samples: Samples = {}
    for i, raw in enumerate(data.get("types") or []):
        if not isinstance(raw, dict) or "name" not in raw:
            raise SchemaError(f"types[{i}]: each type needs a 'name'")
        where = f"type {raw['name']!r}"
        spec = [unit_from_yaml(u, where) for u in raw.get("specification") or []]
        sig = [unit_from_yaml(u, where) for u in raw.get("signature") or []]
        t = define_type(raw["name"], spec, sig)
        types.append(t)
        if raw.get("sample"):
            samples[t.name] = {
                name: value_from_yaml(v, f"{where}, sample {name!r}") for name, v in raw["sample"].items()
            }
    return SchemaDocument(str(data.get("class", "T")), tuple(types), samples)


def dump_document(doc: SchemaDocument) -> str:
    lines = [f"class: {doc.class_name}", "types:"]
    for t in doc.types:
        lines.append(f"- name: {t.name}")
        lines.append("  specification:" + ("" if t.specification else " []"))
        lines += _unit_lines(t.specification, "  ")
        lines.append("  signature:" + ("" if t.signature else " []"))
        lines += _unit_lines(t.signature, "  ")
        sample = doc.samples.get(t.name)
        if sample:
            lines.append("  sample:")
            for name, value in sample.items():
                lines.append(f"    {name}: {_flow(value_to_yaml(value))}")
    return "\n".join(lines) + "\n"


# -- factored classes -------------------------------------------------------


def dump_class(cls: InhomogeneousClass) -> str:
    variant = "mcic" if isinstance(cls, MCIC) else "scic"
    lines = [f"class: {cls.name}", f"variant: {variant}", f"types: {_flow(list(cls.type_names))}", "cores:"]
    if not cls.cores:
        lines[-1] += " []"
    for key, units in cls.cores.items():
        label = cls.core_label(key) if isinstance(cls, MCIC) else "Core"
        lines.append(f"- label: {label}")
        lines.append(f"  types: {_flow(list(key))}")
        lines.append("  units:")
        lines += _unit_lines(units, "  ")
    lines.append("projections:")
    for name, units in cls.projections.items():
        lines.append(f"  {name}:" + ("" if units else " []"))
        lines += _unit_lines(units, "  ")
    return "\n".join(lines) + "\n"


def load_class(source: str | Path) -> InhomogeneousClass:
    data = _load_yaml(source)
    variant = data.get("variant")
    if variant not in ("scic", "mcic"):
        raise SchemaError(f"expected variant scic or mcic, got {variant!r}")
    type_names = tuple(data.get("types") or ())
    cores = {}
    for i, raw in enumerate(data.get("cores") or []):
        key = tuple(raw.get("types") or ())
        unknown = set(key) - set(type_names)
        if not key or unknown:
            raise SchemaError(f"cores[{i}]: bad type list {list(key)}")
        cores[key] = tuple(unit_from_yaml(u, f"cores[{i}]") for u in raw.get("units") or [])
    projections = {
        name: tuple(unit_from_yaml(u, f"projection {name!r}") for u in (data.get("projections") or {}).get(name) or [])
        for name in type_names
    }
    name = str(data.get("class", "T"))
    if variant == "mcic":
        return MCIC(name, type_names, cores, projections)
    if len(cores) > 1:
        raise SchemaError("a single-core class has at most one core")
    return SCIC(name, type_names, next(iter(cores.values()), ()), projections)
