"""Relational storage of homogeneous, single-core and multi-core classes.

Flattening rule, shared by all three layouts:

* a data-property component becomes a ``REAL`` column, followed by a
  ``TEXT`` label column when the component kind is labeled;
* a verification function becomes one ``INTEGER`` column holding 0 or 1;
* a method becomes a ``REAL`` column holding its evaluated result, plus a
  ``TEXT`` column for its result label.

Each unit lands in the table that owns it. HC tables own every unit of
their type, so each object row repeats the type-level data. SCIC and MCIC
core tables own the shared type-level units; their rows are deduplicated on
value equality behind a surrogate ``core_id``. Projection rows hold the
object's own data plus one foreign key per covering core.

Method and type-level constant definitions are also written as text to the
``coreforge_meta`` table, together with the type document needed to reopen
the store.
"""

from __future__ import annotations

import os
import sqlite3
from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from pathlib import Path
from typing import Union

from coreforge.errors import (
    ConstraintViolation,
    CoreforgeError,
    EmptyClass,
    IoError,
    NotFound,
    SchemaError,
    SchemaMismatch,
    StoreError,
)
from coreforge.factorization import MCIC, SCIC, Variant, build_mcic, build_scic, extract_type
from coreforge.model import (
    Binding,
    ComponentKind,
    ObjectInstance,
    TypeDef,
    Unit,
    UnitKind,
    ValueTuple,
    check_instance,
    environment,
    evaluate_methods,
)
from coreforge.schemafile import SchemaDocument, dump_document, load_document

META_TABLE = "coreforge_meta"
_MEMO_LIMIT = 4096


@dataclass(frozen=True)
class ColumnSpec:
    name: str
    sql_type: str
    not_null: bool = False
    check: str | None = None

    def ddl(self) -> str:
        parts = [_q(self.name), self.sql_type]
        if self.not_null:
            parts.append("NOT NULL")
        if self.check:
            parts.append(f"CHECK ({self.check})")
        return " ".join(parts)


@dataclass(frozen=True)
class ForeignKey:
    column: str
    table: str
    ref_column: str = "core_id"


@dataclass(frozen=True)
class TableSpec:
    name: str
    role: str  # "type", "core" or "projection"
    owner: tuple[str, ...]  # the type, or the types a core is common to
    primary_key: str
    columns: tuple[ColumnSpec, ...]
    units: tuple[Unit, ...] = ()
    foreign_keys: tuple[ForeignKey, ...] = ()

    def ddl(self) -> str:
        lines = []
        for col in self.columns:
            line = col.ddl()
            if col.name == self.primary_key:
                line += " PRIMARY KEY"
            lines.append(line)
        for fk in self.foreign_keys:
            lines.append(f"FOREIGN KEY ({_q(fk.column)}) REFERENCES {_q(fk.table)} ({_q(fk.ref_column)})")
        body = ",\n  ".join(lines)
        return f"CREATE TABLE {_q(self.name)} (\n  {body}\n);"

    @property
    def column_names(self) -> tuple[str, ...]:
        return tuple(c.name for c in self.columns)


_META_DDL = (
    f'CREATE TABLE "{META_TABLE}" (\n  "scope" TEXT NOT NULL,\n  "name" TEXT NOT NULL,\n'
    f'  "definition" TEXT NOT NULL,\n  PRIMARY KEY ("scope", "name")\n);'
)


@dataclass(frozen=True)
class RelationalSchema:
    variant: Variant
    class_name: str
    types: tuple[TypeDef, ...]
    tables: tuple[TableSpec, ...]

    @property
    def ddl(self) -> str:
        return "\n".join([_META_DDL, *(t.ddl() for t in self.tables)]) + "\n"

    def table(self, name: str) -> TableSpec:
        for t in self.tables:
            if t.name == name:
                return t
        raise KeyError(name)

    def tables_for(self, type_name: str) -> list[TableSpec]:
        """Tables holding parts of an object of *type_name*; the object's own row last."""
        cores = [t for t in self.tables if t.role == "core" and type_name in t.owner]
        own = [t for t in self.tables if t.role in ("type", "projection") and t.owner == (type_name,)]
        return cores + own

    def object_table(self, type_name: str) -> TableSpec:
        return self.tables_for(type_name)[-1]

    def component_columns(self) -> dict[str, int]:
        """Per-object value columns (keys excluded) of each object table."""
        counts = {}
        for t in self.tables:
            if t.role in ("type", "projection"):
                keys = {t.primary_key} | {fk.column for fk in t.foreign_keys}
                counts[t.name] = sum(1 for c in t.columns if c.name not in keys)
        return counts


def _q(name: str) -> str:
    return '"' + name.replace('"', '""') + '"'


_q_meta = _q(META_TABLE)


# -- flattening -------------------------------------------------------------


def unit_columns(u: Unit) -> list[ColumnSpec]:
    if u.kind is UnitKind.DATA:
        cols = []
        for i, kind in enumerate(u.value_schema, start=1):
            cols.append(ColumnSpec(f"{u.name}_{i}", "REAL", True))
            if kind is ComponentKind.LABELED:
                cols.append(ColumnSpec(f"{u.name}_{i}_label", "TEXT", True))
        return cols
    if u.kind is UnitKind.VERIFICATION:
        return [ColumnSpec(u.name, "INTEGER", True, f"{_q(u.name)} IN (0, 1)")]
    cols = [ColumnSpec(u.name, "REAL")]
    if u.result_label is not None:
        cols.append(ColumnSpec(f"{u.name}_label", "TEXT"))
    return cols


def _flatten_value(value: ValueTuple, schema) -> list:
    out = []
    for comp, kind in zip(value.components, schema):
        out.append(comp.magnitude)
        if kind is ComponentKind.LABELED:
            out.append(comp.label)
    return out


def unit_row_values(u: Unit, obj: ObjectInstance, env, methods) -> list:
    """Column values of unit *u* for one object, in :func:`unit_columns` order."""
    if u.kind is UnitKind.DATA:
        value = u.constant_value if u.binding is Binding.TYPE else obj.values[u.name]
        return _flatten_value(value, u.value_schema)
    if u.kind is UnitKind.VERIFICATION:
        return [int(env[u.name][0])]
    out = [methods[u.name]]
    if u.result_label is not None:
        out.append(u.result_label)
    return out


def _make_table(name, role, owner, key, units, fks=()) -> TableSpec:
    cols = [ColumnSpec(key, "INTEGER")]
    cols += [ColumnSpec(fk.column, "INTEGER", True) for fk in fks]
    for u in units:
        cols += unit_columns(u)
    names = [c.name for c in cols]
    dupes = sorted({n for n in names if names.count(n) > 1})
    if dupes:
        raise SchemaError(f"table {name!r}: column name clash {dupes}")
    return TableSpec(name, role, tuple(owner), key, tuple(cols), tuple(units), tuple(fks))


ClassLike = Union[Sequence[TypeDef], SCIC, MCIC]


def generate_schema(cls: ClassLike) -> RelationalSchema:
    """Relational layout for a list of types (HC), an SCIC or an MCIC."""
    if isinstance(cls, (SCIC, MCIC)):
        if not cls.type_names:
            raise EmptyClass("class defines no types")
        types = tuple(extract_type(cls, t) for t in cls.type_names)
        name = cls.name
    else:
        types = tuple(cls)
        if not types:
            raise EmptyClass("class defines no types")
        name = "T"

    tables: list[TableSpec] = []
    if isinstance(cls, MCIC):
        variant = Variant.MCIC
        core_tables = {}
        for key, units in cls.cores.items():
            tname = "core_" + cls.core_label(key).split("^", 1)[1]  # Core^3_1 -> core_3_1
            core_tables[key] = tname
            tables.append(_make_table(tname, "core", key, "core_id", units))
        for t in cls.type_names:
            fks = [ForeignKey(f"{core_tables[k]}_id", core_tables[k]) for k in cls.covering(t)]
            tables.append(_make_table(f"pr_{t}", "projection", (t,), "object_id", cls.projections[t], fks))
    elif isinstance(cls, SCIC):
        variant = Variant.SCIC
        tables.append(_make_table("core", "core", cls.type_names, "core_id", cls.core))
        for t in cls.type_names:
            fks = [ForeignKey("core_id", "core")]
            tables.append(_make_table(f"pr_{t}", "projection", (t,), "object_id", cls.projections[t], fks))
    else:
        variant = Variant.HC
        for t in types:
            tables.append(_make_table(t.name, "type", (t.name,), "object_id", t.units))

    names = [t.name for t in tables] + [META_TABLE]
    if len(set(names)) != len(names):
        raise SchemaError(f"table name clash in {names}")
    return RelationalSchema(variant, name, types, tuple(tables))


def schema_for(types: Sequence[TypeDef], variant: Variant | str, name: str = "T") -> RelationalSchema:
    variant = Variant(variant)
    if variant is Variant.HC:
        return generate_schema(types)
    if variant is Variant.SCIC:
        return generate_schema(build_scic(types, name))
    return generate_schema(build_mcic(types, name))


# -- SQL text ---------------------------------------------------------------


def sql_literal(value) -> str:
    if value is None:
        return "NULL"
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, str):
        return "'" + value.replace("'", "''") + "'"
    raise TypeError(f"cannot render {value!r} as SQL")


# -- store handle -----------------------------------------------------------


class StoreHandle:
    """One embedded database file holding one class layout.

    A handle has a single writer and may be moved between threads, but must
    not be used from two threads at once.
    """

    def __init__(self, path: Path, conn: sqlite3.Connection, schema: RelationalSchema, samples=None):
        self.path = Path(path)
        self.conn = conn
        self.schema = schema
        self.samples = samples or {}
        self.types = {t.name: t for t in schema.types}
        self._plans = {t: schema.tables_for(t) for t in self.types}
        self._core_ids: dict[str, dict[tuple, int]] = {}
        self._memo: dict[tuple, tuple] = {}
        self._load_state()

    @property
    def variant(self) -> Variant:
        return self.schema.variant

    # lifecycle

    def close(self) -> None:
        self.conn.close()

    def __enter__(self) -> StoreHandle:
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    def _load_state(self) -> None:
        self.last_id = 0
        for table in self.schema.tables:
            if table.role == "core":
                cols = ", ".join(_q(c) for c in table.column_names[1:])
                select = f"SELECT core_id{', ' + cols if cols else ''} FROM {_q(table.name)}"
                self._core_ids[table.name] = {tuple(r[1:]): r[0] for r in self.conn.execute(select)}
            else:
                (top,) = self.conn.execute(f"SELECT MAX(object_id) FROM {_q(table.name)}").fetchone()
                self.last_id = max(self.last_id, top or 0)

    # writing

    def _derived(self, obj: ObjectInstance, typedef: TypeDef):
        key = (obj.type_name, tuple(sorted(obj.values.items(), key=lambda kv: kv[0])))
        hit = self._memo.get(key)
        if hit is None:
            check_instance(obj, typedef)
            env = environment(obj, typedef)
            hit = (env, evaluate_methods(obj, typedef, env))
            if len(self._memo) >= _MEMO_LIMIT:
                self._memo.clear()
            self._memo[key] = hit
        return hit

    def _row(self, table: TableSpec, obj, env, methods) -> list:
        values = []
        for u in table.units:
            values += unit_row_values(u, obj, env, methods)
        return values

    def _core_row_id(self, table: TableSpec, values: tuple, pending: dict) -> int:
        ids = self._core_ids[table.name]
        core_id = ids.get(values)
        if core_id is None:
            core_id = len(ids) + 1
            ids[values] = core_id
            pending.setdefault(table.name, []).append(values)
            cols = ", ".join(_q(c) for c in table.column_names)
            marks = ", ".join("?" * len(table.columns))
            self.conn.execute(f"INSERT INTO {_q(table.name)} ({cols}) VALUES ({marks})", (core_id, *values))
        return core_id

    def insert_objects(self, objects: Iterable[ObjectInstance]) -> int:
        """Insert a batch in one transaction; returns the number of objects stored."""
        objects = list(objects)
        if not objects:
            return 0
        rows: dict[str, list] = {}
        pending: dict[str, list] = {}
        last_id = self.last_id
        try:
            with self.conn:
                for obj in objects:
                    typedef = self.types.get(obj.type_name)
                    if typedef is None:
                        raise SchemaMismatch(f"object {obj.object_id}: store has no type {obj.type_name!r}")
                    if obj.object_id <= last_id:
                        raise ConstraintViolation(
                            f"object ids must increase: {obj.object_id} after {last_id}"
                        )
                    last_id = obj.object_id
                    try:
                        env, methods = self._derived(obj, typedef)
                    except CoreforgeError as exc:
                        raise SchemaMismatch(f"object {obj.object_id} does not fit {typedef.name}: {exc}") from exc
                    *cores, own = self._plans[obj.type_name]
                    fks = [self._core_row_id(t, tuple(self._row(t, obj, env, methods)), pending) for t in cores]
                    rows.setdefault(own.name, []).append((obj.object_id, *fks, *self._row(own, obj, env, methods)))
                for name, batch in rows.items():
                    marks = ", ".join("?" * len(batch[0]))
                    self.conn.executemany(f"INSERT INTO {_q(name)} VALUES ({marks})", batch)
        except sqlite3.IntegrityError as exc:
            self._forget(pending)
            raise ConstraintViolation(str(exc)) from exc
        except BaseException:
            self._forget(pending)
            raise
        self.last_id = last_id
        return len(objects)

    def _forget(self, pending: dict) -> None:
        for name, keys in pending.items():
            for k in keys:
                self._core_ids[name].pop(k, None)

    # reading

    def load_object(self, object_id: int) -> ObjectInstance:
        for type_name, plan in self._plans.items():
            *cores, own = plan
            joins = "".join(
                f" JOIN {_q(c.name)} ON p.{_q(fk.column)} = {_q(c.name)}.core_id"
                for c, fk in zip(cores, own.foreign_keys)
                if fk.table == c.name
            )
            cols = ", ".join(f"p.{_q(c)}" for c in own.column_names)
            row = self.conn.execute(
                f"SELECT {cols} FROM {_q(own.name)} AS p{joins} WHERE p.object_id = ?", (object_id,)
            ).fetchone()
            if row is None:
                continue
            by_name = dict(zip(own.column_names, row))
            values = {}
            for u in self.types[type_name].instance_units:
                comps = []
                for i, kind in enumerate(u.value_schema, start=1):
                    label = by_name[f"{u.name}_{i}_label"] if kind is ComponentKind.LABELED else None
                    comps.append((float(by_name[f"{u.name}_{i}"]), label))
                values[u.name] = ValueTuple.of(*comps)
            return ObjectInstance(object_id, type_name, values)
        raise NotFound(f"no object with id {object_id}")

    def count_rows(self) -> dict[str, int]:
        return {
            t.name: self.conn.execute(f"SELECT COUNT(*) FROM {_q(t.name)}").fetchone()[0]
            for t in self.schema.tables
        }

    # measurement

    def dump_lines(self) -> Iterable[str]:
        """Deterministic SQL dump: tables in schema order, rows by primary key."""
        yield "BEGIN TRANSACTION;"
        yield _META_DDL
        for row in self.conn.execute(f"SELECT * FROM {_q_meta} ORDER BY scope, name"):
            yield f"INSERT INTO {_q_meta} VALUES({','.join(sql_literal(v) for v in row)});"
        for table in self.schema.tables:
            yield table.ddl()
            prefix = f"INSERT INTO {_q(table.name)} VALUES("
            query = f"SELECT * FROM {_q(table.name)} ORDER BY {_q(table.primary_key)}"
            for row in self.conn.execute(query):
                yield prefix + ",".join(sql_literal(v) for v in row) + ");"
        yield "COMMIT;"

    def dump_sql(self) -> str:
        return "".join(line + "\n" for line in self.dump_lines())

    def measure(self, export_path: str | os.PathLike | None = None) -> tuple[int, int]:
        """(live database file bytes, exported SQL dump bytes)."""
        try:
            self.conn.commit()
            live = os.path.getsize(self.path)
            export = 0
            if export_path is None:
                for line in self.dump_lines():
                    export += len(line.encode("utf-8")) + 1
            else:
                with open(export_path, "w", encoding="utf-8", newline="\n") as fh:
                    for line in self.dump_lines():
                        fh.write(line + "\n")
                export = os.path.getsize(export_path)
        except OSError as exc:
            raise IoError(str(exc)) from exc
        return live, export

    def payload_bytes(self) -> int:
        """Record payload bytes of the class tables, as reported by ``dbstat``."""
        names = [t.name for t in self.schema.tables]
        marks = ", ".join("?" * len(names))
        (total,) = self.conn.execute(
            f"SELECT COALESCE(SUM(payload), 0) FROM dbstat WHERE name IN ({marks})", names
        ).fetchone()
        return int(total)


# -- creating and opening ---------------------------------------------------


DEFAULT_PAGE_SIZE = 1024


def _connect(path: Path) -> sqlite3.Connection:
    try:
        conn = sqlite3.connect(path, check_same_thread=False, isolation_level="DEFERRED")
    except sqlite3.Error as exc:
        raise IoError(f"cannot open {path}: {exc}") from exc
    conn.execute("PRAGMA foreign_keys = ON")
    return conn


def create_store(path: str | os.PathLike, source: SchemaDocument | Sequence[TypeDef],
                 variant: Variant | str, *, overwrite: bool = False,
                 page_size: int = DEFAULT_PAGE_SIZE) -> StoreHandle:
    """Create a new database file laid out for *variant* and return its handle.

    Every table costs at least one page, so the small default page keeps the
    fixed cost of the many small core tables from hiding per-object sizes in
    desk-scale measurements.
    """
    path = Path(path)
    if isinstance(source, SchemaDocument):
        doc = source
    else:
        doc = SchemaDocument("T", tuple(source))
    schema = schema_for(doc.types, variant, doc.class_name)
    if path.exists():
        if not overwrite:
            raise IoError(f"{path} already exists")
        path.unlink()
    conn = _connect(path)
    conn.execute(f"PRAGMA page_size = {int(page_size)}")
    with conn:
        conn.execute(_META_DDL)
        for table in schema.tables:
            conn.execute(table.ddl())
        meta = [("class", "variant", schema.variant.value), ("class", "document", dump_document(doc))]
        for table in schema.tables:
            for u in table.units:
                if u.kind is UnitKind.METHOD or (u.kind is UnitKind.DATA and u.binding is Binding.TYPE):
                    meta.append((table.name, u.name, f"{u.kind.value}: {u.definition()}"))
        conn.executemany(f"INSERT INTO {_q_meta} VALUES (?, ?, ?)", meta)
    return StoreHandle(path, conn, schema, doc.samples)


def open_store(path: str | os.PathLike) -> StoreHandle:
    path = Path(path)
    if not path.exists():
        raise IoError(f"{path} does not exist")
    conn = _connect(path)
    try:
        meta = dict(conn.execute(f"SELECT name, definition FROM {_q_meta} WHERE scope = 'class'").fetchall())
    except sqlite3.Error as exc:
        conn.close()
        raise StoreError(f"{path} is not a coreforge store: {exc}") from exc
    doc = load_document(meta["document"])
    schema = schema_for(doc.types, meta["variant"], doc.class_name)
    return StoreHandle(path, conn, schema, doc.samples)
