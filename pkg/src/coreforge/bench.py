"""Storage sweep over the HC, SCIC and MCIC layouts, and its summary report."""

from __future__ import annotations

import csv
import io
import logging
import math
import os
import statistics
import tempfile
import time
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from pathlib import Path

from coreforge.efficiency import MIB, LinearFit, fit_linear
from coreforge.errors import ConfigError
from coreforge.factorization import Variant
from coreforge.fixture import ObjectFactory, Regime
from coreforge.schemafile import SchemaDocument, load_document
from coreforge.store import StoreHandle, create_store

log = logging.getLogger(__name__)

VARIANTS = (Variant.HC, Variant.SCIC, Variant.MCIC)
MEASURES = ("live", "export")
CSV_FIELDS = ("Q", "variant", "live_bytes", "export_bytes")


@dataclass(frozen=True)
class ExperimentConfig:
    """Shape of one sweep.

    ``points`` counts measurement rounds including the empty databases, so
    the last round holds ``(points - 1) * step`` objects of every type.
    """

    schema: str | Path | SchemaDocument
    points: int = 11
    step: int = 400
    regime: Regime = Regime.IDENTICAL
    seed: int = 0
    csv_path: Path | None = None
    report_path: Path | None = None
    workdir: Path | None = None

    def __post_init__(self):
        if self.points < 2:
            raise ConfigError(f"points must be >= 2 to fit a line, got {self.points}")
        if self.step < 1:
            raise ConfigError(f"step must be >= 1, got {self.step}")
        object.__setattr__(self, "regime", Regime(self.regime))

    def document(self) -> SchemaDocument:
        if isinstance(self.schema, SchemaDocument):
            return self.schema
        return load_document(Path(self.schema))


@dataclass(frozen=True)
class Measurement:
    q: int
    variant: Variant
    live_bytes: int
    export_bytes: int

    def size(self, measure: str) -> int:
        return self.live_bytes if measure == "live" else self.export_bytes


def _fmt_size(size: float) -> str:
    return str(int(size)) if float(size).is_integer() else repr(float(size))


@dataclass
class MeasurementTable:
    rows: list[Measurement] = field(default_factory=list)

    def add(self, q: int, variant: Variant | str, live: float, export: float) -> None:
        self.rows.append(Measurement(int(q), Variant(variant), live, export))

    def quantities(self) -> list[int]:
        return sorted({r.q for r in self.rows})

    def series(self, variant: Variant | str, measure: str) -> list[tuple[int, float]]:
        variant = Variant(variant)
        return [(r.q, r.size(measure)) for r in self.rows if r.variant is variant]

    def at(self, q: int, variant: Variant | str) -> Measurement:
        variant = Variant(variant)
        for r in self.rows:
            if r.q == q and r.variant is variant:
                return r
        raise KeyError((q, variant))

    def validate(self) -> None:
        for v in VARIANTS:
            qs = [q for q, _ in self.series(v, "live")]
            if any(b <= a for a, b in zip(qs, qs[1:])):
                raise ValueError(f"Q is not strictly increasing for {v.value}")
        for q in self.quantities():
            present = {r.variant for r in self.rows if r.q == q}
            if present != set(VARIANTS):
                raise ValueError(f"Q={q} lacks variant(s) {sorted(v.value for v in set(VARIANTS) - present)}")

    # csv

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_FIELDS)
        for r in self.rows:
            writer.writerow((r.q, r.variant.value, _fmt_size(r.live_bytes), _fmt_size(r.export_bytes)))
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> MeasurementTable:
        table = cls()
        lines = [line for line in text.splitlines() if line and not line.startswith("#")]
        for rec in csv.DictReader(lines):
            table.add(int(rec["Q"]), rec["variant"], float(rec["live_bytes"]), float(rec["export_bytes"]))
        return table


# Sizes of DBs and of their exported *.sql files, in Mb, for Q = 0, 12000, ...
# Columns: HC, SCIC, MCIC live; HC, SCIC, MCIC export.
PUBLISHED_SIZES = (
    (0, 0.046875, 0.0625, 0.125000, 0.006396, 0.006080, 0.007398),
    (12000, 4.546875, 4.5625, 1.031250, 4.730189, 2.954480, 0.872142),
    (24000, 10.546875, 7.5625, 2.593750, 9.456926, 5.905566, 1.738131),
    (36000, 13.546875, 8.5625, 4.640625, 13.747144, 8.861661, 2.610227),
    (48000, 17.546875, 11.5625, 4.640625, 18.928142, 11.825956, 3.488397),
    (60000, 21.546875, 14.5625, 5.640625, 23.666618, 14.789045, 4.366487),
    (72000, 26.546875, 17.5625, 5.640625, 28.405355, 17.751929, 5.244479),
    (84000, 30.546875, 20.5625, 8.640625, 33.143831, 20.715019, 6.122471),
    (96000, 33.546875, 21.5625, 8.640625, 37.882568, 23.678108, 7.000561),
    (108000, 40.546875, 23.5625, 8.640625, 42.621044, 26.641197, 7.878553),
    (120000, 45.546875, 26.5625, 8.640625, 47.359781, 29.604286, 8.756643),
    (132000, 45.546875, 29.5625, 9.640625, 52.098518, 32.567581, 9.634635),
    (144000, 47.546875, 29.5625, 9.640625, 56.837220, 35.530940, 10.512725),
    (156000, 47.546875, 29.5625, 9.640625, 61.575731, 38.493554, 11.390717),
    (168000, 47.546875, 29.5625, 9.640625, 66.314207, 41.456849, 12.268807),
    (180000, 47.546875, 29.5625, 13.640625, 71.053206, 44.419733, 13.146799),
    (192000, 68.640625, 43.5625, 15.640625, 75.791682, 47.382822, 14.024791),
    (204000, 75.640625, 47.5625, 15.640625, 80.530419, 50.346117, 14.902881),
    (216000, 75.640625, 47.5625, 16.640625, 85.268895, 53.309206, 15.780873),
    (228000, 84.656250, 52.5625, 16.640625, 90.007632, 56.272295, 16.659141),
    (240000, 84.656250, 52.5625, 16.640625, 94.746369, 59.235385, 17.537246),
)

# Published size-vs-Q lines (Mb): (slope, intercept) per (variant, measure).
PUBLISHED_FITS = {
    (Variant.HC, "live"): (0.0003, 0.793),
    (Variant.SCIC, "live"): (0.0002, 1.253),
    (Variant.MCIC, "live"): (0.00007, 1.0651),
    (Variant.HC, "export"): (0.0004, -0.0781),
    (Variant.SCIC, "export"): (0.0002, -0.0171),
    (Variant.MCIC, "export"): (0.00007, -0.0145),
}

# Average reductions stated for the published table, in percent.
PUBLISHED_REDUCTIONS = {
    ("live", Variant.HC): 77.89,
    ("live", Variant.SCIC): 64.93,
    ("export", Variant.HC): 81.5,
    ("export", Variant.SCIC): 70.41,
}


def published_table(unit: float = 1.0) -> MeasurementTable:
    """The published measurements; ``unit=MIB`` converts Mb to bytes."""
    table = MeasurementTable()
    for q, *sizes in PUBLISHED_SIZES:
        live, export = sizes[:3], sizes[3:]
        for v, lv, ex in zip(VARIANTS, live, export):
            table.add(q, v, lv * unit, ex * unit)
    return table


# -- running ----------------------------------------------------------------


def _write_csv(path: Path | None, table: MeasurementTable, failure: str | None = None) -> None:
    if path is None:
        return
    text = table.to_csv()
    if failure:
        text += f"# FAILED: {failure}\n"
    Path(path).write_text(text, encoding="utf-8")


def run_experiment(config: ExperimentConfig) -> MeasurementTable:
    """Populate one store per layout in rounds and measure after each round.

    Every round inserts the same ``step`` objects per type into all three
    stores. On error the rows gathered so far are written to the CSV with a
    trailing ``# FAILED`` line before the error propagates.
    """
    doc = config.document()
    factory = ObjectFactory(doc.types, doc.samples, config.regime, seed=config.seed)
    table = MeasurementTable()
    with tempfile.TemporaryDirectory(dir=config.workdir) as tmp:
        stores: dict[Variant, StoreHandle] = {
            v: create_store(Path(tmp) / f"{v.value}.db", doc, v) for v in VARIANTS
        }
        try:
            q = 0
            for round_no in range(config.points):
                if round_no:
                    batch = factory.batch(config.step)
                    for store in stores.values():
                        store.insert_objects(batch)
                    q += len(batch)
                for v, store in stores.items():
                    live, export = store.measure()
                    table.add(q, v, live, export)
                log.info("round %d: Q=%d", round_no, q)
        except Exception as exc:
            _write_csv(config.csv_path, table, f"{type(exc).__name__}: {exc}")
            raise
        finally:
            for store in stores.values():
                store.close()
    _write_csv(config.csv_path, table)
    return table


def timing_appendix(stores: dict[Variant, StoreHandle], repeats: int = 5) -> dict[Variant, float]:
    """Median seconds to read back every object row of each store.

    Informational only; timings depend on the machine.
    """
    out = {}
    for v, store in stores.items():
        runs = []
        for _ in range(repeats):
            start = time.perf_counter()
            for type_name in store.types:
                own = store.schema.object_table(type_name)
                store.conn.execute(f'SELECT * FROM "{own.name}"').fetchall()
            runs.append(time.perf_counter() - start)
        out[v] = statistics.median(runs)
    return out


# -- reporting --------------------------------------------------------------


@dataclass(frozen=True)
class Summary:
    reductions: dict[tuple[str, Variant], float]  # (measure, baseline) -> mean % saved by MCIC
    fits: dict[tuple[Variant, str], LinearFit]
    slope_ordering: dict[str, bool]  # measure -> slope(MCIC) < slope(SCIC) < slope(HC)

    @property
    def ordered(self) -> bool:
        return all(self.slope_ordering.values())

    def render(self, size_unit: str = "bytes") -> str:
        lines = ["Average size reduction of MCIC (mean over Q > 0):"]
        for (measure, base), pct in self.reductions.items():
            lines.append(f"  {measure:6s} vs {base.value:4s}: {pct:7.2f} %")
        lines.append("")
        lines.append(f"Linear fits (size in {size_unit} = slope * Q + intercept):")
        for (v, measure), fit in self.fits.items():
            lines.append(
                f"  {v.value:4s} {measure:6s}: slope={fit.slope:.6g} intercept={fit.intercept:.6g} "
                f"r2={fit.r_squared:.4f}"
            )
        lines.append("")
        for measure, ok in self.slope_ordering.items():
            verdict = "holds" if ok else "VIOLATED"
            lines.append(f"slope ordering MCIC < SCIC < HC ({measure}): {verdict}")
        return "\n".join(lines) + "\n"


def mean_reduction(table: MeasurementTable, measure: str, baseline: Variant | str) -> float:
    """Arithmetic mean over Q > 0 of 100 * (1 - size(MCIC) / size(baseline))."""
    baseline = Variant(baseline)
    values = []
    for q in table.quantities():
        if q <= 0:
            continue
        base = table.at(q, baseline).size(measure)
        mcic = table.at(q, Variant.MCIC).size(measure)
        values.append(0.0 if base == mcic else 100.0 * (1.0 - mcic / base))
    if not values:
        raise ValueError("no rows with Q > 0")
    return math.fsum(values) / len(values)


def report(table: MeasurementTable) -> Summary:
    table.validate()
    reductions = {
        (m, base): mean_reduction(table, m, base) for m in MEASURES for base in (Variant.HC, Variant.SCIC)
    }
    fits = {(v, m): fit_linear(table.series(v, m)) for m in MEASURES for v in VARIANTS}
    ordering = {
        m: fits[(Variant.MCIC, m)].slope < fits[(Variant.SCIC, m)].slope < fits[(Variant.HC, m)].slope
        for m in MEASURES
    }
    return Summary(reductions, fits, ordering)


def size_ordering_holds(table: MeasurementTable, q: int) -> dict[str, bool]:
    """Strict MCIC < SCIC < HC at one Q, for each measure."""
    hc, scic, mcic = (table.at(q, v) for v in VARIANTS)
    return {m: mcic.size(m) < scic.size(m) < hc.size(m) for m in MEASURES}


def write_report(path: Path | None, summary: Summary, extra: Iterable[str] = ()) -> str:
    text = summary.render() + "".join(line + "\n" for line in extra)
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text


__all__ = [
    "ExperimentConfig",
    "MeasurementTable",
    "PUBLISHED_FITS",
    "PUBLISHED_REDUCTIONS",
    "PUBLISHED_SIZES",
    "Summary",
    "mean_reduction",
    "published_table",
    "report",
    "run_experiment",
    "size_ordering_holds",
]
