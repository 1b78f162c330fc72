"""Command-line entry point: ``coreforge <command> ...``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from coreforge import bench
from coreforge.efficiency import column_size_model, efficiency_coefficient, estimate_storage, unit_count_model
from coreforge.errors import CoreforgeError, ParseError
from coreforge.expr import alpha_canonicalize, evaluate, parse_expression
from coreforge.factorization import Variant, build_mcic, build_scic, census_table, unit_counts
from coreforge.fixture import ObjectFactory, Regime
from coreforge.schemafile import dump_class, load_document
from coreforge.store import create_store, open_store, schema_for

log = logging.getLogger("coreforge")


def _parse_bindings(items: list[str]) -> dict[str, list[float]]:
    """``sides=2,2,2,2`` -> {"sides": [2, 2, 2, 2]}."""
    env = {}
    for item in items:
        name, sep, raw = item.partition("=")
        if not sep or not name:
            raise argparse.ArgumentTypeError(f"expected name=v1,v2,..., got {item!r}")
        env[name.strip()] = [float(x) for x in raw.split(",") if x.strip()]
    return env


def _parse_counts(text: str) -> dict[str, int]:
    counts = {}
    for item in text.split(","):
        name, sep, raw = item.partition("=")
        if not sep:
            raise argparse.ArgumentTypeError(f"expected type=count, got {item!r}")
        counts[name.strip()] = int(raw)
    return counts


# -- commands ---------------------------------------------------------------


def cmd_expr_eval(args) -> int:
    try:
        node = parse_expression(args.expression)
    except ParseError as exc:
        print(f"parse error at offset {exc.offset}: {exc}", file=sys.stderr)
        return 2
    env = _parse_bindings(args.bind)
    if args.canonical:
        print(alpha_canonicalize(node).text)
    print(repr(evaluate(node, env)))
    return 0


def cmd_factorize(args) -> int:
    doc = load_document(Path(args.schema))
    if args.variant == "scic":
        cls = build_scic(doc.types, doc.class_name)
    else:
        cls = build_mcic(doc.types, doc.class_name)
    text = dump_class(cls)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        print(text, end="")
    print(census_table(cls))
    for v in Variant:
        props, methods = unit_counts(v, doc.types)
        print(f"{v.value}: {props} properties, {methods} methods")
    return 0


def cmd_estimate(args) -> int:
    doc = load_document(Path(args.schema))
    counts = _parse_counts(args.counts)
    mcic = build_mcic(doc.types, doc.class_name)
    if args.model == "units":
        model = unit_count_model(mcic, doc.types, counts)
    else:
        model = column_size_model(mcic, doc.types, counts)
    m_hc = estimate_storage(model, Variant.HC)
    m_mcic = estimate_storage(model, Variant.MCIC)
    print(f"M_HC   = {m_hc:.6g}")
    print(f"M_MCIC = {m_mcic:.6g}")
    print(f"E      = {efficiency_coefficient(m_mcic, m_hc):.6f} %")
    return 0


def cmd_fit(args) -> int:
    table = bench.MeasurementTable.from_csv(Path(args.csv).read_text(encoding="utf-8"))
    summary = bench.report(table)
    for (v, measure), fit in summary.fits.items():
        print(f"{v.value} {measure}: slope={fit.slope:.6g} intercept={fit.intercept:.6g} r2={fit.r_squared:.6f}")
    return 0


def cmd_schema(args) -> int:
    doc = load_document(Path(args.schema))
    print(schema_for(doc.types, args.variant, doc.class_name).ddl, end="")
    return 0


def cmd_populate(args) -> int:
    db = Path(args.db)
    if args.schema:
        store = create_store(db, load_document(Path(args.schema)), args.variant, overwrite=args.overwrite)
    else:
        store = open_store(db)
    with store:
        types = list(store.types.values())
        factory = ObjectFactory(types, store.samples, args.regime, seed=args.seed, start_id=store.last_id + 1)
        stored = store.insert_objects(factory.batch(args.n))
        print(f"inserted {stored} objects into {db} ({store.variant.value})")
    return 0


def cmd_measure(args) -> int:
    with open_store(Path(args.db)) as store:
        live, export = store.measure(args.export)
    print(f"live_bytes={live} export_bytes={export}")
    return 0


def cmd_bench(args) -> int:
    config = bench.ExperimentConfig(
        schema=Path(args.schema),
        points=args.points,
        step=args.step,
        regime=args.regime,
        seed=args.seed,
        csv_path=Path(args.csv) if args.csv else None,
        report_path=Path(args.report) if args.report else None,
    )
    table = bench.run_experiment(config)
    summary = bench.report(table)
    final_q = table.quantities()[-1]
    ordering = bench.size_ordering_holds(table, final_q)
    extra = [f"size ordering MCIC < SCIC < HC at Q={final_q} ({m}): {'holds' if ok else 'VIOLATED'}"
             for m, ok in ordering.items()]
    print(bench.write_report(config.report_path, summary, extra), end="")
    return 0 if all(ordering.values()) else 1


# -- parser -----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="coreforge", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    expr = sub.add_parser("expr", help="expression utilities")
    expr_sub = expr.add_subparsers(dest="expr_command", required=True)
    ev = expr_sub.add_parser("eval", help="evaluate an expression")
    ev.add_argument("expression")
    ev.add_argument("--bind", action="append", default=[], metavar="UNIT=V1,V2,...",
                    help="component magnitudes of a unit (repeatable)")
    ev.add_argument("--canonical", action="store_true", help="also print the canonical form")
    ev.set_defaults(func=cmd_expr_eval)

    fa = sub.add_parser("factorize", help="factor a type family into cores and projections")
    fa.add_argument("schema")
    fa.add_argument("--variant", choices=["scic", "mcic"], default="mcic")
    fa.add_argument("--out")
    fa.set_defaults(func=cmd_factorize)

    es = sub.add_parser("estimate", help="estimate M_HC, M_MCIC and E")
    es.add_argument("schema")
    es.add_argument("--counts", required=True, help="t_S=1000,t_R=1000,...")
    es.add_argument("--model", choices=["units", "columns"], default="units")
    es.set_defaults(func=cmd_estimate)

    fi = sub.add_parser("fit", help="fit size = slope*Q + intercept per variant from a bench CSV")
    fi.add_argument("csv")
    fi.set_defaults(func=cmd_fit)

    sc = sub.add_parser("schema", help="print the DDL of a layout")
    sc.add_argument("schema")
    sc.add_argument("--variant", choices=[v.value for v in Variant], default="hc")
    sc.set_defaults(func=cmd_schema)

    po = sub.add_parser("populate", help="insert generated objects into a store")
    po.add_argument("db")
    po.add_argument("--n", type=int, required=True, help="objects per type")
    po.add_argument("--regime", choices=[r.value for r in Regime], default="identical")
    po.add_argument("--seed", type=int, default=0)
    po.add_argument("--schema", help="create the store from this schema file first")
    po.add_argument("--variant", choices=[v.value for v in Variant], default="mcic")
    po.add_argument("--overwrite", action="store_true")
    po.set_defaults(func=cmd_populate)

    me = sub.add_parser("measure", help="print live and exported sizes of a store")
    me.add_argument("db")
    me.add_argument("--export", help="also write the SQL dump here")
    me.set_defaults(func=cmd_measure)

    be = sub.add_parser("bench", help="run the storage sweep over all three layouts")
    be.add_argument("--schema", required=True)
    be.add_argument("--points", type=int, default=11)
    be.add_argument("--step", type=int, default=400)
    be.add_argument("--regime", choices=[r.value for r in Regime], default="identical")
    be.add_argument("--seed", type=int, default=0)
    be.add_argument("--csv")
    be.add_argument("--report")
    be.set_defaults(func=cmd_bench)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except (CoreforgeError, argparse.ArgumentTypeError, KeyError, ValueError) as exc:
        print(f"coreforge: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
