"""Factor families of object types into shared cores and per-type projections,
store them in an embedded SQL database and measure what the factoring saves."""

from coreforge.efficiency import (
    LinearFit,
    SizeModel,
    column_size_model,
    efficiency_coefficient,
    estimate_storage,
    fit_linear,
    unit_count_model,
)
from coreforge.errors import *  # noqa: F403
from coreforge.expr import CanonicalExpr, alpha_canonicalize, evaluate, parse_expression, to_text
from coreforge.factorization import (
    MCIC,
    SCIC,
    Variant,
    build_mcic,
    build_scic,
    census_table,
    core_census,
    extract_type,
    unit_counts,
)
from coreforge.model import (
    Binding,
    ComponentKind,
    ObjectInstance,
    TypeDef,
    Unit,
    UnitKind,
    ValueTuple,
    define_type,
    unit_equivalent,
    validate_instance,
)
from coreforge.schemafile import SchemaDocument, dump_class, dump_document, load_class, load_document
from coreforge.store import RelationalSchema, StoreHandle, create_store, generate_schema, open_store

__version__ = "0.1.0"
