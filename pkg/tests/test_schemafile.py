import pytest

from coreforge.errors import SchemaError
from coreforge.factorization import build_mcic, build_scic
from coreforge.fixture import fixture_text
from coreforge.model import unit_key
from coreforge.schemafile import dump_class, dump_document, load_class, load_document


def keys(units):
    return [unit_key(u) for u in units]


def test_document_round_trip(doc):
    again = load_document(dump_document(doc))
    assert again.class_name == doc.class_name
    assert [t.name for t in again.types] == [t.name for t in doc.types]
    for a, b in zip(again.types, doc.types):
        assert keys(a.units) == keys(b.units)
    assert again.samples == doc.samples


def test_dump_is_stable(doc):
    text = dump_document(doc)
    assert dump_document(load_document(text)) == text


def test_one_unit_per_line(doc):
    for line in dump_document(doc).splitlines():
        if line.lstrip().startswith("- {"):
            assert line.count("{name:") == 1


def test_load_from_path(tmp_path):
    path = tmp_path / "q.yaml"
    path.write_text(fixture_text())
    assert len(load_document(path).types) == 3


@pytest.mark.parametrize("build", [build_scic, build_mcic])
def test_class_round_trip(types, build):
    cls = build(types, "T_SRRb")
    again = load_class(dump_class(cls))
    assert type(again) is type(cls)
    assert {k: keys(v) for k, v in again.cores.items()} == {k: keys(v) for k, v in cls.cores.items()}
    assert {k: keys(v) for k, v in again.projections.items()} == {k: keys(v) for k, v in cls.projections.items()}


@pytest.mark.parametrize(
    "text",
    [
        "- just a list",
        "class: X\ntypes:\n- name: t\n  specification:\n  - {name: a, kind: nonsense}\n",
        "class: X\ntypes:\n- name: t\n  specification:\n  - {name: a, kind: method, expr: '1', colour: red}\n",
        "class: X\ntypes:\n- specification: []\n",
        "class: X\ntypes:\n- name: t\n  specification:\n  - {name: a, kind: data-property, schema: [numeric], value: [x]}\n",
        "class: X\ntypes: [\n",
    ],
)
def test_bad_documents(text):
    with pytest.raises(SchemaError):
        load_document(text)


def test_factored_document_needs_load_class(types):
    with pytest.raises(SchemaError):
        load_document(dump_class(build_mcic(types)))
