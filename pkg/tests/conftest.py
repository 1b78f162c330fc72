import pytest

from coreforge.fixture import quadrangles


@pytest.fixture(scope="session")
def doc():
    return quadrangles()


@pytest.fixture(scope="session")
def types(doc):
    return doc.types


@pytest.fixture(scope="session")
def by_name(types):
    return {t.name: t for t in types}
