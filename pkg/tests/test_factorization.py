import random
from collections import Counter
from math import comb

import pytest

from coreforge.errors import DuplicateTypeName, TooFewTypes, UnknownTypeName
from coreforge.factorization import (
    Variant,
    build_mcic,
    build_scic,
    census_table,
    class_unit_counts,
    core_census,
    extract_type,
    unit_counts,
)
from coreforge.model import Binding, unit_key
from families import brute_force_cores, random_family

# Expected cores of the quadrangle family: label -> (units, types).
EXPECTED_CORES = {
    "Core^3_1": ({"sides_count", "angles_count", "angle_sum_360", "perimeter"}, ("t_S", "t_R", "t_Rb")),
    "Core^2_1": ({"angles", "all_angles_90"}, ("t_S", "t_R")),
    "Core^2_2": ({"all_sides_equal"}, ("t_S", "t_Rb")),
    "Core^1_1": ({"area"}, ("t_S",)),
    "Core^1_2": ({"opposite_sides_equal", "area"}, ("t_R",)),
    "Core^1_3": ({"opposite_angles_equal", "area"}, ("t_Rb",)),
}


def unit_multiset(units):
    return Counter(unit_key(u) for u in units)


class TestFixture:
    def test_unit_counts(self, types):
        assert unit_counts(Variant.HC, types) == (21, 6)
        assert unit_counts(Variant.SCIC, types) == (15, 4)
        assert unit_counts(Variant.MCIC, types) == (12, 4)

    def test_core_membership(self, types):
        mcic = build_mcic(types, "T_SRRb")
        got = {mcic.core_label(k): ({u.name for u in units}, k) for k, units in mcic.cores.items()}
        assert got == EXPECTED_CORES
        assert core_census(mcic) == {3: 1, 2: 2, 1: 3}

    def test_projections(self, types):
        mcic = build_mcic(types)
        assert {t: [u.name for u in us] for t, us in mcic.projections.items()} == {
            "t_S": ["sides"],
            "t_R": ["sides"],
            "t_Rb": ["sides", "angles"],
        }

    def test_scic(self, types):
        scic = build_scic(types)
        assert [u.name for u in scic.core] == ["sides_count", "angles_count", "angle_sum_360", "perimeter"]
        assert [u.name for u in scic.projections["t_Rb"]] == [
            "sides", "angles", "all_sides_equal", "opposite_angles_equal", "area",
        ]

    def test_round_trip(self, types):
        for cls in (build_scic(types), build_mcic(types)):
            for t in types:
                assert unit_multiset(extract_type(cls, t.name).units) == unit_multiset(t.units)

    def test_census_table_text(self, types):
        text = census_table(build_mcic(types))
        assert "Core^1_3" in text and "opposite_angles_equal, area" in text
        assert text.splitlines()[-1] == "census: level 3: 1, level 2: 2, level 1: 3"


class TestErrors:
    def test_scic_needs_two(self, types):
        with pytest.raises(TooFewTypes):
            build_scic(types[:1])

    def test_mcic_needs_one(self):
        with pytest.raises(TooFewTypes):
            build_mcic([])

    def test_duplicate_type(self, types):
        with pytest.raises(DuplicateTypeName):
            build_mcic([types[0], types[0]])

    def test_unknown_type(self, types):
        with pytest.raises(UnknownTypeName):
            extract_type(build_mcic(types), "t_X")

    def test_single_type(self, types):
        mcic = build_mcic(types[:1])
        assert core_census(mcic) == {1: 1}
        assert unit_multiset(extract_type(mcic, "t_S").units) == unit_multiset(types[0].units)


FAMILIES = [random_family(random.Random(seed)) for seed in range(200)]


@pytest.mark.parametrize("seed", range(200))
def test_random_family_round_trip(seed):
    types = FAMILIES[seed]
    mcic = build_mcic(types)
    for t in types:
        assert unit_multiset(extract_type(mcic, t.name).units) == unit_multiset(t.units)
    # every unit of a core is held by exactly the core's types
    for key, units in mcic.cores.items():
        for u in units:
            holders = tuple(t.name for t in types if unit_key(u) in {unit_key(v) for v in t.units})
            assert holders == key
    n = len(types)
    for level, k in core_census(mcic).items():
        assert k <= comb(n, level)
    # no unit stored twice
    stored = [unit_key(u) for us in mcic.cores.values() for u in us]
    assert len(stored) == len(set(stored))


@pytest.mark.parametrize("seed", [s for s in range(200) if len(FAMILIES[s]) <= 4])
def test_matches_brute_force(seed):
    types = FAMILIES[seed]
    mcic = build_mcic(types)
    got = {frozenset(k): {unit_key(u) for u in us} for k, us in mcic.cores.items()}
    assert got == brute_force_cores(types)


@pytest.mark.parametrize("seed", [s for s in range(200) if len(FAMILIES[s]) >= 2])
def test_counts_ordering(seed):
    types = FAMILIES[seed]
    hc = sum(unit_counts(Variant.HC, types))
    scic = sum(class_unit_counts(build_scic(types)))
    mcic = sum(class_unit_counts(build_mcic(types)))
    assert mcic <= scic <= hc


def test_instance_units_never_in_cores():
    for types in FAMILIES:
        for units in build_mcic(types).cores.values():
            assert all(u.binding is Binding.TYPE for u in units)


def test_extracted_square_has_seven_properties_two_methods(types):
    t = extract_type(build_mcic(types), "t_S")
    assert (len(t.specification), len(t.signature)) == (7, 2)
