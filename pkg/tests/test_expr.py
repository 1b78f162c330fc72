import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coreforge.errors import DomainError, NonBooleanVerification, ParseError, UnboundSelector
from coreforge.expr import (
    Add,
    Comparison,
    Conjunction,
    Const,
    EqualityChain,
    Mul,
    Pow,
    Selector,
    SinDeg,
    Sub,
    SumOver,
    alpha_canonicalize,
    evaluate,
    parse_expression,
    referenced_units,
    to_text,
)

# 9 * sin(80 deg) from a 40-digit mpmath evaluation, frozen.
RHOMBUS_AREA = 8.863269777109872534


def ev(text, **env):
    return evaluate(parse_expression(text), env)


class TestParse:
    def test_selector_with_type_parameter(self):
        node = parse_expression("v1(sides(t_S))")
        assert node == Selector("sides", 1, "t_S")

    def test_bare_selector(self):
        assert parse_expression("v3(p1)") == Selector("p1", 3, None)

    def test_plus_run_is_flat(self):
        node = parse_expression("v1(s) + v2(s) + v3(s) + v4(s)")
        assert isinstance(node, Add) and len(node.operands) == 4

    def test_precedence(self):
        assert ev("1 + 2 * 3") == 7
        assert ev("2 * 3 ^ 2") == 18
        assert ev("-2 ^ 2") == -4
        assert ev("2 ^ 3 ^ 2") == 512
        assert ev("10 - 3 - 2") == 5
        assert ev("(1 + 2) * 3") == 9

    def test_chain_and_conjunction(self):
        node = parse_expression("v1(a) = v2(a) = 3 and v1(b) < 2")
        assert isinstance(node, Conjunction)
        assert isinstance(node.operands[0], EqualityChain)
        assert isinstance(node.operands[1], Comparison)

    @pytest.mark.parametrize(
        "text, offset",
        [("v1(p1", 6), ("", 1), ("1 +", 4), ("v1(p1) # 2", 8), ("sin 30", 5), ("1 2", 3)],
    )
    def test_error_offsets(self, text, offset):
        with pytest.raises(ParseError) as err:
            parse_expression(text)
        assert err.value.offset == offset

    def test_error_lists_expected(self):
        with pytest.raises(ParseError) as err:
            parse_expression("v1(p1")
        assert ")" in err.value.expected

    def test_offsets_count_bytes(self):
        with pytest.raises(ParseError) as err:
            parse_expression("v1(é")  # two-byte char is the 4th byte
        assert err.value.offset == 4

    def test_referenced_units(self):
        node = parse_expression("v1(sides(t_Rb)) ^ 2 * sin(v1(angles(t_Rb)))")
        assert referenced_units(node) == {"sides", "angles"}


class TestEvaluate:
    def test_sin_degrees(self):
        assert abs(ev("sin(30)") - 0.5) <= 1e-12
        assert abs(ev("sin(90)") - 1.0) <= 1e-12

    def test_rhombus_area(self):
        value = ev("v1(sides(t_Rb)) ^ 2 * sin(v1(angles(t_Rb)))", sides=[3, 3, 3, 3], angles=[80, 100, 80, 100])
        assert abs(value - RHOMBUS_AREA) <= 1e-9

    def test_sum_and_selectors(self):
        assert ev("sum(angles)", angles=[90, 90, 90, 90]) == 360
        assert ev("v1(s) + v2(s) + v3(s) + v4(s)", s=[2, 3, 2, 3]) == 10

    def test_booleans(self):
        assert ev("v1(s) = v2(s) = v3(s)", s=[2, 2, 2]) == 1.0
        assert ev("v1(s) = v2(s) = v3(s)", s=[2, 2, 2.5]) == 0.0
        assert ev("1 < 2 and 2 <= 2 and 3 > 2 and 3 >= 3 and 1 != 2") == 1.0
        assert ev("1 > 2 and 1 = 1") == 0.0

    def test_equality_tolerance(self):
        assert ev("0.1 + 0.2 = 0.3") == 1.0
        assert ev("1 = 1.000001") == 0.0

    def test_unbound(self):
        with pytest.raises(UnboundSelector):
            ev("v1(missing)")
        with pytest.raises(UnboundSelector):
            ev("v5(s)", s=[1, 2, 3, 4])

    def test_domain_errors(self):
        with pytest.raises(DomainError):
            ev("(-1) ^ 0.5")
        with pytest.raises(DomainError):
            ev("0 ^ -1")

    def test_boolean_expected(self):
        node = parse_expression("v1(s) + 1")
        with pytest.raises(NonBooleanVerification):
            evaluate(node, {"s": [1]}, expect_boolean=True)
        assert evaluate(parse_expression("v1(s) = 1"), {"s": [1]}, expect_boolean=True) == 1.0


class TestCanonical:
    def test_type_parameter_erased(self):
        a = alpha_canonicalize(parse_expression("v1(sides(t_S)) ^ 2"))
        b = alpha_canonicalize(parse_expression("v1(sides(t_R)) ^ 2"))
        assert a == b

    def test_commutative_sorting(self):
        a = alpha_canonicalize(parse_expression("v1(s) + v2(s) * 3"))
        b = alpha_canonicalize(parse_expression("3 * v2(s) + v1(s)"))
        assert a == b

    def test_comparison_flip(self):
        a = alpha_canonicalize(parse_expression("v1(s) > 2"))
        b = alpha_canonicalize(parse_expression("2 < v1(s)"))
        assert a == b

    def test_distinct_stay_distinct(self):
        a = alpha_canonicalize(parse_expression("v1(s) - v2(s)"))
        b = alpha_canonicalize(parse_expression("v2(s) - v1(s)"))
        assert a != b


# -- properties -------------------------------------------------------------

UNITS = ("a", "b", "c")
ENV = {"a": [1.5, 2.0, 3.0], "b": [0.5, 4.0, 7.0], "c": [2.0, 2.0, 2.0]}

consts = st.one_of(
    st.integers(-20, 20).map(float),
    st.floats(-100, 100, allow_nan=False, allow_infinity=False).map(lambda x: round(x, 3)),
).map(Const)
leaves = st.one_of(
    consts,
    st.builds(Selector, st.sampled_from(UNITS), st.integers(1, 3), st.sampled_from([None, "t_X", "t_Y"])),
    st.builds(SumOver, st.sampled_from(UNITS), st.sampled_from([None, "t_X"])),
)


def _numeric(children):
    pairs = st.lists(children, min_size=2, max_size=3).map(tuple)
    return st.one_of(
        st.builds(Add, pairs),
        st.builds(Mul, pairs),
        st.builds(Sub, children, children),
        st.builds(Pow, children, st.sampled_from([Const(2.0), Const(0.5), Const(-1.0)])),
        st.builds(SinDeg, children),
    )


numeric = st.recursive(leaves, _numeric, max_leaves=8)
booleans = st.one_of(
    st.builds(Comparison, numeric, st.sampled_from(["<", "<=", ">", ">=", "!="]), numeric),
    st.builds(EqualityChain, st.lists(numeric, min_size=2, max_size=3).map(tuple)),
)
expressions = st.one_of(
    numeric,
    booleans,
    st.builds(Conjunction, st.lists(booleans, min_size=2, max_size=3).map(tuple)),
)


def _safe_eval(node):
    try:
        value = evaluate(node, ENV)
    except DomainError:
        return None
    return value if isinstance(value, float) and math.isfinite(value) else None


@settings(max_examples=400, deadline=None)
@given(expressions)
def test_print_parse_round_trip(node):
    text = to_text(node)
    assert parse_expression(text) == node


@settings(max_examples=300, deadline=None)
@given(expressions)
def test_canonicalize_idempotent(node):
    once = alpha_canonicalize(node)
    assert alpha_canonicalize(once) == once
    assert alpha_canonicalize(parse_expression(once.text)) == once


@settings(max_examples=300, deadline=None)
@given(expressions)
def test_canonicalize_preserves_value(node):
    before = _safe_eval(node)
    after = _safe_eval(alpha_canonicalize(node).ast)
    if before is None or after is None:
        return
    assert math.isclose(before, after, rel_tol=1e-9, abs_tol=1e-9)
