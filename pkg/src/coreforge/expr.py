"""Expression mini-language for methods and verification functions.

Grammar (lowest to highest precedence)::

    expr     := eqchain ('and' eqchain)*
    eqchain  := compare ('=' compare)*
    compare  := additive (('<' | '<=' | '>' | '>=' | '!=') additive)?
    additive := term (('+' | '-') term)*
    term     := unary ('*' unary)*
    unary    := '-' unary | power
    power    := atom ('^' unary)?
    atom     := NUMBER | selector | 'sin' '(' expr ')' | 'sum' '(' unitref ')'
              | '(' expr ')'
    selector := 'v' INT '(' unitref ')'
    unitref  := IDENT ('(' IDENT ')')?

``v2(sides)`` picks the second component of unit ``sides``. The optional
inner argument, as in ``v2(sides(t_S))``, names the type the formula was
written for; it is ignored by evaluation and erased by canonicalization.
Booleans are the reals 1.0 and 0.0, and ``sin`` takes degrees.
"""

from __future__ import annotations

import math
import re
from collections.abc import Callable, Iterator, Mapping, Sequence
from dataclasses import dataclass, replace
from typing import Union

from coreforge.errors import DomainError, NonBooleanVerification, ParseError, UnboundSelector

# Equality chains and != compare magnitudes with this tolerance; stored
# magnitudes pass through decimal text and float sums (80+100+80+100).
EQ_REL_TOL = 1e-9
EQ_ABS_TOL = 1e-9

COMPARISON_OPS = ("<", "<=", ">", ">=", "!=")


# -- AST --------------------------------------------------------------------


@dataclass(frozen=True)
class Const:
    value: float


@dataclass(frozen=True)
class Selector:
    unit: str
    index: int
    type_param: str | None = None

    def __post_init__(self):
        if self.index < 1:
            raise ValueError(f"selector component index must be >= 1, got {self.index}")


@dataclass(frozen=True)
class SumOver:
    unit: str
    type_param: str | None = None


@dataclass(frozen=True)
class Add:
    operands: tuple[Expr, ...]


@dataclass(frozen=True)
class Sub:
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Mul:
    operands: tuple[Expr, ...]


@dataclass(frozen=True)
class Pow:
    base: Expr
    exponent: Expr


@dataclass(frozen=True)
class SinDeg:
    arg: Expr


@dataclass(frozen=True)
class Comparison:
    left: Expr
    op: str
    right: Expr


@dataclass(frozen=True)
class EqualityChain:
    operands: tuple[Expr, ...]

    def __post_init__(self):
        if len(self.operands) < 2:
            raise ValueError("equality chain needs at least two operands")


@dataclass(frozen=True)
class Conjunction:
    operands: tuple[Expr, ...]

    def __post_init__(self):
        if len(self.operands) < 2:
            raise ValueError("conjunction needs at least two operands")


Expr = Union[Const, Selector, SumOver, Add, Sub, Mul, Pow, SinDeg, Comparison, EqualityChain, Conjunction]

BOOLEAN_NODES = (Comparison, EqualityChain, Conjunction)


def children(node: Expr) -> tuple[Expr, ...]:
    if isinstance(node, (Add, Mul, EqualityChain, Conjunction)):
        return node.operands
    if isinstance(node, (Sub, Comparison)):
        return (node.left, node.right)
    if isinstance(node, Pow):
        return (node.base, node.exponent)
    if isinstance(node, SinDeg):
        return (node.arg,)
    return ()


def walk(node: Expr) -> Iterator[Expr]:
    yield node
    for child in children(node):
        yield from walk(child)


def referenced_units(node: Expr) -> set[str]:
    """Names of all units mentioned by selectors and sums."""
    return {n.unit for n in walk(node) if isinstance(n, (Selector, SumOver))}


def selectors(node: Expr) -> list[Selector]:
    return [n for n in walk(node) if isinstance(n, Selector)]


# -- tokenizer --------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<number>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op><=|>=|!=|[-+*^=<>()])
    """,
    re.VERBOSE,
)

_KEYWORDS = {"and", "sin", "sum"}
_SELECTOR_RE = re.compile(r"v([1-9][0-9]*)")


@dataclass(frozen=True)
class _Token:
    kind: str  # number | ident | op | keyword | selector | eof
    text: str
    offset: int  # 1-based byte position


def _tokenize(text: str) -> list[_Token]:
    tokens = []
    pos = 0
    raw = text.encode("utf-8")

    def byte_pos(i: int) -> int:
        return len(text[:i].encode("utf-8")) + 1

    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", byte_pos(pos))
        kind = m.lastgroup
        value = m.group()
        if kind == "ident":
            if value in _KEYWORDS:
                kind = "keyword"
            elif _SELECTOR_RE.fullmatch(value):
                kind = "selector"
        if kind != "ws":
            tokens.append(_Token(kind, value, byte_pos(pos)))
        pos = m.end()
    tokens.append(_Token("eof", "", len(raw) + 1))
    return tokens


# -- parser -----------------------------------------------------------------


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.i = 0

    @property
    def tok(self) -> _Token:
        return self.tokens[self.i]

    def advance(self) -> _Token:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def at(self, text: str) -> bool:
        return self.tok.kind in ("op", "keyword") and self.tok.text == text

    def expect(self, text: str) -> _Token:
        if not self.at(text):
            self.fail({text})
        return self.advance()

    def fail(self, expected: set[str]):
        tok = self.tok
        found = "end of input" if tok.kind == "eof" else repr(tok.text)
        raise ParseError(f"unexpected {found}", tok.offset, frozenset(expected))

    def parse(self) -> Expr:
        node = self.conjunction()
        if self.tok.kind != "eof":
            self.fail({"and", "=", "+", "-", "*", "^", *COMPARISON_OPS, "end of input"})
        return node

    def conjunction(self) -> Expr:
        operands = [self.eqchain()]
        while self.at("and"):
            self.advance()
            operands.append(self.eqchain())
        return operands[0] if len(operands) == 1 else Conjunction(tuple(operands))

    def eqchain(self) -> Expr:
        operands = [self.compare()]
        while self.at("="):
            self.advance()
            operands.append(self.compare())
        return operands[0] if len(operands) == 1 else EqualityChain(tuple(operands))

    def compare(self) -> Expr:
        left = self.additive()
        if self.tok.kind == "op" and self.tok.text in COMPARISON_OPS:
            op = self.advance().text
            return Comparison(left, op, self.additive())
        return left

    def additive(self) -> Expr:
        node = self.term()
        terms: list[Expr] | None = None
        while self.at("+") or self.at("-"):
            op = self.advance().text
            rhs = self.term()
            if op == "+":
                if terms is None:
                    terms = [node]
                terms.append(rhs)
                node = Add(tuple(terms))
            else:
                node = Sub(node, rhs)
                terms = None
        return node

    def term(self) -> Expr:
        factors = [self.unary()]
        while self.at("*"):
            self.advance()
            factors.append(self.unary())
        return factors[0] if len(factors) == 1 else Mul(tuple(factors))

    def unary(self) -> Expr:
        if self.at("-"):
            self.advance()
            operand = self.unary()
            if isinstance(operand, Const):
                return Const(-operand.value)
            return Sub(Const(0.0), operand)
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        if self.at("^"):
            self.advance()
            return Pow(base, self.unary())
        return base

    def atom(self) -> Expr:
        tok = self.tok
        if tok.kind == "number":
            self.advance()
            return Const(float(tok.text))
        if tok.kind == "selector":
            self.advance()
            index = int(_SELECTOR_RE.fullmatch(tok.text).group(1))
            self.expect("(")
            unit, type_param = self.unitref()
            self.expect(")")
            return Selector(unit, index, type_param)
        if tok.kind == "keyword" and tok.text == "sin":
            self.advance()
            self.expect("(")
            arg = self.conjunction()
            self.expect(")")
            return SinDeg(arg)
        if tok.kind == "keyword" and tok.text == "sum":
            self.advance()
            self.expect("(")
            unit, type_param = self.unitref()
            self.expect(")")
            return SumOver(unit, type_param)
        if self.at("("):
            self.advance()
            node = self.conjunction()
            self.expect(")")
            return node
        self.fail({"number", "v<j>(...)", "sin", "sum", "(", "-"})

    def unitref(self) -> tuple[str, str | None]:
        if self.tok.kind not in ("ident", "selector"):
            self.fail({"unit name"})
        unit = self.advance().text
        type_param = None
        if self.at("("):
            self.advance()
            if self.tok.kind not in ("ident", "selector"):
                self.fail({"type name"})
            type_param = self.advance().text
            self.expect(")")
        return unit, type_param


def parse_expression(text: str) -> Expr:
    """Parse *text* into an AST, raising :class:`ParseError` on bad input."""
    return _Parser(text).parse()


# -- printer ----------------------------------------------------------------

_PREC_CONJ, _PREC_EQ, _PREC_CMP, _PREC_ADD, _PREC_MUL, _PREC_UNARY, _PREC_POW, _PREC_ATOM = range(8)


def _prec(node: Expr) -> int:
    if isinstance(node, Conjunction):
        return _PREC_CONJ
    if isinstance(node, EqualityChain):
        return _PREC_EQ
    if isinstance(node, Comparison):
        return _PREC_CMP
    if isinstance(node, (Add, Sub)):
        return _PREC_ADD
    if isinstance(node, Mul):
        return _PREC_MUL
    if isinstance(node, Pow):
        return _PREC_POW
    if isinstance(node, Const) and node.value < 0:
        return _PREC_UNARY
    return _PREC_ATOM


def _fmt_number(value: float) -> str:
    if value.is_integer() and abs(value) < 1e15:
        return str(int(value))
    return repr(value)


def _unitref(unit: str, type_param: str | None) -> str:
    return unit if type_param is None else f"{unit}({type_param})"


def to_text(node: Expr) -> str:
    """Render *node* so that ``parse_expression(to_text(n)) == n``."""

    def wrap(child: Expr, min_prec: int) -> str:
        text = to_text(child)
        return f"({text})" if _prec(child) < min_prec else text

    if isinstance(node, Const):
        return _fmt_number(node.value)
    if isinstance(node, Selector):
        return f"v{node.index}({_unitref(node.unit, node.type_param)})"
    if isinstance(node, SumOver):
        return f"sum({_unitref(node.unit, node.type_param)})"
    if isinstance(node, SinDeg):
        return f"sin({to_text(node.arg)})"
    if isinstance(node, Add):
        first, *rest = node.operands
        # a leading Add would be flattened by the parser, later ones regrouped
        head = f"({to_text(first)})" if isinstance(first, Add) else wrap(first, _PREC_ADD)
        return " + ".join([head, *(wrap(o, _PREC_MUL) for o in rest)])
    if isinstance(node, Sub):
        return f"{wrap(node.left, _PREC_ADD)} - {wrap(node.right, _PREC_MUL)}"
    if isinstance(node, Mul):
        first, *rest = node.operands
        head = f"({to_text(first)})" if isinstance(first, Mul) else wrap(first, _PREC_UNARY)
        return " * ".join([head, *(wrap(o, _PREC_POW) for o in rest)])
    if isinstance(node, Pow):
        return f"{wrap(node.base, _PREC_ATOM)} ^ {wrap(node.exponent, _PREC_UNARY)}"
    if isinstance(node, Comparison):
        return f"{wrap(node.left, _PREC_ADD)} {node.op} {wrap(node.right, _PREC_ADD)}"
    if isinstance(node, EqualityChain):
        return " = ".join(wrap(o, _PREC_CMP) for o in node.operands)
    if isinstance(node, Conjunction):
        return " and ".join(wrap(o, _PREC_EQ) for o in node.operands)
    raise TypeError(f"not an expression node: {node!r}")


# -- evaluation -------------------------------------------------------------

Env = Mapping[str, Sequence[float]]


def _close(a: float, b: float) -> bool:
    return math.isclose(a, b, rel_tol=EQ_REL_TOL, abs_tol=EQ_ABS_TOL)


_COMPARE: dict[str, Callable[[float, float], bool]] = {
    "<": lambda a, b: a < b,
    "<=": lambda a, b: a <= b or _close(a, b),
    ">": lambda a, b: a > b,
    ">=": lambda a, b: a >= b or _close(a, b),
    "!=": lambda a, b: not _close(a, b),
}


def _lookup(env: Env, unit: str) -> Sequence[float]:
    try:
        return env[unit]
    except KeyError:
        raise UnboundSelector(f"unit {unit!r} has no value in this environment") from None


def evaluate(node: Expr, env: Env, *, expect_boolean: bool = False) -> float:
    """Evaluate *node* against *env*, a mapping of unit name to magnitudes.

    With ``expect_boolean`` the result must be exactly 0.0 or 1.0, otherwise
    :class:`NonBooleanVerification` is raised.
    """
    result = _eval(node, env)
    if expect_boolean and result not in (0.0, 1.0):
        raise NonBooleanVerification(f"{to_text(node)!r} evaluated to {result!r}, not 0 or 1")
    return result


def _eval(node: Expr, env: Env) -> float:
    if isinstance(node, Const):
        return node.value
    if isinstance(node, Selector):
        values = _lookup(env, node.unit)
        if node.index > len(values):
            raise UnboundSelector(
                f"v{node.index}({node.unit}) out of range: unit has {len(values)} components"
            )
        return float(values[node.index - 1])
    if isinstance(node, SumOver):
        return float(math.fsum(_lookup(env, node.unit)))
    if isinstance(node, Add):
        return math.fsum(_eval(o, env) for o in node.operands)
    if isinstance(node, Sub):
        return _eval(node.left, env) - _eval(node.right, env)
    if isinstance(node, Mul):
        result = 1.0
        for o in node.operands:
            result *= _eval(o, env)
        return result
    if isinstance(node, Pow):
        base, exponent = _eval(node.base, env), _eval(node.exponent, env)
        try:
            result = base**exponent
        except (ZeroDivisionError, OverflowError) as exc:
            raise DomainError(f"{base!r} ^ {exponent!r}: {exc}") from None
        if isinstance(result, complex):
            raise DomainError(f"{base!r} ^ {exponent!r} is not a real number")
        return float(result)
    if isinstance(node, SinDeg):
        return math.sin(math.radians(_eval(node.arg, env)))
    if isinstance(node, Comparison):
        ok = _COMPARE[node.op](_eval(node.left, env), _eval(node.right, env))
        return 1.0 if ok else 0.0
    if isinstance(node, EqualityChain):
        values = [_eval(o, env) for o in node.operands]
        return 1.0 if all(_close(a, b) for a, b in zip(values, values[1:])) else 0.0
    if isinstance(node, Conjunction):
        return 1.0 if all(_eval(o, env) != 0.0 for o in node.operands) else 0.0
    raise TypeError(f"not an expression node: {node!r}")


# -- canonical form ---------------------------------------------------------

_FLIPPED = {">": "<", ">=": "<="}


@dataclass(frozen=True)
class CanonicalExpr:
    """Normal form used to compare formulas written for different types."""

    ast: Expr

    @property
    def text(self) -> str:
        return to_text(self.ast)


def _canon(node: Expr) -> Expr:
    if isinstance(node, Selector):
        return replace(node, type_param=None)
    if isinstance(node, SumOver):
        return replace(node, type_param=None)
    if isinstance(node, Const):
        return node
    if isinstance(node, (Add, Mul, Conjunction)):
        kind = type(node)
        flat: list[Expr] = []
        for o in node.operands:
            o = _canon(o)
            flat.extend(o.operands if isinstance(o, kind) else (o,))
        return kind(tuple(sorted(flat, key=to_text)))
    if isinstance(node, EqualityChain):
        return EqualityChain(tuple(sorted((_canon(o) for o in node.operands), key=to_text)))
    if isinstance(node, Sub):
        return Sub(_canon(node.left), _canon(node.right))
    if isinstance(node, Pow):
        return Pow(_canon(node.base), _canon(node.exponent))
    if isinstance(node, SinDeg):
        return SinDeg(_canon(node.arg))
    if isinstance(node, Comparison):
        left, op, right = _canon(node.left), node.op, _canon(node.right)
        if op in _FLIPPED:
            left, op, right = right, _FLIPPED[op], left
        elif op == "!=" and to_text(right) < to_text(left):
            left, right = right, left
        return Comparison(left, op, right)
    raise TypeError(f"not an expression node: {node!r}")


def alpha_canonicalize(node: Expr | CanonicalExpr) -> CanonicalExpr:
    """Erase type qualifiers and sort operands of commutative nodes.

    Idempotent: canonicalizing a :class:`CanonicalExpr` returns it unchanged.
    """
    if isinstance(node, CanonicalExpr):
        node = node.ast
    return CanonicalExpr(_canon(node))
