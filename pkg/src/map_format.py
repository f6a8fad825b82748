"""Text format for polynomial maps with rational parameters.

A map file is line oriented::

    # comment
    vars X1 X2
    params a c
    bind a = 1/2
    F1 = X1 + a*(X2 + X1^3)^2/c
    F2 = X2 + X1^3

``^`` binds tighter than unary minus and takes a non-negative integer literal.
Multiplication is written with ``*``, except that a literal may be glued to a
following name (``3X1``). Denominators may contain parameters and literals
but no variables.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Dict, FrozenSet, Iterator, List, Mapping, NamedTuple, Optional, Sequence, Tuple, Union

from .errors import (
    DivisionByZeroParameter,
    DuplicateVariable,
    MapSyntaxError,
    UnboundParameter,
    UnknownSymbol,
    VariableInDenominator,
)
from .polymap import PolynomialMap
from .polyring import (
    Polynomial,
    add,
    as_rational,
    constant,
    default_names,
    format_polynomial,
    mul,
    neg,
    power,
    scale,
    sub,
    variable,
)
from .sampling import RationalSampler

LOGGER = logging.getLogger(__name__)

KEYWORDS = frozenset({"vars", "params", "bind"})
_LABEL = re.compile(r"([A-Za-z]+)(\d+)\Z")
_TOKEN = re.compile(
    r"(?P<space>[ \t\r]+)|(?P<number>\d+(?:\.\d+)?)|(?P<name>[A-Za-z][A-Za-z0-9_]*)|(?P<op>[-+*/^()=])"
)
_RESAMPLE_ATTEMPTS = 100


class Token(NamedTuple):
    kind: str
    text: str
    line: int
    column: int

    @property
    def end(self) -> int:
        return self.column + len(self.text)


def tokenize(text: str, line: int = 1) -> List[Token]:
    tokens: List[Token] = []
    position = 0
    while position < len(text):
        match = _TOKEN.match(text, position)
        if match is None:
            raise MapSyntaxError(f"unexpected character {text[position]!r}", line, position + 1)
        kind = match.lastgroup
        if kind != "space":
            tokens.append(Token(kind, match.group(), line, position + 1))
        position = match.end()
    tokens.append(Token("end", "", line, len(text) + 1))
    return tokens


# ---------------------------------------------------------------------------
# Expression trees
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Literal:
    value: Fraction


@dataclass(frozen=True)
class Symbol:
    name: str
    is_parameter: bool


@dataclass(frozen=True)
class Negate:
    operand: "Node"


@dataclass(frozen=True)
class BinaryOp:
    op: str
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Power:
    base: "Node"
    exponent: int


Node = Union[Literal, Symbol, Negate, BinaryOp, Power]


def walk(node: Node) -> Iterator[Node]:
    yield node
    if isinstance(node, Negate):
        yield from walk(node.operand)
    elif isinstance(node, BinaryOp):
        yield from walk(node.left)
        yield from walk(node.right)
    elif isinstance(node, Power):
        yield from walk(node.base)


def symbols_in(node: Node) -> List[Symbol]:
    return [n for n in walk(node) if isinstance(n, Symbol)]


def denominators_in(node: Node) -> List[Node]:
    return [n.right for n in walk(node) if isinstance(n, BinaryOp) and n.op == "/"]


def expression_text(node: Node) -> str:
    if isinstance(node, Literal):
        return str(node.value)
    if isinstance(node, Symbol):
        return node.name
    if isinstance(node, Negate):
        return f"-({expression_text(node.operand)})"
    if isinstance(node, Power):
        return f"({expression_text(node.base)})^{node.exponent}"
    return f"({expression_text(node.left)} {node.op} {expression_text(node.right)})"


class _ExpressionParser:
    """Recursive descent over one line of tokens."""

    def __init__(self, tokens: Sequence[Token], variables: Sequence[str], parameters: Sequence[str]):
        self.tokens = tokens
        self.index = 0
        self.variables = set(variables)
        self.parameters = set(parameters)

    @property
    def current(self) -> Token:
        return self.tokens[self.index]

    def advance(self) -> Token:
        token = self.tokens[self.index]
        if token.kind != "end":
            self.index += 1
        return token

    def fail(self, message: str, expected: Optional[str] = None) -> MapSyntaxError:
        token = self.current
        found = token.text or "end of line"
        return MapSyntaxError(f"{message}, found {found!r}", token.line, token.column, expected)

    def at_op(self, *ops: str) -> bool:
        return self.current.kind == "op" and self.current.text in ops

    def parse(self) -> Node:
        node = self.expression()
        if self.current.kind != "end":
            raise self.fail("unexpected token after expression", "operator or end of line")
        return node

    def expression(self) -> Node:
        node = self.term()
        while self.at_op("+", "-"):
            op = self.advance().text
            node = BinaryOp(op, node, self.term())
        return node

    def term(self) -> Node:
        node = self.unary()
        while self.at_op("*", "/"):
            op_token = self.advance()
            right = self.unary()
            if op_token.text == "/":
                offending = [s.name for s in symbols_in(right) if not s.is_parameter]
                if offending:
                    raise VariableInDenominator(
                        f"line {op_token.line}, column {op_token.column}: "
                        f"variable {offending[0]} appears in a denominator"
                    )
            node = BinaryOp(op_token.text, node, right)
        return node

    def unary(self) -> Node:
        if self.at_op("-"):
            self.advance()
            return Negate(self.unary())
        if self.at_op("+"):
            self.advance()
            return self.unary()
        return self.power()

    def power(self) -> Node:
        start = self.current
        base = self.atom()
        if start.kind == "number" and self.current.kind == "name" and self.current.column == start.end:
            return BinaryOp("*", base, self.power())
        if not self.at_op("^"):
            return base
        self.advance()
        exponent = self.current
        if exponent.kind != "number" or "." in exponent.text:
            raise self.fail("exponent must be a non-negative integer literal", "integer")
        self.advance()
        if self.at_op("^"):
            raise self.fail("chained exponent; add parentheses", "operator or end of line")
        return Power(base, int(exponent.text))

    def atom(self) -> Node:
        token = self.current
        if token.kind == "number":
            self.advance()
            return Literal(Fraction(token.text))
        if token.kind == "name":
            self.advance()
            if token.text in self.variables:
                return Symbol(token.text, False)
            if token.text in self.parameters:
                return Symbol(token.text, True)
            raise UnknownSymbol(f"line {token.line}, column {token.column}: unknown symbol {token.text!r}")
        if self.at_op("("):
            self.advance()
            node = self.expression()
            if not self.at_op(")"):
                raise self.fail("unbalanced parenthesis", "')'")
            self.advance()
            return node
        raise self.fail("expected an operand", "number, name or '('")


def parse_expression(
    text: str, variables: Sequence[str], parameters: Sequence[str] = (), line: int = 1
) -> Node:
    return _ExpressionParser(tokenize(text, line), variables, parameters).parse()


# ---------------------------------------------------------------------------
# Documents
# ---------------------------------------------------------------------------

@dataclass
class MapDocument:
    variables: Tuple[str, ...]
    parameters: Tuple[str, ...] = ()
    bindings: Dict[str, Fraction] = field(default_factory=dict)
    components: Tuple[Node, ...] = ()
    label: str = "F"
    source: Optional[str] = None

    @property
    def dimension(self) -> int:
        return len(self.variables)

    @property
    def used_parameters(self) -> Tuple[str, ...]:
        used = {s.name for node in self.components for s in symbols_in(node) if s.is_parameter}
        return tuple(p for p in self.parameters if p in used)

    @property
    def denominator_parameters(self) -> FrozenSet[str]:
        return frozenset(
            s.name
            for node in self.components
            for denominator in denominators_in(node)
            for s in symbols_in(denominator)
            if s.is_parameter
        )


def _names(tokens: Sequence[Token], keyword: str) -> List[str]:
    names = []
    for token in tokens[1:-1]:
        if token.kind != "name":
            raise MapSyntaxError(f"invalid name {token.text!r} in {keyword} line", token.line, token.column, "name")
        if token.text in KEYWORDS:
            raise MapSyntaxError(f"{token.text!r} is reserved", token.line, token.column, "name")
        names.append(token.text)
    return names


def parse_rational(text: str) -> Fraction:
    """Exact value of ``3``, ``-2/5`` or ``0.25``."""

    cleaned = text.strip()
    if not re.fullmatch(r"[-+]?\d+(?:\.\d+)?(?:/\d+)?", cleaned):
        raise ValueError(f"not a rational literal: {text!r}")
    try:
        return Fraction(cleaned)
    except ZeroDivisionError:
        raise ValueError(f"zero denominator in {text!r}") from None


def _bind_line(tokens: Sequence[Token], parameters: Sequence[str]) -> Dict[str, Fraction]:
    found: Dict[str, Fraction] = {}
    rest = list(tokens[1:-1])
    end = tokens[-1]
    if not rest:
        raise MapSyntaxError("empty bind line", end.line, end.column, "name = rational")
    while rest:
        name = rest.pop(0)
        if name.kind != "name":
            raise MapSyntaxError(f"expected a parameter name, found {name.text!r}", name.line, name.column, "name")
        if name.text not in parameters:
            raise UnknownSymbol(f"line {name.line}, column {name.column}: bind of undeclared parameter {name.text!r}")
        if not rest or rest[0].text != "=":
            where = rest[0] if rest else end
            raise MapSyntaxError("missing '=' in bind", where.line, where.column, "'='")
        rest.pop(0)
        literal = ""
        if rest and rest[0].text in ("+", "-"):
            literal += rest.pop(0).text
        if rest and rest[0].kind == "number":
            literal += rest.pop(0).text
            if len(rest) >= 2 and rest[0].text == "/" and rest[1].kind == "number":
                literal += rest.pop(0).text + rest.pop(0).text
        try:
            found[name.text] = parse_rational(literal)
        except ValueError:
            raise MapSyntaxError(f"invalid rational {literal!r}", name.line, name.column, "rational") from None
    return found


def parse_map(source: str, name: Optional[str] = None) -> MapDocument:
    """Validate a map file and build its document; errors carry line and column."""

    variables: Optional[List[str]] = None
    parameters: List[str] = []
    bindings: Dict[str, Fraction] = {}
    components: List[Node] = []
    label: Optional[str] = None
    last_line = 0

    for number, raw in enumerate(source.splitlines(), start=1):
        last_line = number
        text = raw.split("#", 1)[0]
        if not text.strip():
            continue
        tokens = tokenize(text, number)
        head = tokens[0]
        if head.kind == "name" and head.text == "vars":
            if variables is not None:
                raise MapSyntaxError("second vars line", number, head.column)
            variables = _names(tokens, "vars")
            if not variables:
                raise MapSyntaxError("vars line declares nothing", number, tokens[-1].column, "name")
            _check_unique(variables)
            continue
        if variables is None:
            raise MapSyntaxError("map must start with a vars line", number, head.column, "'vars'")
        if head.kind == "name" and head.text in ("params", "bind") and components:
            raise MapSyntaxError(f"{head.text} line after the first component", number, head.column)
        if head.kind == "name" and head.text == "params":
            parameters.extend(_names(tokens, "params"))
            _check_unique(variables + parameters)
            continue
        if head.kind == "name" and head.text == "bind":
            bindings.update(_bind_line(tokens, parameters))
            continue

        match = _LABEL.match(head.text) if head.kind == "name" else None
        if match is None or len(tokens) < 3 or tokens[1].text != "=":
            raise MapSyntaxError("expected a component definition", number, head.column, "'<label><k> = <expression>'")
        prefix, index = match.group(1), int(match.group(2))
        expected_label = f"{label or prefix}{len(components) + 1}"
        if (label is not None and prefix != label) or index != len(components) + 1:
            raise MapSyntaxError(f"component {head.text} out of order", number, head.column, expected_label)
        if index > len(variables):
            raise MapSyntaxError(f"more components than the {len(variables)} variables", number, head.column)
        label = prefix
        parser = _ExpressionParser(tokens[2:], variables, parameters)
        components.append(parser.parse())

    if variables is None:
        raise MapSyntaxError("no vars line", max(last_line, 1), 1, "'vars'")
    if len(components) != len(variables):
        raise MapSyntaxError(
            f"{len(components)} components for {len(variables)} variables",
            last_line + 1,
            1,
            f"{label or 'F'}{len(components) + 1}",
        )
    return MapDocument(tuple(variables), tuple(parameters), bindings, tuple(components), label or "F", name)


def _check_unique(names: Sequence[str]) -> None:
    seen = set()
    for item in names:
        if item in seen:
            raise DuplicateVariable(f"name {item!r} is declared twice")
        seen.add(item)


def read_map_file(path: Path) -> MapDocument:
    location = Path(path)
    with location.open("r", encoding="utf-8") as handle:
        return parse_map(handle.read(), str(location))


# ---------------------------------------------------------------------------
# Binding and folding
# ---------------------------------------------------------------------------

def fold(node: Node, variables: Sequence[str], values: Mapping[str, Fraction]) -> Polynomial:
    """Evaluate a tree into an exact polynomial, parameters taking their bound values."""

    n = len(variables)
    if isinstance(node, Literal):
        return constant(n, node.value)
    if isinstance(node, Symbol):
        if not node.is_parameter:
            return variable(n, list(variables).index(node.name))
        if node.name not in values:
            raise UnboundParameter(f"parameter {node.name!r} has no value")
        return constant(n, values[node.name])
    if isinstance(node, Negate):
        return neg(fold(node.operand, variables, values))
    if isinstance(node, Power):
        return power(fold(node.base, variables, values), node.exponent)
    left = fold(node.left, variables, values)
    right = fold(node.right, variables, values)
    if node.op == "+":
        return add(left, right)
    if node.op == "-":
        return sub(left, right)
    if node.op == "*":
        return mul(left, right)
    divisor = right.constant_term()
    if divisor == 0:
        raise DivisionByZeroParameter(_vanishing_name(node.right, values))
    return scale(left, 1 / divisor)


def _vanishing_name(denominator: Node, values: Mapping[str, Fraction]) -> str:
    for item in symbols_in(denominator):
        if item.is_parameter and values.get(item.name) == 0:
            return item.name
    return expression_text(denominator)


def _denominators_vanish(doc: MapDocument, values: Mapping[str, Fraction]) -> bool:
    for node in doc.components:
        for denominator in denominators_in(node):
            if fold(denominator, doc.variables, values).constant_term() == 0:
                return True
    return False


def resolve_bindings(
    doc: MapDocument,
    explicit: Optional[Mapping[str, object]] = None,
    sampler: Optional[RationalSampler] = None,
) -> Dict[str, Fraction]:
    """File bindings, then random draws for what is still unbound, then explicit values on top."""

    explicit = {
        name: parse_rational(value) if isinstance(value, str) else as_rational(value)
        for name, value in (explicit or {}).items()
    }
    for name in explicit:
        if name not in doc.parameters:
            raise UnknownSymbol(f"binding for undeclared parameter {name!r}")
    values = dict(doc.bindings)
    if sampler is not None:
        unbound = [p for p in doc.parameters if p not in values and p not in explicit]
        guarded = doc.denominator_parameters
        for attempt in range(_RESAMPLE_ATTEMPTS):
            drawn = sampler.draw_bindings(unbound, guarded)
            candidate = {**values, **drawn, **explicit}
            if not unbound or not _denominators_vanish(doc, _complete(doc, candidate)):
                break
            LOGGER.debug("Denominator vanished under random draw %d; redrawing", attempt + 1)
        values.update(drawn)
    values.update(explicit)
    return values


def _complete(doc: MapDocument, values: Mapping[str, Fraction]) -> Dict[str, Fraction]:
    return {p: values.get(p, Fraction(1)) for p in doc.parameters}


def bind_parameters(
    doc: MapDocument,
    bindings: Optional[Mapping[str, object]] = None,
    sampler: Optional[RationalSampler] = None,
) -> PolynomialMap:
    values = resolve_bindings(doc, bindings, sampler)
    missing = [p for p in doc.used_parameters if p not in values]
    if missing:
        raise UnboundParameter(f"parameters without value: {', '.join(missing)}")
    return PolynomialMap(tuple(fold(node, doc.variables, values) for node in doc.components))


def parse_polynomial(text: str, names: Sequence[str]) -> Polynomial:
    return fold(parse_expression(text, names), names, {})


# ---------------------------------------------------------------------------
# Rendering
# ---------------------------------------------------------------------------

def format_map(f: PolynomialMap, names: Optional[Sequence[str]] = None, label: str = "F") -> str:
    """The map in file format, ready to be parsed again."""

    names = list(names) if names is not None else default_names(f.dimension)
    lines = ["vars " + " ".join(names)]
    lines.extend(f"{label}{i + 1} = {format_polynomial(c, names)}" for i, c in enumerate(f.components))
    return "\n".join(lines) + "\n"


__all__ = [
    "BinaryOp",
    "Literal",
    "MapDocument",
    "Negate",
    "Node",
    "Power",
    "Symbol",
    "Token",
    "bind_parameters",
    "expression_text",
    "fold",
    "format_map",
    "parse_expression",
    "parse_map",
    "parse_polynomial",
    "parse_rational",
    "read_map_file",
    "resolve_bindings",
    "tokenize",
]
