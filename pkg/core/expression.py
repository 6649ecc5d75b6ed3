"""
Arithmetic expressions in x and y for right-hand sides and exact solutions.

Grammar (lowest to highest precedence):

    expr    := term (('+' | '-') term)*
    term    := unary (('*' | '/') unary)*
    unary   := ('-' | '+') unary | power
    power   := primary ('^' unary)?          right associative
    primary := number | 'x' | 'y' | 'pi' | func '(' args ')' | '(' expr ')'

so -2^2 == -4 and 2^-1 == 0.5. Evaluation is vectorised over numpy arrays
and reports domain violations instead of producing NaN.
"""

import math
import re
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Dict, List, Optional, Tuple, Union

import numpy as np

from core.errors import ExpressionDomainError, ExpressionSyntaxError

ArrayLike = Union[float, np.ndarray]


class TokenType(Enum):
    NUMBER = "number"
    NAME = "name"
    OPERATOR = "operator"
    LPAREN = "("
    RPAREN = ")"
    COMMA = ","
    END = "end"


class Token:
    def __init__(self, kind: TokenType, text: str, offset: int):
        self.kind = kind
        self.text = text
        self.offset = offset

    def __repr__(self) -> str:
        return f"Token({self.kind.name}, {self.text!r}, {self.offset})"


_TOKEN_PATTERN = re.compile(r"""
    (?P<space>\s+)
  | (?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<operator>[-+*/^])
  | (?P<lparen>\()
  | (?P<rparen>\))
  | (?P<comma>,)
""", re.VERBOSE)

_GROUP_TYPES = {
    "number": TokenType.NUMBER,
    "name": TokenType.NAME,
    "operator": TokenType.OPERATOR,
    "lparen": TokenType.LPAREN,
    "rparen": TokenType.RPAREN,
    "comma": TokenType.COMMA,
}


def _byte_offset(source: str, index: int) -> int:
    return len(source[:index].encode("utf-8"))


def tokenize(source: str) -> List[Token]:
    """Split source into tokens; offsets are byte offsets into the UTF-8 text"""
    tokens = []
    index = 0
    while index < len(source):
        match = _TOKEN_PATTERN.match(source, index)
        if match is None:
            raise ExpressionSyntaxError(f"unexpected character {source[index]!r}",
                                        _byte_offset(source, index), source)
        group = match.lastgroup
        if group != "space":
            tokens.append(Token(_GROUP_TYPES[group], match.group(), _byte_offset(source, index)))
        index = match.end()
    tokens.append(Token(TokenType.END, "", _byte_offset(source, len(source))))
    return tokens


# --- AST ---------------------------------------------------------------------

@dataclass(frozen=True)
class Number:
    value: float


@dataclass(frozen=True)
class Constant:
    name: str


@dataclass(frozen=True)
class Variable:
    name: str


@dataclass(frozen=True)
class UnaryOp:
    op: str
    operand: "Node"


@dataclass(frozen=True)
class BinaryOp:
    op: str
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Call:
    name: str
    args: Tuple["Node", ...]


Node = Union[Number, Constant, Variable, UnaryOp, BinaryOp, Call]

VARIABLES = ("x", "y")
CONSTANTS: Dict[str, float] = {"pi": math.pi}
FUNCTION_ARITY: Dict[str, int] = {
    "sin": 1, "cos": 1, "exp": 1, "log": 1, "sqrt": 1, "abs": 1, "atan2": 2,
}


class _Parser:
    def __init__(self, source: str):
        self.source = source
        self.tokens = tokenize(source)
        self.position = 0

    @property
    def current(self) -> Token:
        return self.tokens[self.position]

    def _error(self, message: str, token: Optional[Token] = None) -> ExpressionSyntaxError:
        token = token or self.current
        return ExpressionSyntaxError(message, token.offset, self.source)

    def _advance(self) -> Token:
        token = self.current
        self.position += 1
        return token

    def _expect(self, kind: TokenType, what: str) -> Token:
        if self.current.kind != kind:
            found = self.current.text or "end of input"
            raise self._error(f"expected {what}, found {found!r}")
        return self._advance()

    def _is_operator(self, *symbols: str) -> bool:
        return self.current.kind == TokenType.OPERATOR and self.current.text in symbols

    def parse(self) -> Node:
        if self.current.kind == TokenType.END:
            raise self._error("empty expression")
        node = self.expr()
        if self.current.kind != TokenType.END:
            raise self._error(f"unexpected {self.current.text!r}")
        return node

    def expr(self) -> Node:
        node = self.term()
        while self._is_operator("+", "-"):
            op = self._advance().text
            node = BinaryOp(op, node, self.term())
        return node

    def term(self) -> Node:
        node = self.unary()
        while self._is_operator("*", "/"):
            op = self._advance().text
            node = BinaryOp(op, node, self.unary())
        return node

    def unary(self) -> Node:
        if self._is_operator("-"):
            self._advance()
            return UnaryOp("-", self.unary())
        if self._is_operator("+"):
            self._advance()
            return self.unary()
        return self.power()

    def power(self) -> Node:
        base = self.primary()
        if self._is_operator("^"):
            self._advance()
            return BinaryOp("^", base, self.unary())
        return base

    def primary(self) -> Node:
        token = self.current
        if token.kind == TokenType.NUMBER:
            self._advance()
            value = float(token.text)
            if not math.isfinite(value):
                raise self._error(f"number {token.text} is not finite", token)
            return Number(value)
        if token.kind == TokenType.LPAREN:
            self._advance()
            node = self.expr()
            self._expect(TokenType.RPAREN, "')'")
            return node
        if token.kind == TokenType.NAME:
            return self._name()
        if token.kind == TokenType.END:
            raise self._error("dangling operator: expression ends early")
        raise self._error(f"unexpected {token.text!r}")

    def _name(self) -> Node:
        token = self._advance()
        name = token.text
        if name in FUNCTION_ARITY:
            if self.current.kind != TokenType.LPAREN:
                raise self._error(f"function '{name}' needs an argument list", token)
            self._advance()
            args = [self.expr()]
            while self.current.kind == TokenType.COMMA:
                self._advance()
                args.append(self.expr())
            self._expect(TokenType.RPAREN, "')'")
            if len(args) != FUNCTION_ARITY[name]:
                raise self._error(f"function '{name}' takes {FUNCTION_ARITY[name]} argument(s), "
                                  f"got {len(args)}", token)
            return Call(name, tuple(args))
        if self.current.kind == TokenType.LPAREN:
            raise self._error(f"'{name}' is not a function", token)
        if name in VARIABLES:
            return Variable(name)
        if name in CONSTANTS:
            return Constant(name)
        raise self._error(f"unknown identifier '{name}'", token)


def parse(source: str) -> Node:
    """Parse expression source into an AST"""
    if not isinstance(source, str):
        raise ExpressionSyntaxError(f"expression must be a string, got {type(source).__name__}", 0)
    return _Parser(source).parse()


def to_source(node: Node) -> str:
    """Fully parenthesised source text that parses back to the same AST"""
    if isinstance(node, Number):
        return repr(node.value)
    if isinstance(node, (Constant, Variable)):
        return node.name
    if isinstance(node, UnaryOp):
        return f"(-{to_source(node.operand)})"
    if isinstance(node, BinaryOp):
        return f"({to_source(node.left)} {node.op} {to_source(node.right)})"
    if isinstance(node, Call):
        return f"{node.name}({', '.join(to_source(arg) for arg in node.args)})"
    raise TypeError(f"not an expression node: {node!r}")


# --- evaluation --------------------------------------------------------------

def _first_bad(mask: np.ndarray) -> Optional[int]:
    flat = np.flatnonzero(np.ravel(mask))
    return int(flat[0]) if len(flat) else None


def _domain_check(mask: np.ndarray, message: str, node: Node):
    index = _first_bad(mask)
    if index is not None:
        raise ExpressionDomainError(message, to_source(node), point_index=index)


_UNARY_FUNCTIONS: Dict[str, Callable[[np.ndarray], np.ndarray]] = {
    "sin": np.sin, "cos": np.cos, "exp": np.exp, "log": np.log, "sqrt": np.sqrt, "abs": np.abs,
}


def _evaluate(node: Node, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    if isinstance(node, Number):
        return np.full(x.shape, node.value)
    if isinstance(node, Constant):
        return np.full(x.shape, CONSTANTS[node.name])
    if isinstance(node, Variable):
        return x if node.name == "x" else y
    if isinstance(node, UnaryOp):
        return -_evaluate(node.operand, x, y)
    if isinstance(node, BinaryOp):
        left = _evaluate(node.left, x, y)
        right = _evaluate(node.right, x, y)
        if node.op == "+":
            result = left + right
        elif node.op == "-":
            result = left - right
        elif node.op == "*":
            result = left * right
        elif node.op == "/":
            _domain_check(right == 0.0, "division by zero", node)
            result = left / right
        else:
            _domain_check((left < 0.0) & (right != np.round(right)),
                          "negative base with non-integer exponent", node)
            _domain_check((left == 0.0) & (right < 0.0), "zero raised to a negative power", node)
            result = np.power(left, right)
    elif isinstance(node, Call):
        args = [_evaluate(arg, x, y) for arg in node.args]
        if node.name == "log":
            _domain_check(args[0] <= 0.0, "log of a non-positive value", node)
        elif node.name == "sqrt":
            _domain_check(args[0] < 0.0, "sqrt of a negative value", node)
        if node.name == "atan2":
            result = np.arctan2(args[0], args[1])
        else:
            result = _UNARY_FUNCTIONS[node.name](args[0])
    else:
        raise TypeError(f"not an expression node: {node!r}")
    _domain_check(~np.isfinite(result), "non-finite result", node)
    return result


def evaluate(node: Node, x: ArrayLike, y: ArrayLike) -> np.ndarray:
    """
    Evaluate at the points (x, y); x and y broadcast against each other.
    Raises ExpressionDomainError naming the failing sub-expression and the
    flat index of the first offending point.
    """
    x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
    with np.errstate(all="ignore"):
        return _evaluate(node, x, y)


class Expression:
    """Parsed expression together with its source text"""

    def __init__(self, source: str):
        self.source = source.strip() if isinstance(source, str) else source
        self.ast = parse(source)

    def __call__(self, x: ArrayLike, y: ArrayLike) -> np.ndarray:
        return evaluate(self.ast, x, y)

    def at(self, x: float, y: float) -> float:
        """Scalar evaluation"""
        return float(evaluate(self.ast, x, y))

    def is_constant(self) -> bool:
        return not _uses_variables(self.ast)

    def __repr__(self) -> str:
        return f"Expression({self.source!r})"


def _uses_variables(node: Node) -> bool:
    if isinstance(node, Variable):
        return True
    if isinstance(node, UnaryOp):
        return _uses_variables(node.operand)
    if isinstance(node, BinaryOp):
        return _uses_variables(node.left) or _uses_variables(node.right)
    if isinstance(node, Call):
        return any(_uses_variables(arg) for arg in node.args)
    return False
