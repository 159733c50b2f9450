"""A small expression language for test functions.

Grammar (EBNF; whitespace is ignored between tokens)::

    expr     = term { ("+" | "-") term } ;
    term     = unary { ("*" | "/") unary } ;
    unary    = "-" unary | power ;
    power    = atom [ "^" exponent ] ;
    exponent = ( ["-"] NUMBER | "(" ["-"] NUMBER ")" ) [ "^" exponent ] ;
    atom     = NUMBER | "pi" | variable | func "(" expr ")" | "(" expr ")" ;
    variable = "x" | "x1" | "x2" | "x3" | "r" ;
    func     = "exp" | "sin" | "cos" | "abs" | "sqrt" ;

``^`` binds tightest and associates to the right (``2^3^2 = 512``), and
its exponent is a numeric literal.  ``x`` is ``x1``; ``r = |x|``.
Variables beyond the declared dimension are rejected at parse time.
"""

from dataclasses import dataclass
import math
import re

import numpy as np

from . import funcrep as fr
from .errors import InvalidInputError, UnclabError

FUNCTIONS = {
    "exp": np.exp,
    "sin": np.sin,
    "cos": np.cos,
    "abs": np.abs,
    "sqrt": np.sqrt,
}
CONSTANTS = {"pi": math.pi}

_TOKEN = re.compile(r"""
    (?P<ws>\s+)
  | (?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*/^(),])
""", re.VERBOSE)


class ParseError(UnclabError, ValueError):
    """Syntax error at byte ``offset`` of the source."""

    def __init__(self, source, offset, expected):
        self.source = source
        self.offset = offset
        self.expected = expected
        lo = max(0, offset - 10)
        raw = source.encode("utf-8")
        self.excerpt = raw[lo:offset + 10].decode("utf-8", errors="replace")
        caret = " " * len(raw[lo:offset].decode("utf-8", errors="replace")) + "^"
        super().__init__(f"expected {expected} at byte {offset}\n  {self.excerpt}\n  {caret}")


class EvaluationError(UnclabError, ArithmeticError):
    """Non-finite value produced by the subtree spanning ``start:end``."""

    def __init__(self, source, start, end, point=None):
        self.start = start
        self.end = end
        self.subtree = source.encode("utf-8")[start:end].decode("utf-8")
        self.point = point
        where = "" if point is None else f" at {point}"
        super().__init__(f"non-finite value from '{self.subtree}' (bytes {start}-{end}){where}")


# --------------------------------------------------------------------------
# syntax tree
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Num:
    value: float
    start: int
    end: int


@dataclass(frozen=True)
class Const:
    name: str
    start: int
    end: int

    @property
    def value(self):
        return CONSTANTS[self.name]


@dataclass(frozen=True)
class Var:
    name: str          # "r" or "x1" .. "x3"
    start: int
    end: int


@dataclass(frozen=True)
class Neg:
    operand: object
    start: int
    end: int


@dataclass(frozen=True)
class BinOp:
    op: str
    left: object
    right: object
    start: int
    end: int


@dataclass(frozen=True)
class Pow:
    base: object
    exponent: object   # literal subtree: Num, Neg(Num) or Pow of those
    start: int
    end: int


@dataclass(frozen=True)
class Call:
    func: str
    arg: object
    start: int
    end: int


@dataclass(frozen=True)
class Expr:
    """A parsed expression together with its source and dimension."""

    root: object
    source: str
    dim: int

    def variables(self):
        return frozenset(n.name for n in walk(self.root) if isinstance(n, Var))

    def __str__(self):
        return to_source(self.root)


def walk(node):
    yield node
    for child in _children(node):
        yield from walk(child)


def _children(node):
    if isinstance(node, Neg):
        return (node.operand,)
    if isinstance(node, BinOp):
        return (node.left, node.right)
    if isinstance(node, Pow):
        return (node.base, node.exponent)
    if isinstance(node, Call):
        return (node.arg,)
    return ()


# --------------------------------------------------------------------------
# lexer and parser
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class _Tok:
    kind: str          # "number", "name", "op", "end"
    text: str
    start: int         # byte offsets
    end: int


def _tokenize(source):
    toks = []
    pos = 0
    byte = 0
    while pos < len(source):
        m = _TOKEN.match(source, pos)
        if m is None:
            raise ParseError(source, byte, "a number, name, operator or parenthesis")
        text = m.group()
        width = len(text.encode("utf-8"))
        if m.lastgroup != "ws":
            toks.append(_Tok(m.lastgroup, text, byte, byte + width))
        pos = m.end()
        byte += width
    toks.append(_Tok("end", "", byte, byte))
    return toks


class _Parser:
    def __init__(self, source, dim):
        self.source = source
        self.dim = dim
        self.toks = _tokenize(source)
        self.i = 0

    @property
    def tok(self):
        return self.toks[self.i]

    def fail(self, expected, tok=None):
        raise ParseError(self.source, (tok or self.tok).start, expected)

    def accept(self, text):
        if self.tok.kind == "op" and self.tok.text == text:
            self.i += 1
            return self.toks[self.i - 1]
        return None

    def expect(self, text):
        tok = self.accept(text)
        if tok is None:
            self.fail(f"'{text}'")
        return tok

    def parse(self):
        node = self.expr()
        if self.tok.kind != "end":
            self.fail("an operator or end of input")
        return node

    def expr(self):
        node = self.term()
        while self.tok.kind == "op" and self.tok.text in "+-":
            op = self.tok.text
            self.i += 1
            right = self.term()
            node = BinOp(op, node, right, node.start, right.end)
        return node

    def term(self):
        node = self.unary()
        while self.tok.kind == "op" and self.tok.text in "*/":
            op = self.tok.text
            self.i += 1
            right = self.unary()
            node = BinOp(op, node, right, node.start, right.end)
        return node

    def unary(self):
        minus = self.accept("-")
        if minus:
            operand = self.unary()
            return Neg(operand, minus.start, operand.end)
        return self.power()

    def power(self):
        base = self.atom()
        if self.accept("^"):
            exponent = self.exponent()
            return Pow(base, exponent, base.start, exponent.end)
        return base

    def exponent(self):
        open_ = self.accept("(")
        minus = self.accept("-")
        lit = self.number("a numeric exponent")
        node = Neg(lit, minus.start, lit.end) if minus else lit
        if open_:
            close = self.expect(")")
            node = _respan(node, open_.start, close.end)
        if self.accept("^"):
            rest = self.exponent()
            node = Pow(node, rest, node.start, rest.end)
        return node

    def number(self, expected):
        tok = self.tok
        if tok.kind != "number":
            self.fail(expected)
        value = float(tok.text)
        if not math.isfinite(value):
            self.fail("a finite number")
        self.i += 1
        return Num(value, tok.start, tok.end)

    def atom(self):
        tok = self.tok
        if tok.kind == "number":
            return self.number("a number")
        if tok.kind == "name":
            self.i += 1
            name = tok.text
            if name in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                close = self.expect(")")
                return Call(name, arg, tok.start, close.end)
            if name in CONSTANTS:
                return Const(name, tok.start, tok.end)
            var = _variable(name)
            if var is None:
                self.fail("a variable (x, x1..x3, r), a function (exp, sin, cos, abs, sqrt) or pi",
                          tok)
            if var != "r" and int(var[1:]) > self.dim:
                self.fail(f"a variable of a {self.dim}-dimensional expression", tok)
            return Var(var, tok.start, tok.end)
        if self.accept("("):
            node = self.expr()
            close = self.expect(")")
            return _respan(node, tok.start, close.end)
        self.fail("a number, variable, function call or '('")


def _variable(name):
    if name == "x":
        return "x1"
    if name == "r" or re.fullmatch(r"x[1-3]", name):
        return name
    return None


def _respan(node, start, end):
    # parentheses widen the span so errors point at what the user wrote
    return type(node)(**{**node.__dict__, "start": start, "end": end})


def parse(source, dim=1):
    """Parse ``source`` for functions on R^dim (dim in 1..3)."""
    if dim not in (1, 2, 3):
        raise InvalidInputError(f"dimension must be 1, 2 or 3, got {dim}")
    return Expr(_Parser(source, dim).parse(), source, dim)


# --------------------------------------------------------------------------
# printing
# --------------------------------------------------------------------------

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2}


def _prec(node):
    if isinstance(node, BinOp):
        return _PREC[node.op]
    if isinstance(node, Neg):
        return 3
    if isinstance(node, Pow):
        return 4
    return 5


def _number_text(v):
    text = repr(float(v))
    return text[:-2] if text.endswith(".0") else text


def _exponent_text(node):
    if isinstance(node, Num):
        return _number_text(node.value)
    if isinstance(node, Neg):
        return "-" + _exponent_text(node.operand)
    return _exponent_text(node.base) + "^" + _exponent_text(node.exponent)


def to_source(node):
    """Canonical text with the fewest parentheses that keep the tree."""
    if isinstance(node, Num):
        return _number_text(node.value)
    if isinstance(node, Const):
        return node.name
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Call):
        return f"{node.func}({to_source(node.arg)})"
    if isinstance(node, Neg):
        inner = to_source(node.operand)
        return "-" + (f"({inner})" if _prec(node.operand) < 3 else inner)
    if isinstance(node, Pow):
        base = to_source(node.base)
        if _prec(node.base) < 5:
            base = f"({base})"
        return base + "^" + _exponent_text(node.exponent)
    p = _PREC[node.op]
    left, right = to_source(node.left), to_source(node.right)
    if _prec(node.left) < p:
        left = f"({left})"
    if _prec(node.right) <= p:
        right = f"({right})"
    return f"{left} {node.op} {right}"


def strip_spans(node):
    """Tree with all spans zeroed, for structural comparison."""
    fields = {k: (strip_spans(v) if hasattr(v, "start") else v)
              for k, v in node.__dict__.items()}
    fields.update(start=0, end=0)
    return type(node)(**fields)


# --------------------------------------------------------------------------
# evaluation
# --------------------------------------------------------------------------

def _eval(node, env, source):
    with np.errstate(all="ignore"):
        if isinstance(node, (Num, Const)):
            return np.float64(node.value)
        if isinstance(node, Var):
            value = env[node.name]
        elif isinstance(node, Neg):
            value = -_eval(node.operand, env, source)
        elif isinstance(node, BinOp):
            a = _eval(node.left, env, source)
            b = _eval(node.right, env, source)
            value = {"+": np.add, "-": np.subtract,
                     "*": np.multiply, "/": np.divide}[node.op](a, b)
        elif isinstance(node, Pow):
            value = np.power(_eval(node.base, env, source), _eval(node.exponent, env, source))
        else:
            value = FUNCTIONS[node.func](_eval(node.arg, env, source))
    bad = ~np.isfinite(value)
    if np.any(bad):
        point = None
        if np.ndim(bad):
            idx = np.unravel_index(int(np.argmax(bad)), np.shape(bad))
            point = {k: float(np.broadcast_to(v, np.shape(bad))[idx]) for k, v in env.items()}
        raise EvaluationError(source, node.start, node.end, point)
    return value


def _environment(e, coords):
    coords = [np.asarray(c, dtype=float) for c in coords]
    if len(coords) != e.dim:
        raise InvalidInputError(f"expected {e.dim} coordinates, got {len(coords)}")
    env = {f"x{i + 1}": c for i, c in enumerate(coords)}
    if "r" in e.variables():
        env["r"] = np.sqrt(sum(c * c for c in coords))
    return env


def evaluate(e, point):
    """Value at one point (a number or a sequence of ``dim`` numbers)."""
    point = np.atleast_1d(np.asarray(point, dtype=float))
    return float(_eval(e.root, _environment(e, list(point)), e.source))


def evaluate_grid(e, coords):
    """Vectorized evaluation on coordinate arrays ``x1..x_dim``."""
    env = _environment(e, coords)
    shape = np.broadcast_shapes(*(np.shape(c) for c in env.values()))
    return np.broadcast_to(_eval(e.root, env, e.source), shape).astype(float)


def evaluate_radial(e, r):
    """Vectorized evaluation of an expression in ``r`` alone."""
    extra = e.variables() - {"r"}
    if extra:
        raise InvalidInputError(
            f"a radial profile may only use r, found {', '.join(sorted(extra))}")
    r = np.asarray(r, dtype=float)
    return np.broadcast_to(_eval(e.root, {"r": r}, e.source), r.shape).astype(float)


def sample(e, target):
    """Sample the expression on a representation descriptor."""
    if target.dim != e.dim:
        raise InvalidInputError(f"expression is {e.dim}-dimensional, target is {target.dim}-dimensional")
    if target.kind == "radial":
        return fr.SampledFunction(target, evaluate_radial(e, target.radii()))
    return fr.sample(lambda *xs: evaluate_grid(e, xs), target)
