"""Complex-function expressions: parsing, symbolic differentiation, evaluation.

Grammar (standard precedence, ``^`` binds tightest and is right associative)::

    expr    := term (('+' | '-') term)*
    term    := unary (('*' | '/') unary)*
    unary   := ('+' | '-') unary | power
    power   := primary ('^' unary)?
    primary := NUMBER | IMAG_NUMBER | 'z' | 'i' | 'e' | 'pi'
             | FUNC '(' expr ')' | '(' expr ')'

``FUNC`` is one of ``exp``, ``log`` (principal branch), ``sin``, ``cos``.
Exponents must reduce to an integer constant. A number written directly
before ``i`` (``2i``, ``0.5i``) is an imaginary literal.

Values live on the Riemann sphere: evaluation returns :data:`INF` for
division by zero or results above the magnitude cap.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import DomainError, ExprSyntaxError, UnsupportedOperation

MAGNITUDE_CAP = 1e15

FUNCTIONS = ("exp", "log", "sin", "cos")


class PointAtInfinity:
    """The point at infinity of the Riemann sphere (a singleton)."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "PointAtInfinity"

    def __reduce__(self):
        return (PointAtInfinity, ())


INF = PointAtInfinity()


def is_infinity(w) -> bool:
    return w is INF


def as_complex_value(w, cap: float = MAGNITUDE_CAP):
    """Coerce ``w`` to a finite ``complex`` or :data:`INF`."""
    if w is INF:
        return INF
    w = complex(w)
    if not (math.isfinite(w.real) and math.isfinite(w.imag)) or abs(w) > cap:
        return INF
    return w


# ---------------------------------------------------------------------------
# expression tree


class Node:
    __slots__ = ()


@dataclass(frozen=True)
class Const(Node):
    value: complex


@dataclass(frozen=True)
class Var(Node):
    pass


@dataclass(frozen=True)
class Add(Node):
    a: Node
    b: Node


@dataclass(frozen=True)
class Sub(Node):
    a: Node
    b: Node


@dataclass(frozen=True)
class Mul(Node):
    a: Node
    b: Node


@dataclass(frozen=True)
class Div(Node):
    a: Node
    b: Node


@dataclass(frozen=True)
class Neg(Node):
    a: Node


@dataclass(frozen=True)
class Pow(Node):
    base: Node
    n: int


@dataclass(frozen=True)
class Call(Node):
    name: str
    arg: Node


Z = Var()
ZERO = Const(0j)
ONE = Const(1 + 0j)


def _is_const(node, value=None):
    return isinstance(node, Const) and (value is None or node.value == value)


# Smart constructors fold constants and drop neutral elements. They are used
# both by the parser and by differentiation so trees stay small.

def const(v) -> Const:
    return Const(complex(v))


def add(a, b):
    if _is_const(a) and _is_const(b):
        return Const(a.value + b.value)
    if _is_const(a, 0):
        return b
    if _is_const(b, 0):
        return a
    return Add(a, b)


def sub(a, b):
    if _is_const(a) and _is_const(b):
        return Const(a.value - b.value)
    if _is_const(b, 0):
        return a
    if _is_const(a, 0):
        return neg(b)
    return Sub(a, b)


def mul(a, b):
    if _is_const(a) and _is_const(b):
        return Const(a.value * b.value)
    if _is_const(a, 0) or _is_const(b, 0):
        return ZERO
    if _is_const(a, 1):
        return b
    if _is_const(b, 1):
        return a
    if _is_const(a, -1):
        return neg(b)
    if _is_const(b, -1):
        return neg(a)
    return Mul(a, b)


def div(a, b):
    if _is_const(a) and _is_const(b) and b.value != 0:
        return Const(a.value / b.value)
    if _is_const(b, 1):
        return a
    if _is_const(a, 0) and not _is_const(b):
        return ZERO
    return Div(a, b)


def neg(a):
    if _is_const(a):
        return Const(-a.value)
    if isinstance(a, Neg):
        return a.a
    return Neg(a)


def power(base, n: int):
    n = int(n)
    if n == 0:
        return ONE
    if n == 1:
        return base
    if _is_const(base) and (base.value != 0 or n > 0):
        return Const(complex(_ipow(np.complex128(base.value), n)))
    if isinstance(base, Pow):
        return Pow(base.base, base.n * n)
    return Pow(base, n)


def call(name, arg):
    if name not in FUNCTIONS:
        raise UnsupportedOperation(f"unknown function {name!r}")
    if _is_const(arg) and not (name == "log" and arg.value == 0):
        return Const(complex(_FUNC_IMPL[name](np.complex128(arg.value))))
    return Call(name, arg)


# ---------------------------------------------------------------------------
# differentiation


def diff(node: Node) -> Node:
    """Formal derivative with respect to ``z``."""
    if isinstance(node, Const):
        return ZERO
    if isinstance(node, Var):
        return ONE
    if isinstance(node, Add):
        return add(diff(node.a), diff(node.b))
    if isinstance(node, Sub):
        return sub(diff(node.a), diff(node.b))
    if isinstance(node, Neg):
        return neg(diff(node.a))
    if isinstance(node, Mul):
        return add(mul(diff(node.a), node.b), mul(node.a, diff(node.b)))
    if isinstance(node, Div):
        da, db = diff(node.a), diff(node.b)
        if _is_const(db, 0):
            return div(da, node.b)
        return div(sub(mul(da, node.b), mul(node.a, db)), power(node.b, 2))
    if isinstance(node, Pow):
        return mul(mul(const(node.n), power(node.base, node.n - 1)), diff(node.base))
    if isinstance(node, Call):
        inner = diff(node.arg)
        if node.name == "exp":
            outer = node
        elif node.name == "log":
            return div(inner, node.arg)
        elif node.name == "sin":
            outer = Call("cos", node.arg)
        else:
            outer = neg(Call("sin", node.arg))
        return mul(outer, inner)
    raise TypeError(f"not an expression node: {node!r}")


# ---------------------------------------------------------------------------
# printing


def _fmt_real(x: float) -> str:
    s = repr(float(x))
    return f"({s})" if s.startswith("-") else s


def to_text(node: Node) -> str:
    """Print a tree in a form :func:`parse` maps back to the same tree."""
    if isinstance(node, Const):
        v = node.value
        if v.imag == 0 and math.copysign(1.0, v.imag) > 0:
            return _fmt_real(v.real)
        if v.real == 0 and math.copysign(1.0, v.real) > 0:
            return f"({_fmt_real(v.imag)}*i)"
        return f"({_fmt_real(v.real)}+{_fmt_real(v.imag)}*i)"
    if isinstance(node, Var):
        return "z"
    if isinstance(node, Neg):
        return f"(-{to_text(node.a)})"
    if isinstance(node, Pow):
        return f"({to_text(node.base)}^({node.n}))"
    if isinstance(node, Call):
        return f"{node.name}({to_text(node.arg)})"
    op = {Add: "+", Sub: "-", Mul: "*", Div: "/"}[type(node)]
    return f"({to_text(node.a)}{op}{to_text(node.b)})"


# ---------------------------------------------------------------------------
# parsing

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)(?P<imag>i(?![A-Za-z0-9_]))?
  | (?P<name>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>[-+*/^()])
    """,
    re.VERBOSE,
)

_NAMED_CONSTANTS = {"i": 1j, "e": math.e, "pi": math.pi}


def _tokenize(text):
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ExprSyntaxError(f"unexpected character {text[pos]!r}", pos)
        if m.lastgroup != "ws":
            if m.group("num") is not None:
                value = float(m.group("num"))
                tokens.append(("num", value * 1j if m.group("imag") else complex(value), pos))
            elif m.group("name") is not None:
                tokens.append(("name", m.group("name"), pos))
            else:
                tokens.append(("op", m.group("op"), pos))
        pos = m.end()
    tokens.append(("end", None, len(text)))
    return tokens


class _Parser:
    def __init__(self, text):
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, op):
        kind, val, pos = self.take()
        if kind != "op" or val != op:
            what = "end of input" if kind == "end" else repr(val)
            raise ExprSyntaxError(f"expected {op!r}, found {what}", pos)

    def parse(self):
        node = self.expr()
        kind, val, pos = self.peek()
        if kind != "end":
            raise ExprSyntaxError(f"unexpected token {val!r}", pos)
        return node

    def expr(self):
        node = self.term()
        while self.peek()[0] == "op" and self.peek()[1] in "+-":
            op = self.take()[1]
            rhs = self.term()
            node = add(node, rhs) if op == "+" else sub(node, rhs)
        return node

    def term(self):
        node = self.unary()
        while self.peek()[0] == "op" and self.peek()[1] in "*/":
            op = self.take()[1]
            rhs = self.unary()
            node = mul(node, rhs) if op == "*" else div(node, rhs)
        return node

    def unary(self):
        kind, val, _ = self.peek()
        if kind == "op" and val in "+-":
            self.take()
            operand = self.unary()
            return neg(operand) if val == "-" else operand
        return self.power()

    def power(self):
        base = self.primary()
        kind, val, pos = self.peek()
        if kind == "op" and val == "^":
            self.take()
            exp_pos = self.peek()[2]
            exponent = self.unary()
            if not isinstance(exponent, Const):
                raise UnsupportedOperation(
                    f"exponent at position {exp_pos} is not a constant; only integer powers are supported")
            v = exponent.value
            if v.imag != 0 or v.real != round(v.real):
                raise UnsupportedOperation(
                    f"non-integer exponent {v!r} at position {exp_pos}")
            return power(base, int(round(v.real)))
        return base

    def primary(self):
        kind, val, pos = self.take()
        if kind == "num":
            return Const(val)
        if kind == "name":
            if val == "z":
                return Z
            if val in _NAMED_CONSTANTS:
                return const(_NAMED_CONSTANTS[val])
            if val in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return call(val, arg)
            raise ExprSyntaxError(f"unknown identifier {val!r}", pos)
        if kind == "op" and val == "(":
            node = self.expr()
            self.expect(")")
            return node
        what = "end of input" if kind == "end" else repr(val)
        raise ExprSyntaxError(f"unexpected {what}", pos)


def parse_tree(text: str) -> Node:
    if not text or not text.strip():
        raise ExprSyntaxError("empty expression", 0)
    return _Parser(text).parse()


# ---------------------------------------------------------------------------
# evaluation


def _ipow(a, n):
    """Integer power by repeated squaring (deterministic, branch-free)."""
    if n < 0:
        return 1.0 / _ipow(a, -n)
    result = None
    base = a
    while n:
        if n & 1:
            result = base if result is None else result * base
        n >>= 1
        if n:
            base = base * base
    return np.ones_like(a) if result is None else result


def _log(a):
    if np.any(a == 0):
        raise DomainError("log of exact zero")
    return np.log(a)


_FUNC_IMPL = {"exp": np.exp, "log": _log, "sin": np.sin, "cos": np.cos}


def _compile(node: Node):
    consts = {}
    lines = []
    memo = {}

    def emit(n):
        # common subexpressions are evaluated once
        key = n
        if key in memo:
            return memo[key]
        if isinstance(n, Const):
            name = f"c{len(consts)}"
            consts[name] = np.complex128(n.value)
            memo[key] = name
            return name
        if isinstance(n, Var):
            return "z"
        if isinstance(n, Neg):
            expr = f"-{emit(n.a)}"
        elif isinstance(n, Pow):
            expr = f"_ipow({emit(n.base)}, {n.n})"
        elif isinstance(n, Call):
            expr = f"_f_{n.name}({emit(n.arg)})"
        else:
            op = {Add: "+", Sub: "-", Mul: "*", Div: "/"}[type(n)]
            expr = f"{emit(n.a)} {op} {emit(n.b)}"
        name = f"t{len(lines)}"
        lines.append(f"    {name} = {expr}")
        memo[key] = name
        return name

    result = emit(node)
    src = "def _fn(z):\n" + "\n".join(lines) + f"\n    return {result} + _zero\n"
    namespace = dict(consts)
    namespace.update({f"_f_{k}": v for k, v in _FUNC_IMPL.items()})
    namespace["_ipow"] = _ipow
    namespace["_zero"] = np.complex128(0)
    exec(compile(src, "<pseudolem-expr>", "exec"), namespace)
    return namespace["_fn"]


@dataclass(frozen=True, eq=False)
class FunctionDef:
    """A meromorphic function of ``z`` together with its formal derivative.

    Calling the object evaluates the body on a scalar or array (raw IEEE
    values: poles show up as ``inf``/``nan``). Use :func:`evaluate` for
    Riemann-sphere semantics.
    """

    body: Node
    derivative_body: Node
    text: str = field(default="")

    @classmethod
    def from_tree(cls, body: Node, text: str = "") -> "FunctionDef":
        return cls(body, diff(body), text or to_text(body))

    @cached_property
    def _fn(self):
        return _compile(self.body)

    @cached_property
    def _dfn(self):
        return _compile(self.derivative_body)

    def __call__(self, z):
        z = np.asarray(z, dtype=np.complex128)
        with np.errstate(all="ignore"):
            out = self._fn(z)
        return np.broadcast_to(out, z.shape).copy() if np.ndim(out) < z.ndim else out

    def derivative(self, z):
        z = np.asarray(z, dtype=np.complex128)
        with np.errstate(all="ignore"):
            out = self._dfn(z)
        return np.broadcast_to(out, z.shape).copy() if np.ndim(out) < z.ndim else out

    @cached_property
    def derivative_function(self) -> "FunctionDef":
        return FunctionDef(self.derivative_body, diff(self.derivative_body),
                           f"d/dz[{self.text}]")

    def shifted(self, w) -> "FunctionDef":
        """The function ``f(z) - w``."""
        return FunctionDef(sub(self.body, const(w)), self.derivative_body,
                           f"({self.text})-({complex(w)!r})")

    def mobius(self, a, b, c, d) -> "FunctionDef":
        """The composition ``(a f + b) / (c f + d)``."""
        body = div(add(mul(const(a), self.body), const(b)),
                   add(mul(const(c), self.body), const(d)))
        return FunctionDef.from_tree(body)

    def __str__(self):
        return to_text(self.body)

    def __repr__(self):
        return f"FunctionDef({self.text!r})"


def parse(text: str) -> FunctionDef:
    """Parse ``text`` into a :class:`FunctionDef` with symbolic derivative."""
    body = parse_tree(text)
    return FunctionDef(body, diff(body), text)


def _finite_or_inf(v, cap):
    v = complex(v)
    if not (math.isfinite(v.real) and math.isfinite(v.imag)) or abs(v) > cap:
        return INF
    return v


def evaluate(f: FunctionDef, z, cap: float = MAGNITUDE_CAP):
    """``f(z)`` on the Riemann sphere: a ``complex`` or :data:`INF`."""
    if z is INF:
        raise DomainError("evaluation at the point at infinity is not supported")
    return _finite_or_inf(f(complex(z)), cap)


def evaluate_derivative(f: FunctionDef, z, cap: float = MAGNITUDE_CAP):
    if z is INF:
        raise DomainError("evaluation at the point at infinity is not supported")
    return _finite_or_inf(f.derivative(complex(z)), cap)


def infinite_mask(values, cap: float = MAGNITUDE_CAP):
    """Boolean mask of array entries that represent the point at infinity."""
    values = np.asarray(values)
    with np.errstate(invalid="ignore"):
        return ~np.isfinite(values) | (np.abs(values) > cap)


# ---------------------------------------------------------------------------
# structure queries used by the locator


def factors(node: Node) -> list:
    """Non-constant multiplicative factors whose zeros cover the zeros of ``node``."""
    if isinstance(node, Const):
        return []
    if isinstance(node, Mul):
        return factors(node.a) + factors(node.b)
    if isinstance(node, Neg):
        return factors(node.a)
    if isinstance(node, Pow) and node.n > 0:
        return factors(node.base)
    if isinstance(node, Div):
        return factors(node.a)
    if isinstance(node, Call) and node.name == "exp":
        return []
    return [node]


def singular_factors(node: Node) -> list:
    """Subexpressions whose zeros are the only possible poles of ``node``.

    Returned in a deterministic order without structural duplicates.
    """
    found = {}

    def walk(n):
        if isinstance(n, (Const, Var)):
            return
        if isinstance(n, Div):
            walk(n.a)
            walk(n.b)
            for fct in factors(n.b):
                found.setdefault(fct, None)
        elif isinstance(n, Pow):
            walk(n.base)
            if n.n < 0:
                for fct in factors(n.base):
                    found.setdefault(fct, None)
        elif isinstance(n, Call):
            walk(n.arg)
            if n.name == "log":
                for fct in factors(n.arg):
                    found.setdefault(fct, None)
        elif isinstance(n, Neg):
            walk(n.a)
        else:
            walk(n.a)
            walk(n.b)

    walk(node)
    return list(found)
