"""Scalar expressions over chart coordinates.

Expressions are immutable, hash-consed trees: two structurally equal trees are
the same Python object, so ``==`` is identity and memoisation by node is cheap.

Grammar (whitespace is insignificant)::

    expr     := term (("+" | "-") term)*
    term     := unary (("*" | "/") unary)*
    unary    := "-" unary | power
    power    := atom ("^" exponent)?
    exponent := "-" exponent | power
    atom     := NUMBER | COORD | FUNC "(" expr ")" | "(" expr ")"
    FUNC     := "ln" | "exp" | "sqrt" | "sin" | "cos"
    NUMBER   := digits ["." digits] [("e" | "E") ["+" | "-"] digits]

``^`` is right-associative and binds tighter than unary minus, so ``-x^2`` is
``-(x^2)``. Exponents must reduce to constants. An integral exponent is kept
as a power node; any other exponent ``k`` is rewritten as ``exp(k*ln(base))``.
"""

from __future__ import annotations

import math
import re
import weakref
from typing import Iterable, Mapping, Sequence

import numpy as np

__all__ = [
    "Expr", "Const", "Symbol", "Neg", "Add", "Sub", "Mul", "Div", "Pow",
    "Ln", "Exp", "Sqrt", "Sin", "Cos",
    "ParseError", "UnknownIdentifierError", "DomainError",
    "const", "power", "parse", "render", "simplify", "diff", "eval_expr",
    "free_symbols", "substitute", "Compiled", "compile_exprs", "as_expr",
    "FUNCTIONS",
]

PREC_ADD, PREC_MUL, PREC_NEG, PREC_POW, PREC_ATOM = 1, 2, 3, 4, 5


class ParseError(ValueError):
    """Syntax error; ``position`` is the 1-based column of the offending token."""

    def __init__(self, message, position):
        super().__init__(f"{message} at position {position}")
        self.message = message
        self.position = position


class UnknownIdentifierError(ParseError):
    pass


class DomainError(ArithmeticError):
    """Evaluation left the domain of an operation.

    ``subtree`` is the offending node and ``indices`` the positions (within
    the evaluated batch) of the points where it failed.
    """

    def __init__(self, message, subtree=None, indices=()):
        super().__init__(message)
        self.subtree = subtree
        self.indices = tuple(int(i) for i in indices)


class Expr:
    __slots__ = ("__weakref__",)
    _table: "weakref.WeakValueDictionary" = weakref.WeakValueDictionary()
    prec = PREC_ATOM

    def __new__(cls, *args):
        key = (cls,) + args
        node = Expr._table.get(key)
        if node is None:
            node = object.__new__(cls)
            node._init(*args)
            Expr._table[key] = node
        return node

    def _init(self, *args):
        raise NotImplementedError

    @property
    def children(self) -> tuple:
        return ()

    def __reduce__(self):
        return (type(self), self._args())

    def _args(self):
        return self.children

    def __repr__(self):
        return f"{type(self).__name__}({', '.join(map(repr, self._args()))})"

    def __str__(self):
        return render(self)

    # arithmetic builds simplified trees; parse() builds raw ones
    def __add__(self, other):
        return add(self, as_expr(other))

    def __radd__(self, other):
        return add(as_expr(other), self)

    def __sub__(self, other):
        return sub(self, as_expr(other))

    def __rsub__(self, other):
        return sub(as_expr(other), self)

    def __mul__(self, other):
        return mul(self, as_expr(other))

    def __rmul__(self, other):
        return mul(as_expr(other), self)

    def __truediv__(self, other):
        return div(self, as_expr(other))

    def __rtruediv__(self, other):
        return div(as_expr(other), self)

    def __pow__(self, k):
        return power(self, k)

    def __neg__(self):
        return neg(self)

    def __pos__(self):
        return self


class Const(Expr):
    __slots__ = ("value",)

    def __new__(cls, value):
        value = float(value)
        if not math.isfinite(value) or value < 0:
            raise ValueError(f"Const holds finite non-negative values, got {value!r}; use const()")
        return super().__new__(cls, value + 0.0)

    def _init(self, value):
        self.value = value

    def _args(self):
        return (self.value,)


class Symbol(Expr):
    __slots__ = ("name",)

    def _init(self, name):
        self.name = name

    def _args(self):
        return (self.name,)


class Neg(Expr):
    __slots__ = ("arg",)
    prec = PREC_NEG

    def _init(self, arg):
        self.arg = arg

    @property
    def children(self):
        return (self.arg,)


class _Binary(Expr):
    __slots__ = ("left", "right")
    symbol = "?"

    def _init(self, left, right):
        self.left = left
        self.right = right

    @property
    def children(self):
        return (self.left, self.right)


class Add(_Binary):
    __slots__ = ()
    prec = PREC_ADD
    symbol = " + "


class Sub(_Binary):
    __slots__ = ()
    prec = PREC_ADD
    symbol = " - "


class Mul(_Binary):
    __slots__ = ()
    prec = PREC_MUL
    symbol = "*"


class Div(_Binary):
    __slots__ = ()
    prec = PREC_MUL
    symbol = "/"


class Pow(Expr):
    """``base ^ exponent`` with an integral exponent."""

    __slots__ = ("base", "exponent")
    prec = PREC_POW

    def __new__(cls, base, exponent):
        if int(exponent) != exponent:
            raise ValueError("Pow takes an integral exponent; use power()")
        return super().__new__(cls, base, int(exponent))

    def _init(self, base, exponent):
        self.base = base
        self.exponent = exponent

    @property
    def children(self):
        return (self.base,)

    def _args(self):
        return (self.base, self.exponent)


class Function(Expr):
    __slots__ = ("arg",)
    name = "?"

    def _init(self, arg):
        self.arg = arg

    @property
    def children(self):
        return (self.arg,)


class Ln(Function):
    __slots__ = ()
    name = "ln"


class Exp(Function):
    __slots__ = ()
    name = "exp"


class Sqrt(Function):
    __slots__ = ()
    name = "sqrt"


class Sin(Function):
    __slots__ = ()
    name = "sin"


class Cos(Function):
    __slots__ = ()
    name = "cos"


FUNCTIONS = {cls.name: cls for cls in (Ln, Exp, Sqrt, Sin, Cos)}

ZERO = Const(0.0)
ONE = Const(1.0)
TWO = Const(2.0)


def const(value) -> Expr:
    """Constant node; negative values become ``Neg(Const(|v|))``."""
    value = float(value)
    if value < 0:
        return Neg(Const(-value))
    return Const(value)


def as_expr(value) -> Expr:
    if isinstance(value, Expr):
        return value
    if isinstance(value, (int, float, np.integer, np.floating)):
        return const(value)
    raise TypeError(f"cannot convert {type(value).__name__} to Expr")


def _const_value(e):
    """Numeric value of a constant subtree (Const or negated Const), else None."""
    if isinstance(e, Const):
        return e.value
    if isinstance(e, Neg) and isinstance(e.arg, Const):
        return -e.arg.value
    return None


# ---------------------------------------------------------------- smart constructors

def neg(a):
    v = _const_value(a)
    if v is not None:
        return const(-v)
    if isinstance(a, Neg):
        return a.arg
    if isinstance(a, Mul) and _const_value(a.left) is not None:
        return mul(const(-_const_value(a.left)), a.right)
    return Neg(a)


def add(a, b):
    va, vb = _const_value(a), _const_value(b)
    if va is not None and vb is not None:
        return const(va + vb)
    if va == 0:
        return b
    if vb == 0:
        return a
    if isinstance(b, Neg):
        return sub(a, b.arg)
    return Add(a, b)


def sub(a, b):
    va, vb = _const_value(a), _const_value(b)
    if va is not None and vb is not None:
        return const(va - vb)
    if vb == 0:
        return a
    if va == 0:
        return neg(b)
    if a is b:
        return ZERO
    if isinstance(b, Neg):
        return add(a, b.arg)
    return Sub(a, b)


def mul(a, b):
    va, vb = _const_value(a), _const_value(b)
    if va is not None and vb is not None:
        return const(va * vb)
    if va == 0 or vb == 0:
        return ZERO
    if va == 1:
        return b
    if vb == 1:
        return a
    if va == -1:
        return neg(b)
    if vb == -1:
        return neg(a)
    if isinstance(a, Neg) and va is None:
        return neg(mul(a.arg, b))
    if isinstance(b, Neg) and vb is None:
        return neg(mul(a, b.arg))
    if vb is not None:
        a, b, va, vb = b, a, vb, va
    if va is not None and isinstance(b, Mul):
        inner = _const_value(b.left)
        if inner is not None:
            return mul(const(va * inner), b.right)
    if a is b:
        return Pow(a, 2)
    return Mul(a, b)


def div(a, b):
    va, vb = _const_value(a), _const_value(b)
    if vb is not None and vb != 0:
        if va is not None:
            return const(va / vb)
        if vb == 1:
            return a
        if vb == -1:
            return neg(a)
    if va == 0:
        return ZERO
    if isinstance(a, Neg):
        return neg(div(a.arg, b))
    if isinstance(b, Neg):
        return neg(div(a, b.arg))
    return Div(a, b)


def power(base, k) -> Expr:
    """``base^k`` for a numeric ``k``; non-integral ``k`` becomes exp(k*ln(base))."""
    base = as_expr(base)
    k = float(_const_value(k) if isinstance(k, Expr) else k)
    if k == int(k):
        k = int(k)
        if k == 0:
            return ONE
        if k == 1:
            return base
        vb = _const_value(base)
        if vb is not None and (vb != 0 or k > 0):
            folded = vb ** k
            if math.isfinite(folded):
                return const(folded)
        if isinstance(base, Pow):
            return Pow(base.base, base.exponent * k)
        return Pow(base, k)
    return func("exp", mul(const(k), func("ln", base)))


def _fold_function(name, v):
    try:
        if name == "ln":
            return math.log(v) if v > 0 else None
        if name == "sqrt":
            return math.sqrt(v) if v > 0 else None
        out = {"exp": math.exp, "sin": math.sin, "cos": math.cos}[name](v)
    except OverflowError:
        return None
    return out if math.isfinite(out) else None


def func(name, arg) -> Expr:
    va = _const_value(arg)
    if va is not None:
        folded = _fold_function(name, va)
        if folded is not None and (folded == int(folded) or name in ("sin", "cos", "exp")):
            # keep ln(2), sqrt(2) symbolic: they render more readably
            return const(folded)
    return FUNCTIONS[name](arg)


# ---------------------------------------------------------------- parsing

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<id>[A-Za-z_][A-Za-z_0-9]*)|(?P<op>[-+*/^()]))"
)


def _tokenize(text):
    tokens = []
    pos = 0
    n = len(text)
    while pos < n:
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if m is None:
            col = pos + 1 + (len(text[pos:]) - len(text[pos:].lstrip()))
            raise ParseError(f"unexpected character {text[col - 1]!r}", col)
        kind = m.lastgroup
        tokens.append((kind, m.group(kind), m.start(kind) + 1))
        pos = m.end()
    tokens.append(("end", "", n + 1))
    return tokens


class _Parser:
    def __init__(self, text, coords, defs):
        self.tokens = _tokenize(text)
        self.i = 0
        self.coords = set(coords)
        self.defs = defs or {}

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value):
        kind, text, pos = self.take()
        if text != value or kind != "op":
            found = "end of input" if kind == "end" else repr(text)
            raise ParseError(f"expected {value!r}, found {found}", pos)

    def parse(self):
        e = self.expr()
        kind, text, pos = self.peek()
        if kind != "end":
            raise ParseError(f"unexpected token {text!r}", pos)
        return e

    def expr(self):
        e = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            rhs = self.term()
            e = Add(e, rhs) if op == "+" else Sub(e, rhs)
        return e

    def term(self):
        e = self.unary()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            rhs = self.unary()
            e = Mul(e, rhs) if op == "*" else Div(e, rhs)
        return e

    def unary(self):
        if self.peek()[:2] == ("op", "-"):
            self.take()
            return Neg(self.unary())
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek()[:2] == ("op", "^"):
            self.take()
            pos = self.peek()[2]
            k = self.exponent()
            if free_symbols(k):
                raise ParseError("exponent must be constant", pos)
            try:
                kval = eval_expr(k, {})
            except DomainError:
                raise ParseError("exponent is undefined", pos) from None
            if kval == int(kval):
                return Pow(base, int(kval))
            return Exp(Mul(const(kval), Ln(base)))
        return base

    def exponent(self):
        if self.peek()[:2] == ("op", "-"):
            self.take()
            return Neg(self.exponent())
        return self.power()

    def atom(self):
        kind, text, pos = self.take()
        if kind == "num":
            return Const(float(text))
        if kind == "id":
            if text in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return FUNCTIONS[text](arg)
            if text in self.coords:
                return Symbol(text)
            if text in self.defs:
                return self.defs[text]
            raise UnknownIdentifierError(f"unknown identifier {text!r}", pos)
        if kind == "op" and text == "(":
            e = self.expr()
            self.expect(")")
            return e
        found = "end of input" if kind == "end" else repr(text)
        raise ParseError(f"unexpected {found}", pos)


def parse(text: str, coords: Sequence[str] = ("x", "y", "z"), defs: Mapping[str, Expr] | None = None) -> Expr:
    """Parse ``text`` into a raw (unsimplified) expression tree.

    ``defs`` maps extra names to already-built expressions; they are inlined.
    """
    if not text or not text.strip():
        raise ParseError("empty expression", 1)
    return _Parser(text, coords, defs).parse()


# ---------------------------------------------------------------- rendering

def _fmt_number(v):
    if v.is_integer() and abs(v) < 1e15:
        return str(int(v))
    return repr(v)


def render(e: Expr) -> str:
    """Infix text that re-parses to a structurally identical tree."""
    if isinstance(e, Const):
        return _fmt_number(e.value)
    if isinstance(e, Symbol):
        return e.name
    if isinstance(e, Neg):
        inner = render(e.arg)
        if e.arg.prec < PREC_NEG:
            inner = f"({inner})"
        return "-" + inner
    if isinstance(e, _Binary):
        left, right = render(e.left), render(e.right)
        if e.left.prec < e.prec:
            left = f"({left})"
        if e.right.prec <= e.prec:
            right = f"({right})"
        return left + e.symbol + right
    if isinstance(e, Pow):
        base = render(e.base)
        if e.base.prec <= PREC_POW:
            base = f"({base})"
        return f"{base}^{e.exponent}"
    if isinstance(e, Function):
        return f"{e.name}({render(e.arg)})"
    raise TypeError(f"not an expression: {e!r}")


def _short(e, limit=120):
    text = render(e)
    return text if len(text) <= limit else text[: limit - 3] + "..."


# ---------------------------------------------------------------- traversal helpers

def _postorder(roots: Iterable[Expr]):
    """Unique nodes reachable from ``roots``, children before parents."""
    seen = set()
    order = []
    for root in roots:
        if id(root) in seen:
            continue
        stack = [(root, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for child in reversed(node.children):
                if id(child) not in seen:
                    stack.append((child, False))
    return order


def free_symbols(e: Expr) -> set:
    return {n.name for n in _postorder([e]) if isinstance(n, Symbol)}


def _rebuild(node, kids):
    if isinstance(node, Neg):
        return neg(kids[0])
    if isinstance(node, Add):
        return add(*kids)
    if isinstance(node, Sub):
        return sub(*kids)
    if isinstance(node, Mul):
        return mul(*kids)
    if isinstance(node, Div):
        return div(*kids)
    if isinstance(node, Pow):
        return power(kids[0], node.exponent)
    if isinstance(node, Function):
        return func(node.name, kids[0])
    return node


def simplify(e: Expr) -> Expr:
    """Constant folding and identity elimination (0+e, 1*e, 0*e, e^1, --e)."""
    done = {}
    for node in _postorder([e]):
        kids = [done[id(c)] for c in node.children]
        done[id(node)] = _rebuild(node, kids)
    return done[id(e)]


def substitute(e: Expr, mapping: Mapping[str, Expr]) -> Expr:
    done = {}
    for node in _postorder([e]):
        if isinstance(node, Symbol) and node.name in mapping:
            done[id(node)] = as_expr(mapping[node.name])
            continue
        done[id(node)] = _rebuild(node, [done[id(c)] for c in node.children])
    return done[id(e)]


# ---------------------------------------------------------------- differentiation

_DIFF_CACHE: dict = {}


def _diff_node(node, c, d):
    """Derivative of ``node`` given derivatives ``d`` of its children."""
    if isinstance(node, Const):
        return ZERO
    if isinstance(node, Symbol):
        return ONE if node.name == c else ZERO
    if isinstance(node, Neg):
        return neg(d[0])
    if isinstance(node, Add):
        return add(d[0], d[1])
    if isinstance(node, Sub):
        return sub(d[0], d[1])
    if isinstance(node, Mul):
        return add(mul(d[0], node.right), mul(node.left, d[1]))
    if isinstance(node, Div):
        a, b = node.left, node.right
        return sub(div(d[0], b), div(mul(a, d[1]), power(b, 2)))
    if isinstance(node, Pow):
        if d[0] is ZERO:
            return ZERO
        n = node.exponent
        return mul(mul(const(n), power(node.base, n - 1)), d[0])
    if d[0] is ZERO:
        return ZERO
    a = node.arg
    if isinstance(node, Ln):
        return div(d[0], a)
    if isinstance(node, Exp):
        return mul(node, d[0])
    if isinstance(node, Sqrt):
        return div(d[0], mul(TWO, node))
    if isinstance(node, Sin):
        return mul(func("cos", a), d[0])
    if isinstance(node, Cos):
        return neg(mul(func("sin", a), d[0]))
    raise TypeError(f"cannot differentiate {node!r}")


def diff(e: Expr, coord: str) -> Expr:
    """Exact partial derivative with respect to the coordinate ``coord``."""
    for node in _postorder([e]):
        key = (node, coord)
        if key in _DIFF_CACHE:
            continue
        d = [_DIFF_CACHE[(child, coord)] for child in node.children]
        _DIFF_CACHE[key] = _diff_node(node, coord, d)
    return _DIFF_CACHE[(e, coord)]


# ---------------------------------------------------------------- evaluation

class Compiled:
    """Vectorised evaluator for a fixed array of expressions.

    ``Compiled(exprs, coords)(points)`` evaluates every expression at each row
    of ``points`` (shape ``(n, len(coords))``) and returns an array of shape
    ``(n,) + exprs.shape``. Shared subtrees are evaluated once.
    """

    def __init__(self, exprs, coords: Sequence[str]):
        arr = np.empty(np.shape(exprs), dtype=object)
        arr[...] = exprs if isinstance(exprs, np.ndarray) else _as_object_array(exprs, np.shape(exprs))
        self.shape = arr.shape
        self.coords = tuple(coords)
        flat = [as_expr(x) for x in arr.ravel()]
        self.order = _postorder(flat)
        index = {id(n): i for i, n in enumerate(self.order)}
        self.roots = [index[id(x)] for x in flat]
        self.plan = []
        for n in self.order:
            kids = tuple(index[id(c)] for c in n.children)
            if isinstance(n, Symbol) and n.name not in self.coords:
                raise ValueError(f"symbol {n.name!r} is not a chart coordinate {self.coords}")
            self.plan.append((n, kids))

    def __call__(self, points) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        npts = pts.shape[0]
        coord_index = {c: i for i, c in enumerate(self.coords)}
        vals = [None] * len(self.plan)
        with np.errstate(all="ignore"):
            for i, (n, kids) in enumerate(self.plan):
                if isinstance(n, Const):
                    v = np.full(npts, n.value)
                elif isinstance(n, Symbol):
                    v = pts[:, coord_index[n.name]]
                else:
                    v = _apply(n, [vals[k] for k in kids])
                    bad = ~np.isfinite(v)
                    if bad.any():
                        raise DomainError(
                            f"{_domain_reason(n, [vals[k] for k in kids])} in {_short(n)}",
                            n, np.flatnonzero(bad))
                vals[i] = v
        out = np.empty((npts, len(self.roots)))
        for j, r in enumerate(self.roots):
            out[:, j] = vals[r]
        return out.reshape((npts,) + self.shape)


def _as_object_array(exprs, shape):
    arr = np.empty(shape, dtype=object)
    if shape == ():
        arr[()] = exprs
        return arr
    for idx in np.ndindex(*shape):
        item = exprs
        for i in idx:
            item = item[i]
        arr[idx] = item
    return arr


def _apply(n, a):
    if isinstance(n, Neg):
        return -a[0]
    if isinstance(n, Add):
        return a[0] + a[1]
    if isinstance(n, Sub):
        return a[0] - a[1]
    if isinstance(n, Mul):
        return a[0] * a[1]
    if isinstance(n, Div):
        num, den = a
        return np.where(den == 0, np.nan, num / np.where(den == 0, 1.0, den))
    if isinstance(n, Pow):
        base = a[0]
        if n.exponent < 0:
            base = np.where(base == 0, np.nan, base)
        return base ** float(n.exponent) if n.exponent > 3 or n.exponent < -3 else _small_pow(base, n.exponent)
    x = a[0]
    if isinstance(n, Ln):
        return np.log(np.where(x > 0, x, np.nan))
    if isinstance(n, Sqrt):
        return np.sqrt(np.where(x > 0, x, np.nan))
    if isinstance(n, Exp):
        return np.exp(x)
    if isinstance(n, Sin):
        return np.sin(x)
    if isinstance(n, Cos):
        return np.cos(x)
    raise TypeError(f"cannot evaluate {n!r}")


def _small_pow(base, k):
    # repeated multiplication keeps low powers exact to the last bit
    if k < 0:
        return 1.0 / _small_pow(base, -k)
    if k == 0:
        return np.ones_like(base)
    out = base
    for _ in range(k - 1):
        out = out * base
    return out


def _domain_reason(n, args):
    if isinstance(n, Div) and np.any(args[1] == 0):
        return "division by zero"
    if isinstance(n, Pow) and n.exponent < 0 and np.any(args[0] == 0):
        return "negative power of zero"
    if isinstance(n, Ln) and np.any(args[0] <= 0):
        return "ln of non-positive argument"
    if isinstance(n, Sqrt) and np.any(args[0] <= 0):
        return "sqrt of non-positive argument"
    return "non-finite value"


def compile_exprs(exprs, coords: Sequence[str]) -> Compiled:
    return Compiled(exprs, coords)


def eval_expr(e: Expr, point, coords: Sequence[str] = ("x", "y", "z")) -> float:
    """Evaluate at one point given as a mapping or a sequence ordered like ``coords``."""
    if isinstance(point, Mapping):
        coords = tuple(point)
        values = [point[c] for c in coords]
    else:
        values = list(point)
    if not all(math.isfinite(v) for v in values):
        raise ValueError("point components must be finite")
    return float(Compiled(e, coords)([values] if values else np.zeros((1, 0)))[0])
