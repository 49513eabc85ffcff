"""A small expression language for tensor components and field parameters.

Grammar (EBNF)::

    expr    = term , { ( "+" | "-" ) , term } ;
    term    = factor , { ( "*" | "/" ) , factor } ;
    factor  = ( "+" | "-" ) , factor | power ;
    power   = atom , [ ( "^" | "**" ) , factor ] ;
    atom    = number | name | name , "(" , [ expr , { "," , expr } ] , ")"
            | "(" , expr , ")" ;
    number  = digits , [ "." , [ digits ] ] , [ exponent ] , [ unit ]
            | "." , digits , [ exponent ] , [ unit ] ;
    unit    = "i" | "j" | "k" ;
    name    = letter , { letter | digit | "_" } ;

``-x^2`` is ``-(x^2)`` and ``^`` is right associative. Purely numeric
subtrees are folded while parsing, so ``1+2i`` is a single complex constant.
Names resolve to chart coordinates, named parameters, or the constants
``pi`` and ``e``.

Values are numpy arrays: float for real, complex for complex, and
:class:`QArray` for quaternions.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping

import numpy as np

from . import _special
from .scalars import Scalar, WIDTH, add as s_add, div as s_div, hamilton, mul as s_mul, norm as s_norm, sub as s_sub

CONSTANTS = {"pi": math.pi, "e": math.e}
INVERSE_VAR = "_u"


class ExprError(ValueError):
    """Raised for syntax errors, unknown names and bad evaluations."""


# ---------------------------------------------------------------- AST


@dataclass(frozen=True)
class Num:
    value: Scalar


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Neg:
    arg: "Expr"


@dataclass(frozen=True)
class Bin:
    op: str  # one of + - * / ^
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Call:
    name: str
    args: tuple["Expr", ...]


Expr = Num | Var | Neg | Bin | Call

ZERO = Num(Scalar.real(0.0))
ONE = Num(Scalar.real(1.0))


def num(x) -> Num:
    return Num(Scalar.from_python(x))


# ------------------------------------------------------- constructors
# These fold constants and drop neutral elements; the parser uses them too.


def _is_real_num(e: Expr, value: float | None = None) -> bool:
    if not (isinstance(e, Num) and e.value.tag == "real"):
        return False
    return value is None or e.value.c[0] == value


def neg(a: Expr) -> Expr:
    if isinstance(a, Num):
        return Num(-a.value)
    return Neg(a)


def add(a: Expr, b: Expr) -> Expr:
    if isinstance(a, Num) and isinstance(b, Num):
        return Num(s_add(a.value, b.value))
    return Bin("+", a, b)


def sub(a: Expr, b: Expr) -> Expr:
    if isinstance(a, Num) and isinstance(b, Num):
        return Num(s_sub(a.value, b.value))
    return Bin("-", a, b)


def mul(a: Expr, b: Expr) -> Expr:
    if isinstance(a, Num) and isinstance(b, Num):
        return Num(s_mul(a.value, b.value))
    return Bin("*", a, b)


def div(a: Expr, b: Expr) -> Expr:
    if isinstance(a, Num) and isinstance(b, Num) and not b.value.is_zero():
        return Num(s_div(a.value, b.value))
    return Bin("/", a, b)


def power(a: Expr, b: Expr) -> Expr:
    if _is_real_num(a) and _is_real_num(b):
        x, y = a.value.c[0], b.value.c[0]
        if (x > 0 or (x == 0 and y > 0) or (x < 0 and float(y).is_integer())):
            return Num(Scalar.real(x**y))
    return Bin("^", a, b)


# Simplifying variants used by the derivative code. They are not used by the
# parser, so parsed trees keep their shape.


def s_plus(a: Expr, b: Expr) -> Expr:
    if _is_real_num(a, 0.0):
        return b
    if _is_real_num(b, 0.0):
        return a
    return add(a, b)


def s_minus(a: Expr, b: Expr) -> Expr:
    if _is_real_num(b, 0.0):
        return a
    if _is_real_num(a, 0.0):
        return neg(b)
    return sub(a, b)


def s_times(a: Expr, b: Expr) -> Expr:
    if _is_real_num(a, 0.0) or _is_real_num(b, 0.0):
        return ZERO
    if _is_real_num(a, 1.0):
        return b
    if _is_real_num(b, 1.0):
        return a
    return mul(a, b)


def s_over(a: Expr, b: Expr) -> Expr:
    if _is_real_num(a, 0.0):
        return ZERO
    if _is_real_num(b, 1.0):
        return a
    return div(a, b)


def s_pow(a: Expr, b: Expr) -> Expr:
    if _is_real_num(b, 1.0):
        return a
    if _is_real_num(b, 0.0):
        return ONE
    return power(a, b)


# ------------------------------------------------------------ parsing

_TOKEN = re.compile(
    r"""\s*(?:
        (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?(?:[ijk](?![A-Za-z0-9_]))?)
      | (?P<name>[A-Za-z_][A-Za-z0-9_]*)
      | (?P<op>\*\*|[-+*/^(),])
    )""",
    re.VERBOSE,
)


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    out = []
    pos = 0
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ExprError(f"unexpected character at {pos} in {text!r}")
        kind = m.lastgroup
        out.append((kind, m.group(kind), m.start(kind)))
        pos = m.end()
    out.append(("end", "", len(text)))
    return out


class _Parser:
    def __init__(self, text: str) -> None:
        self.text = text
        self.toks = _tokenize(text)
        self.i = 0

    def peek(self) -> tuple[str, str, int]:
        return self.toks[self.i]

    def take(self) -> tuple[str, str, int]:
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def expect(self, value: str) -> None:
        kind, val, pos = self.take()
        if val != value or kind != "op":
            raise ExprError(f"expected {value!r} at {pos} in {self.text!r}")

    def parse(self) -> Expr:
        e = self.expr()
        kind, val, pos = self.peek()
        if kind != "end":
            raise ExprError(f"unexpected {val!r} at {pos} in {self.text!r}")
        return e

    def expr(self) -> Expr:
        e = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            rhs = self.term()
            e = add(e, rhs) if op == "+" else sub(e, rhs)
        return e

    def term(self) -> Expr:
        e = self.factor()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            rhs = self.factor()
            e = mul(e, rhs) if op == "*" else div(e, rhs)
        return e

    def factor(self) -> Expr:
        kind, val, _ = self.peek()
        if kind == "op" and val in ("+", "-"):
            self.take()
            inner = self.factor()
            return neg(inner) if val == "-" else inner
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        kind, val, _ = self.peek()
        if kind == "op" and val in ("^", "**"):
            self.take()
            return power(base, self.factor())
        return base

    def atom(self) -> Expr:
        kind, val, pos = self.take()
        if kind == "num":
            unit = val[-1] if val[-1] in "ijk" else ""
            x = float(val[:-1] if unit else val)
            comps = [0.0, 0.0, 0.0, 0.0]
            comps[" ijk".index(unit) if unit else 0] = x
            if unit in ("j", "k"):
                return Num(Scalar("quaternion", tuple(comps)))
            if unit == "i":
                return Num(Scalar("complex", tuple(comps[:2])))
            return Num(Scalar.real(x))
        if kind == "name":
            if self.peek()[1] == "(" and self.peek()[0] == "op":
                self.take()
                args = []
                if not (self.peek()[1] == ")" and self.peek()[0] == "op"):
                    args.append(self.expr())
                    while self.peek()[1] == "," and self.peek()[0] == "op":
                        self.take()
                        args.append(self.expr())
                self.expect(")")
                _check_call(val, len(args), pos, self.text)
                return Call(val, tuple(args))
            return Var(val)
        if kind == "op" and val == "(":
            e = self.expr()
            self.expect(")")
            return e
        raise ExprError(f"unexpected {val or 'end of input'!r} at {pos} in {self.text!r}")


def parse(text) -> Expr:
    """Parse a string (or wrap a number) into an expression tree."""
    if isinstance(text, (Num, Var, Neg, Bin, Call)):
        return text
    if isinstance(text, (int, float, complex, Scalar)) and not isinstance(text, bool):
        return Num(Scalar.from_python(text))
    if not isinstance(text, str):
        raise ExprError(f"cannot parse {type(text).__name__} as an expression")
    return _Parser(text).parse()


# ----------------------------------------------------------- printing

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "^": 4}


def _prec(e: Expr) -> int:
    if isinstance(e, Num):
        if e.value.tag != "real":
            return 1
        return 3 if math.copysign(1.0, e.value.c[0]) < 0 else 5
    if isinstance(e, Neg):
        return 3
    if isinstance(e, Bin):
        return _PREC[e.op]
    return 5


def _num_text(s: Scalar) -> str:
    if not all(math.isfinite(x) for x in s.c):
        raise ExprError("non-finite constants cannot be printed")
    if s.tag == "real":
        return repr(s.c[0])
    parts = []
    for value, unit in zip(s.c, ("", "i", "j", "k")):
        txt = repr(value) + unit
        if parts and not txt.startswith("-"):
            txt = "+" + txt
        parts.append(txt)
    return "".join(parts)


def to_string(e: Expr) -> str:
    """Canonical text that parses back to the same tree."""
    if isinstance(e, Num):
        return _num_text(e.value)
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Call):
        return f"{e.name}({', '.join(to_string(a) for a in e.args)})"
    if isinstance(e, Neg):
        inner = to_string(e.arg)
        if _prec(e.arg) < 3 or isinstance(e.arg, Num):
            inner = f"({inner})"
        return "-" + inner
    p = _PREC[e.op]
    left, right = to_string(e.left), to_string(e.right)
    if e.op == "^":
        if _prec(e.left) < 5:
            left = f"({left})"
        if _prec(e.right) < 3:
            right = f"({right})"
    else:
        if _prec(e.left) < p:
            left = f"({left})"
        if _prec(e.right) <= p or (isinstance(e.right, Num) and _prec(e.right) < 5):
            right = f"({right})"
    return f"{left}{e.op}{right}"


# ------------------------------------------------------ tree utilities


def free_names(e: Expr) -> set[str]:
    if isinstance(e, Var):
        return set() if e.name in CONSTANTS else {e.name}
    if isinstance(e, Num):
        return set()
    if isinstance(e, Neg):
        return free_names(e.arg)
    if isinstance(e, Bin):
        return free_names(e.left) | free_names(e.right)
    if e.name == "inverse":
        inner = free_names(e.args[0]) - {INVERSE_VAR}
        return inner.union(*(free_names(a) for a in e.args[1:]))
    return set().union(*(free_names(a) for a in e.args)) if e.args else set()


def substitute(e: Expr, mapping: Mapping[str, Expr]) -> Expr:
    """Replace names by expressions (no folding beyond the constructors)."""
    if isinstance(e, Var):
        return mapping.get(e.name, e)
    if isinstance(e, Num):
        return e
    if isinstance(e, Neg):
        return neg(substitute(e.arg, mapping))
    if isinstance(e, Bin):
        return _REBUILD[e.op](substitute(e.left, mapping), substitute(e.right, mapping))
    if e.name == "inverse":
        inner_map = {k: v for k, v in mapping.items() if k != INVERSE_VAR}
        return Call(e.name, (substitute(e.args[0], inner_map),) + tuple(substitute(a, mapping) for a in e.args[1:]))
    return Call(e.name, tuple(substitute(a, mapping) for a in e.args))


_REBUILD = {"+": add, "-": sub, "*": mul, "/": div, "^": power}


def inline_params(e: Expr, params: Mapping[str, Expr]) -> Expr:
    """Expand parameter references recursively (params must be acyclic)."""
    order = param_order(params)
    resolved: dict[str, Expr] = {}
    for name in order:
        resolved[name] = substitute(params[name], resolved)
    return substitute(e, resolved)


def param_order(params: Mapping[str, Expr]) -> list[str]:
    """Topological order of parameters; raises on cycles."""
    order: list[str] = []
    state: dict[str, int] = {}

    def visit(name: str, trail: tuple[str, ...]) -> None:
        if state.get(name) == 2:
            return
        if state.get(name) == 1:
            raise ExprError(f"parameter cycle: {' -> '.join(trail + (name,))}")
        state[name] = 1
        for dep in sorted(free_names(params[name])):
            if dep in params:
                visit(dep, trail + (name,))
        state[name] = 2
        order.append(name)

    for name in params:
        visit(name, ())
    return order


# ------------------------------------------------------------ builtins


@dataclass(frozen=True)
class _Builtin:
    arity: int
    fn: Callable
    complex_ok: bool = False


def _positive(x):
    x = _as_real(x, "positive")
    if np.any(~(x > 0)):
        raise ExprError("value required to be positive is not")
    return x


def _curv_cos(r, k):
    r = np.asarray(r, dtype=float)
    k = np.asarray(k, dtype=float)
    root = np.sqrt(np.abs(k))
    return np.where(k > 0, np.cos(r * root), np.where(k < 0, np.cosh(r * root), 1.0 + 0.0 * r))


_BUILTINS: dict[str, _Builtin] = {
    "exp": _Builtin(1, np.exp, True),
    "log": _Builtin(1, np.log, True),
    "sin": _Builtin(1, np.sin, True),
    "cos": _Builtin(1, np.cos, True),
    "tan": _Builtin(1, np.tan, True),
    "sinh": _Builtin(1, np.sinh, True),
    "cosh": _Builtin(1, np.cosh, True),
    "tanh": _Builtin(1, np.tanh, True),
    "sqrt": _Builtin(1, np.sqrt, True),
    "gauss": _Builtin(3, _special.gaussian),
    "sk": _Builtin(2, _special.curvature_profile),
    "ck": _Builtin(2, _curv_cos),
    "bump": _Builtin(3, _special.bump),
    "positive": _Builtin(1, _positive),
    "inverse": _Builtin(4, None),
}

FUNCTIONS = tuple(sorted(_BUILTINS))


def _check_call(name: str, nargs: int, pos: int, text: str) -> None:
    spec = _BUILTINS.get(name)
    if spec is None:
        raise ExprError(f"unknown function {name!r} at {pos} in {text!r}")
    if spec.arity != nargs:
        raise ExprError(f"{name} takes {spec.arity} argument(s), got {nargs}")


# ------------------------------------------------------------- values


class QArray:
    """Array of quaternions stored as a float array of shape (..., 4)."""

    __slots__ = ("q",)

    def __init__(self, q) -> None:
        self.q = np.asarray(q, dtype=float)

    @classmethod
    def lift(cls, x) -> QArray:
        if isinstance(x, QArray):
            return x
        x = np.asarray(x)
        out = np.zeros(x.shape + (4,))
        if np.iscomplexobj(x):
            out[..., 0] = x.real
            out[..., 1] = x.imag
        else:
            out[..., 0] = x
        return cls(out)

    def __add__(self, other):
        o = QArray.lift(other)
        return QArray(self.q + o.q)

    __radd__ = __add__

    def __sub__(self, other):
        return QArray(self.q - QArray.lift(other).q)

    def __rsub__(self, other):
        return QArray(QArray.lift(other).q - self.q)

    def __mul__(self, other):
        return QArray(hamilton(self.q, QArray.lift(other).q))

    def __rmul__(self, other):
        return QArray(hamilton(QArray.lift(other).q, self.q))

    def __neg__(self):
        return QArray(-self.q)

    def inverse(self) -> QArray:
        n2 = np.sum(self.q * self.q, axis=-1, keepdims=True)
        cj = self.q * np.array([1.0, -1.0, -1.0, -1.0])
        with np.errstate(divide="ignore", invalid="ignore"):
            return QArray(cj / n2)

    def __truediv__(self, other):
        return self * QArray.lift(other).inverse()

    def __rtruediv__(self, other):
        return QArray.lift(other) * self.inverse()


def _as_real(x, what: str) -> np.ndarray:
    if isinstance(x, QArray) or np.iscomplexobj(x):
        raise ExprError(f"{what} needs real arguments")
    return np.asarray(x, dtype=float)


def value_tag(x) -> str:
    if isinstance(x, QArray):
        return "quaternion"
    return "complex" if np.iscomplexobj(x) else "real"


def _scalar_value(s: Scalar):
    if s.tag == "real":
        return np.float64(s.c[0])
    if s.tag == "complex":
        return np.complex128(complex(*s.c))
    return QArray(np.array(s.c))


def _pow(a, b):
    if isinstance(b, QArray):
        raise ExprError("quaternion exponents are not supported")
    if isinstance(a, QArray):
        if np.iscomplexobj(b):
            raise ExprError("quaternion powers need an integer exponent")
        b = np.asarray(b, dtype=float)
        if b.ndim or not float(b).is_integer():
            raise ExprError("quaternion powers need a constant integer exponent")
        n = int(b)
        base = a if n >= 0 else a.inverse()
        out = QArray.lift(np.ones(a.q.shape[:-1]))
        for _ in range(abs(n)):
            out = out * base
        return out
    if not np.iscomplexobj(a) and not np.iscomplexobj(b):
        bb = np.asarray(b, dtype=float)
        if bb.ndim == 0 and float(bb).is_integer() and abs(bb) <= 64:
            n = int(bb)
            aa = np.asarray(a, dtype=float)
            if n >= 0:
                return _int_power(aa, n)
            return 1.0 / _int_power(aa, -n)
        return np.power(np.asarray(a, dtype=float), bb)
    return np.power(a, b)


def _int_power(a: np.ndarray, n: int) -> np.ndarray:
    # repeated squaring keeps small integer powers exact for exact inputs
    result = np.ones_like(a)
    base = a
    while n:
        if n & 1:
            result = result * base
        n >>= 1
        if n:
            base = base * base
    return result


# ---------------------------------------------------------- evaluation


class Evaluator:
    """Evaluates expressions against coordinate arrays and named parameters.

    Parameters are evaluated lazily and cached for the lifetime of the
    evaluator, so one instance should serve one batch of points.
    """

    def __init__(self, coords: Mapping[str, np.ndarray], params: Mapping[str, Expr] | None = None) -> None:
        self.coords = coords
        self.params = params or {}
        self._cache: dict[str, object] = {}
        self._active: set[str] = set()

    def lookup(self, name: str):
        if name in self.coords:
            return self.coords[name]
        if name in self._cache:
            return self._cache[name]
        if name in self.params:
            if name in self._active:
                raise ExprError(f"parameter {name!r} depends on itself")
            self._active.add(name)
            try:
                val = self.eval(self.params[name])
            finally:
                self._active.discard(name)
            self._cache[name] = val
            return val
        if name in CONSTANTS:
            return np.float64(CONSTANTS[name])
        raise ExprError(f"unknown name {name!r}")

    def eval(self, e: Expr):
        with np.errstate(all="ignore"):
            return self._eval(e)

    def _eval(self, e: Expr):
        if isinstance(e, Num):
            return _scalar_value(e.value)
        if isinstance(e, Var):
            return self.lookup(e.name)
        if isinstance(e, Neg):
            return -self._eval(e.arg)
        if isinstance(e, Bin):
            a = self._eval(e.left)
            b = self._eval(e.right)
            if e.op == "^":
                return _pow(a, b)
            if isinstance(b, QArray) and not isinstance(a, QArray):
                a = QArray.lift(a)
            if e.op == "+":
                return a + b
            if e.op == "-":
                return a - b
            if e.op == "*":
                return a * b
            return a / b
        if e.name == "inverse":
            return self._inverse(e)
        spec = _BUILTINS[e.name]
        args = [self._eval(a) for a in e.args]
        if spec.complex_ok:
            if isinstance(args[0], QArray):
                raise ExprError(f"{e.name} is not defined for quaternion arguments")
            if e.name in ("log", "sqrt") and not np.iscomplexobj(args[0]):
                return spec.fn(np.asarray(args[0], dtype=float))
            return spec.fn(args[0])
        try:
            return spec.fn(*[_as_real(a, e.name) for a in args])
        except ValueError as exc:
            raise ExprError(str(exc)) from exc

    def _inverse(self, e: Call):
        """inverse(f(_u), target, lo, hi): solve f(_u) = target by bisection."""
        target = _as_real(self._eval(e.args[1]), "inverse")
        lo = _as_real(self._eval(e.args[2]), "inverse")
        hi = _as_real(self._eval(e.args[3]), "inverse")
        shape = np.broadcast_shapes(np.shape(target), np.shape(lo), np.shape(hi))
        a = np.broadcast_to(lo, shape).astype(float)
        b = np.broadcast_to(hi, shape).astype(float)
        t = np.broadcast_to(target, shape)

        def f(u):
            sub_eval = Evaluator({**self.coords, INVERSE_VAR: u}, self.params)
            return _as_real(sub_eval._eval(e.args[0]), "inverse") - t

        fa, fb = f(a), f(b)
        if np.any(fa * fb > 0):
            raise ExprError("inverse: target not bracketed by [lo, hi]")
        rising = fb >= fa
        for _ in range(200):
            mid = 0.5 * (a + b)
            fm = f(mid)
            go_right = (fm < 0) == rising
            a = np.where(go_right, mid, a)
            b = np.where(go_right, b, mid)
            if np.all(b - a <= 4 * np.finfo(float).eps * np.maximum(1.0, np.abs(mid))):
                break
        return 0.5 * (a + b)


def evaluate(e, coords: Mapping[str, np.ndarray] | None = None, params: Mapping[str, Expr] | None = None):
    return Evaluator(coords or {}, params).eval(parse(e))


def to_components(value, tag: str, n: int) -> np.ndarray:
    """Convert an evaluated value into an (n, width) float array for ``tag``.

    Values wider than ``tag`` are rejected rather than truncated.
    """
    vt = value_tag(value)
    order = ("real", "complex", "quaternion")
    if order.index(vt) > order.index(tag):
        raise ExprError(f"component evaluates to {vt} in a {tag} field")
    out = np.zeros((n, WIDTH[tag]))
    if isinstance(value, QArray):
        out[:] = np.broadcast_to(value.q, (n, 4))
    elif vt == "complex":
        v = np.broadcast_to(value, (n,))
        out[:, 0] = v.real
        out[:, 1] = v.imag
    else:
        out[:, 0] = np.broadcast_to(value, (n,))
    return out


# ---------------------------------------------------------- derivatives


def diff(e: Expr, var: str, params: Mapping[str, Expr] | None = None) -> Expr:
    """Symbolic derivative of ``e`` with respect to ``var``.

    Parameters are inlined first. ``bump`` has no symbolic derivative.
    """
    if params:
        e = inline_params(e, params)
    return _d(e, var)


def _d(e: Expr, v: str) -> Expr:
    if isinstance(e, Num):
        return ZERO
    if isinstance(e, Var):
        return ONE if e.name == v else ZERO
    if isinstance(e, Neg):
        d = _d(e.arg, v)
        return ZERO if _is_real_num(d, 0.0) else neg(d)
    if isinstance(e, Bin):
        a, b = e.left, e.right
        if e.op == "+":
            return s_plus(_d(a, v), _d(b, v))
        if e.op == "-":
            return s_minus(_d(a, v), _d(b, v))
        if e.op == "*":
            return s_plus(s_times(_d(a, v), b), s_times(a, _d(b, v)))
        if e.op == "/":
            if v not in free_names(b):
                return s_over(_d(a, v), b)
            num_ = s_minus(s_times(_d(a, v), b), s_times(a, _d(b, v)))
            return s_over(num_, s_pow(b, num(2.0)))
        da, db = _d(a, v), _d(b, v)
        if v not in free_names(b):
            if _is_real_num(da, 0.0):
                return ZERO
            return s_times(s_times(b, s_pow(a, s_minus(b, ONE))), da)
        if v not in free_names(a):
            return s_times(s_times(e, Call("log", (a,))), db)
        inner = s_plus(s_times(db, Call("log", (a,))), s_over(s_times(b, da), a))
        return s_times(e, inner)
    return _d_call(e, v)


def _d_call(e: Call, v: str) -> Expr:
    name, args = e.name, e.args
    if name == "inverse":
        f, target, lo, hi = args
        if v in free_names(lo) | free_names(hi):
            raise ExprError("inverse bounds must not depend on the variable")
        inner = diff(f, INVERSE_VAR)
        slope = substitute(inner, {INVERSE_VAR: e})
        return s_over(_d(target, v), slope)
    if name == "gauss":
        x, m, s = args
        z = s_over(s_minus(x, m), s)
        dz = _d(z, v)
        if _is_real_num(dz, 0.0) and _is_real_num(_d(s, v), 0.0):
            return ZERO
        # d/dv G = -G z dz/dv - G s'/s
        term = s_times(neg(s_times(e, z)), dz)
        ds = _d(s, v)
        return s_minus(term, s_times(e, s_over(ds, s)))
    if name in ("sk", "ck"):
        r, k = args
        if v in free_names(k):
            raise ExprError(f"{name}: curvature argument must not depend on the variable")
        dr = _d(r, v)
        if _is_real_num(dr, 0.0):
            return ZERO
        if name == "sk":
            return s_times(Call("ck", args), dr)
        return s_times(neg(s_times(k, Call("sk", args))), dr)
    if name == "bump":
        if not any(v in free_names(a) for a in args):
            return ZERO
        raise ExprError("bump has no symbolic derivative")
    (a,) = args
    da = _d(a, v)
    if _is_real_num(da, 0.0):
        return ZERO
    outer = {
        "exp": lambda: e,
        "log": lambda: s_over(ONE, a),
        "sin": lambda: Call("cos", (a,)),
        "cos": lambda: neg(Call("sin", (a,))),
        "tan": lambda: s_over(ONE, s_pow(Call("cos", (a,)), num(2.0))),
        "sinh": lambda: Call("cosh", (a,)),
        "cosh": lambda: Call("sinh", (a,)),
        "tanh": lambda: s_minus(ONE, s_pow(e, num(2.0))),
        "sqrt": lambda: s_over(ONE, s_times(num(2.0), e)),
        "positive": lambda: ONE,
    }[name]()
    return s_times(outer, da)


def names_in(exprs: Iterable[Expr]) -> set[str]:
    out: set[str] = set()
    for e in exprs:
        out |= free_names(e)
    return out


def is_constant(e: Expr) -> bool:
    return not free_names(e)


def constant_value(e: Expr) -> Scalar:
    """Value of a name-free expression as a Scalar."""
    if free_names(e):
        raise ExprError("expression is not constant")
    v = Evaluator({}).eval(e)
    if isinstance(v, QArray):
        return Scalar("quaternion", tuple(np.asarray(v.q).reshape(4)))
    if np.iscomplexobj(v):
        z = complex(v)
        return Scalar.complex(z.real, z.imag)
    return Scalar.real(float(v))


__all__ = [
    "Expr", "Num", "Var", "Neg", "Bin", "Call", "ExprError", "QArray", "Evaluator",
    "parse", "to_string", "evaluate", "diff", "substitute", "inline_params", "free_names",
    "param_order", "to_components", "value_tag", "constant_value", "is_constant", "num",
    "CONSTANTS", "FUNCTIONS", "INVERSE_VAR", "s_norm",
]
