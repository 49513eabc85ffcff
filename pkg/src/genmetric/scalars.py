"""Real, complex and quaternion scalars with a fixed promotion order.

A :class:`Scalar` carries a tag and its components in the order
(w, i, j, k). Arithmetic promotes both operands to the wider tag and never
demotes a result, so ``Scalar.complex(2, 0)`` stays complex.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

TAGS = ("real", "complex", "quaternion")
WIDTH = {"real": 1, "complex": 2, "quaternion": 4}
_RANK = {tag: n for n, tag in enumerate(TAGS)}


def wider(a: str, b: str) -> str:
    """Return the wider of two tags."""
    return a if _RANK[a] >= _RANK[b] else b


def check_tag(tag: str) -> str:
    if tag not in WIDTH:
        raise ValueError(f"unknown scalar tag {tag!r}; expected one of {TAGS}")
    return tag


@dataclass(frozen=True)
class Scalar:
    tag: str
    c: tuple[float, ...]

    def __post_init__(self) -> None:
        check_tag(self.tag)
        comps = tuple(float(x) for x in self.c)
        if len(comps) != WIDTH[self.tag]:
            raise ValueError(f"{self.tag} scalar needs {WIDTH[self.tag]} components, got {len(comps)}")
        object.__setattr__(self, "c", comps)

    @classmethod
    def real(cls, x: float) -> Scalar:
        return cls("real", (x,))

    @classmethod
    def complex(cls, re_: float, im: float = 0.0) -> Scalar:
        return cls("complex", (re_, im))

    @classmethod
    def quaternion(cls, w: float, i: float = 0.0, j: float = 0.0, k: float = 0.0) -> Scalar:
        return cls("quaternion", (w, i, j, k))

    @classmethod
    def from_python(cls, x) -> Scalar:
        """Wrap an int, float, complex or Scalar."""
        if isinstance(x, Scalar):
            return x
        if isinstance(x, (bool, np.bool_)):
            raise TypeError("booleans are not scalars")
        if isinstance(x, (int, float, np.integer, np.floating)):
            return cls.real(float(x))
        if isinstance(x, (complex, np.complexfloating)):
            return cls.complex(x.real, x.imag)
        raise TypeError(f"cannot convert {type(x).__name__} to Scalar")

    def promote(self, tag: str) -> Scalar:
        """Embed into a wider tag. Demotion is refused."""
        check_tag(tag)
        if _RANK[tag] < _RANK[self.tag]:
            raise ValueError(f"cannot demote {self.tag} to {tag}")
        return Scalar(tag, self.c + (0.0,) * (WIDTH[tag] - len(self.c)))

    def as_quaternion(self) -> np.ndarray:
        return np.array(self.promote("quaternion").c)

    def to_python(self):
        """Return float or complex where possible, else a 4-tuple."""
        if self.tag == "real":
            return self.c[0]
        if self.tag == "complex":
            return complex(self.c[0], self.c[1])
        return self.c

    def is_zero(self) -> bool:
        return all(x == 0.0 for x in self.c)

    def to_json(self) -> dict:
        return {"tag": self.tag, "c": list(self.c)}

    @classmethod
    def from_json(cls, obj: dict) -> Scalar:
        return cls(obj["tag"], tuple(obj["c"]))

    def __str__(self) -> str:
        return format_scalar(self)

    def __add__(self, other) -> Scalar:
        return add(self, Scalar.from_python(other))

    def __radd__(self, other) -> Scalar:
        return add(Scalar.from_python(other), self)

    def __sub__(self, other) -> Scalar:
        return sub(self, Scalar.from_python(other))

    def __rsub__(self, other) -> Scalar:
        return sub(Scalar.from_python(other), self)

    def __mul__(self, other) -> Scalar:
        return mul(self, Scalar.from_python(other))

    def __rmul__(self, other) -> Scalar:
        return mul(Scalar.from_python(other), self)

    def __truediv__(self, other) -> Scalar:
        return div(self, Scalar.from_python(other))

    def __neg__(self) -> Scalar:
        return Scalar(self.tag, tuple(-x for x in self.c))


def hamilton(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Hamilton product of quaternion arrays shaped (..., 4)."""
    aw, ai, aj, ak = np.moveaxis(np.asarray(a, dtype=float), -1, 0)
    bw, bi, bj, bk = np.moveaxis(np.asarray(b, dtype=float), -1, 0)
    return np.stack(
        [
            aw * bw - ai * bi - aj * bj - ak * bk,
            aw * bi + ai * bw + aj * bk - ak * bj,
            aw * bj - ai * bk + aj * bw + ak * bi,
            aw * bk + ai * bj - aj * bi + ak * bw,
        ],
        axis=-1,
    )


def _binary(a: Scalar, b: Scalar) -> tuple[str, np.ndarray, np.ndarray]:
    tag = wider(a.tag, b.tag)
    return tag, np.array(a.promote(tag).c), np.array(b.promote(tag).c)


def add(a: Scalar, b: Scalar) -> Scalar:
    tag, x, y = _binary(a, b)
    return Scalar(tag, tuple(x + y))


def sub(a: Scalar, b: Scalar) -> Scalar:
    tag, x, y = _binary(a, b)
    return Scalar(tag, tuple(x - y))


def mul(a: Scalar, b: Scalar) -> Scalar:
    """Product in the wider algebra. Quaternion products are not commutative."""
    tag = wider(a.tag, b.tag)
    if tag == "real":
        return Scalar.real(a.c[0] * b.c[0])
    if tag == "complex":
        x = complex(*a.promote(tag).c) * complex(*b.promote(tag).c)
        return Scalar.complex(x.real, x.imag)
    return Scalar(tag, tuple(hamilton(a.as_quaternion(), b.as_quaternion())))


def conj(a: Scalar) -> Scalar:
    return Scalar(a.tag, (a.c[0],) + tuple(-x for x in a.c[1:]))


def norm(a: Scalar) -> float:
    """Euclidean norm of the components: |x|, |z| or sqrt(w^2+i^2+j^2+k^2)."""
    return math.sqrt(math.fsum(x * x for x in a.c))


def inverse(a: Scalar) -> Scalar:
    n2 = math.fsum(x * x for x in a.c)
    if n2 == 0.0:
        raise ZeroDivisionError("zero has no inverse")
    cj = conj(a)
    return Scalar(a.tag, tuple(x / n2 for x in cj.c))


def div(a: Scalar, b: Scalar) -> Scalar:
    """Right division a * b^-1."""
    return mul(a, inverse(b))


def real_root(x: float, k: int) -> float:
    """Principal real k-th root of a nonnegative real."""
    k = int(k)
    if k < 1:
        raise ValueError("root order must be a positive integer")
    if not math.isfinite(x):
        raise ValueError("root of a non-finite value")
    if x < 0:
        raise ValueError("real_root needs a nonnegative argument")
    if x == 0.0 or k == 1:
        return float(x)
    if k == 2:
        return math.sqrt(x)
    if k == 3:
        return float(np.cbrt(x))
    y = x ** (1.0 / k)
    # one Newton step tightens the last bits for large k
    return y - (y**k - x) / (k * y ** (k - 1))


def real_root_array(x: np.ndarray, k: int) -> np.ndarray:
    """Vectorized :func:`real_root` for nonnegative arrays."""
    x = np.asarray(x, dtype=float)
    if k == 1:
        return x.copy()
    if k == 2:
        return np.sqrt(x)
    if k == 3:
        return np.cbrt(x)
    return np.power(x, 1.0 / k)


PROJECTIVE_TOL = 1e-9


def projective_equiv(a: Sequence, b: Sequence, tol: float = PROJECTIVE_TOL) -> bool:
    """True when b = lambda * a for a nonzero scalar lambda.

    The scalar multiplies from the left, so both tuples are normalized by
    left-multiplying with the inverse of their first nonzero entry before a
    componentwise comparison.
    """
    sa = [Scalar.from_python(x) for x in a]
    sb = [Scalar.from_python(x) for x in b]
    if len(sa) != len(sb):
        raise ValueError("tuples must have equal length")
    if not sa:
        raise ValueError("empty tuples")
    na, nb = _normalize(sa), _normalize(sb)
    if na is None or nb is None:
        raise ValueError("the zero tuple has no projective class")
    return all(norm(sub(x, y)) <= tol for x, y in zip(na, nb))


def _normalize(xs: list[Scalar]) -> list[Scalar] | None:
    scale = max(norm(x) for x in xs)
    if scale == 0.0:
        return None
    lead = next(x for x in xs if norm(x) > 0.0)
    inv = inverse(lead)
    return [mul(inv, x) for x in xs]


_TERM = re.compile(
    r"\s*([+-]?)\s*((?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)?\s*([ijk]?)\s*"
)


def parse_scalar(text: str) -> Scalar:
    """Parse literals like ``3``, ``-1.5``, ``2i``, ``1+2i-0.5j+k``.

    The tag is the narrowest one that holds every unit used.
    """
    s = text.strip()
    if not s:
        raise ValueError("empty scalar literal")
    comps = [0.0, 0.0, 0.0, 0.0]
    used = set()
    pos = 0
    first = True
    while pos < len(s):
        m = _TERM.match(s, pos)
        if m is None or m.end() == pos:
            raise ValueError(f"bad scalar literal {text!r}")
        sign, num, unit = m.groups()
        if not sign and not first:
            raise ValueError(f"bad scalar literal {text!r}")
        if not num and not unit:
            raise ValueError(f"bad scalar literal {text!r}")
        value = float(num) if num else 1.0
        if sign == "-":
            value = -value
        slot = " ijk".index(unit) if unit else 0
        if slot in used:
            raise ValueError(f"repeated unit in {text!r}")
        used.add(slot)
        comps[slot] = value
        pos = m.end()
        first = False
    if used & {2, 3}:
        return Scalar("quaternion", tuple(comps))
    if 1 in used:
        return Scalar("complex", tuple(comps[:2]))
    return Scalar.real(comps[0])


def parse_scalar_list(text: str) -> list[Scalar]:
    return [parse_scalar(part) for part in text.split(",")]


def format_scalar(a: Scalar) -> str:
    """Inverse of :func:`parse_scalar` for finite values; keeps the tag."""
    parts = []
    for value, unit in zip(a.c, ("", "i", "j", "k")):
        txt = repr(value)
        if parts and not txt.startswith("-"):
            txt = "+" + txt
        parts.append(txt + unit)
    return "".join(parts)


def promote_all(values: Iterable[Scalar]) -> list[Scalar]:
    vals = list(values)
    tag = "real"
    for v in vals:
        tag = wider(tag, v.tag)
    return [v.promote(tag) for v in vals]
