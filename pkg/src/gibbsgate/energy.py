"""Exact rational combinations of formal generators.

An :class:`Energy` is a vector of rational coordinates over a
:class:`Basis` of generators assumed linearly independent over the
rationals. Generator 0 is the rational unit. Equality is exact coordinate
comparison, so incommensurable quantities such as ``1`` and ``sqrt(2)``
never collide. Ordering falls back to the declared numeric values of the
generators only when the difference is not a pure rational.

The same type carries log-populations, which live in the same linear space
once multiplied by an inverse temperature.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational
from typing import Iterable, Union

from .errors import InvalidInput

NEG_INF = -math.inf
POS_INF = math.inf

RationalLike = Union[int, Fraction, str]


def parse_rational(value, field: str | None = None) -> Fraction:
    """Parse ``"num/den"`` strings, ints and Fractions into a Fraction.

    Floats are converted through their shortest repr so ``0.1`` becomes
    ``1/10`` rather than the binary expansion.
    """
    if isinstance(value, bool):
        raise InvalidInput(f"not a rational: {value!r}", field)
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        if not math.isfinite(value):
            raise InvalidInput(f"not a finite rational: {value!r}", field)
        return Fraction(repr(value))
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise InvalidInput(f"malformed rational {value!r}: {exc}", field) from None
    raise InvalidInput(f"not a rational: {value!r}", field)


def format_rational(q: Fraction) -> str:
    return str(Fraction(q))


@dataclass(frozen=True)
class Basis:
    """Named generators with their numeric values; ``names[0]`` is the unit."""

    names: tuple[str, ...] = ("unit",)
    values: tuple[float, ...] = (1.0,)

    def __post_init__(self):
        if len(self.names) != len(self.values) or not self.names:
            raise InvalidInput("basis names and values differ in length", "generators")
        if self.names[0] != "unit" or self.values[0] != 1.0:
            raise InvalidInput("generator 0 must be the rational unit", "generators")
        if len(set(self.names)) != len(self.names):
            raise InvalidInput("duplicate generator names", "generators")
        for name, value in zip(self.names[1:], self.values[1:]):
            if not (math.isfinite(value) and value > 0):
                raise InvalidInput(f"generator {name!r} must be numerically positive", "generators")

    @classmethod
    def with_generators(cls, **generators: float) -> "Basis":
        return cls(("unit",) + tuple(generators), (1.0,) + tuple(float(v) for v in generators.values()))

    def __len__(self) -> int:
        return len(self.names)

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise InvalidInput(f"unknown generator {name!r}", "generators") from None

    def gen(self, name: str) -> "Energy":
        i = self.index(name)
        return Energy((0,) * i + (1,), self)

    def energy(self, *coords) -> "Energy":
        return Energy(coords, self)

    def extends(self, other: "Basis") -> bool:
        n = len(other)
        return self.names[:n] == other.names and self.values[:n] == other.values


UNIT_BASIS = Basis()


def _merge_basis(a: Basis | None, b: Basis | None) -> Basis | None:
    if a is None or a is b:
        return b if a is None else a
    if b is None:
        return a
    if a.extends(b):
        return a
    if b.extends(a):
        return b
    raise ValueError(f"incompatible generator bases {a.names} and {b.names}")


class Energy:
    """Exact rational coordinates over a generator basis.

    Coordinates are stored with trailing zeros stripped, so the zero energy
    is ``()`` and a pure rational ``c`` is ``(c,)``. The optional basis is
    only consulted for numeric evaluation and ordering.
    """

    __slots__ = ("coords", "basis")

    def __init__(self, coords: Iterable[RationalLike] | RationalLike = (), basis: Basis | None = None):
        if isinstance(coords, (int, Fraction, str)) and not isinstance(coords, bool):
            coords = (coords,)
        cs = [parse_rational(c) for c in coords]
        while cs and cs[-1] == 0:
            cs.pop()
        if basis is not None and len(cs) > len(basis):
            raise InvalidInput(f"{len(cs)} coordinates exceed {len(basis)} generators", "coords")
        self.coords: tuple[Fraction, ...] = tuple(cs)
        self.basis = basis

    @classmethod
    def _raw(cls, coords: tuple[Fraction, ...], basis: Basis | None) -> "Energy":
        obj = object.__new__(cls)
        obj.coords = coords
        obj.basis = basis
        return obj

    # -- structure -------------------------------------------------------
    @property
    def is_rational(self) -> bool:
        return len(self.coords) <= 1

    @property
    def is_zero(self) -> bool:
        return not self.coords

    @property
    def rational(self) -> Fraction:
        if not self.is_rational:
            raise ValueError(f"{self!r} is not a rational multiple of the unit")
        return self.coords[0] if self.coords else Fraction(0)

    def with_basis(self, basis: Basis | None) -> "Energy":
        if basis is self.basis:
            return self
        if basis is not None and len(self.coords) > len(basis):
            raise InvalidInput(f"{self!r} does not fit basis {basis.names}", "coords")
        return Energy._raw(self.coords, basis)

    def coord(self, i: int) -> Fraction:
        return self.coords[i] if i < len(self.coords) else Fraction(0)

    def __float__(self) -> float:
        if len(self.coords) <= 1:
            return float(self.rational)
        if self.basis is None:
            raise ValueError(f"numeric value of {self!r} needs a generator basis")
        return math.fsum(float(c) * v for c, v in zip(self.coords, self.basis.values))

    # -- arithmetic ------------------------------------------------------
    @staticmethod
    def _coerce(other) -> "Energy | None":
        if isinstance(other, Energy):
            return other
        if isinstance(other, (int, Fraction)) and not isinstance(other, bool):
            return Energy._raw((Fraction(other),) if other else (), None)
        return None

    def __add__(self, other):
        o = Energy._coerce(other)
        if o is None:
            return NotImplemented
        a, b = self.coords, o.coords
        if len(a) < len(b):
            a, b = b, a
        cs = list(a)
        for i, c in enumerate(b):
            cs[i] += c
        while cs and cs[-1] == 0:
            cs.pop()
        return Energy._raw(tuple(cs), _merge_basis(self.basis, o.basis))

    __radd__ = __add__

    def __neg__(self):
        return Energy._raw(tuple(-c for c in self.coords), self.basis)

    def __abs__(self):
        return -self if self.sign() < 0 else self

    def __sub__(self, other):
        o = Energy._coerce(other)
        if o is None:
            return NotImplemented
        return self + (-o)

    def __rsub__(self, other):
        o = Energy._coerce(other)
        if o is None:
            return NotImplemented
        return o + (-self)

    def __mul__(self, other):
        if isinstance(other, Energy):
            if other.is_rational:
                other = other.rational
            elif self.is_rational:
                return other * self.rational
            else:
                return NotImplemented
        if isinstance(other, bool) or not isinstance(other, (int, Fraction)):
            return NotImplemented
        if other == 0:
            return Energy._raw((), self.basis)
        return Energy._raw(tuple(c * other for c in self.coords), self.basis)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Energy) and other.is_rational:
            other = other.rational
        if isinstance(other, bool) or not isinstance(other, (int, Fraction)):
            return NotImplemented
        return self * (Fraction(1) / Fraction(other))

    # -- comparison ------------------------------------------------------
    def __eq__(self, other):
        if isinstance(other, Energy):
            return self.coords == other.coords
        if isinstance(other, (int, Fraction)) and not isinstance(other, bool):
            return self.is_rational and self.rational == other
        if isinstance(other, float):
            return self.is_rational and self.rational == other
        return NotImplemented

    def __hash__(self):
        if len(self.coords) <= 1:
            return hash(self.rational)
        return hash(self.coords)

    def sign(self) -> int:
        """Sign of the value; exact for rationals, numeric otherwise."""
        if len(self.coords) <= 1:
            r = self.rational
            return (r > 0) - (r < 0)
        v = float(self)
        return (v > 0) - (v < 0)

    def _cmp(self, other) -> int:
        if isinstance(other, float):
            if math.isinf(other):
                return -1 if other > 0 else 1
            if self.is_rational:
                r = self.rational
                return (r > other) - (r < other)
            v = float(self)
            return (v > other) - (v < other)
        o = Energy._coerce(other)
        if o is None:
            raise TypeError(f"cannot compare Energy with {type(other).__name__}")
        return (self - o).sign()

    def __lt__(self, other):
        return self._cmp(other) < 0

    def __le__(self, other):
        return self._cmp(other) <= 0

    def __gt__(self, other):
        return self._cmp(other) > 0

    def __ge__(self, other):
        return self._cmp(other) >= 0

    # -- presentation ----------------------------------------------------
    def to_json(self) -> list[str]:
        return [format_rational(c) for c in self.coords] or ["0"]

    @classmethod
    def from_json(cls, data, basis: Basis | None = None, field: str = "coords") -> "Energy":
        if isinstance(data, (str, int)) and not isinstance(data, bool):
            return cls((parse_rational(data, field),), basis)
        if not isinstance(data, list):
            raise InvalidInput(f"coordinates must be a list, got {data!r}", field)
        # the nested single-row form [["0", "1"]] is accepted too
        if len(data) == 1 and isinstance(data[0], list):
            data = data[0]
        return cls([parse_rational(c, field) for c in data], basis)

    def __repr__(self):
        if not self.coords:
            return "Energy(0)"
        names = self.basis.names if self.basis is not None else None
        terms = []
        for i, c in enumerate(self.coords):
            if c == 0:
                continue
            if i == 0:
                terms.append(str(c))
            else:
                name = names[i] if names else f"g{i}"
                terms.append(name if c == 1 else f"{c}*{name}")
        return f"Energy({' + '.join(terms)})"


def ratio(a: Energy, b: Energy) -> Fraction | None:
    """Return ``r`` with ``a == r * b`` exactly, or None if no rational works."""
    if b.is_zero:
        raise ZeroDivisionError("ratio with zero denominator")
    i = next(k for k, c in enumerate(b.coords) if c != 0)
    r = a.coord(i) / b.coords[i]
    return r if a == b * r else None


def as_energy(value, basis: Basis | None = None) -> Energy:
    if isinstance(value, Energy):
        return value.with_basis(basis) if basis is not None else value
    return Energy((parse_rational(value),), basis)


def is_neg_inf(x) -> bool:
    return isinstance(x, float) and x == NEG_INF


def log_to_json(x) -> str | list[str]:
    """Serialize a log-population: ``"-inf"``, a rational string, or coordinates."""
    if is_neg_inf(x):
        return "-inf"
    if isinstance(x, Energy):
        return format_rational(x.rational) if x.is_rational else x.to_json()
    if isinstance(x, float):
        return repr(x)
    return format_rational(x)


def log_from_json(data, basis: Basis | None = None, field: str = "logp"):
    if isinstance(data, str) and data.strip() in ("-inf", "-infinity", "neg_inf"):
        return NEG_INF
    return Energy.from_json(data, basis, field)
