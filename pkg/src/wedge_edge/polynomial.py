"""Sparse multivariate polynomials with an l1 coefficient norm.

Coefficients are either exact (``int``, :class:`fractions.Fraction`,
:class:`QComplex`) or floating point (``float``, ``complex``).  A polynomial
whose coefficients are all exact is said to be in *rational mode*; arithmetic
between two rational-mode polynomials stays exact.  Mixing modes promotes to
floating point.

Terms are stored as a mapping ``exponent tuple -> coefficient`` with no stored
zeros.  In float mode only exact zeros are pruned, so the l1 norm is never
changed by a silent epsilon cut.

Example
-------
>>> x, y = MultiPoly.variables(2)
>>> p = 3 * x**2 * y - 2 * y**3
>>> p.l1_norm()
5
>>> p.evaluate((2, 1))
10
"""

from __future__ import annotations

import json
import math
import numbers
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

Exponent = tuple[int, ...]


@dataclass(frozen=True)
class QComplex:
    """Exact complex number with rational real and imaginary parts."""

    re: Fraction
    im: Fraction = Fraction(0)

    def __post_init__(self):
        object.__setattr__(self, "re", Fraction(self.re))
        object.__setattr__(self, "im", Fraction(self.im))

    @staticmethod
    def _coerce(other):
        if isinstance(other, QComplex):
            return other
        if isinstance(other, (int, Fraction)):
            return QComplex(Fraction(other))
        return None

    def __add__(self, other):
        o = self._coerce(other)
        if o is None:
            return complex(self) + other
        return QComplex(self.re + o.re, self.im + o.im)

    __radd__ = __add__

    def __neg__(self):
        return QComplex(-self.re, -self.im)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        o = self._coerce(other)
        if o is None:
            return complex(self) * other
        return QComplex(self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is None:
            return complex(self) / other
        den = o.re * o.re + o.im * o.im
        if den == 0:
            raise ZeroDivisionError("QComplex division by zero")
        return self * QComplex(o.re / den, -o.im / den)

    def __rtruediv__(self, other):
        return QComplex(Fraction(other)) / self

    def __pow__(self, k: int):
        if not isinstance(k, int) or k < 0:
            return complex(self) ** k
        out = QComplex(Fraction(1))
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def __eq__(self, other):
        o = self._coerce(other)
        if o is None:
            try:
                return complex(self) == other
            except TypeError:
                return NotImplemented
        return self.re == o.re and self.im == o.im

    def __hash__(self):
        return hash((self.re, self.im))

    def __bool__(self):
        return bool(self.re) or bool(self.im)

    def __complex__(self):
        return complex(float(self.re), float(self.im))

    def __abs__(self):
        # exact whenever the modulus is rational for trivial reasons
        if self.im == 0:
            return abs(self.re)
        if self.re == 0:
            return abs(self.im)
        return math.hypot(float(self.re), float(self.im))

    def conjugate(self):
        return QComplex(self.re, -self.im)

    def __repr__(self):
        return f"QComplex({self.re}, {self.im})"


def is_exact_scalar(c) -> bool:
    return isinstance(c, (int, Fraction, QComplex)) and not isinstance(c, bool)


def _check_scalar(c):
    if isinstance(c, bool):
        return int(c)
    if isinstance(c, (QComplex, numbers.Number)):
        if isinstance(c, np.generic):
            return c.item()
        return c
    raise TypeError(f"unsupported coefficient type {type(c).__name__}")


def grlex_key(exp: Exponent):
    """Sort key for graded lexicographic order (ascending)."""
    return (sum(exp), exp)


class MultiPoly:
    """Immutable sparse polynomial in ``nvars`` variables."""

    __slots__ = ("_nvars", "_terms")

    def __init__(self, nvars: int, terms: Mapping[Sequence[int], object] | Iterable | None = None):
        if nvars < 0:
            raise ValueError("nvars must be non-negative")
        items = terms.items() if isinstance(terms, Mapping) else (terms or ())
        clean: dict[Exponent, object] = {}
        for exp, c in items:
            exp = tuple(int(e) for e in exp)
            if len(exp) != nvars or any(e < 0 for e in exp):
                raise ValueError(f"bad exponent {exp} for {nvars} variables")
            c = _check_scalar(c)
            if exp in clean:
                c = clean[exp] + c
            clean[exp] = c
        self._nvars = nvars
        self._terms = {e: c for e, c in clean.items() if c != 0}

    # constructors -----------------------------------------------------
    @classmethod
    def zero(cls, nvars: int) -> MultiPoly:
        return cls(nvars)

    @classmethod
    def constant(cls, nvars: int, c) -> MultiPoly:
        return cls(nvars, {(0,) * nvars: c})

    @classmethod
    def monomial(cls, exp: Sequence[int], coeff=1) -> MultiPoly:
        return cls(len(exp), {tuple(exp): coeff})

    @classmethod
    def variable(cls, nvars: int, i: int) -> MultiPoly:
        exp = [0] * nvars
        exp[i] = 1
        return cls(nvars, {tuple(exp): 1})

    @classmethod
    def variables(cls, nvars: int) -> list[MultiPoly]:
        return [cls.variable(nvars, i) for i in range(nvars)]

    # basic properties -------------------------------------------------
    @property
    def nvars(self) -> int:
        return self._nvars

    @property
    def terms(self) -> Mapping[Exponent, object]:
        return dict(self._terms)

    def items(self) -> Iterator[tuple[Exponent, object]]:
        """Terms in graded lexicographic order."""
        for e in sorted(self._terms, key=grlex_key):
            yield e, self._terms[e]

    def coefficient(self, exp: Sequence[int]):
        return self._terms.get(tuple(exp), 0)

    def __len__(self):
        return len(self._terms)

    @property
    def is_zero(self) -> bool:
        return not self._terms

    @property
    def is_exact(self) -> bool:
        return all(is_exact_scalar(c) for c in self._terms.values())

    @property
    def degree(self) -> int:
        """Total degree; -1 for the zero polynomial."""
        return max((sum(e) for e in self._terms), default=-1)

    def degree_in(self, i: int) -> int:
        return max((e[i] for e in self._terms), default=-1)

    def is_homogeneous(self) -> bool:
        return len({sum(e) for e in self._terms}) <= 1

    # arithmetic -------------------------------------------------------
    def _coerce(self, other) -> MultiPoly:
        if isinstance(other, MultiPoly):
            if other._nvars != self._nvars:
                raise ValueError(f"variable count mismatch: {self._nvars} vs {other._nvars}")
            return other
        return MultiPoly.constant(self._nvars, _check_scalar(other))

    def __add__(self, other) -> MultiPoly:
        other = self._coerce(other)
        out = dict(self._terms)
        for e, c in other._terms.items():
            out[e] = out[e] + c if e in out else c
        return MultiPoly(self._nvars, out)

    __radd__ = __add__

    def __neg__(self) -> MultiPoly:
        return MultiPoly(self._nvars, {e: -c for e, c in self._terms.items()})

    def __sub__(self, other) -> MultiPoly:
        return self + (-self._coerce(other))

    def __rsub__(self, other) -> MultiPoly:
        return self._coerce(other) - self

    def __mul__(self, other) -> MultiPoly:
        if not isinstance(other, MultiPoly):
            c = _check_scalar(other)
            return MultiPoly(self._nvars, {e: a * c for e, a in self._terms.items()})
        other = self._coerce(other)
        out: dict[Exponent, object] = {}
        for e1, a in self._terms.items():
            for e2, b in other._terms.items():
                e = tuple(i + j for i, j in zip(e1, e2))
                out[e] = out[e] + a * b if e in out else a * b
        return MultiPoly(self._nvars, out)

    def __rmul__(self, other) -> MultiPoly:
        return self * other

    def __truediv__(self, other) -> MultiPoly:
        c = _check_scalar(other)
        if is_exact_scalar(c) and not isinstance(c, QComplex):
            c = Fraction(c)
        return self * (1 / c)

    def __pow__(self, k: int) -> MultiPoly:
        if not isinstance(k, int) or k < 0:
            raise ValueError("only non-negative integer powers")
        out = MultiPoly.constant(self._nvars, 1)
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def __eq__(self, other) -> bool:
        if not isinstance(other, MultiPoly):
            try:
                other = self._coerce(other)
            except TypeError:
                return NotImplemented
        return self._nvars == other._nvars and self._terms == other._terms

    def __hash__(self):
        return hash((self._nvars, frozenset(self._terms.items())))

    # norms and evaluation ---------------------------------------------
    def l1_norm(self):
        """Sum of coefficient moduli; exact for real rational coefficients."""
        return sum((abs(c) for c in self._terms.values()), 0)

    def evaluate(self, z: Sequence):
        if len(z) != self._nvars:
            raise ValueError(f"expected {self._nvars} coordinates, got {len(z)}")
        total = 0
        for e, c in self._terms.items():
            term = c
            for zi, k in zip(z, e):
                if k:
                    term = term * zi**k
            total = total + term
        return total

    __call__ = evaluate

    def evaluate_many(self, points) -> np.ndarray:
        """Vectorised float evaluation at the rows of an ``(m, nvars)`` array."""
        pts = np.asarray(points)
        if pts.ndim == 1:
            pts = pts.reshape(-1, self._nvars) if self._nvars else pts.reshape(-1, 0)
        if pts.shape[1] != self._nvars:
            raise ValueError(f"expected {self._nvars} columns, got {pts.shape[1]}")
        dtype = np.result_type(pts.dtype, complex if self._has_complex() else float)
        out = np.zeros(pts.shape[0], dtype=dtype)
        if not self._terms:
            return out
        maxdeg = max(max(e) if e else 0 for e in self._terms)
        # powers[k, :, i] = pts[:, i] ** k
        powers = np.ones((maxdeg + 1,) + pts.shape, dtype=dtype)
        for k in range(1, maxdeg + 1):
            powers[k] = powers[k - 1] * pts
        cols = np.arange(self._nvars)
        for e, c in self._terms.items():
            term = np.prod(powers[list(e), :, cols], axis=0) if self._nvars else 1.0
            out += complex(c) * term if self._has_complex() else float(c) * term
        return out

    def _has_complex(self) -> bool:
        return any(isinstance(c, (complex, QComplex)) for c in self._terms.values())

    # structure ----------------------------------------------------------
    def homogeneous_parts(self) -> list[HomogeneousPoly]:
        """Parts of degree 0..deg, including explicit zero parts."""
        buckets: list[dict] = [dict() for _ in range(self.degree + 1)]
        for e, c in self._terms.items():
            buckets[sum(e)][e] = c
        return [HomogeneousPoly(MultiPoly(self._nvars, b), d) for d, b in enumerate(buckets)]

    def substitute(self, axis: int, value) -> MultiPoly:
        """Fix variable ``axis`` at ``value``; the result has one variable fewer."""
        out: dict[Exponent, object] = {}
        for e, c in self._terms.items():
            k = e[axis]
            rest = e[:axis] + e[axis + 1:]
            term = c * value**k if k else c
            out[rest] = out[rest] + term if rest in out else term
        return MultiPoly(self._nvars - 1, out)

    def insert_variable(self, axis: int) -> MultiPoly:
        """Embed into ``nvars + 1`` variables with a new variable at ``axis``."""
        return MultiPoly(
            self._nvars + 1,
            {e[:axis] + (0,) + e[axis:]: c for e, c in self._terms.items()},
        )

    def embed(self, nvars: int, offset: int = 0) -> MultiPoly:
        """Place the variables at positions ``offset..offset+self.nvars-1``."""
        if offset < 0 or offset + self._nvars > nvars:
            raise ValueError("embedding does not fit")
        pad_l, pad_r = (0,) * offset, (0,) * (nvars - offset - self._nvars)
        return MultiPoly(nvars, {pad_l + e + pad_r: c for e, c in self._terms.items()})

    def map_coefficients(self, fn) -> MultiPoly:
        return MultiPoly(self._nvars, {e: fn(c) for e, c in self._terms.items()})

    def to_float(self) -> MultiPoly:
        def conv(c):
            if isinstance(c, (complex, QComplex)):
                c = complex(c)
                return c if c.imag else c.real
            return float(c)

        return self.map_coefficients(conv)

    def to_exact(self) -> MultiPoly:
        """Exact copy; float coefficients are converted without rounding."""

        def conv(c):
            if isinstance(c, complex):
                return QComplex(Fraction(c.real), Fraction(c.imag)) if c.imag else Fraction(c.real)
            if isinstance(c, float):
                return Fraction(c)
            return c

        return self.map_coefficients(conv)

    # serialisation ------------------------------------------------------
    def to_dict(self) -> dict:
        terms = []
        for e, c in self.items():
            entry: dict = {"exp": list(e)}
            if isinstance(c, QComplex):
                entry["re"] = {"num": c.re.numerator, "den": c.re.denominator}
                entry["im"] = {"num": c.im.numerator, "den": c.im.denominator}
            elif isinstance(c, (int, Fraction)):
                c = Fraction(c)
                entry["num"], entry["den"] = c.numerator, c.denominator
            else:
                c = complex(c)
                entry["re"], entry["im"] = c.real, c.imag
            terms.append(entry)
        return {"nvars": self._nvars, "terms": terms}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, data: Mapping) -> MultiPoly:
        unknown = set(data) - {"nvars", "terms"}
        if unknown:
            raise ValueError(f"unknown polynomial keys: {sorted(unknown)}")
        terms = {}
        for entry in data["terms"]:
            exp = tuple(entry["exp"])
            if "num" in entry:
                c = Fraction(entry["num"], entry["den"])
            elif isinstance(entry.get("re"), Mapping):
                re, im = entry["re"], entry["im"]
                c = QComplex(Fraction(re["num"], re["den"]), Fraction(im["num"], im["den"]))
            else:
                re, im = float(entry["re"]), float(entry.get("im", 0.0))
                c = complex(re, im) if im else re
            terms[exp] = c
        return cls(int(data["nvars"]), terms)

    @classmethod
    def from_json(cls, text: str) -> MultiPoly:
        return cls.from_dict(json.loads(text))

    def __repr__(self):
        if not self._terms:
            return f"MultiPoly({self._nvars}, 0)"
        parts = []
        for e, c in self.items():
            mono = "*".join(f"x{i}^{k}" if k > 1 else f"x{i}" for i, k in enumerate(e) if k)
            parts.append(f"{c}*{mono}" if mono else f"{c}")
        return f"MultiPoly({self._nvars}, {' + '.join(parts)})"


@dataclass(frozen=True)
class HomogeneousPoly:
    """A polynomial all of whose monomials have total degree ``degree``."""

    base: MultiPoly
    degree: int

    def __post_init__(self):
        if self.degree < 0:
            raise ValueError("degree must be non-negative")
        bad = [e for e in self.base.terms if sum(e) != self.degree]
        if bad:
            raise ValueError(f"monomials {bad[:3]} are not of degree {self.degree}")

    @property
    def nvars(self) -> int:
        return self.base.nvars

    def l1_norm(self):
        return self.base.l1_norm()

    def evaluate(self, z):
        return self.base.evaluate(z)

    __call__ = evaluate

    def evaluate_many(self, points) -> np.ndarray:
        return self.base.evaluate_many(points)


def l1_norm(p: MultiPoly | HomogeneousPoly):
    return p.l1_norm()


def mul(p: MultiPoly, q: MultiPoly) -> MultiPoly:
    return p * q


def homogeneous_parts(p: MultiPoly) -> list[HomogeneousPoly]:
    return p.homogeneous_parts()


def evaluate(p: MultiPoly | HomogeneousPoly, z):
    return p.evaluate(z)


def sum_parts(parts: Iterable[HomogeneousPoly], nvars: int) -> MultiPoly:
    total = MultiPoly.zero(nvars)
    for h in parts:
        total = total + h.base
    return total


def monomial_exponents(nvars: int, degree: int) -> list[Exponent]:
    """All exponent vectors of total degree ``degree`` in grlex order."""
    if nvars == 0:
        return [()] if degree == 0 else []
    if nvars == 1:
        return [(degree,)]
    out = []
    for first in range(degree + 1):
        for rest in monomial_exponents(nvars - 1, degree - first):
            out.append((first,) + rest)
    return sorted(out, key=grlex_key)


def random_poly(
    rng: np.random.Generator,
    nvars: int,
    degree: int,
    *,
    homogeneous: bool = False,
    exact: bool = False,
    density: float = 1.0,
    complex_coeffs: bool = False,
) -> MultiPoly:
    """Random polynomial with integer-valued (exact) or normal (float) coefficients."""
    degrees = [degree] if homogeneous else range(degree + 1)
    terms = {}
    for d in degrees:
        for e in monomial_exponents(nvars, d):
            if rng.random() > density:
                continue
            if exact:
                c = Fraction(int(rng.integers(-9, 10)), int(rng.integers(1, 5)))
                if complex_coeffs:
                    c = QComplex(c, Fraction(int(rng.integers(-9, 10)), int(rng.integers(1, 5))))
            else:
                c = float(rng.normal())
                if complex_coeffs:
                    c = complex(c, rng.normal())
            terms[e] = c
    return MultiPoly(nvars, terms)
