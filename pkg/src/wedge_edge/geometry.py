"""Real wedges, cones with a distinguished element, and the cone norm.

For an open convex cone ``C`` containing the vector ``one``::

    ||x||_C = max(inf{l >= 0 : l*one - x in C}, inf{l >= 0 : l*one + x in C})

The set ``{l : l*one - x in C}`` is an up-ray because ``C + C`` is contained
in ``C``, so each infimum is found by bisection on a membership oracle.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import linprog

from .errors import DegenerateCone, NormTooLarge, Unbounded
from .sampling import Indicator, estimate_measure, halton, stream

BISECTION_TOL = 1e-9
LAMBDA_CAP = 1e6
MEASURE_FLOOR = 1e-4

Membership = Callable[[np.ndarray], bool]


@dataclass(frozen=True)
class RealWedge:
    """A starlike Borel subset of a box, given by a vectorised indicator.

    ``indicator`` acts on points in actual coordinates.  ``lower``/``upper``
    bound the set; :meth:`unit_indicator` views it inside ``[0, 1]^n``, where
    ``measure_estimate`` is reported (so it is a volume fraction of the box).
    """

    nvars: int
    indicator: Indicator
    measure_estimate: float
    seed: int = 0
    lower: tuple = None
    upper: tuple = None
    measure_lower: float = None
    name: str = "wedge"

    def __post_init__(self):
        if self.lower is None:
            object.__setattr__(self, "lower", (0.0,) * self.nvars)
        if self.upper is None:
            object.__setattr__(self, "upper", (1.0,) * self.nvars)
        if self.measure_lower is None:
            object.__setattr__(self, "measure_lower", self.measure_estimate)

    @classmethod
    def from_indicator(
        cls,
        indicator: Indicator,
        nvars: int,
        *,
        lower: Sequence[float] | None = None,
        upper: Sequence[float] | None = None,
        samples: int = 100_000,
        seed: int = 0,
        name: str = "wedge",
        workers: int = 1,
    ) -> RealWedge:
        lo = tuple(float(v) for v in (lower if lower is not None else [0.0] * nvars))
        hi = tuple(float(v) for v in (upper if upper is not None else [1.0] * nvars))
        span = np.asarray(hi) - np.asarray(lo)

        def unit(u):
            return indicator(np.asarray(lo) + np.asarray(u) * span)

        est = estimate_measure(unit, nvars, samples=samples, seed=seed, workers=workers)
        return cls(nvars, indicator, est.value, seed, lo, hi, est.lower, name)

    @classmethod
    def box(cls, side: float | Sequence[float], nvars: int | None = None, seed: int = 0) -> RealWedge:
        """The open box ``(0, side_1) x ... x (0, side_n)``; its normalised measure is 1."""
        sides = np.atleast_1d(np.asarray(side, dtype=float))
        if nvars is not None and sides.size == 1:
            sides = np.full(nvars, sides[0])
        n = sides.size

        def ind(x):
            x = np.asarray(x, dtype=float).reshape(-1, n)
            return np.all((x > 0) & (x < sides), axis=1)

        return cls(n, ind, 1.0, seed, (0.0,) * n, tuple(sides.tolist()), 1.0, "box")

    @property
    def span(self) -> np.ndarray:
        return np.asarray(self.upper) - np.asarray(self.lower)

    def contains(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=float).reshape(-1, self.nvars)
        return np.asarray(self.indicator(pts), dtype=bool)

    def to_unit(self, points) -> np.ndarray:
        return (np.asarray(points, dtype=float) - np.asarray(self.lower)) / self.span

    def from_unit(self, u) -> np.ndarray:
        return np.asarray(self.lower) + np.asarray(u, dtype=float) * self.span

    def unit_indicator(self, u: np.ndarray) -> np.ndarray:
        return self.contains(self.from_unit(np.asarray(u, dtype=float).reshape(-1, self.nvars)))

    def scaled(self, s: float) -> RealWedge:
        """The wedge ``s * W``; the normalised measure is unchanged."""
        if s <= 0:
            raise ValueError("scale must be positive")
        base = self.indicator

        def ind(x):
            return base(np.asarray(x, dtype=float) / s)

        return RealWedge(
            self.nvars, ind, self.measure_estimate, self.seed,
            tuple(s * v for v in self.lower), tuple(s * v for v in self.upper),
            self.measure_lower, f"{s:g}*{self.name}",
        )

    def sample(self, count: int, seed: int | None = None, oversample: int = 8) -> np.ndarray:
        """Uniform points of the wedge by rejection from the bounding box."""
        rng = stream(self.seed if seed is None else seed, 0x5A)
        out = []
        have = 0
        for _ in range(64):
            u = rng.random((max(count, 16) * oversample, self.nvars))
            x = self.from_unit(u)
            x = x[self.contains(x)]
            out.append(x)
            have += len(x)
            if have >= count:
                break
        pts = np.concatenate(out) if out else np.zeros((0, self.nvars))
        return pts[:count]

    def quasi_sample(self, count: int, seed: int | None = None) -> np.ndarray:
        """Halton points of the bounding box that fall inside the wedge."""
        s = self.seed if seed is None else seed
        pts = []
        have, batch = 0, max(4 * count, 64)
        for k in range(32):
            u = halton(self.nvars, batch, seed=s + k)
            x = self.from_unit(u)
            x = x[self.contains(x)]
            pts.append(x)
            have += len(x)
            if have >= count:
                break
        return np.concatenate(pts)[:count]

    def radial_extent(self, directions: np.ndarray, t_max: float = None, iters: int = 60) -> np.ndarray:
        """Largest ``t`` with ``t * u`` in the wedge, for each row ``u`` (bisection)."""
        u = np.asarray(directions, dtype=float).reshape(-1, self.nvars)
        if t_max is None:
            corner = np.maximum(np.abs(self.lower), np.abs(self.upper))
            t_max = 2.0 * float(np.linalg.norm(corner)) / np.maximum(np.linalg.norm(u, axis=1), 1e-300)
        hi = np.broadcast_to(np.asarray(t_max, dtype=float), (len(u),)).copy()
        lo = np.zeros(len(u))
        for _ in range(iters):
            mid = 0.5 * (lo + hi)
            inside = self.contains(mid[:, None] * u)
            lo = np.where(inside, mid, lo)
            hi = np.where(inside, hi, mid)
        return lo

    def check_starlike(self, samples: int = 10_000, seed: int | None = None) -> tuple[bool, int]:
        """Spot-check starlikeness about the origin; returns ``(ok, violations)``."""
        rng = stream(self.seed if seed is None else seed, 0x57A2)
        x = self.sample(samples, seed=self.seed if seed is None else seed)
        t = rng.uniform(0.0, 1.0, size=len(x))
        t = np.where(t == 0.0, 0.5, t)
        bad = int(np.count_nonzero(~self.contains(t[:, None] * x)))
        return bad == 0, bad

    def check_orthant(self) -> bool:
        return all(v >= 0 for v in self.lower)


@dataclass(frozen=True)
class ConeSpec:
    """Open convex cone given by a membership oracle, with ``one`` inside it."""

    nvars: int
    membership: Membership
    one: tuple
    kind: str = "oracle"
    halfspaces: tuple = field(default=(), compare=False)
    wedge_box: tuple | None = field(default=None, compare=False)

    def __post_init__(self):
        one = tuple(float(v) for v in self.one)
        object.__setattr__(self, "one", one)
        if len(one) != self.nvars:
            raise ValueError("distinguished element has the wrong length")
        if not self.membership(np.asarray(one)):
            raise ValueError("distinguished element is not in the cone")

    @classmethod
    def orthant(cls, nvars: int, one: Sequence[float] | None = None) -> ConeSpec:
        one = tuple(one) if one is not None else (1.0,) * nvars
        box = ((0.0,) * nvars, tuple(float(v) for v in one))
        return cls(nvars, lambda x: bool(np.all(np.asarray(x) > 0)), one, "orthant",
                   tuple(tuple(float(i == j) for j in range(nvars)) for i in range(nvars)), box)

    @classmethod
    def polyhedral(cls, halfspaces: Sequence[Sequence[float]], one: Sequence[float]) -> ConeSpec:
        """Cone ``{x : a . x > 0 for every row a}``."""
        A = np.asarray(halfspaces, dtype=float)
        if A.ndim != 2:
            raise ValueError("halfspaces must be a list of vectors")

        def member(x):
            return bool(np.all(A @ np.asarray(x, dtype=float) > 0))

        spec = cls(A.shape[1], member, tuple(one), "polyhedral", tuple(map(tuple, A.tolist())))
        object.__setattr__(spec, "wedge_box", _polyhedral_wedge_box(A, np.asarray(spec.one)))
        return spec

    @classmethod
    def hermitian(cls, m: int) -> ConeSpec:
        """Positive definite ``m x m`` Hermitian matrices in ``m^2`` real coordinates.

        Coordinates: the ``m`` diagonal entries, then real parts and imaginary
        parts of the strict upper triangle (row-major).  ``one`` is the identity.
        """
        one = hermitian_to_vector(np.eye(m))

        def member(x):
            try:
                np.linalg.cholesky(vector_to_hermitian(np.asarray(x, dtype=float), m))
                return True
            except np.linalg.LinAlgError:
                return False

        k = m * (m - 1) // 2
        lo = (0.0,) * m + (-0.5,) * (2 * k)
        hi = (1.0,) * m + (0.5,) * (2 * k)
        return cls(m * m, member, tuple(one), "hermitian", (), (lo, hi))

    def member_many(self, points: np.ndarray) -> np.ndarray:
        pts = np.asarray(points, dtype=float).reshape(-1, self.nvars)
        if self.kind == "orthant":
            return np.all(pts > 0, axis=1)
        if self.kind == "polyhedral":
            A = np.asarray(self.halfspaces)
            return np.all(pts @ A.T > 0, axis=1)
        return np.fromiter((self.membership(p) for p in pts), dtype=bool, count=len(pts))

    def check_cone(self, samples: int = 200, seed: int = 0) -> bool:
        """Spot-check ``x in C => lam x in C`` on random members."""
        rng = stream(seed, 0xC0)
        one = np.asarray(self.one)
        for _ in range(samples):
            x = one + rng.normal(scale=0.5, size=self.nvars)
            if not self.membership(x):
                continue
            lam = float(np.exp(rng.uniform(-3, 3)))
            if not self.membership(lam * x):
                return False
        return True


def hermitian_to_vector(H: np.ndarray) -> np.ndarray:
    m = H.shape[0]
    iu = np.triu_indices(m, 1)
    return np.concatenate([np.real(np.diag(H)), np.real(H[iu]), np.imag(H[iu])])


def vector_to_hermitian(x: np.ndarray, m: int) -> np.ndarray:
    k = m * (m - 1) // 2
    H = np.diag(x[:m]).astype(complex)
    iu = np.triu_indices(m, 1)
    H[iu] = x[m:m + k] + 1j * x[m + k:m + 2 * k]
    H[(iu[1], iu[0])] = np.conj(H[iu])
    return H


def _polyhedral_wedge_box(A: np.ndarray, one: np.ndarray) -> tuple:
    """Bounding box of ``{x : A x >= 0, A (one - x) >= 0}`` by linear programming."""
    n = A.shape[1]
    A_ub = np.vstack([-A, A])
    b_ub = np.concatenate([np.zeros(len(A)), A @ one])
    lo, hi = [], []
    for i in range(n):
        c = np.zeros(n)
        c[i] = 1.0
        r_lo = linprog(c, A_ub=A_ub, b_ub=b_ub, bounds=[(None, None)] * n, method="highs")
        r_hi = linprog(-c, A_ub=A_ub, b_ub=b_ub, bounds=[(None, None)] * n, method="highs")
        if r_lo.status != 0 or r_hi.status != 0:
            raise DegenerateCone("wedge of the cone is unbounded or empty")
        lo.append(float(r_lo.x[i]))
        hi.append(float(r_hi.x[i]))
    return tuple(lo), tuple(hi)


def _infimum(spec: ConeSpec, x: np.ndarray, sign: float, tol: float, cap: float) -> float:
    one = np.asarray(spec.one)

    def ok(lam):
        return spec.membership(lam * one + sign * x)

    if ok(0.0):
        return 0.0
    hi = 1.0
    while not ok(hi):
        hi *= 2.0
        if hi > cap:
            raise Unbounded(f"no lambda <= {cap:g} puts the point in the cone")
    lo = 0.0 if hi == 1.0 else hi / 2.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if ok(mid):
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def cone_norm(spec: ConeSpec, x: Sequence[float], tol: float = BISECTION_TOL, cap: float = LAMBDA_CAP) -> float:
    x = np.asarray(x, dtype=float)
    if x.shape != (spec.nvars,):
        raise ValueError(f"expected a vector of length {spec.nvars}")
    if not np.any(x):
        return 0.0
    return max(_infimum(spec, x, -1.0, tol, cap), _infimum(spec, x, 1.0, tol, cap))


def cone_norm_complex(spec: ConeSpec, z: Sequence[complex], tol: float = BISECTION_TOL,
                      cap: float = LAMBDA_CAP) -> float:
    z = np.asarray(z, dtype=complex)
    return max(cone_norm(spec, z.real, tol, cap), cone_norm(spec, z.imag, tol, cap))


def cone_wedge(
    spec: ConeSpec,
    *,
    samples: int = 100_000,
    seed: int = 0,
    floor: float = MEASURE_FLOOR,
    box: tuple | None = None,
) -> RealWedge:
    """The wedge ``{x in C : one - x in C}`` as a :class:`RealWedge`.

    The bounding box comes from the cone (``wedge_box``) unless given.  The
    measure is a Monte Carlo volume fraction of that box.
    """
    box = box or spec.wedge_box
    if box is None:
        raise ValueError("a bounding box is required for oracle cones")
    one = np.asarray(spec.one)

    def ind(x):
        x = np.asarray(x, dtype=float).reshape(-1, spec.nvars)
        return spec.member_many(x) & spec.member_many(one - x)

    w = RealWedge.from_indicator(ind, spec.nvars, lower=box[0], upper=box[1], samples=samples,
                                 seed=seed, name=f"{spec.kind}-wedge")
    if w.measure_estimate < floor:
        raise DegenerateCone(f"wedge measure {w.measure_estimate:.3g} below floor {floor:g}")
    return w


@dataclass(frozen=True)
class FourPartDecomposition:
    """``z = (xplus - xminus + i yplus - i yminus) / 2`` with parts in the closed cone.

    Parts are exact rationals so recomposition is an identity, not an
    approximation.
    """

    xplus: tuple
    xminus: tuple
    yplus: tuple
    yminus: tuple
    norm: Fraction

    def recompose(self) -> list[tuple[Fraction, Fraction]]:
        return [((a - b) / 2, (c - d) / 2)
                for a, b, c, d in zip(self.xplus, self.xminus, self.yplus, self.yminus)]

    def recompose_complex(self) -> np.ndarray:
        return np.array([complex(float(re), float(im)) for re, im in self.recompose()])

    def parts(self) -> list[np.ndarray]:
        return [np.array([float(v) for v in p]) for p in (self.xplus, self.xminus, self.yplus, self.yminus)]

    def pullback(self, f: Callable[[np.ndarray], complex]) -> Callable:
        """``g(a, b, c, d) = f((a x+ - b x- + i c y+ - i d y-) / 2)``; ``g(1,1,1,1) = f(z)``."""
        xp, xm, yp, ym = self.parts()

        def g(a, b, c, d):
            return f((a * xp - b * xm + 1j * c * yp - 1j * d * ym) / 2)

        return g


def four_part_decompose(spec: ConeSpec, z: Sequence[complex], tol: float = BISECTION_TOL) -> FourPartDecomposition:
    """Split ``z`` into four closed-cone vectors of cone norm below 1/4.

    With ``r = ||z||_C`` the parts are ``Re z + r one``, ``r one - Re z`` and
    likewise for ``Im z``; each has norm at most ``2 r`` up to the bisection
    tolerance.
    """
    z = np.asarray(z, dtype=complex)
    r = cone_norm_complex(spec, z, tol)
    # bisection returns within tol of the infimum; pad so the shifted parts stay in the closure
    r_pad = r + tol if r > 0 else 0.0
    if r_pad >= 0.125:
        raise NormTooLarge(f"cone norm {r:.6g} is not below 1/8")
    R = Fraction(r_pad)
    one = [Fraction(v) for v in spec.one]
    re = [Fraction(float(v)) for v in z.real]
    im = [Fraction(float(v)) for v in z.imag]
    return FourPartDecomposition(
        tuple(a + R * o for a, o in zip(re, one)),
        tuple(R * o - a for a, o in zip(re, one)),
        tuple(b + R * o for b, o in zip(im, one)),
        tuple(R * o - b for b, o in zip(im, one)),
        R,
    )


def in_closed_cone(spec: ConeSpec, x: Sequence[float], slack: float = 1e-9) -> bool:
    """Closure membership: ``x + slack * one`` lies in the open cone."""
    return spec.membership(np.asarray(x, dtype=float) + slack * np.asarray(spec.one))


def wedge_report(wedge: RealWedge, samples: int = 10_000) -> dict:
    ok, bad = wedge.check_starlike(samples)
    return {
        "name": wedge.name,
        "nvars": wedge.nvars,
        "measure_estimate": wedge.measure_estimate,
        "measure_lower": wedge.measure_lower,
        "in_positive_orthant": wedge.check_orthant(),
        "starlike": ok,
        "starlike_violations": bad,
        "lower": list(wedge.lower),
        "upper": list(wedge.upper),
    }
