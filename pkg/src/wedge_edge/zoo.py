"""Test functions with known singular sets.

Each :class:`ZooFunction` bundles a vectorised evaluator, the l-infinity
distance from the origin to its singular set, the real wedge it is meant to
be restricted to, and a sampler for points where it is analytic.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from numpy.polynomial import chebyshev as npcheb

from .geometry import RealWedge
from .polynomial import MultiPoly
from .sampling import stream


class Profile(enum.Enum):
    SATISFIES_CUBES = "SatisfiesCubes"
    OPPOSITE_ORIENTATION = "OppositeOrientation"
    TOUCHES_AT_ORIGIN = "TouchesAtOrigin"
    ONE_VARIABLE_BARRIER = "OneVariableBarrier"
    SLICE_BOUND_ONLY = "SliceBoundOnly"


@dataclass(frozen=True)
class ZooFunction:
    name: str
    nvars: int
    params: dict
    evaluate: Callable[[np.ndarray], np.ndarray]
    singular_distance: float
    profile: Profile
    wedge: RealWedge
    ball: float
    analytic_sampler: Callable[[np.random.Generator, int], np.ndarray] = field(repr=False, default=None)
    extras: dict = field(default_factory=dict, repr=False)

    def __call__(self, points) -> np.ndarray:
        return self.evaluate(np.asarray(points, dtype=complex).reshape(-1, self.nvars))

    def analytic_points(self, count: int, seed: int = 0) -> np.ndarray:
        return self.analytic_sampler(stream(seed, 0xA7), count)


def _half_plane_points(rng, count, nvars, radius=2.0, min_im=0.05):
    """Points of the upper or lower polyhalfplane (half each) in a box."""
    re = rng.uniform(-radius, radius, size=(count, nvars))
    im = rng.uniform(min_im, radius, size=(count, nvars))
    sign = np.where(rng.random(count) < 0.5, 1.0, -1.0)[:, None]
    return re + 1j * sign * im


def zoo_geom(t: float = 4.0) -> ZooFunction:
    """``1 / (1 - t z w)``; singular on ``zw = 1/t``, nearest point ``z = w = 1/sqrt(t)``."""
    if t <= 0:
        raise ValueError("t must be positive")
    r = 1.0 / math.sqrt(t)

    def f(z):
        return 1.0 / (1.0 - t * z[:, 0] * z[:, 1])

    return ZooFunction(
        "geom", 2, {"t": float(t)}, f, r, Profile.OPPOSITE_ORIENTATION,
        RealWedge.box(0.9 * r, 2), 0.9 * r, lambda rng, m: _half_plane_points(rng, m, 2),
    )


def _upper_sqrt(z: np.ndarray) -> np.ndarray:
    """Square root with argument in ``[0, pi]`` for ``Im z >= 0``."""
    arg = np.angle(z)
    arg = np.where(arg < 0, arg + 2 * np.pi, arg)
    return np.sqrt(np.abs(z)) * np.exp(0.5j * arg)


def zoo_sqrt() -> ZooFunction:
    """``sqrt(z w)`` taken as ``sqrt(z) sqrt(w)`` per sheet.

    On the closed upper polyhalfplane both factors use arguments in
    ``[0, pi]``; on the closed lower one, ``[-pi, 0]``.  The two sheets agree
    on the first and third real quadrants and disagree on the other two, so
    the function lives on two squares that touch only at the origin.
    """

    def f(z):
        z = np.asarray(z, dtype=complex)
        upper = np.all(z.imag >= 0, axis=1)
        lower = ~upper & np.all(z.imag <= 0, axis=1)
        out = np.sqrt(z[:, 0] * z[:, 1])
        up = _upper_sqrt(z[upper, 0]) * _upper_sqrt(z[upper, 1])
        lo = np.conj(_upper_sqrt(np.conj(z[lower, 0])) * _upper_sqrt(np.conj(z[lower, 1])))
        out[upper] = up
        out[lower] = lo
        return out

    return ZooFunction(
        "sqrt", 2, {}, f, 0.0, Profile.TOUCHES_AT_ORIGIN,
        RealWedge.box(1.0, 2), 0.0, lambda rng, m: _half_plane_points(rng, m, 2),
    )


def onevar_poles(seed: int = 0, count: int = 64) -> tuple[np.ndarray, np.ndarray]:
    """Poles dense in ``[1, 3] u [-3, -1]`` and weights ``2^-n``.

    The first two poles sit at ``1 + 1/128`` and ``-(1 + 1/64)`` so the
    nearest singularity is pinned just outside the unit interval.
    """
    rng = stream(seed, 0x0E)
    rest = rng.uniform(1.0, 3.0, size=count - 2) * np.where(rng.random(count - 2) < 0.5, -1.0, 1.0)
    poles = np.concatenate([[1.0 + 1.0 / 128, -(1.0 + 1.0 / 64)], rest])
    weights = 2.0 ** -np.arange(1, count + 1)
    return poles, weights


def zoo_onevar(seed: int = 0) -> ZooFunction:
    """``sum_n 2^-n / (z - x_n)`` truncated at 64 poles off ``(-1, 1)``."""
    poles, weights = onevar_poles(seed)

    def f(z):
        z = np.asarray(z, dtype=complex)[:, 0]
        return np.sum(weights[None, :] / (z[:, None] - poles[None, :]), axis=1)

    def sampler(rng, m):
        return _half_plane_points(rng, m, 1)

    return ZooFunction(
        "onevar", 1, {"seed": seed}, f, float(np.min(np.abs(poles))), Profile.ONE_VARIABLE_BARRIER,
        RealWedge.box(1.0, 1), 1.0, sampler, {"poles": poles, "weights": weights},
    )


def zoo_exp() -> ZooFunction:
    """``exp(z1 + z2)``; entire."""

    def f(z):
        return np.exp(z[:, 0] + z[:, 1])

    return ZooFunction(
        "exp", 2, {}, f, math.inf, Profile.SATISFIES_CUBES, RealWedge.box(1.0, 2), 0.25,
        lambda rng, m: _half_plane_points(rng, m, 2),
    )


def zoo_const(k: float = 1.0, nvars: int = 2) -> ZooFunction:
    def f(z):
        return np.full(len(z), complex(k))

    return ZooFunction(
        "const", nvars, {"k": k}, f, math.inf, Profile.SATISFIES_CUBES, RealWedge.box(1.0, nvars), 0.25,
        lambda rng, m: _half_plane_points(rng, m, nvars),
    )


def zoo_poly(poly: MultiPoly) -> ZooFunction:
    p = poly.to_float()

    def f(z):
        return p.evaluate_many(np.asarray(z, dtype=complex))

    n = poly.nvars
    return ZooFunction(
        "poly", n, {}, f, math.inf, Profile.SATISFIES_CUBES, RealWedge.box(1.0, n), 0.25,
        lambda rng, m: _half_plane_points(rng, m, n), {"poly": poly},
    )


# Chebyshev generating function ------------------------------------------------

def homogenized_chebyshev(d: int) -> MultiPoly:
    """``t^d T_d(x / t)`` as an exact polynomial in ``(x, t)``."""
    coeffs = npcheb.cheb2poly([0] * d + [1])
    return MultiPoly(2, {(k, d - k): int(round(c)) for k, c in enumerate(coeffs) if round(c) != 0})


def chebyshev_wedge() -> RealWedge:
    """``{0 < x < t < 1}``: there ``|t^d T_d(x/t)| <= t^d <= 1``."""

    def ind(p):
        p = np.asarray(p, dtype=float).reshape(-1, 2)
        return (p[:, 0] > 0) & (p[:, 0] < p[:, 1]) & (p[:, 1] < 1)

    return RealWedge(2, ind, 0.5, 0, (0.0, 0.0), (1.0, 1.0), 0.5, "chebyshev")


def chebyshev_parts(form: str):
    """``(numerator, denominator, d denominator / d(x, t))`` for the chosen form."""
    if form == "homogenized":
        return (lambda x, t: 1 - x, lambda x, t: 1 - 2 * x + t * t, lambda x, t: (-2 + 0 * t, 2 * t))
    if form == "standard":
        return (lambda x, t: 1 - x * t, lambda x, t: 1 - 2 * x * t + t * t,
                lambda x, t: (-2 * t, -2 * x + 2 * t))
    raise ValueError(f"unknown Chebyshev form {form!r}")


def find_singularities(
    form: str = "homogenized",
    starts: int = 200,
    seed: int = 0,
    box: float = 2.0,
    iters: int = 60,
    tol: float = 1e-12,
) -> np.ndarray:
    """Zeros of the generating-function denominator by minimum-norm Newton steps.

    One complex equation in two complex unknowns: each step moves along the
    conjugate gradient, ``delta = -F grad* / |grad|^2``.  Starts are uniform in
    ``[-box, box]^4`` (real and imaginary parts).  Returns converged roots
    inside the box where the numerator does not vanish.
    """
    num, den, grad = chebyshev_parts(form)
    rng = stream(seed, 0xCE)
    z = rng.uniform(-box, box, size=(starts, 2)) + 1j * rng.uniform(-box, box, size=(starts, 2))
    x, t = z[:, 0].copy(), z[:, 1].copy()
    for _ in range(iters):
        F = den(x, t)
        gx, gt = grad(x, t)
        norm2 = np.abs(gx) ** 2 + np.abs(gt) ** 2
        norm2 = np.where(norm2 == 0, 1.0, norm2)
        x = x - F * np.conj(gx) / norm2
        t = t - F * np.conj(gt) / norm2
    F = den(x, t)
    ok = (np.abs(F) < tol) & (np.abs(num(x, t)) > 1e-8)
    inside = (np.abs(x.real) <= box) & (np.abs(x.imag) <= box) & (np.abs(t.real) <= box) & (np.abs(t.imag) <= box)
    return np.column_stack([x, t])[ok & inside]


def zoo_chebyshev(form: str = "homogenized") -> ZooFunction:
    """Generating function of the homogenised Chebyshev polynomials.

    ``homogenized``: ``(1 - x) / (1 - 2x + t^2)``, which equals
    ``sum_d t^d T_d(x / t)``.  ``standard``: ``(1 - x t) / (1 - 2 x t + t^2)``,
    the classical ``sum_d T_d(x) t^d``.
    """
    num, den, _ = chebyshev_parts(form)

    def f(z):
        x, t = z[:, 0], z[:, 1]
        return num(x, t) / den(x, t)

    dist = math.sqrt(2) - 1 if form == "homogenized" else 1 / math.sqrt(3)

    def sampler(rng, m):
        # polydisc strictly inside the nearest singularity
        r = 0.9 * dist * np.sqrt(rng.random((m, 2)))
        return r * np.exp(2j * np.pi * rng.random((m, 2)))

    return ZooFunction(
        "chebyshev", 2, {"form": form}, f, dist, Profile.SLICE_BOUND_ONLY, chebyshev_wedge(), 0.9 * dist,
        sampler, {"form": form},
    )


def cauchy_riemann_error(fn: Callable, points: np.ndarray, step: float = 1e-5) -> np.ndarray:
    """Relative mismatch between real and imaginary difference quotients.

    For each point and coordinate, ``(f(z + h) - f(z - h)) / 2h`` is compared
    with ``(f(z + ih) - f(z - ih)) / 2ih``; analytic functions make them equal.
    Returns the worst relative error per point.
    """
    z = np.asarray(points, dtype=complex)
    m, n = z.shape
    worst = np.zeros(m)
    for j in range(n):
        e = np.zeros(n)
        e[j] = step
        dx = (fn(z + e) - fn(z - e)) / (2 * step)
        dy = (fn(z + 1j * e) - fn(z - 1j * e)) / (2j * step)
        err = np.abs(dx - dy) / np.maximum(1.0, np.abs(dx))
        worst = np.maximum(worst, err)
    return worst


ZOO = {
    "geom": lambda params: zoo_geom(float(params.get("t", 4.0))),
    "sqrt": lambda params: zoo_sqrt(),
    "onevar": lambda params: zoo_onevar(int(params.get("seed", 0))),
    "chebyshev": lambda params: zoo_chebyshev(str(params.get("form", "homogenized"))),
    "exp": lambda params: zoo_exp(),
    "const": lambda params: zoo_const(float(params.get("k", 1.0)), int(params.get("nvars", 2))),
}

ZOO_PARAMS = {
    "geom": {"t"}, "sqrt": set(), "onevar": {"seed"}, "chebyshev": {"form"}, "exp": set(), "const": {"k", "nvars"},
}


def make(name: str, params: dict | None = None) -> ZooFunction:
    params = dict(params or {})
    if name not in ZOO:
        raise KeyError(f"unknown zoo function {name!r}; choose from {sorted(ZOO)}")
    unknown = set(params) - ZOO_PARAMS[name]
    if unknown:
        raise KeyError(f"unknown parameter(s) {sorted(unknown)} for {name!r}")
    return ZOO[name](params)


def evaluation_grid(fn: ZooFunction, grid: int = 50, extent: float = 2.0) -> list[dict]:
    """``|f|`` on a real grid (a line in one variable, a square in two)."""
    axis = np.linspace(-extent, extent, grid)
    rows = []
    if fn.nvars == 1:
        vals = fn(axis.reshape(-1, 1).astype(complex))
        for x, v in zip(axis, vals):
            rows.append({"x": float(x), "abs_f": float(abs(v))})
    elif fn.nvars == 2:
        X, Y = np.meshgrid(axis, axis, indexing="ij")
        pts = np.column_stack([X.ravel(), Y.ravel()]).astype(complex)
        with np.errstate(divide="ignore", invalid="ignore"):
            vals = fn(pts)
        for (x, y), v in zip(pts.real, vals):
            rows.append({"z": float(x), "w": float(y), "abs_f": float(abs(v))})
    else:
        raise ValueError("grids are only produced for one or two variables")
    return rows
