"""Slice selection, Lagrange reconstruction across slices, and the l1 constants.

A polynomial of degree ``d`` bounded by 1 on a set ``S`` of measure ``p`` in
the unit box has l1 norm at most ``K * C**d``.  The bound is proved by
induction on the number of variables: pick ``d + 1`` well separated
hyperplanes ``x_axis = x_i`` whose sections of ``S`` are still large, bound
the restricted polynomials by induction, and glue them back together with
the Lagrange basis in the sliced variable.

Constants used here
-------------------
One variable (sections are points, so the rich set is ``S`` itself)::

    separation = p / (d + 1),  sections = points of S

``n >= 2`` variables (sections with measure >= p/2 occupy at least p/2 of
the axis by Fubini)::

    separation = p / (2 (d + 1)),  section measure >= p / 2

With nodes at least ``separation`` apart the Lagrange basis satisfies::

    sum_i prod_{j != i} (1 + |x_j|) / |x_i - x_j|
        <= (2 / separation)^d * 2^d / d!

and ``(d + 1)^d / d! <= e^d`` turns this into ``(4 e / (q p))^d`` with
``q = 1`` in one variable and ``q = 1/2`` above.  Hence ``K_n = 1`` and
``C_n(p) = 4 e / (q_n p) * C_{n-1}(q_n p)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import DuplicateNodes, InsufficientMeasure, InvalidMeasure
from .polynomial import MultiPoly, is_exact_scalar
from .sampling import Indicator, clopper_pearson_lower, ordered_map, stream

E_UPPER = math.e  # the double nearest e lies above e


@dataclass(frozen=True)
class SliceSelection:
    axis: int
    nodes: tuple
    separation: float
    slice_measure: float
    measures: tuple = ()

    def __post_init__(self):
        gaps = np.diff(np.asarray(self.nodes, dtype=float))
        if np.any(gaps < self.separation * (1 - 1e-12)):
            raise ValueError("nodes closer than the declared separation")


@dataclass(frozen=True)
class BoundConstants:
    n: int
    p: float
    K: float
    C: float
    level_factors: tuple = field(default=(), compare=False)

    def bound(self, d: int) -> float:
        return self.K * self.C**d

    def chain(self, d: int) -> float:
        return chain_bound(self.n, self.p, d)


def _slice_indicator(indicator: Indicator, axis: int, value: float) -> Indicator:
    def sliced(points: np.ndarray) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        return indicator(np.insert(pts, axis, value, axis=1))

    return sliced


def slice_measures(
    indicator: Indicator,
    nvars: int,
    axis: int,
    positions: np.ndarray,
    *,
    samples_per_slice: int = 64,
    seed: int = 0,
    confidence: float = 0.99,
    workers: int = 1,
    block: int = 256,
) -> tuple[np.ndarray, np.ndarray]:
    """Estimated ``(n-1)``-measure of each section ``{x_axis = c} & S``.

    Returns ``(estimate, lower_confidence_bound)`` arrays.  In one variable
    the section is a single point and its counting measure is exact.
    """
    positions = np.asarray(positions, dtype=float)
    if nvars == 1:
        hit = np.asarray(indicator(positions.reshape(-1, 1)), dtype=bool).astype(float)
        return hit, hit.copy()
    m = samples_per_slice
    blocks = [list(range(s, min(s + block, len(positions)))) for s in range(0, len(positions), block)]

    def run(idx):
        pts = np.concatenate([stream(seed, axis, k).random((m, nvars - 1)) for k in idx])
        full = np.insert(pts, axis, np.repeat(positions[idx], m), axis=1)
        hits = np.asarray(indicator(full), dtype=bool).reshape(len(idx), m)
        return hits.sum(axis=1)

    hits = np.concatenate(ordered_map(run, blocks, workers)) if blocks else np.zeros(0)
    est = hits / m
    lower = np.array([clopper_pearson_lower(int(h), m, confidence) for h in hits])
    return est, lower


def select_slices(
    indicator: Indicator,
    nvars: int,
    axis: int,
    count: int,
    target_measure: float,
    *,
    separation: float | None = None,
    samples: int = 100_000,
    seed: int = 0,
    confidence: float = 0.99,
    grid: int | None = None,
    workers: int = 1,
) -> SliceSelection:
    """Pick ``count`` nodes along ``axis`` whose sections are rich.

    A node qualifies when the lower confidence bound of its section measure is
    at least ``target_measure``.  Nodes are chosen greedily from the left on a
    cell-centred grid, each at least ``separation`` (default
    ``target_measure / count``) beyond the previous one.

    Raises :class:`InsufficientMeasure` when fewer than ``count`` nodes fit.
    """
    if count < 1:
        raise ValueError("count must be at least 1")
    if separation is None:
        separation = target_measure / count
    if separation <= 0:
        raise InsufficientMeasure("non-positive separation requested")
    if grid is None:
        per = 8 if nvars == 1 else 4
        grid = int(min(20_000 if nvars == 1 else 8192, max(64, math.ceil(per * count / separation))))
    positions = (np.arange(grid) + 0.5) / grid
    m = max(64, samples // grid)
    est, lower = slice_measures(
        indicator, nvars, axis, positions, samples_per_slice=m, seed=seed, confidence=confidence, workers=workers
    )
    nodes: list[float] = []
    chosen: list[float] = []
    for pos, lo in zip(positions, lower):
        if lo >= target_measure and (not nodes or pos - nodes[-1] >= separation):
            nodes.append(float(pos))
            chosen.append(float(lo))
            if len(nodes) == count:
                break
    if len(nodes) < count:
        raise InsufficientMeasure(
            f"only {len(nodes)} of {count} sections with measure >= {target_measure:g} "
            f"and spacing >= {separation:g} found along axis {axis}"
        )
    return SliceSelection(axis, tuple(nodes), float(separation), min(chosen), tuple(chosen))


def _check_nodes(nodes: Sequence) -> None:
    if len(set(nodes)) != len(nodes):
        raise DuplicateNodes(f"interpolation nodes must be distinct: {list(nodes)}")


def _exact_basis(nodes: Sequence) -> list[list]:
    """Monomial coefficients of each Lagrange basis polynomial, exactly."""
    basis = []
    for i, xi in enumerate(nodes):
        coeffs = [Fraction(1)]
        denom = Fraction(1)
        for j, xj in enumerate(nodes):
            if j == i:
                continue
            # multiply by (x - xj)
            nxt = [Fraction(0)] * (len(coeffs) + 1)
            for k, c in enumerate(coeffs):
                nxt[k + 1] += c
                nxt[k] -= c * xj
            coeffs = nxt
            denom *= xi - xj
        basis.append([c / denom for c in coeffs])
    return basis


def _vandermonde_solve(nodes: Sequence, values: np.ndarray) -> np.ndarray:
    """Monomial coefficients ``a`` with ``sum_k a[k] x_i^k = values[i]`` (Bjorck-Pereyra).

    ``values`` may carry extra columns, each solved independently.  The
    Newton-form recurrence is markedly more accurate than a generic solve
    for ordered nodes.
    """
    x = np.asarray(nodes, dtype=float)
    order = np.argsort(x)
    x = x[order]
    vals = np.asarray(values)
    a = vals[order].reshape(len(x), -1).astype(np.result_type(vals, float))
    n = len(x) - 1
    for k in range(n):
        a[k + 1:] = (a[k + 1:] - a[k:n]) / (x[k + 1:] - x[: n - k])[:, None]
    for k in range(n - 1, -1, -1):
        a[k:n] = a[k:n] - x[k] * a[k + 1:]
    a = a.reshape(vals.shape)
    return a


def lagrange_reconstruct(slice_polys: Sequence[MultiPoly], nodes: Sequence, axis: int = 0) -> MultiPoly:
    """Polynomial of lowest degree in variable ``axis`` matching each slice.

    ``slice_polys[i]`` is the restriction to ``x_axis = nodes[i]``.  The
    result is exact when every node and coefficient is exact (direct Lagrange
    basis over the rationals); otherwise the basis is built from barycentric
    weights in floating point.
    """
    if len(slice_polys) != len(nodes):
        raise ValueError("need exactly one slice polynomial per node")
    if not nodes:
        raise ValueError("at least one node is required")
    _check_nodes(nodes)
    nv = slice_polys[0].nvars
    if any(p.nvars != nv for p in slice_polys):
        raise ValueError("slice polynomials must share a variable count")
    exact = all(is_exact_scalar(x) for x in nodes) and all(p.is_exact for p in slice_polys)
    if not exact:
        keys = sorted({e for p in slice_polys for e in p.terms})
        vals = np.array([[complex(p.coefficient(e)) for e in keys] for p in slice_polys]).reshape(len(nodes), -1)
        if not np.any(vals.imag):
            vals = vals.real
        coef = _vandermonde_solve(nodes, vals)
        out = {}
        for col, e in enumerate(keys):
            for k in range(len(nodes)):
                c = coef[k, col]
                if c != 0:
                    out[e[:axis] + (k,) + e[axis:]] = complex(c) if np.iscomplexobj(coef) else float(c)
        return MultiPoly(nv + 1, out)
    basis = _exact_basis([Fraction(x) for x in nodes])
    out: dict = {}
    for coeffs, poly in zip(basis, slice_polys):
        for e, c in poly.terms.items():
            for k, b in enumerate(coeffs):
                if b == 0:
                    continue
                key = e[:axis] + (k,) + e[axis:]
                val = b * c
                out[key] = out[key] + val if key in out else val
    return MultiPoly(nv + 1, out)


def basis_l1_factors(nodes: Sequence) -> list:
    """``prod_{j != i} (1 + |x_j|) / |x_i - x_j|`` for each node, exact if possible."""
    _check_nodes(nodes)
    exact = all(is_exact_scalar(x) for x in nodes)
    xs = [Fraction(x) for x in nodes] if exact else [float(x) for x in nodes]
    out = []
    for i, xi in enumerate(xs):
        f = Fraction(1) if exact else 1.0
        for j, xj in enumerate(xs):
            if j != i:
                f *= (1 + abs(xj)) / abs(xi - xj)
        out.append(f)
    return out


def l1_bound_from_slices(slice_bounds: Sequence, nodes: Sequence):
    """Upper bound on the l1 norm of the reconstruction from slice l1 bounds."""
    if len(slice_bounds) != len(nodes):
        raise ValueError("need one bound per node")
    return sum((b * f for b, f in zip(slice_bounds, basis_l1_factors(nodes))), 0)


def _rich_fraction(n: int) -> float:
    return 1.0 if n == 1 else 0.5


def node_separation(n: int, p: float, d: int) -> float:
    """Separation used at the top level of the recursion in ``n`` variables."""
    return _rich_fraction(n) * p / (d + 1)


def chain_factor(n: int, p: float, d: int) -> float:
    """Worst-case Lagrange factor at one level, before the Stirling step."""
    delta = node_separation(n, p, d)
    return (2.0 / delta) ** d * 2.0**d / math.factorial(d)


def chain_bound(n: int, p: float, d: int) -> float:
    """The full recursive bound on ``||h||_1`` for degree ``d``, no Stirling relaxation."""
    total = 1.0
    for level in range(n, 0, -1):
        total *= chain_factor(level, p, d)
        p *= _rich_fraction(level)
    return total


def _check_measure(p) -> None:
    if not (0 < p <= 1):
        raise InvalidMeasure(f"measure must lie in (0, 1], got {p}")


def compute_constants(n: int, p: float) -> BoundConstants:
    """``(K, C)`` with ``||h||_1 <= K C^d`` whenever ``|h| <= 1`` on a set of measure ``>= p``."""
    if n < 0:
        raise ValueError("dimension must be non-negative")
    _check_measure(p)
    C = 1.0
    factors = []
    q = p
    for level in range(n, 0, -1):
        f = 4.0 * E_UPPER / (_rich_fraction(level) * q)
        factors.append(f)
        C *= f
        q *= _rich_fraction(level)
    return BoundConstants(n=n, p=float(p), K=1.0, C=C, level_factors=tuple(factors))


def _exp_lower(d: int, terms: int) -> Fraction:
    """Partial sum of the exponential series; a rational lower bound on ``e^d``."""
    total, term = Fraction(0), Fraction(1)
    for k in range(terms):
        total += term
        term = term * d / (k + 1)
    return total


def stirling_certificate(d_max: int = 30) -> list[tuple[int, bool, bool]]:
    """Exact check of ``d^d/d! <= e^d`` and ``(d+1)^d/d! <= e^d`` for ``d = 1..d_max``.

    ``e^d`` is replaced by a partial sum of its series, which lies below it,
    so a pass is a proof.  Returns ``(d, first_ok, second_ok)`` per degree.
    """
    out = []
    for d in range(1, d_max + 1):
        lower = _exp_lower(d, 4 * d + 24)
        fact = math.factorial(d)
        out.append((d, Fraction(d**d, fact) <= lower, Fraction((d + 1) ** d, fact) <= lower))
    return out


@dataclass
class ChainNode:
    """One level of an executed slice chain; used for diagnostics."""

    nodes: tuple
    factors: list
    children: list
    bound: float


def slice_chain_bound(
    h: MultiPoly,
    indicator: Indicator,
    p: float,
    *,
    degree: int | None = None,
    samples: int = 20_000,
    seed: int = 0,
    workers: int = 1,
) -> ChainNode:
    """Run the inductive argument on a concrete polynomial and set.

    Sections are selected with the same separations as :func:`compute_constants`;
    leaves carry ``|h|`` at an actual point of the set.  The returned bound
    therefore dominates ``||h||_1`` and, when ``|h| <= 1`` on the set, is at
    most ``chain_bound(n, p, degree)``.
    """
    _check_measure(p)
    n = h.nvars
    d = h.degree if degree is None else degree
    d = max(d, 0)
    if n == 0:
        val = abs(h.coefficient(()))
        return ChainNode((), [], [], val)
    q = _rich_fraction(n)
    target = 0.5 if n == 1 else q * p
    sel = select_slices(
        indicator, n, 0, d + 1, target, separation=node_separation(n, p, d),
        samples=samples, seed=seed, workers=workers,
    )
    factors = basis_l1_factors(sel.nodes)
    children = []
    for k, x in enumerate(sel.nodes):
        sub = h.substitute(0, x)
        child = slice_chain_bound(
            sub, _slice_indicator(indicator, 0, x), q * p, degree=d,
            samples=samples, seed=seed * 1_000_003 + k + 1, workers=workers,
        )
        children.append(child)
    bound = sum(f * c.bound for f, c in zip(factors, children))
    return ChainNode(sel.nodes, factors, children, float(bound))


def constants_table(n: int, p: float, d_max: int) -> list[dict]:
    """Rows of the ``constants`` report: envelope, exact chain and per-level factors."""
    consts = compute_constants(n, p)
    rows = []
    for d in range(d_max + 1):
        row = {"d": d, "K_C_pow_d": consts.bound(d), "chain": chain_bound(n, p, d)}
        q = p
        for level in range(n, 0, -1):
            row[f"factor_n{level}"] = chain_factor(level, q, d)
            q *= _rich_fraction(level)
        rows.append(row)
    return rows
