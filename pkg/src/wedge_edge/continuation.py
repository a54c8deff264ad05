"""Germ reconstruction from restricted evaluations and continuation radii.

Along a ray ``x`` in the wedge, ``g(w) = f(w x)`` is analytic in the unit
disc whenever ``f`` satisfies the theorem's hypotheses: ``w x`` lies in the
upper (lower) polyhalfplane for ``Im w > 0`` (``< 0``) and in ``+-W`` for real
``w``.  The Taylor coefficients of ``g`` are the values ``h_d(x)`` of the
homogeneous parts of ``f``, so sampling ``g`` on a circle and applying a DFT
recovers ``h_d`` along many rays; one linear solve per degree then recovers
each ``h_d`` as a polynomial.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import (
    DomainViolation,
    HypothesisFailure,
    IllConditioned,
    NoFiniteN0,
    OverlapFailure,
)
from .geometry import RealWedge
from .interpolation import BoundConstants, compute_constants
from .polynomial import HomogeneousPoly, MultiPoly, monomial_exponents
from .sampling import ordered_map

DEFAULT_DEGREE = 24
DEFAULT_RHO = 0.9
EDGE_SHRINK = 1.0 - 1e-6
COND_LIMIT = 1e14
TINY = 1e-300

ComplexOracle = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class ContinuationDomain:
    """``Pi^n  u  W  u  B  u  -W  u  -Pi^n`` with ``B = (-ball, ball)^n``."""

    wedge: RealWedge
    ball: float = 0.0

    @property
    def nvars(self) -> int:
        return self.wedge.nvars

    def contains(self, points) -> np.ndarray:
        z = np.asarray(points, dtype=complex).reshape(-1, self.nvars)
        im = z.imag
        upper = np.all(im > 0, axis=1)
        lower = np.all(im < 0, axis=1)
        real = np.all(im == 0, axis=1)
        out = upper | lower
        if np.any(real):
            x = z[real].real
            ok = self.wedge.contains(x) | self.wedge.contains(-x)
            if self.ball > 0:
                ok |= np.max(np.abs(x), axis=1) < self.ball
            out[real] = ok
        return out

    def overlap_measure(self) -> float:
        """Lebesgue measure of the real neighbourhood of 0 joining ``W`` and ``-W``."""
        return (2.0 * self.ball) ** self.nvars if self.ball > 0 else 0.0

    def check_hypotheses(self) -> None:
        if self.overlap_measure() <= 0:
            raise OverlapFailure("overlap measure 0: the real pieces meet only at the origin")
        if not self.wedge.check_orthant():
            raise HypothesisFailure("wedge is not contained in the positive orthant")
        if self.wedge.measure_estimate <= 0:
            raise HypothesisFailure("wedge has measure 0")


class RestrictedOracle:
    """Evaluation oracle that refuses points outside its declared domain.

    ``evaluate`` and ``domain_check`` are vectorised over the rows of an
    ``(m, nvars)`` complex array.
    """

    def __init__(self, nvars: int, evaluate: ComplexOracle, domain_check: Callable[[np.ndarray], np.ndarray]):
        self.nvars = nvars
        self._evaluate = evaluate
        self.domain_check = domain_check
        self.probes = 0
        self._lock = threading.Lock()

    @classmethod
    def on_domain(cls, evaluate: ComplexOracle, domain: ContinuationDomain) -> RestrictedOracle:
        return cls(domain.nvars, evaluate, domain.contains)

    def __call__(self, points) -> np.ndarray:
        z = np.asarray(points, dtype=complex).reshape(-1, self.nvars)
        ok = np.asarray(self.domain_check(z), dtype=bool)
        if not np.all(ok):
            bad = z[~ok][0]
            raise DomainViolation(f"probe {bad} lies outside the declared domain")
        with self._lock:
            self.probes += len(z)
        return np.asarray(self._evaluate(z), dtype=complex).reshape(-1)


def circle_points(M: int, rho: float, phase: float = 0.0) -> np.ndarray:
    """``rho * exp(2 pi i k / M)`` with exactly real/imaginary points where they belong."""
    k = np.arange(M)
    theta = 2.0 * np.pi * k / M + phase
    w = rho * np.exp(1j * theta)
    if phase == 0.0 and M % 4 == 0:
        q = M // 4
        w[0], w[q], w[2 * q], w[3 * q] = rho, 1j * rho, -rho, -1j * rho
    return w


def _dft_coefficients(values: np.ndarray, D: int, rho: float) -> np.ndarray:
    M = len(values)
    c = np.fft.fft(values)[: D + 1] / M
    return c / rho ** np.arange(D + 1)


def ray_coefficients(
    oracle: RestrictedOracle, x: Sequence[float], D: int = DEFAULT_DEGREE, rho: float = DEFAULT_RHO,
    M: int | None = None,
) -> np.ndarray:
    """``c_d ~ h_d(x)`` for ``d = 0..D`` from ``g(w) = f(w x)`` on ``|w| = rho``."""
    if not 0 < rho < 1:
        raise ValueError("rho must lie in (0, 1)")
    M = M or 4 * D + 4
    if M < D + 1:
        raise ValueError("need at least D + 1 circle points")
    x = np.asarray(x, dtype=float)
    w = circle_points(M, rho)
    vals = oracle(w[:, None] * x[None, :])
    return _dft_coefficients(vals, D, rho)


@dataclass
class RayResult:
    point: np.ndarray
    coefficients: np.ndarray
    shrink: int
    max_abs: float


def _ray_with_check(oracle, x, D, rho, M, max_halvings=40):
    """Ray coefficients, shrinking the ray until the series reproduces ``g`` inside."""
    check_w = circle_points(8, rho / 2, phase=np.pi / 8)
    for k in range(max_halvings + 1):
        xk = x * 0.5**k
        w = circle_points(M, rho)
        vals = oracle(w[:, None] * xk[None, :])
        c = _dft_coefficients(vals, D, rho)
        gmax = float(np.max(np.abs(vals)))
        inner = oracle(check_w[:, None] * xk[None, :])
        series = np.polynomial.polynomial.polyval(check_w, c)
        tol = gmax * (4.0 * 2.0 ** (-D) + 1e-9) + 1e-300
        if np.all(np.isfinite(vals)) and np.max(np.abs(series - inner)) <= tol:
            return RayResult(xk, c, k, gmax)
    raise HypothesisFailure("ray coefficients never stabilised; the function is not analytic near 0")


def _multinomial(exp) -> float:
    d = sum(exp)
    out = math.factorial(d)
    for e in exp:
        out //= math.factorial(e)
    return float(out)


@dataclass
class GermEstimate:
    nvars: int
    parts: list
    l1_bounds: list
    fitted_K: float
    fitted_C: float
    radius: float
    infinite: bool
    residuals: list = field(default_factory=list)
    noise_floors: list = field(default_factory=list)
    conditions: list = field(default_factory=list)
    regression_C: float = float("nan")
    ray_shrinks: list = field(default_factory=list)
    rays: int = 0
    probes: int = 0

    @property
    def degree(self) -> int:
        return len(self.parts) - 1

    def truncated(self) -> MultiPoly:
        total = MultiPoly.zero(self.nvars)
        for h in self.parts:
            total = total + h.base
        return total

    def evaluate(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=complex).reshape(-1, self.nvars)
        out = np.zeros(len(pts), dtype=complex)
        for h in self.parts:
            if not h.base.is_zero:
                out += h.evaluate_many(pts)
        return out

    def abs_terms(self, points) -> np.ndarray:
        """``|h_d(x)|`` for each point (rows) and degree (columns)."""
        pts = np.asarray(points, dtype=float).reshape(-1, self.nvars)
        cols = [np.abs(h.evaluate_many(pts)) if not h.base.is_zero else np.zeros(len(pts)) for h in self.parts]
        return np.stack(cols, axis=1)

    def to_dict(self) -> dict:
        return {
            "nvars": self.nvars,
            "degree": self.degree,
            "l1_bounds": [float(b) for b in self.l1_bounds],
            "fitted_K": self.fitted_K,
            "fitted_C": self.fitted_C,
            "radius": None if self.infinite else self.radius,
            "infinite_radius": self.infinite,
            "regression_C": self.regression_C,
            "residuals": [float(r) for r in self.residuals],
            "noise_floors": [float(r) for r in self.noise_floors],
            "conditions": [float(c) for c in self.conditions],
            "max_ray_shrink": max(self.ray_shrinks, default=0),
            "rays": self.rays,
            "probes": self.probes,
            "parts": [h.base.to_dict() for h in self.parts],
        }


def fit_envelope(l1_bounds: Sequence[float]) -> tuple[float, float, float]:
    """``(K, C, regression_C)`` for the exponential envelope of the bounds.

    ``K = max(1, b_0)`` and ``C = max_{d >= 1} (b_d / K)^(1/d)``, so
    ``b_d <= K C^d`` for every ``d``.  ``C = 0`` when all higher bounds vanish.
    The log-linear regression slope is returned only as a diagnostic.
    """
    b = np.asarray(l1_bounds, dtype=float)
    K = max(1.0, float(b[0]))
    C = 0.0
    for d in range(1, len(b)):
        if b[d] > 0:
            C = max(C, (b[d] / K) ** (1.0 / d))
    # guard the rounding of the d-th root
    C *= 1 + 1e-12
    idx = np.nonzero(b > 0)[0]
    if len(idx) >= 2:
        slope = np.polyfit(idx, np.log(np.maximum(b[idx], TINY)), 1)[0]
        reg = float(np.exp(slope))
    else:
        reg = 0.0
    return K, C, reg


def direction_count(nvars: int, D: int) -> int:
    return math.comb(D + nvars - 1, nvars - 1) if nvars > 0 else 1


def reconstruct_germ(
    oracle: RestrictedOracle,
    wedge: RealWedge,
    D: int = DEFAULT_DEGREE,
    rays: int | None = None,
    rho: float = DEFAULT_RHO,
    *,
    seed: int = 0,
    workers: int = 1,
    cond_limit: float = COND_LIMIT,
    infinite_tol: float = 0.0,
) -> GermEstimate:
    """Recover ``h_0 .. h_D`` from circle samples along rays of the wedge.

    Rays are Halton points of the wedge pushed out to ``1 - 1e-6`` of the
    wedge boundary.  A ray whose truncated series fails to reproduce ``g`` on
    the half-radius circle is halved until it does.
    """
    n = wedge.nvars
    need = direction_count(n, D)
    rays = rays or 2 * need
    if rays < need:
        raise ValueError(f"need at least {need} rays for degree {D}")
    M = 4 * D + 4
    pts = wedge.quasi_sample(4 * rays, seed=seed)
    pts = pts[np.all(pts > 0, axis=1)]
    if len(pts) < rays:
        raise IllConditioned("wedge yielded too few interior directions")
    pts = pts[:rays]
    dirs = pts / np.max(np.abs(pts), axis=1, keepdims=True)
    ext = wedge.radial_extent(dirs)
    ray_pts = dirs * (ext * EDGE_SHRINK)[:, None]
    results = ordered_map(lambda x: _ray_with_check(oracle, x, D, rho, M), list(ray_pts), workers)

    X = np.array([r.point for r in results])
    norms = np.linalg.norm(X, axis=1)
    V = X / norms[:, None]
    coeffs = np.array([r.coefficients for r in results])  # (rays, D+1)
    eps = np.finfo(float).eps
    parts, bounds, residuals, floors, conds = [], [], [], [], []
    for d in range(D + 1):
        exps = monomial_exponents(n, d)
        scale = np.sqrt([_multinomial(e) for e in exps])
        A = np.column_stack([np.prod(V ** np.asarray(e), axis=1) for e in exps]) * scale
        b = coeffs[:, d] / norms**d
        y, _, rank, sv = np.linalg.lstsq(A.astype(complex), b, rcond=None)
        cond = float(sv[0] / sv[-1]) if sv[-1] > 0 else float("inf")
        if cond > cond_limit or rank < len(exps):
            raise IllConditioned(f"degree {d} direction matrix has condition number {cond:.3g}")
        coef = y * scale
        # residual relative to the size of the ray functions, so empty degrees read as noise
        ray_scale = np.array([r.max_abs for r in results]) / (rho**d * norms**d)
        res = float(np.linalg.norm(A @ y - b) / max(np.linalg.norm(b), np.linalg.norm(ray_scale), TINY))
        # DFT rounding per ray, propagated through the solve
        ray_noise = 8 * eps * ray_scale
        floor = 10.0 * float(np.max(scale)) * math.sqrt(len(exps)) * float(np.linalg.norm(ray_noise)) / sv[-1]
        terms = {e: complex(c) for e, c in zip(exps, coef)}
        terms = {e: (c.real if c.imag == 0 else c) for e, c in terms.items()}
        poly = MultiPoly(n, terms)
        l1 = float(poly.l1_norm())
        if l1 <= floor:
            poly, l1 = MultiPoly.zero(n), 0.0
        parts.append(HomogeneousPoly(poly, d))
        bounds.append(l1)
        residuals.append(res)
        floors.append(floor)
        conds.append(cond)
    K, C, reg = fit_envelope(bounds)
    infinite = C <= infinite_tol
    radius = math.inf if infinite else 1.0 / C
    germ = GermEstimate(
        n, parts, bounds, K, C, radius, infinite, residuals, floors, conds, reg,
        [r.shrink for r in results], rays, oracle.probes,
    )
    for d, b in enumerate(bounds):
        assert b <= K * C**d * (1 + 1e-9) or b == 0, "envelope must dominate every bound"
    return germ


def certified_radius(constants: BoundConstants, pointwise_bound: float = 1.0) -> float:
    """``1 / C``: the l-infinity radius on which the bounded series converges.

    The radius itself does not depend on ``pointwise_bound``; it only scales
    the tail bound, see :func:`tail_bound`.
    """
    return 1.0 / constants.C


def tail_bound(constants: BoundConstants, pointwise_bound: float, D: int, r: float) -> float:
    """``N0 K (C r)^(D+1) / (1 - C r)`` for ``r < 1/C``."""
    q = constants.C * r
    if q >= 1:
        return math.inf
    return pointwise_bound * constants.K * q ** (D + 1) / (1 - q)


def _estimated_totals(partial_sums: np.ndarray) -> np.ndarray:
    """Partial sum plus a geometric tail extrapolated from the upper half of the degrees.

    Returns ``inf`` where the terms do not decay.
    """
    S = np.asarray(partial_sums, dtype=float)
    terms = np.diff(S, axis=1, prepend=0.0)
    terms = np.maximum(terms, 0.0)
    # degrees zeroed by the noise floor carry no information; use the top populated one
    populated = np.nonzero(np.any(terms > 0, axis=0))[0]
    D = int(populated[-1]) if len(populated) else 0
    terms = terms[:, : D + 1]
    total = S[:, -1]
    if D < 2:
        return total.copy()
    noise = 1e-13 * np.maximum(total, TINY)
    terms = np.where(terms > noise[:, None], terms, 0.0)
    h = D // 2
    hi = np.maximum(terms[:, D], terms[:, D - 1])
    mid = np.maximum(terms[:, h], terms[:, h - 1] if h >= 1 else 0.0)
    out = total.copy()
    with np.errstate(divide="ignore", invalid="ignore"):
        q = np.where(mid > 0, (hi / mid) ** (1.0 / (D - h)), np.where(hi > 0, np.inf, 0.0))
        tail = np.where(q < 1, hi * q / (1 - q), np.inf)
    out = np.where(hi > 0, out + tail, out)
    return out


def empirical_sn_selection(
    samples: Sequence[tuple[Sequence[float], Sequence[float]]] | np.ndarray,
    *,
    max_doublings: int = 64,
) -> tuple[float, float]:
    """Smallest ``N0 = 2^k`` whose level set holds more than half the samples.

    Each sample is ``(point, partial_sums)`` with ``partial_sums[d]`` the sum
    of ``|h_j(x)|`` for ``j <= d``.  A point whose terms are not decaying in
    the upper half of the degrees counts as divergent.
    """
    if isinstance(samples, np.ndarray):
        sums = samples
    else:
        sums = np.array([np.asarray(s, dtype=float) for _, s in samples])
    if len(sums) == 0:
        raise ValueError("no samples")
    totals = _estimated_totals(sums)
    N = 1.0
    for _ in range(max_doublings + 1):
        frac = float(np.mean(totals <= N))
        if frac > 0.5:
            return N, frac
        N *= 2.0
    raise NoFiniteN0(
        f"coefficient sums stay above {N / 2:.3g} on {1 - frac:.1%} of the wedge; "
        "the series does not converge on half of it"
    )


def germ_partial_sums(germ: GermEstimate, points: np.ndarray) -> np.ndarray:
    return np.cumsum(germ.abs_terms(points), axis=1)


@dataclass
class RadiusReport:
    germ: GermEstimate
    N0: float
    fraction: float
    constants: BoundConstants
    certified: float
    measure: float

    def to_dict(self) -> dict:
        out = {
            "fitted_radius": None if self.germ.infinite else self.germ.radius,
            "infinite_radius": self.germ.infinite,
            "fitted_K": self.germ.fitted_K,
            "fitted_C": self.germ.fitted_C,
            "N0": self.N0,
            "sn_fraction": self.fraction,
            "wedge_measure": self.measure,
            "K": self.constants.K,
            "C": self.constants.C,
            "certified_radius": self.certified,
            "tail_bound_half_radius": tail_bound(
                self.constants, self.N0, self.germ.degree, 0.5 / self.constants.C),
        }
        return out


def certify(
    oracle: RestrictedOracle,
    domain: ContinuationDomain,
    D: int = DEFAULT_DEGREE,
    rays: int | None = None,
    rho: float = DEFAULT_RHO,
    *,
    seed: int = 0,
    sn_samples: int = 2000,
    workers: int = 1,
) -> RadiusReport:
    """Reconstruct the germ, find ``N0`` on the wedge and apply the constants.

    The certified radius is reported in actual coordinates: the wedge's
    normalised box is scaled back by its smallest side.
    """
    domain.check_hypotheses()
    wedge = domain.wedge
    germ = reconstruct_germ(oracle, wedge, D, rays, rho, seed=seed, workers=workers)
    pts = wedge.sample(sn_samples, seed=seed + 1)
    N0, frac = empirical_sn_selection(germ_partial_sums(germ, pts))
    p = float(wedge.measure_lower)
    consts = compute_constants(wedge.nvars, min(1.0, p / 2))
    radius = float(np.min(wedge.span)) * certified_radius(consts, N0)
    return RadiusReport(germ, N0, frac, consts, radius, p)


@dataclass
class SweepRow:
    scale: float
    radius: float | None
    fitted_radius: float | None
    infinite: bool
    N0: float | None
    status: str

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def rescaling_sweep(
    evaluate: ComplexOracle,
    wedge: RealWedge,
    scales: Sequence[float],
    *,
    ball: float = 0.05,
    D: int = DEFAULT_DEGREE,
    rays: int | None = None,
    rho: float = DEFAULT_RHO,
    seed: int = 0,
    sn_samples: int = 2000,
    workers: int = 1,
) -> list[SweepRow]:
    """Certify on ``s * W`` for each scale ``s``.

    ``radius`` is the certified radius in actual coordinates, which scales
    with ``s`` as long as the hypotheses keep holding; ``fitted_radius`` is
    the germ's own envelope radius.  Hypothesis failures are recorded per row.
    """
    rows = []
    for s in scales:
        domain = ContinuationDomain(wedge.scaled(s), ball * s)
        oracle = RestrictedOracle.on_domain(evaluate, domain)
        try:
            rep = certify(oracle, domain, D, rays, rho, seed=seed, sn_samples=sn_samples, workers=workers)
        except HypothesisFailure as exc:
            rows.append(SweepRow(float(s), None, None, False, None, f"{type(exc).__name__}: {exc}"))
            continue
        g = rep.germ
        rows.append(SweepRow(float(s), rep.certified, None if g.infinite else g.radius, g.infinite, rep.N0, "ok"))
    return rows
