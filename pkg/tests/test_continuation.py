import math

import numpy as np
import pytest

from wedge_edge import zoo
from wedge_edge.continuation import (
    ContinuationDomain,
    RestrictedOracle,
    certified_radius,
    certify,
    empirical_sn_selection,
    fit_envelope,
    germ_partial_sums,
    ray_coefficients,
    reconstruct_germ,
    rescaling_sweep,
    tail_bound,
)
from wedge_edge.errors import DomainViolation, NoFiniteN0, OverlapFailure
from wedge_edge.geometry import RealWedge
from wedge_edge.interpolation import compute_constants
from wedge_edge.polynomial import MultiPoly, random_poly


def oracle_for(fn, wedge=None, ball=None):
    domain = ContinuationDomain(wedge or fn.wedge, fn.ball if ball is None else ball)
    return RestrictedOracle.on_domain(fn.evaluate, domain), domain


def geom(t):
    return lambda z: 1.0 / (1.0 - t * z[:, 0] * z[:, 1])


# the restricted oracle --------------------------------------------------------

def test_domain_membership():
    dom = ContinuationDomain(RealWedge.box(1.0, 2), 0.1)
    pts = np.array([[0.5 + 1j, 0.1 + 0.2j], [0.5, 0.5], [-0.5, -0.5], [0.05, -0.05], [0.5, -0.5], [1j, -1j]])
    assert dom.contains(pts).tolist() == [True, True, True, True, False, False]


def test_oracle_refuses_outside_points():
    oracle, _ = oracle_for(zoo.zoo_exp())
    with pytest.raises(DomainViolation):
        oracle(np.array([[0.5, -0.5]]))


def test_every_probe_is_checked():
    fn = zoo.zoo_geom(4.0)
    dom = ContinuationDomain(fn.wedge, fn.ball)
    seen = []

    def check(z):
        ok = dom.contains(z)
        seen.append(bool(np.all(ok)))
        return ok

    reconstruct_germ(RestrictedOracle(2, fn.evaluate, check), fn.wedge, D=12)
    assert seen and all(seen)


# ray coefficients -------------------------------------------------------------

def test_exp_ray_coefficients():
    oracle, _ = oracle_for(zoo.zoo_exp())
    c = ray_coefficients(oracle, [1.0, 1.0], D=16)
    expected = [2.0**d / math.factorial(d) for d in range(17)]
    assert np.allclose(c, expected, atol=1e-12)


def test_constant_ray_coefficients():
    oracle, _ = oracle_for(zoo.zoo_const(3.0))
    c = ray_coefficients(oracle, [0.5, 0.5], D=8)
    assert c[0] == pytest.approx(3.0)
    assert np.allclose(c[1:], 0, atol=1e-13)


def test_geometric_ray_coefficients():
    oracle, _ = oracle_for(zoo.zoo_geom(4.0), RealWedge.box(1.0, 2), 0.1)
    c = ray_coefficients(oracle, [1.0, 1.0], D=12, rho=0.4)
    expected = [4.0 ** (d // 2) if d % 2 == 0 else 0.0 for d in range(13)]
    assert np.allclose(c, expected, atol=1e-8)


@pytest.mark.parametrize("d", [0, 1, 3, 7])
def test_degree_isolation(d):
    h = random_poly(np.random.default_rng(d), 2, d, homogeneous=True)
    fn = zoo.zoo_poly(h)
    oracle, _ = oracle_for(fn)
    c = ray_coefficients(oracle, [0.8, 0.6], D=10)
    others = np.delete(c, d)
    assert np.max(np.abs(others)) < 1e-10
    assert c[d] == pytest.approx(h.evaluate_many(np.array([[0.8, 0.6]]))[0], abs=1e-10)


# germ reconstruction ----------------------------------------------------------

def test_polynomial_parts_recovered():
    x, y = MultiPoly.variables(2)
    p = (1 + 2 * x - 3 * x * y + y**3 - x**2 * y).to_float()
    oracle, _ = oracle_for(zoo.zoo_poly(p))
    germ = reconstruct_germ(oracle, RealWedge.box(1.0, 2), D=6)
    for h, expected in zip(germ.parts, p.homogeneous_parts() + [None] * 7):
        if expected is None:
            assert h.base.is_zero
            continue
        for e in set(h.base.terms) | set(expected.base.terms):
            assert abs(h.base.coefficient(e) - expected.base.coefficient(e)) < 1e-8
    assert max(germ.residuals) < 1e-8


@pytest.mark.parametrize("t", [1.0, 4.0, 16.0])
def test_geom_radius(t):
    fn = zoo.zoo_geom(t)
    oracle, _ = oracle_for(fn)
    germ = reconstruct_germ(oracle, fn.wedge)
    assert germ.fitted_C == pytest.approx(math.sqrt(t), rel=0.1)
    assert germ.radius == pytest.approx(1 / math.sqrt(t), rel=0.1)


def test_envelope_dominates_bounds():
    fn = zoo.zoo_exp()
    oracle, _ = oracle_for(fn)
    germ = reconstruct_germ(oracle, fn.wedge)
    for d, b in enumerate(germ.l1_bounds):
        assert b <= germ.fitted_K * germ.fitted_C**d * (1 + 1e-9)
        assert b >= float(germ.parts[d].base.l1_norm()) - 1e-12


def test_constant_is_infinite():
    oracle, _ = oracle_for(zoo.zoo_const(5.0))
    germ = reconstruct_germ(oracle, RealWedge.box(1.0, 2))
    assert germ.infinite and germ.radius == math.inf


def test_fit_envelope_simple():
    K, C, _ = fit_envelope([2.0, 2.0, 8.0, 0.0])
    assert K == 2.0
    assert C == pytest.approx(2.0)
    assert fit_envelope([1.0, 0.0, 0.0])[1] == 0.0


def test_sqrt_overlap_refused():
    fn = zoo.zoo_sqrt()
    _, dom = oracle_for(fn)
    assert dom.overlap_measure() == 0
    with pytest.raises(OverlapFailure, match="overlap measure 0"):
        dom.check_hypotheses()


# radius and N0 ----------------------------------------------------------------

def test_zero_variable_radius():
    assert certified_radius(compute_constants(0, 0.5)) == 1.0


def test_one_variable_radius():
    assert certified_radius(compute_constants(1, 1.0), 1.0) == pytest.approx(1 / (4 * math.e))


def test_radius_monotone_in_measure():
    rs = [certified_radius(compute_constants(2, p)) for p in (0.2, 0.5, 1.0)]
    assert rs == sorted(rs)


def test_sn_selection_constant():
    sums = np.ones((100, 10))
    assert empirical_sn_selection(sums) == (1.0, 1.0)


def test_geom_finite_n0_inside():
    fn = zoo.zoo_geom(4.0)
    wedge = RealWedge.box(0.4, 2)
    oracle, dom = oracle_for(fn, wedge, 0.4)
    germ = reconstruct_germ(oracle, wedge)
    N0, frac = empirical_sn_selection(germ_partial_sums(germ, wedge.sample(2000, seed=1)))
    assert math.isfinite(N0) and frac > 0.5


def test_pole_inside_wedge():
    fn = zoo.zoo_geom(4.0)
    wedge = RealWedge.box(2.0, 2)
    oracle, dom = oracle_for(fn, wedge, 0.45)
    with pytest.raises(NoFiniteN0):
        certify(oracle, dom)


def test_germ_matches_within_tail_bound():
    fn = zoo.zoo_exp()
    oracle, dom = oracle_for(fn)
    rep = certify(oracle, dom)
    r = 0.5 * rep.certified
    rng = np.random.default_rng(0)
    z = r * np.sqrt(rng.random((200, 2))) * np.exp(2j * np.pi * rng.random((200, 2)))
    err = np.abs(fn.evaluate(z) - rep.germ.evaluate(z))
    bound = tail_bound(rep.constants, rep.N0, rep.germ.degree, r / float(np.min(dom.wedge.span)))
    assert np.all(err <= bound + 1e-12)


def test_sweep_exp_scales_linearly():
    rows = rescaling_sweep(zoo.zoo_exp().evaluate, RealWedge.box(1.0, 2), [1, 2, 4], ball=0.25)
    radii = [r.radius for r in rows]
    assert all(r.status == "ok" for r in rows)
    assert radii[1] / radii[0] == pytest.approx(2, rel=0.2)
    assert radii[2] / radii[0] == pytest.approx(4, rel=0.2)


def test_sweep_geom_beyond_pole():
    rows = rescaling_sweep(geom(4.0), RealWedge.box(0.4, 2), [1, 5], ball=0.4)
    assert rows[0].status == "ok"
    assert rows[1].status.startswith("NoFiniteN0")


def test_sweep_constant_infinite():
    rows = rescaling_sweep(zoo.zoo_const(2.0).evaluate, RealWedge.box(1.0, 2), [1, 2], ball=0.25)
    assert all(r.infinite for r in rows)
