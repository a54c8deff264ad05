import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wedge_edge.errors import DuplicateNodes, InsufficientMeasure, InvalidMeasure
from wedge_edge.interpolation import (
    basis_l1_factors,
    chain_bound,
    compute_constants,
    constants_table,
    lagrange_reconstruct,
    l1_bound_from_slices,
    select_slices,
    slice_chain_bound,
    stirling_certificate,
)
from wedge_edge.polynomial import MultiPoly, random_poly

seeds = st.integers(min_value=0, max_value=2**32 - 1)


def box_indicator(upper):
    upper = np.asarray(upper, dtype=float)

    def ind(x):
        x = np.asarray(x, dtype=float).reshape(-1, len(upper))
        return np.all((x >= 0) & (x <= upper), axis=1)

    return ind


def slice_all(p, nodes, axis=0):
    return [p.substitute(axis, x) for x in nodes]


# reconstruction ---------------------------------------------------------------

def test_squares_from_three_values():
    slices = [MultiPoly.constant(0, Fraction(v)) for v in (1, 4, 9)]
    assert lagrange_reconstruct(slices, [1, 2, 3]) == MultiPoly(1, {(2,): 1})


def test_linear_interpolation_of_slices():
    y = MultiPoly.variable(1, 0)
    x0, y0 = MultiPoly.variables(2)
    assert lagrange_reconstruct([y, 2 * y], [0, 1]) == (1 + x0) * y0


@settings(max_examples=40, deadline=None)
@given(seeds, st.integers(2, 3), st.integers(0, 10))
def test_exact_round_trip(seed, n, d):
    rng = np.random.default_rng(seed)
    p = random_poly(rng, n, d, exact=True, density=0.6)
    nodes = [Fraction(int(k), 7) for k in rng.permutation(40)[: d + 1]]
    assert lagrange_reconstruct(slice_all(p, nodes), nodes) == p


@pytest.mark.parametrize("d", range(0, 16))
def test_float_round_trip_equispaced(d):
    rng = np.random.default_rng(d)
    p = random_poly(rng, 2, d)
    nodes = list(np.linspace(-1, 1, d + 1)) if d else [0.5]
    q = lagrange_reconstruct(slice_all(p, nodes), nodes)
    scale = max(abs(c) for c in p.terms.values())
    err = max(abs(p.coefficient(e) - q.coefficient(e)) for e in set(p.terms) | set(q.terms))
    assert err <= 1e-9 * scale


def test_float_round_trip_complex_coefficients():
    rng = np.random.default_rng(1)
    p = random_poly(rng, 3, 6, complex_coeffs=True)
    nodes = list(np.linspace(-1, 1, 7))
    q = lagrange_reconstruct(slice_all(p, nodes), nodes)
    err = max(abs(p.coefficient(e) - q.coefficient(e)) for e in set(p.terms) | set(q.terms))
    assert err < 1e-12


def test_duplicate_nodes_rejected():
    c = MultiPoly.constant(0, 1)
    with pytest.raises(DuplicateNodes):
        lagrange_reconstruct([c, c], [0.5, 0.5])


# slice bounds -----------------------------------------------------------------

def test_single_node_bound():
    assert l1_bound_from_slices([Fraction(3)], [Fraction(1, 2)]) == 3


def test_two_node_bound():
    assert l1_bound_from_slices([1, 1], [Fraction(0), Fraction(1)]) == 3


@pytest.mark.parametrize("d", [1, 3, 6, 10])
@pytest.mark.parametrize("p", [Fraction(1), Fraction(1, 2)])
def test_equispaced_bound_matches_chain(d, p):
    nodes = [p * i / d for i in range(d + 1)]
    total = l1_bound_from_slices([1] * (d + 1), nodes)
    assert total <= Fraction(d**d, math.factorial(d)) / p**d * 4**d


@settings(max_examples=40, deadline=None)
@given(seeds, st.integers(1, 3), st.integers(0, 6))
def test_slice_bound_dominates(seed, n, d):
    rng = np.random.default_rng(seed)
    p = random_poly(rng, n, d, exact=True)
    nodes = [Fraction(int(k), 5) for k in rng.permutation(10)[: d + 1]]
    slices = slice_all(p, nodes)
    rebuilt = lagrange_reconstruct(slices, nodes)
    assert rebuilt.l1_norm() <= l1_bound_from_slices([s.l1_norm() for s in slices], nodes)


def test_basis_factors_exact():
    assert basis_l1_factors([Fraction(0), Fraction(1)]) == [2, 1]


# slice selection --------------------------------------------------------------

def test_full_square_three_nodes():
    sel = select_slices(box_indicator([1, 1]), 2, 0, 3, 1.0 - 0.1, separation=1 / 6, samples=20_000)
    assert len(sel.nodes) == 3
    assert np.all(np.diff(sel.nodes) >= 1 / 6 - 1e-12)
    assert sel.slice_measure >= 0.9


def test_half_box_two_nodes():
    sel = select_slices(box_indicator([0.5, 1]), 2, 0, 2, 0.5, separation=1 / 8, samples=20_000)
    assert all(0 <= x <= 0.5 for x in sel.nodes)
    assert sel.nodes[1] - sel.nodes[0] >= 1 / 8


def test_thin_set_insufficient():
    with pytest.raises(InsufficientMeasure):
        select_slices(box_indicator([0.05, 1]), 2, 0, 21, 0.25, samples=20_000)


def test_one_variable_slices_are_exact():
    sel = select_slices(box_indicator([0.5]), 1, 0, 4, 0.5)
    assert all(x <= 0.5 for x in sel.nodes)
    assert sel.measures == (1.0,) * 4


def test_selection_independent_of_workers():
    ind = box_indicator([0.7, 0.6])
    a = select_slices(ind, 2, 0, 4, 0.3, samples=20_000, seed=5, workers=1)
    b = select_slices(ind, 2, 0, 4, 0.3, samples=20_000, seed=5, workers=4)
    assert a == b


# constants --------------------------------------------------------------------

def test_zero_variables():
    c = compute_constants(0, 0.3)
    assert (c.K, c.C) == (1.0, 1.0)


def test_one_variable_full_measure():
    c = compute_constants(1, 1.0)
    assert c.C == pytest.approx(4 * math.e)
    assert c.K == 1.0


@pytest.mark.parametrize("n", [1, 2, 3])
def test_monotone_in_measure(n):
    assert compute_constants(n, 0.5).C >= compute_constants(n, 1.0).C


@pytest.mark.parametrize("p", [0.0, -0.1, 1.5])
def test_invalid_measure(p):
    with pytest.raises(InvalidMeasure):
        compute_constants(2, p)


@pytest.mark.parametrize("n", [1, 2, 3])
@pytest.mark.parametrize("p", [1.0, 0.5, 0.2])
def test_envelope_dominates_chain(n, p):
    c = compute_constants(n, p)
    for d in range(0, 31):
        assert chain_bound(n, p, d) <= c.bound(d) * (1 + 1e-12)


def test_stirling_certificate():
    rows = stirling_certificate(30)
    assert [d for d, _, _ in rows] == list(range(1, 31))
    assert all(a and b for _, a, b in rows)


def test_constants_table_shape():
    rows = constants_table(2, 0.5, 10)
    assert len(rows) == 11
    assert rows[0]["K_C_pow_d"] == 1.0
    assert set(rows[0]) == {"d", "K_C_pow_d", "chain", "factor_n2", "factor_n1"}


# the bound on concrete polynomials ----------------------------------------------

@pytest.mark.parametrize("n,d", [(1, 3), (1, 8), (2, 2), (2, 4)])
def test_executed_chain_dominates_norm(n, d):
    rng = np.random.default_rng(10 * n + d)
    h = random_poly(rng, n, d, homogeneous=True, exact=True)
    upper = [0.8] + [1.0] * (n - 1)
    node = slice_chain_bound(h, box_indicator(upper), 0.8, samples=4000)
    assert float(h.l1_norm()) <= node.bound * (1 + 1e-9)
