import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, strategies as st

from sobolev_poisson import catalog
from sobolev_poisson.errors import DomainError, SingularPointError
from sobolev_poisson.expr import evaluate, parse
from sobolev_poisson.fields import LINE, QUAD_TOL, R3, UNIT, constant_field, expression_field, inner_product_h1
from sobolev_poisson.kernels import (
    INV_8PI,
    KernelPoint,
    basis_element,
    basis_index,
    basis_table,
    coefficient_a0,
    derivative_evaluation_divergence,
    derivative_evaluation_partial_sums,
    evaluation_operator_norm,
    kernel_eval,
    kernel_expression,
    kernel_field,
    kernel_series,
    kernel_weak_derivative,
    reproducing_check,
    reproducing_gaps,
    series_tail_bound,
)

COTH1 = 1 / np.tanh(1.0)
unit_x = st.floats(0.0, 1.0)


def mp_interval_kernel(x, t):
    # independent high-precision closed form
    x, t = mp.mpf(x), mp.mpf(t)
    lo, hi = min(x, t), max(x, t)
    return mp.cosh(lo) * mp.cosh(1 - hi) / mp.sinh(1)


# point values -----------------------------------------------------------------

def test_kernel_eval_examples():
    assert kernel_eval(KernelPoint(UNIT, 0.0), 0.0) == pytest.approx(1.3130352855, abs=1e-10)
    assert kernel_eval(KernelPoint(LINE, 2.0), 2.0) == 0.5
    assert kernel_eval(KernelPoint(R3, (0.3, -1, 2)), np.array([0.3, -1, 2])) == pytest.approx(INV_8PI, rel=1e-15)


@given(unit_x, unit_x)
def test_interval_kernel_matches_high_precision(x, t):
    assert kernel_eval(KernelPoint(UNIT, x), t) == pytest.approx(float(mp_interval_kernel(x, t)), rel=1e-14)


def test_kernel_domain_errors():
    with pytest.raises(DomainError):
        KernelPoint(UNIT, 1.5)
    with pytest.raises(DomainError):
        kernel_eval(KernelPoint(UNIT, 0.5), -0.1)


def test_weak_derivative_examples():
    v = kernel_weak_derivative(KernelPoint(UNIT, 0.5), 0.25)
    assert v == pytest.approx(float(mp.cosh(0.5) * mp.sinh(0.25) / mp.sinh(1)), rel=1e-14)
    assert kernel_weak_derivative(KernelPoint(LINE, 0.0), 1.0) == pytest.approx(-0.5 * np.exp(-1), rel=1e-15)
    x0 = np.array([0.2, 0.1, -0.4])
    d = kernel_weak_derivative(KernelPoint(R3, x0), x0 + [1, 0, 0], 0)
    assert d == pytest.approx(-INV_8PI * np.exp(-1), rel=1e-14)


def test_weak_derivative_rejects_kink():
    for p, t in ((KernelPoint(UNIT, 0.4), 0.4), (KernelPoint(LINE, 1.0), 1.0),
                 (KernelPoint(R3, (0, 0, 0)), np.zeros(3))):
        with pytest.raises(SingularPointError):
            kernel_weak_derivative(p, t)


@given(unit_x, unit_x)
def test_symmetry_unit(x, y):
    assert abs(kernel_eval(KernelPoint(UNIT, x), y) - kernel_eval(KernelPoint(UNIT, y), x)) <= 1e-12


def test_symmetry_line_and_r3_grids():
    g = np.linspace(-4, 4, 17)
    for x in g:
        assert np.abs(kernel_eval(KernelPoint(LINE, x), g) - [kernel_eval(KernelPoint(LINE, y), x) for y in g]).max() <= 1e-12
    pts = catalog.catalog_points("r3")
    M = np.array([kernel_eval(KernelPoint(R3, p), pts) for p in pts])
    assert np.abs(M - M.T).max() <= 1e-12


def test_kernel_expression_round_trip():
    for p, t in ((KernelPoint(UNIT, 0.3), np.linspace(0, 1, 11)),
                 (KernelPoint(LINE, -1.5), np.linspace(-3, 3, 11))):
        assert np.allclose(evaluate(parse(kernel_expression(p), ("t",)), {"t": t}), kernel_eval(p, t), atol=1e-15)
    p = KernelPoint(R3, (0.5, 0, -1))
    pts = catalog.catalog_points("r3")
    val = evaluate(parse(kernel_expression(p), ("x", "y", "z")), dict(zip("xyz", pts.T)))
    assert np.allclose(val, kernel_eval(p, pts), rtol=1e-14)


def test_non_factorization_witness():
    g = np.linspace(-1, 1, 5)
    pts = np.array(np.meshgrid(g, g, g)).reshape(3, -1).T
    x0 = np.zeros(3)
    prod = 8 * np.prod(0.5 * np.exp(-np.abs(pts - x0)), axis=1)
    assert np.abs(kernel_eval(KernelPoint(R3, x0), pts) - prod).max() > 1e-3


# reproducing property ---------------------------------------------------------

def test_reproducing_examples():
    for x in (0.0, 0.37, 1.0):
        lhs, rhs, gap = reproducing_check(KernelPoint(UNIT, x), constant_field(UNIT, 1.0))
        assert rhs == 1.0 and gap < QUAD_TOL["unit"]
    r = reproducing_check(KernelPoint(UNIT, 0.3), expression_field("t^2", UNIT))
    assert r.rhs == pytest.approx(0.09) and r.gap < QUAD_TOL["unit"]
    r = reproducing_check(KernelPoint(R3, (0, 0, 0)), expression_field("exp(-(x^2 + y^2 + z^2))", R3))
    assert r.rhs == 1.0 and r.gap < 10 * QUAD_TOL["r3"]


def test_reproducing_domain_mismatch():
    with pytest.raises(DomainError):
        reproducing_check(KernelPoint(LINE, 0.0), expression_field("t", UNIT))


@pytest.mark.parametrize("space", ["unit", "line"])
def test_reproducing_catalog_1d(space):
    fields = catalog.field_catalog(space)
    dom = UNIT if space == "unit" else LINE
    for x in catalog.catalog_points(space)[::3]:
        gaps = reproducing_gaps(KernelPoint(dom, x), fields)[:, 2]
        assert gaps.max() < 10 * QUAD_TOL[space]


def test_reproducing_catalog_r3_subset():
    fields = catalog.field_catalog("r3")
    for x in catalog.catalog_points("r3")[:4]:
        gaps = reproducing_gaps(KernelPoint(R3, x), fields)[:, 2]
        assert gaps.max() < 10 * QUAD_TOL["r3"]


@pytest.mark.parametrize("x,y", [(0.0, 1.0), (0.2, 0.7), (0.5, 0.5), (1.0, 1.0)])
def test_kernel_gram_unit(x, y):
    g = inner_product_h1(kernel_field(KernelPoint(UNIT, x)), kernel_field(KernelPoint(UNIT, y)))
    assert g == pytest.approx(kernel_eval(KernelPoint(UNIT, x), y), abs=QUAD_TOL["unit"])


def test_kernel_gram_line():
    g = inner_product_h1(kernel_field(KernelPoint(LINE, -0.5)), kernel_field(KernelPoint(LINE, 1.25)))
    assert g == pytest.approx(0.5 * np.exp(-1.75), abs=QUAD_TOL["line"])


# basis, series, norms ---------------------------------------------------------

def test_basis_examples():
    assert np.all(basis_element("c", 0)(np.linspace(0, 1, 7)) == 1.0)
    assert basis_element("s", 0)(0.5)[0] == 0.0
    assert abs(inner_product_h1(basis_element("s", 1).field, basis_element("c", 1).field)) < QUAD_TOL["unit"]
    with pytest.raises(ValueError):
        basis_element("q", 1)


def test_gram_matrix_identity():
    labels = basis_index(6)[:13]
    fs = [basis_element(f, k).field for f, k in labels]
    G = np.array([[inner_product_h1(a, b) for b in fs] for a in fs])
    assert np.abs(G - np.eye(len(fs))).max() < 1e-8


def test_basis_table_matches_elements():
    t = np.linspace(0, 1, 9)
    vals, ders = basis_table(t, 4)
    for row, (f, k) in enumerate(basis_index(4)):
        e = basis_element(f, k).field
        assert np.allclose(vals[row], e.eval(t), atol=1e-15)
        assert np.allclose(ders[row], e.grad(t), atol=1e-14)


def test_series_examples():
    assert kernel_series(0.5, 0.5, 0) == 1.0
    assert kernel_series(0.4, 0.4, 1) - kernel_series(0.4, 0.4, 0) == pytest.approx(2 / (1 + 4 * np.pi**2), rel=1e-14)
    closed = kernel_eval(KernelPoint(UNIT, 0.3), 0.7)
    assert abs(kernel_series(0.3, 0.7, 200) - closed) <= 5 / (4 * np.pi**2 * 200)


@pytest.mark.parametrize("N", [10, 100, 1000])
def test_series_tail_bound(N):
    g = np.linspace(0, 1, 11)
    worst = max(abs(kernel_series(x, t, N) - kernel_eval(KernelPoint(UNIT, x), t)) for x in g for t in g)
    assert worst <= series_tail_bound(N)


def test_operator_norm():
    assert evaluation_operator_norm(0.0) == pytest.approx(np.sqrt(COTH1), abs=1e-12)
    assert evaluation_operator_norm(1.0) == pytest.approx(evaluation_operator_norm(0.0), abs=1e-15)
    assert evaluation_operator_norm(0.0) == pytest.approx(1.1459, abs=1e-4)
    with pytest.raises(DomainError):
        evaluation_operator_norm(2.0)


@given(unit_x)
def test_operator_norm_is_sqrt_diagonal(x):
    assert abs(evaluation_operator_norm(x) - np.sqrt(kernel_eval(KernelPoint(UNIT, x), x))) <= 1e-12


def test_derivative_evaluation_divergence():
    assert derivative_evaluation_divergence(0.5, 1) == pytest.approx(
        1 / np.sinh(1) + 8 * np.pi**2 / (1 + 4 * np.pi**2), rel=1e-14)
    assert derivative_evaluation_divergence(0.5, 100) - derivative_evaluation_divergence(0.5, 50) >= 99
    s = derivative_evaluation_partial_sums(0.2, 10_000)
    assert np.all(np.diff(s) > 0)
    assert np.all(s > 2 * np.arange(1, 10_001) - 10)
    with pytest.raises(ValueError):
        derivative_evaluation_partial_sums(0.2, 0)


def test_a0_for_identity_uses_correct_constant():
    # <s0, t> computed independently at high precision
    oracle = mp.quad(lambda t: t * mp.sinh(t - 0.5) + mp.cosh(t - 0.5), [0, 1]) / mp.sqrt(mp.sinh(1))
    series, boundary = coefficient_a0(expression_field("t", UNIT))
    assert boundary == pytest.approx(float(oracle), abs=1e-13)
    assert series == pytest.approx(float(oracle), abs=1e-10)
    assert float(oracle) == pytest.approx(1.04018, abs=1e-5)


def test_a0_vanishes_with_equal_ends():
    s, b = coefficient_a0(constant_field(UNIT, 3.0))
    assert b == 0.0 and abs(s) < QUAD_TOL["unit"]
    s, b = coefficient_a0(expression_field("t*(1-t)", UNIT))
    assert b == 0.0 and abs(s) < QUAD_TOL["unit"]


@pytest.mark.parametrize("i", range(0, 20, 3))
def test_a0_boundary_matches_series_on_catalog(i):
    s, b = coefficient_a0(catalog.field_catalog("unit")[i])
    assert abs(s - b) < 1e-8
