import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sobolev_poisson import catalog
from sobolev_poisson.errors import GeometryError
from sobolev_poisson.fields import QUAD_TOL, R3, constant_field, expression_field, lincomb, zero_field
from sobolev_poisson.holoflux import (
    FluxSpec,
    PhasePoint3D,
    SurfacePatch,
    flux,
    flux_derivative_family,
    flux_functional_derivative,
    sample_surface,
)
from sobolev_poisson.kernels import INV_8PI, KernelPoint, reproducing_check
from sobolev_poisson.quadrature import QuadratureScheme

SQUARE = SurfacePatch.from_expressions(["u", "w", "0"])
ONE = constant_field(R3, 1.0)
Z = zero_field(R3)
SCENES = catalog.scene_catalog()


def triad(entries):
    """E[a][i] from a dict {(a, i): expression}, 1-based indices."""
    rows = ["0"] * 9
    for (a, i), text in entries.items():
        rows[3 * (a - 1) + (i - 1)] = text
    return PhasePoint3D.from_expressions(None, rows, validate=False)


def test_unit_square_flux_is_one():
    spec = FluxSpec(SQUARE, (ONE, Z, Z), validate=False)
    assert flux(spec, triad({(3, 1): "1"})) == pytest.approx(1.0, abs=1e-14)
    assert flux(spec, triad({(1, 1): "1", (2, 1): "1"})) == 0.0


def test_orientation_flip_negates():
    p = SCENES["helix"].point
    spec = SCENES["helix"].flux_f
    flipped = FluxSpec(spec.surface.swapped(), spec.f)
    assert flux(flipped, p) == pytest.approx(-flux(spec, p), rel=1e-13)
    neg = FluxSpec(SurfacePatch.from_expressions(["u", "w", "0"], orientation=-1), (ONE, Z, Z), validate=False)
    assert flux(neg, triad({(3, 1): "1"})) == pytest.approx(-1.0)


def test_zero_triad_gives_zero():
    for scene in SCENES.values():
        assert flux(scene.flux_f, PhasePoint3D.zero()) == 0.0


@settings(max_examples=15)
@given(st.floats(-2, 2), st.floats(-2, 2))
def test_flux_linear_in_f_and_E(a, b):
    sc = SCENES["two_surfaces"]
    fs, gs = sc.flux_f.f, sc.flux_g.f
    mixed = FluxSpec(sc.flux_f.surface, tuple(lincomb([a, b], [u, v]) for u, v in zip(fs, gs)), validate=False)
    gspec = FluxSpec(sc.flux_f.surface, gs, validate=False)
    p = sc.point
    lhs = flux(mixed, p)
    rhs = a * flux(sc.flux_f, p) + b * flux(gspec, p)
    assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-14)
    E2 = triad({(1, 1): "exp(-(x^2 + y^2 + z^2))", (2, 3): "x*exp(-(x^2 + y^2 + z^2))", (3, 2): "0.3"})
    comb = PhasePoint3D(p.A, tuple(tuple(lincomb([a, b], [p.E[r][c], E2.E[r][c]]) for c in range(3))
                                   for r in range(3)), validate=False)
    assert flux(sc.flux_f, comb) == pytest.approx(a * flux(sc.flux_f, p) + b * flux(sc.flux_f, E2),
                                                 rel=1e-12, abs=1e-14)


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_degenerate_patches_raise():
    p = triad({(3, 1): "1"})
    for exprs in (["u", "u", "0"], ["0", "0", "0"], ["sqrt(u - 2)", "w", "0"]):
        spec = FluxSpec(SurfacePatch.from_expressions(exprs), (ONE, Z, Z), validate=False)
        with pytest.raises(GeometryError):
            flux(spec, p)


def test_surface_sample_area():
    smp = sample_surface(SurfacePatch.from_expressions(["2*u", "3*w", "u*w"]))
    # |(2, 0, w) x (0, 3, u)| = sqrt(9 w^2 + 4 u^2 + 36), integrated by an independent fine midpoint rule
    g = (np.arange(400) + 0.5) / 400
    U, W = np.meshgrid(g, g)
    ref = np.mean(np.sqrt(9 * W**2 + 4 * U**2 + 36))
    area = smp.weights @ np.linalg.norm(smp.normals, axis=1)
    assert area == pytest.approx(ref, rel=1e-5)


def test_flux_derivative_of_zero_fields():
    spec = FluxSpec(SQUARE, (Z, Z, Z), validate=False)
    xi = flux_functional_derivative(spec, 3, 1)
    pts = catalog.catalog_points("r3")
    assert np.all(xi.eval(pts) == 0.0)


def test_flux_derivative_is_smeared_kernel():
    spec = FluxSpec(SQUARE, (ONE, Z, Z), validate=False)
    xi = flux_functional_derivative(spec, 3, 1, QuadratureScheme("square2d", 1, 24))
    x = np.array([[0.5, 0.5, 2.0]])
    # independent tensor Gauss rule on the square
    g, wg = np.polynomial.legendre.leggauss(40)
    g, wg = 0.5 * (g + 1), 0.5 * wg
    U, W = np.meshgrid(g, g)
    r = np.sqrt((U - 0.5) ** 2 + (W - 0.5) ** 2 + 4.0)
    ref = INV_8PI * np.einsum("i,j,ij->", wg, wg, np.exp(-r))
    assert xi.eval(x)[0] == pytest.approx(ref, rel=1e-12)
    assert np.all(flux_functional_derivative(spec, 1, 1).eval(x) == 0.0)
    assert np.all(flux_functional_derivative(spec, 3, 2).eval(x) == 0.0)


def test_flux_derivative_scales_with_area():
    # for a patch shrunk by s about c, Xi(x) / s^2 tends to n f(c) E_c(x) at rate O(s^2)
    c = np.array([0.5, 0.5, 0.0])
    x = np.array([[0.9, 0.2, 0.7]])
    spec_f = (expression_field("exp(-(x^2 + y^2 + z^2) / 4)", R3), Z, Z)
    limit = INV_8PI * np.exp(-np.linalg.norm(x[0] - c)) * spec_f[0].eval(c[None])[0]
    gaps = []
    for s in (1.0, 0.5, 0.25):
        spec = FluxSpec(SQUARE.scaled(s, c), spec_f)
        val = flux_functional_derivative(spec, 3, 1).eval(x)[0]
        gaps.append(abs(val / s**2 - limit))
    assert gaps[0] > gaps[1] > gaps[2]
    assert gaps[1] / gaps[2] == pytest.approx(4.0, rel=0.1)


def test_flux_derivative_family_shape():
    fam = flux_derivative_family(SCENES["helix"].flux_f)
    assert len(fam) == 3 and all(len(r) == 3 for r in fam)


def test_flux_derivative_reproducing_property():
    xi = flux_functional_derivative(SCENES["helix"].flux_f, 3, 1)
    r = reproducing_check(KernelPoint(R3, (0.0, 0.0, 0.0)), xi)
    assert r.gap < 10 * QUAD_TOL["r3"]


def test_flux_derivative_fd_consistency():
    # Xi is the functional derivative: flux(E + eps h) - flux(E) = eps <Xi, h> exactly (linear)
    sc = SCENES["helix"]
    h = expression_field("exp(-((x - 0.2)^2 + y^2 + (z - 0.5)^2))", R3)
    rows = [Z] * 9
    rows[3 * 2 + 0] = h
    hE = PhasePoint3D(sc.point.A, tuple(tuple(rows[3 * a:3 * a + 3]) for a in range(3)), validate=False)
    from sobolev_poisson.fields import inner_product_h2r3

    xi = flux_functional_derivative(sc.flux_f, 3, 1)
    assert inner_product_h2r3(xi, h) == pytest.approx(flux(sc.flux_f, hE), rel=1e-4)
