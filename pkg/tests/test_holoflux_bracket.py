import json

import numpy as np
import pytest

from sobolev_poisson import catalog
from sobolev_poisson.errors import DomainError, ParseError
from sobolev_poisson.fields import R3, expression_field, zero_field
from sobolev_poisson.holoflux import (
    Curve,
    Flux,
    FluxSpec,
    JACOBI_FINE,
    JacobiScheme,
    PhasePoint3D,
    SurfacePatch,
    TraceHolonomy,
    basic_bracket_3d,
    bracket_3d,
    double_brackets,
    holonomy_flux_bracket,
    holonomy_flux_flow_oracle,
    jacobi_verifier,
    load_scene,
    sample_surface,
    scene_from_dict,
    trace_holonomy_flux_bracket,
)
from sobolev_poisson.kernels import INV_8PI

SCENES = catalog.scene_catalog()
Z = zero_field(R3)
SQUARE = SurfacePatch.from_expressions(["u", "w", "0"])
BUMP = (expression_field("exp(-((x - 0.5)^2 + (y - 0.5)^2 + z^2))", R3), Z,
        expression_field("0.5*exp(-((x - 0.5)^2 + y^2 + z^2))", R3))


# basic brackets -------------------------------------------------------------------

def test_basic_brackets():
    x = (0.1, 0.2, 0.3)
    assert basic_bracket_3d("A", "A", x, x, 1, 1, 1, 1) == 0.0
    assert basic_bracket_3d("E", "E", x, x, 2, 2, 3, 3) == 0.0
    assert abs(basic_bracket_3d("A", "E", x, x, 1, 1, 1, 1) - 1 / (8 * np.pi)) <= 1e-12
    assert basic_bracket_3d("E", "A", x, x, 2, 2, 1, 1) == -basic_bracket_3d("A", "E", x, x, 2, 2, 1, 1)
    assert basic_bracket_3d("A", "E", x, (1.1, 0.2, 0.3), 3, 3, 2, 2) == pytest.approx(INV_8PI * np.exp(-1))


def test_basic_bracket_index_structure():
    x, y = (0, 0, 0), (0.3, 0, 0)
    for a in (1, 2, 3):
        for b in (1, 2, 3):
            for i in (1, 2, 3):
                for j in (1, 2, 3):
                    v = basic_bracket_3d("A", "E", x, y, a, b, i, j)
                    if a != b or i != j:
                        assert v == 0.0
                    else:
                        assert v > 0
    with pytest.raises(DomainError):
        basic_bracket_3d("A", "E", x, y, 0, 1, 1, 1)
    with pytest.raises(ValueError):
        basic_bracket_3d("A", "B", x, y, 1, 1, 1, 1)


# holonomy-flux bracket ---------------------------------------------------------------

def test_zero_test_fields_give_zero_matrix():
    sc = SCENES["helix"]
    spec = FluxSpec(sc.flux_f.surface, (Z, Z, Z))
    assert np.all(holonomy_flux_bracket(sc.curve, spec, sc.point) == 0)


@pytest.mark.parametrize("d", [5.0, 10.0])
def test_decay_with_separation(d):
    sc = SCENES["helix"]
    curve = Curve.polyline([[0.5, 0.5, d], [0.5, 0.5, d + 1]])
    spec = FluxSpec(SQUARE, BUMP)
    B = holonomy_flux_bracket(curve, spec, sc.point)
    smp = sample_surface(SQUARE)
    fmag = np.linalg.norm(np.stack([f.eval(smp.points) for f in BUMP], axis=1), axis=1)
    C = 0.5 * 1.0 * INV_8PI * np.sum(smp.weights * np.linalg.norm(smp.normals, axis=1) * fmag)
    norm = np.linalg.norm(B, 2)
    assert 0 < norm <= C * np.exp(-d)


def test_flow_oracle_on_helix():
    sc = SCENES["helix"]
    B = holonomy_flux_bracket(sc.curve, sc.flux_f, sc.point, 0.0, 1.0, "ode:1000")
    O = holonomy_flux_flow_oracle(sc.curve, sc.flux_f, sc.point)
    assert np.linalg.norm(B - O, 2) / np.linalg.norm(O, 2) < 1e-4


def test_flow_oracle_on_sub_interval():
    sc = SCENES["closed_loop"]
    B = holonomy_flux_bracket(sc.curve, sc.flux_f, sc.point, 0.2, 0.7)
    O = holonomy_flux_flow_oracle(sc.curve, sc.flux_f, sc.point, 0.2, 0.7)
    assert np.linalg.norm(B - O, 2) / np.linalg.norm(O, 2) < 1e-4


def test_dyson_and_ode_brackets_agree():
    sc = SCENES["two_surfaces"]
    a = holonomy_flux_bracket(sc.curve, sc.flux_f, sc.point, method="ode:2000")
    b = holonomy_flux_bracket(sc.curve, sc.flux_f, sc.point, method="dyson:12")
    assert np.abs(a - b).max() < 1e-10 * max(1.0, np.abs(a).max())


def test_trace_consistency():
    for sc in SCENES.values():
        B = holonomy_flux_bracket(sc.curve, sc.flux_f, sc.point)
        tr = trace_holonomy_flux_bracket(sc.curve, sc.flux_f, sc.point)
        assert abs(np.trace(B).imag) < 1e-14
        assert tr == pytest.approx(np.trace(B).real, abs=1e-12)


def test_trace_bracket_vanishes_for_zero_connection():
    sc = SCENES["helix"]
    assert abs(trace_holonomy_flux_bracket(sc.curve, sc.flux_f, PhasePoint3D.zero())) < 1e-15


def test_structural_zeros_are_exact():
    sc = SCENES["two_surfaces"]
    h1, h2 = TraceHolonomy(sc.curve), TraceHolonomy(SCENES["helix"].curve)
    e1, e2 = Flux(sc.flux_f), Flux(sc.flux_g)
    assert bracket_3d(h1, h2, sc.point) == 0.0
    assert bracket_3d(e1, e2, sc.point) == 0.0
    assert bracket_3d(h1, e1, sc.point) == -bracket_3d(e1, h1, sc.point)
    assert bracket_3d(h1, e1, sc.point) != 0.0


# Jacobi -----------------------------------------------------------------------------

QUICK = JacobiScheme(outer_panels=16, outer_nodes=8, inner_nodes=12, inner_panels=2, ode_steps=1000)


def test_jacobi_same_flux():
    sc = SCENES["helix"]
    r = jacobi_verifier(sc.curve, sc.flux_f, sc.flux_f, sc.point, QUICK)
    assert r.passed and r.residual <= r.jac_tol


def test_jacobi_zero_connection():
    sc = SCENES["two_surfaces"]
    r = jacobi_verifier(sc.curve, sc.flux_f, sc.flux_g, PhasePoint3D.zero(), QUICK)
    assert r.passed
    assert r.ee_term == 0.0


def test_double_brackets_converge():
    sc = SCENES["closed_loop"]
    levels = [double_brackets(sc.curve, sc.flux_f, sc.flux_g, sc.point, s)[0]
              for s in (QUICK.coarser(), QUICK, JACOBI_FINE)]
    assert abs(levels[2] - levels[1]) < abs(levels[1] - levels[0]) / 10


def test_jacobi_report_dict():
    sc = SCENES["helix"]
    d = jacobi_verifier(sc.curve, sc.flux_f, sc.flux_g, sc.point, QUICK).as_dict()
    assert {"residual", "jac_tol", "passed", "tol_ratio", "symmetry_gap"} <= set(d)
    json.dumps(d)


# scenes --------------------------------------------------------------------------------

def test_scene_loader(tmp_path):
    cfg = dict(catalog.SCENES["helix"])
    path = tmp_path / "scene.json"
    path.write_text(json.dumps(cfg))
    sc = load_scene(path)
    assert sc.name == "helix" and sc.flux_g is not None
    cfg3 = dict(cfg, connection=[cfg["connection"][0:3], cfg["connection"][3:6], cfg["connection"][6:9]])
    sc3 = scene_from_dict(cfg3, validate=False)
    x = np.array([[0.1, 0.2, 0.3]])
    assert sc3.point.A[1][2].eval(x)[0] == sc.point.A[1][2].eval(x)[0]


def test_scene_errors(tmp_path):
    base = catalog.SCENES["helix"]
    with pytest.raises(ParseError):
        scene_from_dict(dict(base, colour="red"))
    with pytest.raises(ParseError):
        scene_from_dict({k: v for k, v in base.items() if k != "surface"})
    with pytest.raises(ParseError):
        scene_from_dict(dict(base, connection=base["connection"][:8]))
    with pytest.raises(ParseError):
        scene_from_dict(dict(base, test_fields=["0", "0"]))
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ParseError):
        load_scene(bad)


def test_scene_validation_rejects_non_decaying_fields():
    from sobolev_poisson.errors import EvaluationError

    cfg = dict(catalog.SCENES["helix"], test_fields=["1", "0", "0"])
    with pytest.raises(EvaluationError):
        scene_from_dict(cfg, validate=True)


def test_catalog_scenes_validate():
    for name in catalog.SCENES:
        assert scene_from_dict(catalog.SCENES[name], validate=True).name == name
