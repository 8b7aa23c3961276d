"""Reference fields, evaluation points and scenes used by tests and demos.

Fields are built with exact symbolic derivatives.  Everything on the line
and on R^3 decays fast enough to lie in the relevant Sobolev space.
"""

from __future__ import annotations

import numpy as np

from .fields import LINE, R3, UNIT, expression_field
from .holoflux import scene_from_dict

UNIT_EXPRS = [
    "1", "t", "t^2", "t^3 - t", "1 - 2*t + 3*t^4", "exp(t)", "exp(-2*t)", "sin(pi*t)",
    "cos(pi*t)", "sin(5*t)", "cos(7*t) + t", "sinh(t)", "cosh(2*t - 1)", "sqrt(1 + t)",
    "1 / (1 + t^2)", "t*exp(-t)", "sin(2*pi*t)*exp(t)", "(t - 0.3)^2", "cos(3*t)^2",
    "exp(sin(4*t))",
]

LINE_EXPRS = [
    "exp(-t^2)", "t*exp(-t^2)", "exp(-(t - 1)^2 / 2)", "1 / cosh(t)", "1 / cosh(2*t)^2",
    "cos(3*t)*exp(-t^2 / 2)", "sin(t)*exp(-t^2 / 3)", "(1 - t^2)*exp(-t^2)", "exp(-(t + 2)^2)",
    "t^2*exp(-t^2 / 4)", "exp(-t^2)*cos(t)^2", "1 / cosh(t / 2)^2", "t / cosh(t)^2",
    "exp(-t^2 / 8)", "sin(2*t) / cosh(t)", "exp(-t^4 / 16)",
    "exp(-(t - 0.5)^2)*(1 + t)", "cos(t) / cosh(t)", "exp(-t^2 / 2)*sinh(t / 2)",
    "3*exp(-2*t^2) - exp(-t^2 / 2)",
]

R3_EXPRS = [
    "exp(-(x^2 + y^2 + z^2))",
    "exp(-(x^2 + y^2 + z^2) / 2)*cos(x + 0.5*y)",
    "x*exp(-(x^2 + y^2 + z^2))",
    "y*z*exp(-(x^2 + y^2 + z^2) / 2)",
    "exp(-((x - 1)^2 + y^2 + z^2))",
    "exp(-((x + 0.5)^2 + (y - 0.5)^2 + z^2) / 1.5)",
    "1 / (1 + x^2 + y^2 + z^2)^3",
    "exp(-(x^2 + 2*y^2 + 3*z^2) / 2)",
    "sin(x)*exp(-(x^2 + y^2 + z^2) / 2)",
    "(1 - x^2 - y^2 - z^2)*exp(-(x^2 + y^2 + z^2))",
    "exp(-(x^2 + y^2 + z^2) / 3)*cos(z)",
    "x*y*exp(-(x^2 + y^2 + z^2) / 2)",
    "exp(-((x - 0.3)^2 + (y + 0.2)^2 + (z - 0.4)^2))",
    "exp(-(x^2 + y^2 + z^2) / 4)*sin(y)*cos(z)",
    "(x + y + z)*exp(-(x^2 + y^2 + z^2) / 2)",
    "1 / (1 + (x^2 + y^2 + z^2)^2)^2",
    "exp(-(x^2 + y^2 + z^2) / 2)*cos(2*x)",
    "z^2*exp(-(x^2 + y^2 + z^2))",
    "exp(-((x - 1)^2 + (y - 1)^2 + z^2) / 2) - exp(-((x + 1)^2 + y^2 + (z - 1)^2) / 2)",
    "exp(-(x^2 + y^2 + z^2) / 5)",
]


def field_catalog(space: str):
    """The 20 reference fields of ``space`` (``"unit"``, ``"line"`` or ``"r3"``)."""
    exprs, domain = {"unit": (UNIT_EXPRS, UNIT), "line": (LINE_EXPRS, LINE), "r3": (R3_EXPRS, R3)}[space]
    return [expression_field(e, domain) for e in exprs]


def catalog_points(space: str):
    """25 deterministic evaluation points per space; the interval set includes 0 and 1."""
    if space == "unit":
        return np.linspace(0.0, 1.0, 25)
    if space == "line":
        return np.linspace(-6.0, 6.0, 25)
    rng = np.random.default_rng(20240611)
    pts = rng.uniform(-1.5, 1.5, size=(25, 3))
    pts[0] = 0.0
    return pts


_GAUSS = "exp(-(x^2 + y^2 + z^2) / {s})"

SCENES = {
    "helix": {
        "name": "helix",
        "connection": [
            "0.9*" + _GAUSS.format(s=3), "0.4*x*" + _GAUSS.format(s=3), "0.2*" + _GAUSS.format(s=8),
            "-0.3*" + _GAUSS.format(s=4), "0.7*cos(z)*" + _GAUSS.format(s=4), "0.5*y*" + _GAUSS.format(s=2),
            "0.6*exp(-((x - 1)^2 + y^2 + z^2) / 2)", "0", "-0.8*" + _GAUSS.format(s=5),
        ],
        "triad": ["0", "0", _GAUSS.format(s=8), "0", "0.5*" + _GAUSS.format(s=8), "0", "0", "0", "(1 + 0.5*x)*" + _GAUSS.format(s=2)],
        "curve": ["cos(2*t)", "sin(2*t)", "0.4*t - 0.2"],
        "surface": ["1.6*u - 0.8", "1.6*w - 0.8", "0.8"],
        "test_fields": ["exp(-(x^2 + y^2 + (z - 0.8)^2) / 2)", "0.5*y*" + _GAUSS.format(s=3),
                        "0.8*exp(-(x^2 + (y - 1)^2 + z^2) / 2)"],
        "test_fields_g": ["0.3*" + _GAUSS.format(s=2), "exp(-((x - 0.5)^2 + y^2 + z^2) / 3)",
                          "0.7*z*exp(-((x + 1)^2 + y^2 + z^2) / 2)"],
    },
    "two_surfaces": {
        "name": "two_surfaces",
        "connection": [
            "0.5*cos(y)*" + _GAUSS.format(s=4), "0", "0.6*" + _GAUSS.format(s=2),
            "0.8*" + _GAUSS.format(s=3), "-0.4*z*" + _GAUSS.format(s=3), "0",
            "0", "0.5*x*" + _GAUSS.format(s=4), "0.3*" + _GAUSS.format(s=8),
        ],
        "triad": [_GAUSS.format(s=8), "0", "0", "0", "y*" + _GAUSS.format(s=2), "0", "0", "0", "0.5*" + _GAUSS.format(s=8)],
        "curve": ["1.2*t - 0.6", "0.3*sin(3*t)", "0.1*t"],
        "surface": ["0.9 + 0.1*u*w", "1.4*u - 0.7", "1.4*w - 0.7"],
        "test_fields": [_GAUSS.format(s=2), "0.6*x*" + _GAUSS.format(s=3), "0.4*" + _GAUSS.format(s=8)],
        "surface_g": ["1.2*u - 0.6", "-0.9", "1.2*w - 0.6"],
        "orientation_g": -1,
        "test_fields_g": ["0.5*exp(-(x^2 + (y + 0.9)^2 + z^2) / 2)", _GAUSS.format(s=3),
                          "0.3*y*" + _GAUSS.format(s=2)],
    },
    "closed_loop": {
        "name": "closed_loop",
        "connection": [
            "0.7*" + _GAUSS.format(s=2), "0.3*y*" + _GAUSS.format(s=3), "0",
            "0", "0.9*" + _GAUSS.format(s=3), "-0.4*x*" + _GAUSS.format(s=2),
            "0.5*z*" + _GAUSS.format(s=3), "0", "0.6*cos(x)*" + _GAUSS.format(s=4),
        ],
        "triad": ["0", "x*" + _GAUSS.format(s=8), "0", "0", "0", _GAUSS.format(s=8), "z*" + _GAUSS.format(s=3), "0", "0"],
        "curve": ["0.8*cos(2*pi*t)", "0.8*sin(2*pi*t)", "0"],
        "surface": ["1.0 + 0.2*(w - 0.5)^2", "1.6*u - 0.8", "1.2*w - 0.6"],
        "test_fields": ["0.8*" + _GAUSS.format(s=2), "0.5*exp(-((x - 0.5)^2 + y^2 + z^2))",
                        "x*" + _GAUSS.format(s=3)],
        "test_fields_g": ["0.4*y*" + _GAUSS.format(s=2), "0.6*" + _GAUSS.format(s=8), "0.9*" + _GAUSS.format(s=3)],
    },
}


def scene_catalog(validate=False):
    """The reference scenes, keyed by name."""
    return {name: scene_from_dict(cfg, validate=validate) for name, cfg in SCENES.items()}
