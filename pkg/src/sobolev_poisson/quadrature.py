"""Deterministic quadrature rules.

Everything here returns plain ``(nodes, weights)`` arrays so callers can
evaluate fields once and reduce with ``weights @ values``.  Kinked integrands
are handled by splitting panels at caller-supplied breakpoints; no rule ever
places a node on a panel edge.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.integrate import lebedev_rule

__all__ = [
    "QuadratureScheme",
    "gauss_legendre",
    "interval_rule",
    "spherical_rule",
    "square_rule",
    "panel_integration_matrix",
]


@dataclass(frozen=True)
class QuadratureScheme:
    """Settings for the three families of rules.

    ``kind`` is ``"gl1d"`` (composite Gauss-Legendre on an interval),
    ``"shell3d"`` (Gauss-Legendre radial panels times a Lebedev sphere) or
    ``"square2d"`` (tensor Gauss-Legendre on a parameter square).

    For ``gl1d`` ``panels`` counts uniform panels over the integration
    interval before breakpoints are inserted.  For ``shell3d`` it is the
    number of radial panels per unit length in the inner region
    ``r < inner_radius``; beyond that panels widen geometrically.
    """

    kind: str = "gl1d"
    panels: int = 16
    nodes_per_panel: int = 16
    r_cut: float | None = None
    lebedev_order: int = 35
    inner_radius: float = 8.0

    def refined(self, factor: int = 2) -> "QuadratureScheme":
        """Same rule with ``factor`` times as many panels."""
        return QuadratureScheme(
            self.kind,
            self.panels * factor,
            self.nodes_per_panel,
            self.r_cut,
            self.lebedev_order,
            self.inner_radius,
        )

    def describe(self) -> dict:
        return {
            "kind": self.kind,
            "panels": self.panels,
            "nodes_per_panel": self.nodes_per_panel,
            "r_cut": self.r_cut,
            "lebedev_order": self.lebedev_order if self.kind == "shell3d" else None,
        }


@lru_cache(maxsize=None)
def gauss_legendre(n: int):
    """Gauss-Legendre nodes and weights on [-1, 1] (read-only arrays)."""
    x, w = np.polynomial.legendre.leggauss(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def _merge_breaks(a, b, panels, breakpoints):
    edges = np.linspace(a, b, panels + 1)
    if breakpoints is not None and len(breakpoints):
        bp = np.asarray(breakpoints, dtype=float).ravel()
        bp = bp[(bp > a) & (bp < b)]
        edges = np.concatenate([edges, bp])
    edges = np.unique(edges)
    # drop slivers created when a breakpoint nearly coincides with a panel edge
    keep = np.concatenate([[True], np.diff(edges) > 1e-12 * max(1.0, b - a)])
    edges = edges[keep]
    edges[-1] = b
    return edges


def composite_rule(edges, n):
    """Gauss-Legendre with ``n`` nodes on each interval ``edges[k], edges[k+1]``."""
    x, w = gauss_legendre(n)
    edges = np.asarray(edges, dtype=float)
    lo, hi = edges[:-1, None], edges[1:, None]
    half = 0.5 * (hi - lo)
    nodes = (lo + hi) * 0.5 + half * x[None, :]
    weights = half * w[None, :]
    return nodes.ravel(), weights.ravel()


def interval_rule(a, b, panels=16, nodes_per_panel=16, breakpoints=None):
    """Composite Gauss-Legendre rule on ``[a, b]`` split at ``breakpoints``."""
    if not b > a:
        raise ValueError(f"empty interval [{a}, {b}]")
    edges = _merge_breaks(float(a), float(b), int(panels), breakpoints)
    return composite_rule(edges, nodes_per_panel)


def radial_edges(r_cut, panels_per_unit=2, inner_radius=8.0):
    """Panel edges on ``[0, r_cut]``: uniform up to ``inner_radius``, then geometric.

    Every kernel of the package decays like ``exp(-r)``, so the outer region
    only needs a handful of wide panels.
    """
    inner = min(inner_radius, r_cut)
    n_inner = max(1, int(round(inner * panels_per_unit)))
    edges = list(np.linspace(0.0, inner, n_inner + 1))
    r = inner
    width = 1.0 / panels_per_unit
    while r < r_cut - 1e-12:
        width *= 1.6
        r = min(r + width, r_cut)
        edges.append(r)
    return np.asarray(edges)


@lru_cache(maxsize=None)
def lebedev_sphere(order):
    """Unit-sphere Lebedev points ``(n, 3)`` and weights (summing to 4 pi)."""
    x, w = lebedev_rule(order)
    x = np.ascontiguousarray(x.T)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def spherical_rule(center=(0.0, 0.0, 0.0), scheme: QuadratureScheme | None = None):
    """Points and weights for a ball of radius ``scheme.r_cut`` about ``center``.

    Radial Gauss-Legendre panels (the origin is never a node) times a Lebedev
    rule on the unit sphere; weights include the ``r**2`` Jacobian.
    """
    if scheme is None:
        scheme = QuadratureScheme(kind="shell3d", panels=1, nodes_per_panel=8, r_cut=25.0, lebedev_order=35)
    r_cut = 25.0 if scheme.r_cut is None else float(scheme.r_cut)
    edges = radial_edges(r_cut, scheme.panels, scheme.inner_radius)
    r, wr = composite_rule(edges, scheme.nodes_per_panel)
    omega, wo = lebedev_sphere(scheme.lebedev_order)
    pts = r[:, None, None] * omega[None, :, :]
    pts = pts.reshape(-1, 3) + np.asarray(center, dtype=float)[None, :]
    w = ((wr * r**2)[:, None] * wo[None, :]).ravel()
    return pts, w


def square_rule(n_u=32, n_w=32, panels=1):
    """Tensor Gauss-Legendre rule on the unit parameter square.

    Returns ``(u, w, weights)`` as flat arrays.
    """
    u, wu = interval_rule(0.0, 1.0, panels, n_u)
    v, wv = interval_rule(0.0, 1.0, panels, n_w)
    U, V = np.meshgrid(u, v, indexing="ij")
    W = np.outer(wu, wv)
    return U.ravel(), V.ravel(), W.ravel()


@lru_cache(maxsize=None)
def _integration_matrix_ref(n):
    # S[j, k] = integral from -1 to x_j of the k-th Lagrange basis polynomial
    x, _ = gauss_legendre(n)
    V = np.polynomial.legendre.legvander(x, n - 1)
    eye = np.eye(n)
    S = np.empty((n, n))
    for k in range(n):
        c = np.linalg.solve(V, eye[:, k])
        ci = np.polynomial.legendre.legint(c, lbnd=-1.0)
        S[:, k] = np.polynomial.legendre.legval(x, ci)
    S.setflags(write=False)
    return S


def panel_integration_matrix(n, width):
    """Matrix mapping values at the ``n`` Gauss nodes of a panel to the running
    integral from the panel's left edge to each node (exact for degree < n)."""
    return _integration_matrix_ref(n) * (0.5 * width)
