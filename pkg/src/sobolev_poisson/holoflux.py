"""Holonomies, fluxes and their brackets on the R^3 phase space.

A phase point carries a connection ``A[a][i]`` and a densitised triad
``E[a][i]`` (``a`` spatial, ``i`` internal), eighteen fields in the
``H^2(R^3)`` space whose reproducing kernel is ``exp(-|x - y|) / (8 pi)``.
The canonical pairing is ``{A_a^i(x), E^b_j(y)} = delta_a^b delta^i_j E_x(y)``.

Conventions fixed here:

* ``A_gamma(t) = gammadot^a(t) A_a^i(gamma(t)) tau_i / 2``.
* ``h(l2, l1)`` is path ordered with later times to the left, so
  ``d/dl2 h(l2, l1) = A_gamma(l2) h(l2, l1)``.  Sub-holonomies come from the
  transport ``U(t) = h(t, l1)`` as ``h(t2, t1) = U(t2) U(t1)^-1``.
* The flux uses the Euclidean volume form, ``n = orientation * X_u x X_w``
  and ``E[f] = int du dw f^i(X) E^a_i(X) n_a``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

import numpy as np
import sympy

from . import expr as _expr
from .errors import DomainError, EvaluationError, GeometryError, ParseError
from .fields import R3, SobolevFunction, expression_field, lincomb, standard_h2_norm, zero_field
from .kernels import INV_8PI, r3_kernel
from .quadrature import (QuadratureScheme, composite_rule, gauss_legendre, interval_rule,
                         lebedev_sphere, panel_integration_matrix, square_rule)
from .su2 import IDENTITY, su2_matrix

#: default surface rule, tensor Gauss-Legendre on the parameter square
SURFACE_SCHEME = QuadratureScheme("square2d", panels=1, nodes_per_panel=32)
#: default curve rule for bracket integrals
CURVE_SCHEME = QuadratureScheme("gl1d", panels=256, nodes_per_panel=4)
#: Dyson series: default order and the per-level Gauss-Legendre rule
#: largest admissible field value on the cutoff sphere, relative to the norm
TAIL_TOL = 1e-6

DYSON_ORDER = 8
DYSON_SCHEME = QuadratureScheme("gl1d", panels=8, nodes_per_panel=16)
#: default RK4 step count for the transport ODE
ODE_STEPS = 1000


def _index(k, name):
    if k not in (1, 2, 3):
        raise DomainError(f"index {name} must be 1, 2 or 3, got {k!r}")
    return k - 1


# geometry --------------------------------------------------------------------

def _vector_fn(exprs, variables):
    """Lambdify three expressions of ``variables`` plus their first partials."""
    if len(exprs) != 3:
        raise ParseError("a parametric map needs three component expressions")
    syms = {v: sympy.Symbol(v, real=True) for v in variables}
    comps = [_expr.to_sympy(_expr.parse(e, variables), syms) for e in exprs]
    order = [syms[v] for v in variables]

    def make(components):
        fns = [sympy.lambdify(order, c, modules="numpy") for c in components]

        def f(*args):
            n = len(np.atleast_1d(args[0]))
            return np.stack([np.broadcast_to(np.asarray(g(*args), float), (n,)) for g in fns], axis=1)
        return f

    partials = [make([sympy.diff(c, s) for c in comps]) for s in order]
    return make(comps), partials


@dataclass(frozen=True, eq=False)
class CurvePiece:
    start: float
    end: float
    position: Callable
    velocity: Callable
    label: str = ""


@dataclass(frozen=True, eq=False)
class Curve:
    """Piecewise C^1 curve parametrised over ``[0, 1]``."""

    pieces: tuple

    def __post_init__(self):
        if not self.pieces:
            raise GeometryError("a curve needs at least one piece")
        if abs(self.pieces[0].start) > 1e-14 or abs(self.pieces[-1].end - 1.0) > 1e-14:
            raise GeometryError("curve pieces must cover [0, 1]")
        for a, b in zip(self.pieces[:-1], self.pieces[1:]):
            if abs(a.end - b.start) > 1e-14:
                raise GeometryError("curve pieces must be contiguous")
            gap = np.linalg.norm(a.position(np.array([a.end])) - b.position(np.array([b.start])))
            if gap > 1e-9:
                raise GeometryError(f"curve pieces do not join (gap {gap:.3g})")

    @classmethod
    def from_expressions(cls, exprs, velocity=None):
        """Single smooth piece from three expressions of ``t``.

        Without explicit ``velocity`` expressions the velocity is the exact
        symbolic derivative.
        """
        pos, (vel,) = _vector_fn(exprs, ("t",))
        if velocity is not None:
            vel, _ = _vector_fn(velocity, ("t",))
        return cls((CurvePiece(0.0, 1.0, pos, vel, label=str(list(exprs))),))

    @classmethod
    def polyline(cls, vertices):
        """Straight segments through ``vertices``, equal parameter length each."""
        v = np.asarray(vertices, dtype=float)
        n = len(v) - 1
        pieces = []
        for k in range(n):
            a, b = v[k], v[k + 1]
            s0, s1 = k / n, (k + 1) / n

            def pos(t, a=a, b=b, s0=s0):
                return a + np.outer((np.asarray(t) - s0) * n, b - a)

            def vel(t, a=a, b=b):
                return np.tile(n * (b - a), (len(np.atleast_1d(t)), 1))

            pieces.append(CurvePiece(s0, s1, pos, vel, label=f"segment {k}"))
        return cls(tuple(pieces))

    @property
    def joins(self):
        return tuple(p.end for p in self.pieces[:-1])

    @property
    def closed(self):
        ends = self.position(np.array([0.0, 1.0]))
        return bool(np.linalg.norm(ends[0] - ends[1]) < 1e-9)

    def _dispatch(self, t, attr):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        if np.any(t < -1e-12) or np.any(t > 1 + 1e-12):
            raise DomainError("curve parameter outside [0, 1]")
        which = np.searchsorted(np.asarray(self.joins), t, side="right")
        out = np.empty((len(t), 3))
        for k, piece in enumerate(self.pieces):
            mask = which == k
            if np.any(mask):
                out[mask] = getattr(piece, attr)(t[mask])
        return out

    def position(self, t):
        return self._dispatch(t, "position")

    def velocity(self, t):
        return self._dispatch(t, "velocity")


@dataclass(frozen=True, eq=False)
class SurfacePatch:
    """Parametric patch ``X: [0,1]^2 -> R^3`` with partials and orientation."""

    X: Callable
    Xu: Callable
    Xw: Callable
    orientation: int = 1
    label: str = ""

    @classmethod
    def from_expressions(cls, exprs, orientation=1):
        pos, (du, dw) = _vector_fn(exprs, ("u", "w"))
        return cls(pos, du, dw, int(orientation), label=str(list(exprs)))

    def normal(self, u, w):
        return self.orientation * np.cross(self.Xu(u, w), self.Xw(u, w))

    def swapped(self):
        """The same surface with ``u`` and ``w`` exchanged (opposite orientation)."""
        return SurfacePatch(lambda u, w: self.X(w, u), lambda u, w: self.Xw(w, u),
                            lambda u, w: self.Xu(w, u), self.orientation, self.label + " swapped")

    def scaled(self, s, center):
        """Patch shrunk by ``s`` towards ``center``."""
        c = np.asarray(center, dtype=float)
        return SurfacePatch(lambda u, w: c + s * (self.X(u, w) - c), lambda u, w: s * self.Xu(u, w),
                            lambda u, w: s * self.Xw(u, w), self.orientation, f"{s}*{self.label}")


@dataclass(frozen=True)
class SurfaceSample:
    points: np.ndarray    # (S, 3)
    normals: np.ndarray   # (S, 3), orientation included
    weights: np.ndarray   # (S,)


def sample_surface(surface: SurfacePatch, q2d: QuadratureScheme | None = None) -> SurfaceSample:
    q2d = q2d or SURFACE_SCHEME
    U, W, weights = square_rule(q2d.nodes_per_panel, q2d.nodes_per_panel, q2d.panels)
    X = surface.X(U, W)
    n = surface.normal(U, W)
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(n))):
        raise GeometryError("surface map is not finite on the parameter square")
    scale = max(1.0, float(np.abs(X).max()))
    if np.linalg.norm(n, axis=1).min() <= 1e-12 * scale**2:
        raise GeometryError("degenerate surface patch: X_u x X_w vanishes")
    return SurfaceSample(X, n, weights)


def _check_h2(f, what):
    if f.zero:
        return
    if f.domain.variant != "r3":
        raise DomainError(f"{what} must be a field on R^3")
    norm = standard_h2_norm(f)
    if not np.isfinite(norm):
        raise EvaluationError(f"{what} has no finite H^2 norm")
    # the truncated-domain norm is finite for any bounded field, so also require decay
    tail = float(np.abs(f.eval(R3.r_cut * lebedev_sphere(17)[0])).max())
    if tail > TAIL_TOL * max(1.0, norm):
        raise EvaluationError(f"{what} does not decay: |f| = {tail:.3g} at r = {R3.r_cut}")


@dataclass(frozen=True, eq=False)
class FluxSpec:
    """A surface together with three internal test fields ``f^i``."""

    surface: SurfacePatch
    f: tuple
    validate: bool = True

    def __post_init__(self):
        if len(self.f) != 3:
            raise ValueError("a flux needs three test fields")
        if self.validate:
            for i, fi in enumerate(self.f):
                _check_h2(fi, f"test field f^{i + 1}")

    def density(self, q2d=None):
        """``D[s, a, i] = w_s n_a(X_s) f^i(X_s)`` and the surface points."""
        smp = sample_surface(self.surface, q2d)
        fv = np.stack([fi.eval(smp.points) for fi in self.f], axis=1)
        return smp.points, (smp.weights[:, None, None] * smp.normals[:, :, None] * fv[:, None, :])


def _grid(rows, what):
    rows = list(rows)
    if len(rows) == 3 and all(isinstance(r, (list, tuple)) for r in rows):
        rows = [x for r in rows for x in r]
    if len(rows) != 9:
        raise ParseError(f"{what} needs 9 entries or a 3x3 array")
    return rows


@dataclass(frozen=True, eq=False)
class PhasePoint3D:
    """``A[a][i]`` and ``E[a][i]`` as 3x3 tuples of fields on R^3 (a-major)."""

    A: tuple
    E: tuple
    validate: bool = True

    def __post_init__(self):
        for name in ("A", "E"):
            g = getattr(self, name)
            if len(g) != 3 or any(len(r) != 3 for r in g):
                raise ValueError(f"{name} must be a 3x3 family of fields")
            if self.validate:
                for a in range(3):
                    for i in range(3):
                        _check_h2(g[a][i], f"{name}[{a + 1}][{i + 1}]")

    @classmethod
    def from_expressions(cls, connection, triad=None, validate=True):
        def build(rows, what):
            if rows is None:
                return tuple(tuple(zero_field(R3) for _ in range(3)) for _ in range(3))
            flat = _grid(rows, what)
            fs = [zero_field(R3) if _is_zero_text(s) else expression_field(s, R3) for s in flat]
            return tuple(tuple(fs[3 * a:3 * a + 3]) for a in range(3))
        return cls(build(connection, "connection"), build(triad, "triad"), validate)

    @classmethod
    def zero(cls):
        return cls.from_expressions(None, None, validate=False)

    def shifted_connection(self, eps, xi):
        """``A + eps * xi`` for a 3x3 family ``xi``; ``E`` unchanged."""
        A = tuple(tuple(lincomb([1.0, eps], [self.A[a][i], xi[a][i]]) for i in range(3)) for a in range(3))
        return PhasePoint3D(A, self.E, validate=False)


def _is_zero_text(s):
    try:
        tree = _expr.parse(str(s), ("x", "y", "z"))
    except ParseError:
        return False
    return isinstance(tree, _expr.Num) and tree.value == 0.0


# basic brackets -----------------------------------------------------------------

def basic_bracket_3d(kind1, kind2, x, y, a, b, i, j) -> float:
    """``{A_a^i(x), E^b_j(y)} = delta_ab delta_ij E_x(y)``; ``{A,A} = {E,E} = 0``."""
    a, b, i, j = (_index(k, n) for k, n in ((a, "a"), (b, "b"), (i, "i"), (j, "j")))
    kinds = (str(kind1).upper(), str(kind2).upper())
    if any(k not in ("A", "E") for k in kinds):
        raise ValueError("bracket kinds must be 'A' or 'E'")
    if kinds[0] == kinds[1] or a != b or i != j:
        return 0.0
    val = float(r3_kernel(x, np.asarray(y, dtype=float).reshape(1, 3))[0])
    return val if kinds[0] == "A" else -val


# holonomies -----------------------------------------------------------------------

def parse_method(method):
    """``"dyson:N"`` / ``"ode:steps"`` (or tuples) to ``(kind, int)``."""
    if isinstance(method, str):
        kind, _, n = method.partition(":")
        kind = kind.strip().lower()
        if kind not in ("dyson", "ode"):
            raise ValueError(f"unknown holonomy method {method!r}")
        n = int(n) if n else (DYSON_ORDER if kind == "dyson" else ODE_STEPS)
    else:
        kind, n = method
    if n < 1:
        raise ValueError("method parameter must be positive")
    return kind, int(n)


def connection_coeffs(curve: Curve, p: PhasePoint3D, t) -> np.ndarray:
    """su(2) coefficients of ``A_gamma(t)``, shape ``(n, 3)``."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    pos, vel = curve.position(t), curve.velocity(t)
    out = np.zeros((len(t), 3))
    for a in range(3):
        for i in range(3):
            f = p.A[a][i]
            if not f.zero:
                out[:, i] += vel[:, a] * f.eval(pos)
    if not np.all(np.isfinite(out)):
        raise EvaluationError("connection is not finite along the curve")
    return out


def _check_range(l1, l2):
    if not (0.0 <= l1 < l2 <= 1.0):
        raise DomainError(f"need 0 <= lambda1 < lambda2 <= 1, got {l1}, {l2}")


def transport(coeff_fn, ts, joins=()) -> np.ndarray:
    """RK4 solution of ``U' = A(t) U``, ``U(ts[0]) = 1``, stepping between
    consecutive entries of ``ts``.  Returns ``U`` at every entry.

    A step ending on one of ``joins`` uses the left limit of ``A`` there.
    """
    ts = np.asarray(ts, dtype=float)
    mids = 0.5 * (ts[:-1] + ts[1:])
    ends = np.flatnonzero(np.isin(ts[1:], np.asarray(joins, dtype=float)))
    left = np.nextafter(ts[1:][ends], -np.inf)
    c = coeff_fn(np.concatenate([ts, mids, left]))
    M = su2_matrix(c)
    n = len(ts)
    Mt, Mm = M[:n], M[n:2 * n - 1]
    Mend = Mt[1:].copy()
    Mend[ends] = M[2 * n - 1:]
    out = np.empty((len(ts), 2, 2), dtype=complex)
    U = IDENTITY.copy()
    out[0] = U
    for k in range(len(ts) - 1):
        h = ts[k + 1] - ts[k]
        k1 = Mt[k] @ U
        k2 = Mm[k] @ (U + 0.5 * h * k1)
        k3 = Mm[k] @ (U + 0.5 * h * k2)
        k4 = Mend[k] @ (U + h * k3)
        U = U + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        out[k + 1] = U
    return out


def _ode_grid(curve, l1, l2, steps, extra=()):
    base = np.linspace(l1, l2, steps + 1)
    joins = [j for j in curve.joins if l1 < j < l2]
    return np.unique(np.concatenate([base, joins, np.asarray(extra, dtype=float)]))


def dyson_transport(coeff_fn, l1, l2, order, scheme=None, breakpoints=()):
    """Truncated Dyson series evaluated at every Gauss node of the composite rule.

    ``T_0 = 1`` and ``T_n(t) = int_{l1}^t A(s) T_{n-1}(s) ds``; each level is
    integrated exactly for polynomials of degree < nodes_per_panel on every
    panel.  Returns ``(nodes, weights, U_nodes, U_end)`` with
    ``U = sum_{n <= order} T_n``.
    """
    scheme = scheme or DYSON_SCHEME
    n = scheme.nodes_per_panel
    edges = np.linspace(l1, l2, scheme.panels + 1)
    bp = [b for b in breakpoints if l1 < b < l2]
    edges = np.unique(np.concatenate([edges, bp]))
    t, w = composite_rule(edges, n)
    P = len(edges) - 1
    widths = np.diff(edges)
    S = np.stack([panel_integration_matrix(n, h) for h in widths])        # (P, n, n)
    W = w.reshape(P, n)
    A = su2_matrix(coeff_fn(t)).reshape(P, n, 2, 2)
    T = np.broadcast_to(IDENTITY, (P, n, 2, 2)).astype(complex)
    U_nodes = T.copy()
    U_end = IDENTITY.copy()
    for _ in range(order):
        F = A @ T
        inside = np.einsum("pjk,pkab->pjab", S, F)
        totals = np.einsum("pk,pkab->pab", W, F)
        offsets = np.concatenate([np.zeros((1, 2, 2)), np.cumsum(totals, axis=0)[:-1]])
        T = offsets[:, None] + inside
        U_nodes = U_nodes + T
        U_end = U_end + totals.sum(axis=0)
    return t, w, U_nodes.reshape(-1, 2, 2), U_end


def holonomy(curve: Curve, p: PhasePoint3D, lam1=0.0, lam2=1.0, method="ode") -> np.ndarray:
    """``h(lam2, lam1)`` as a 2x2 complex matrix."""
    _check_range(lam1, lam2)
    kind, n = parse_method(method)
    coeff = lambda t: connection_coeffs(curve, p, t)
    if kind == "ode":
        return transport(coeff, _ode_grid(curve, lam1, lam2, n), curve.joins)[-1]
    return dyson_transport(coeff, lam1, lam2, n, breakpoints=curve.joins)[3]


def _transport_at_nodes(curve, coeff, l1, l2, method, scheme):
    """Curve rule nodes/weights and ``U(t) = h(t, l1)`` there, plus ``U(l2)``."""
    kind, n = parse_method(method)
    if kind == "dyson":
        return dyson_transport(coeff, l1, l2, n, scheme, curve.joins)
    t, w = interval_rule(l1, l2, scheme.panels, scheme.nodes_per_panel, curve.joins)
    grid = _ode_grid(curve, l1, l2, n, t)
    U = transport(coeff, grid, curve.joins)
    idx = np.searchsorted(grid, t)
    return t, w, U[idx], U[-1]


# fluxes ---------------------------------------------------------------------------

def flux(spec: FluxSpec, p: PhasePoint3D, q2d: QuadratureScheme | None = None) -> float:
    """``int du dw f^i(X) E^a_i(X) n_a``."""
    X, D = spec.density(q2d)
    total = 0.0
    for a in range(3):
        for i in range(3):
            e = p.E[a][i]
            if not e.zero:
                total += float(np.sum(D[:, a, i] * e.eval(X)))
    return total


def _kernel_sums(X, dens, pts, want_grad, want_hess, chunk=400_000):
    """``sum_s dens_s E_{X_s}(x)`` (and derivatives in ``x``) at ``pts``."""
    pts = np.asarray(pts, dtype=float).reshape(-1, 3)
    m = len(pts)
    val = np.zeros(m)
    grad = np.zeros((m, 3)) if want_grad else None
    hess = np.zeros((m, 3, 3)) if want_hess else None
    step = max(1, chunk // max(1, len(X)))
    for lo in range(0, m, step):
        sl = slice(lo, lo + step)
        d = pts[sl, None, :] - X[None, :, :]
        r = np.sqrt(np.einsum("msi,msi->ms", d, d))
        if want_grad or want_hess:
            if np.any(r == 0.0):
                raise EvaluationError("flux derivative evaluated exactly on a surface node")
        e = INV_8PI * np.exp(-r) * dens[None, :]
        val[sl] = e.sum(axis=1)
        if want_grad:
            grad[sl] = -np.einsum("ms,msi->mi", e / r, d)
        if want_hess:
            a = (1.0 + 1.0 / r) / r**2
            hess[sl] = np.einsum("ms,msi,msj->mij", e * a, d, d)
            hess[sl] -= (e / r).sum(axis=1)[:, None, None] * np.eye(3)
    return val, grad, hess


def flux_functional_derivative(spec: FluxSpec, a, i, q2d: QuadratureScheme | None = None) -> SobolevFunction:
    """Riesz representative of ``E[f]`` with respect to ``E^a_i``.

    ``x -> int du dw f^i(X) n_a(X) E_X(x)``, a kernel-smeared copy of the
    surface density.  The derivative with respect to ``A`` is zero.
    """
    a, i = _index(a, "a"), _index(i, "i")
    if spec.f[i].zero:
        return zero_field(R3)
    X, D = spec.density(q2d)
    dens = D[:, a, i]
    if not np.any(dens):
        return zero_field(R3)

    def value(pts):
        return _kernel_sums(X, dens, pts, False, False)[0]

    def grad(pts):
        return _kernel_sums(X, dens, pts, True, False)[1]

    def hess(pts):
        return _kernel_sums(X, dens, pts, False, True)[2]

    def jet(pts):
        return _kernel_sums(X, dens, pts, True, True)

    return SobolevFunction(R3, value, grad, hess, label=f"Xi[{a + 1}][{i + 1}]", jet_fn=jet)


def flux_derivative_family(spec: FluxSpec, q2d=None):
    """All nine ``Xi[a][i]`` as a 3x3 tuple."""
    return tuple(tuple(flux_functional_derivative(spec, a, i, q2d) for i in (1, 2, 3)) for a in (1, 2, 3))


def smeared_coeffs(spec: FluxSpec, curve: Curve, t, q2d=None) -> np.ndarray:
    """su(2) coefficients of ``gammadot^a(t) Xi_a^k(gamma(t))``, shape ``(n, 3)``.

    This is the variation of ``A_gamma`` along the Hamiltonian vector field
    of the flux.
    """
    t = np.atleast_1d(np.asarray(t, dtype=float))
    X, D = spec.density(q2d)
    pos, vel = curve.position(t), curve.velocity(t)
    out = np.empty((len(t), 3))
    step = max(1, 2_000_000 // len(X))
    for lo in range(0, len(t), step):
        sl = slice(lo, lo + step)
        d = pos[sl, None, :] - X[None, :, :]
        K = INV_8PI * np.exp(-np.sqrt(np.einsum("msi,msi->ms", d, d)))
        out[sl] = np.einsum("ms,sak,ma->mk", K, D, vel[sl])
    return out


# holonomy-flux bracket --------------------------------------------------------------

def holonomy_flux_bracket(curve: Curve, spec: FluxSpec, p: PhasePoint3D, lam1=0.0, lam2=1.0,
                          method="ode", curve_scheme=None, q2d=None) -> np.ndarray:
    """``{h(lam2, lam1), E[f]}`` as a 2x2 matrix.

    ``int dS f^k n_a int dt gammadot^a E_{gamma(t)}(X) h(lam2, t) tau_k/2 h(t, lam1)``
    by a surface rule times a curve rule, with the sub-holonomies taken from
    one transport solve.
    """
    _check_range(lam1, lam2)
    curve_scheme = curve_scheme or CURVE_SCHEME
    coeff = lambda s: connection_coeffs(curve, p, s)
    t, w, U, U_end = _transport_at_nodes(curve, coeff, lam1, lam2, method, curve_scheme)
    G = su2_matrix(smeared_coeffs(spec, curve, t, q2d))
    inner = np.linalg.solve(U, G @ U)                  # U(t)^-1 G(t) U(t)
    return U_end @ np.einsum("k,kab->ab", w, inner)


def holonomy_flux_flow_oracle(curve: Curve, spec: FluxSpec, p: PhasePoint3D, lam1=0.0, lam2=1.0,
                              eps=1e-5, steps=ODE_STEPS, q2d=None) -> np.ndarray:
    """Central difference of ``h[A + eps Xi]`` with ``Xi`` the flux derivative.

    Independent of the bracket formula: the flux derivative fields enter the
    connection and the holonomy is re-solved.
    """
    xi = flux_derivative_family(spec, q2d)
    hp = holonomy(curve, p.shifted_connection(eps, xi), lam1, lam2, ("ode", steps))
    hm = holonomy(curve, p.shifted_connection(-eps, xi), lam1, lam2, ("ode", steps))
    return (hp - hm) / (2 * eps)


def trace_holonomy_flux_bracket(curve: Curve, spec: FluxSpec, p: PhasePoint3D, method="ode",
                                curve_scheme=None, q2d=None) -> float:
    """``{Tr h(1, 0), E[f]}`` from the cyclic form ``Tr(U(t) U(1) U(t)^-1 G(t))``."""
    curve_scheme = curve_scheme or CURVE_SCHEME
    coeff = lambda s: connection_coeffs(curve, p, s)
    t, w, U, U_end = _transport_at_nodes(curve, coeff, 0.0, 1.0, method, curve_scheme)
    G = su2_matrix(smeared_coeffs(spec, curve, t, q2d))
    cyc = U @ U_end @ np.linalg.inv(U)
    tr = np.einsum("kab,kba->k", cyc, G)
    return float(np.real(w @ tr))


# observables and the structural brackets ----------------------------------------

@dataclass(frozen=True, eq=False)
class TraceHolonomy:
    """``Tr h_gamma(1, 0)``; depends on the connection only."""

    curve: Curve
    depends_on: str = field(default="A", init=False)


@dataclass(frozen=True, eq=False)
class Flux:
    """``E[f]``; depends on the triad only."""

    spec: FluxSpec
    depends_on: str = field(default="E", init=False)


def bracket_3d(f, g, p: PhasePoint3D, **kw) -> float:
    """Bracket of two of the observables above.

    Two observables depending on the same variable commute exactly: the
    momentum derivative of a holonomy and the configuration derivative of
    a flux vanish identically, so no integral is evaluated.
    """
    if f.depends_on == g.depends_on:
        return 0.0
    if isinstance(f, TraceHolonomy):
        return trace_holonomy_flux_bracket(f.curve, g.spec, p, **kw)
    return -trace_holonomy_flux_bracket(g.curve, f.spec, p, **kw)


# Jacobi identity ------------------------------------------------------------------

@dataclass(frozen=True)
class JacobiScheme:
    outer_panels: int = 32
    outer_nodes: int = 8
    inner_nodes: int = 16
    inner_panels: int = 4   # per unit parameter length
    ode_steps: int = 2000

    def coarser(self):
        return JacobiScheme(max(1, self.outer_panels // 2), self.outer_nodes, max(4, self.inner_nodes - 4),
                            max(1, self.inner_panels // 2), max(1, self.ode_steps // 2))


JACOBI_FINE = JacobiScheme()


def _triangle_nodes(t, lo, hi, inner, per_unit, joins):
    """Composite Gauss nodes on ``[lo_m, hi_m]`` for every outer node.

    The interval gets ``ceil(per_unit * length)`` equal panels and is also
    split at curve joins.
    """
    x, wx = gauss_legendre(inner)
    owners, nodes, weights = [], [], []
    for m in range(len(t)):
        k = max(1, int(np.ceil(per_unit * (hi[m] - lo[m]))))
        uniform = list(np.linspace(lo[m], hi[m], k + 1)[1:-1])
        cuts = sorted([lo[m], hi[m]] + uniform + [j for j in joins if lo[m] < j < hi[m]])
        for a, b in zip(cuts[:-1], cuts[1:]):
            half = 0.5 * (b - a)
            nodes.append(0.5 * (a + b) + half * x)
            weights.append(half * wx)
            owners.append(np.full(inner, m))
    return np.concatenate(owners), np.concatenate(nodes), np.concatenate(weights)


def double_brackets(curve: Curve, spec_f: FluxSpec, spec_g: FluxSpec, p: PhasePoint3D,
                    scheme: JacobiScheme = JACOBI_FINE, q2d=None):
    """``T(f, g) = {{Tr h, E[f]}, E[g]}`` and ``T(g, f)``.

    With ``Gh(t) = U(t)^-1 G(t) U(t)`` the double bracket is
    ``int dt int ds Tr(U(1) Gh_later Gh_earlier)``; it is evaluated as written,
    over the triangles ``s > t`` and ``s < t`` with the outer integral over the
    time of the first flux, so ``T(f, g)`` and ``T(g, f)`` use genuinely
    different node sets.
    """
    t, wt = interval_rule(0.0, 1.0, scheme.outer_panels, scheme.outer_nodes, curve.joins)
    own_hi, s_hi, w_hi = _triangle_nodes(t, t, np.ones_like(t), scheme.inner_nodes,
                                         scheme.inner_panels, curve.joins)
    own_lo, s_lo, w_lo = _triangle_nodes(t, np.zeros_like(t), t, scheme.inner_nodes,
                                         scheme.inner_panels, curve.joins)
    allpts = np.concatenate([t, s_hi, s_lo])
    grid, inv = np.unique(np.concatenate([_ode_grid(curve, 0.0, 1.0, scheme.ode_steps), allpts]),
                          return_inverse=True)
    inv = inv[-len(allpts):]
    U = transport(lambda s: connection_coeffs(curve, p, s), grid, curve.joins)
    U_end = U[-1]
    Ua = U[inv]
    Uinv = np.linalg.inv(Ua)

    def hat(spec):
        G = su2_matrix(smeared_coeffs(spec, curve, allpts, q2d))
        return Uinv @ G @ Ua

    nt, nhi = len(t), len(s_hi)

    def T(first, second):
        a = first[:nt]
        b_hi, b_lo = second[nt:nt + nhi], second[nt + nhi:]
        later = np.einsum("ab,kbc,kcd->kad", U_end, b_hi, a[own_hi])    # s > t
        earlier = np.einsum("ab,kbc,kcd->kad", U_end, a[own_lo], b_lo)  # s < t
        v_hi = np.einsum("kaa->k", later) * w_hi * wt[own_hi]
        v_lo = np.einsum("kaa->k", earlier) * w_lo * wt[own_lo]
        return float(np.real(v_hi.sum() + v_lo.sum()))

    hf, hg = hat(spec_f), hat(spec_g)
    return T(hf, hg), T(hg, hf)


@dataclass(frozen=True)
class JacobiReport:
    residual: float
    jac_tol: float
    t_fg: float
    t_gf: float
    ee_term: float
    symmetry_gap: float
    refinement_change: float
    max_term: float

    @property
    def passed(self):
        return self.residual <= self.jac_tol and self.symmetry_gap <= self.jac_tol

    @property
    def tol_ratio(self):
        return self.jac_tol / self.max_term if self.max_term else 0.0

    def as_dict(self):
        d = {k: float(v) for k, v in self.__dict__.items()}
        d["passed"] = bool(self.passed)
        d["tol_ratio"] = float(self.tol_ratio)
        return d


def jacobi_verifier(curve: Curve, spec_f: FluxSpec, spec_g: FluxSpec, p: PhasePoint3D,
                    scheme: JacobiScheme = JACOBI_FINE, q2d=None) -> JacobiReport:
    """Jacobi residual for ``(Tr h, E[f], E[g])`` with a refinement-derived tolerance.

    ``J = {{Tr h, E[f]}, E[g]} + {{E[f], E[g]}, Tr h} + {{E[g], Tr h}, E[f]}
        = T(f, g) + 0 - T(g, f)``.  The tolerance is ten times the change of
    the double brackets between ``scheme.coarser()`` and ``scheme``, plus a
    round-off allowance of ``1e3`` ulps of the largest term.
    """
    ee = bracket_3d(Flux(spec_f), Flux(spec_g), p)
    fine = double_brackets(curve, spec_f, spec_g, p, scheme, q2d)
    coarse = double_brackets(curve, spec_f, spec_g, p, scheme.coarser(), q2d)
    change = max(abs(fine[0] - coarse[0]), abs(fine[1] - coarse[1]))
    max_term = max(abs(fine[0]), abs(fine[1]))
    tol = 10.0 * change + 1e3 * np.finfo(float).eps * max_term
    residual = abs(fine[0] + ee - fine[1])
    return JacobiReport(residual, tol, fine[0], fine[1], ee, abs(fine[0] - fine[1]), change, max_term)


# scenes -------------------------------------------------------------------------

SCENE_KEYS = {"name", "connection", "triad", "curve", "velocity", "surface", "orientation",
              "test_fields", "surface_g", "orientation_g", "test_fields_g"}


@dataclass(frozen=True, eq=False)
class Scene:
    name: str
    point: PhasePoint3D
    curve: Curve
    flux_f: FluxSpec
    flux_g: Optional[FluxSpec] = None
    source: dict = field(default_factory=dict)


def _test_fields(exprs):
    if len(exprs) != 3:
        raise ParseError("test_fields needs three expressions")
    return tuple(zero_field(R3) if _is_zero_text(s) else expression_field(s, R3) for s in exprs)


def scene_from_dict(cfg: dict, validate=True) -> Scene:
    """Build a scene from its JSON record; unknown keys are rejected."""
    if not isinstance(cfg, dict):
        raise ParseError("scene must be a JSON object")
    unknown = set(cfg) - SCENE_KEYS
    if unknown:
        raise ParseError(f"unknown scene keys: {sorted(unknown)}")
    for key in ("connection", "curve", "surface", "test_fields"):
        if key not in cfg:
            raise ParseError(f"scene needs {key!r}")
    point = PhasePoint3D.from_expressions(cfg["connection"], cfg.get("triad"), validate=validate)
    curve = Curve.from_expressions(cfg["curve"], cfg.get("velocity"))
    surf = SurfacePatch.from_expressions(cfg["surface"], cfg.get("orientation", 1))
    ff = FluxSpec(surf, _test_fields(cfg["test_fields"]), validate)
    fg = None
    if "test_fields_g" in cfg or "surface_g" in cfg:
        surf_g = SurfacePatch.from_expressions(cfg["surface_g"], cfg.get("orientation_g", 1)) \
            if "surface_g" in cfg else surf
        fg = FluxSpec(surf_g, _test_fields(cfg.get("test_fields_g", cfg["test_fields"])), validate)
    return Scene(cfg.get("name", "scene"), point, curve, ff, fg, dict(cfg))


def load_scene(path, validate=True) -> Scene:
    with open(Path(path)) as fh:
        try:
            cfg = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ParseError(f"scene file is not valid JSON: {exc.msg}", exc.pos) from None
    return scene_from_dict(cfg, validate)
