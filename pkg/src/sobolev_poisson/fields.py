"""Fields on the unit interval, the real line and R^3, and their Sobolev inner products.

A :class:`SobolevFunction` is an evaluator with derivative access rather than
a table of samples: the inner products below need values and weak
derivatives at arbitrary quadrature nodes.  One-dimensional fields take and
return arrays of shape ``(n,)``; fields on R^3 take points of shape ``(n, 3)``,
return gradients of shape ``(n, 3)`` and Hessians of shape ``(n, 3, 3)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
import sympy

from . import expr as _expr
from .errors import CapabilityError, DomainError, EvaluationError, ParseError
from .quadrature import QuadratureScheme, interval_rule, spherical_rule

__all__ = [
    "DomainTag",
    "UNIT",
    "LINE",
    "R3",
    "SobolevFunction",
    "parse_field",
    "field_from_config",
    "symbolic_field",
    "zero_field",
    "constant_field",
    "lincomb",
    "default_scheme",
    "inner_product_h1",
    "inner_product_l2",
    "inner_product_h2r3",
    "standard_h2_norm",
    "FD_TOL",
    "QUAD_TOL",
]

#: agreement required between finite-difference and analytic derivatives
FD_TOL = 1e-6
#: default absolute quadrature tolerance per space (bounded vs truncated domains)
QUAD_TOL = {"unit": 1e-8, "line": 1e-6, "r3": 1e-6}


@dataclass(frozen=True)
class DomainTag:
    """Which space a field lives on.

    ``r_cut`` is the truncation radius used by quadrature on the unbounded
    domains; it is ``None`` for the closed unit interval.
    """

    variant: str
    r_cut: Optional[float] = None

    def __post_init__(self):
        if self.variant not in ("unit", "line", "r3"):
            raise ValueError(f"unknown domain variant {self.variant!r}")
        if self.variant != "unit" and not (self.r_cut and self.r_cut > 0):
            raise ValueError("unbounded domains need a positive r_cut")

    @property
    def dim(self):
        return 3 if self.variant == "r3" else 1

    @property
    def variables(self):
        return ("x", "y", "z") if self.variant == "r3" else ("t",)

    def same_space(self, other):
        return self.variant == other.variant

    def check(self, pts):
        """Validate and normalise points; returns a float array."""
        pts = np.asarray(pts, dtype=float)
        if self.dim == 3:
            pts = pts.reshape(-1, 3)
        else:
            pts = pts.reshape(-1)
        if self.variant == "unit":
            if np.any(pts < -1e-12) or np.any(pts > 1 + 1e-12):
                raise DomainError("point outside the closed interval [0, 1]")
        if not np.all(np.isfinite(pts)):
            raise DomainError("non-finite point")
        return pts


UNIT = DomainTag("unit")
LINE = DomainTag("line", 40.0)
R3 = DomainTag("r3", 25.0)

_DOMAINS = {"unit": UNIT, "line": LINE, "r3": R3}


def _domain(d):
    if isinstance(d, DomainTag):
        return d
    try:
        return _DOMAINS[d]
    except KeyError:
        raise DomainError(f"unknown domain {d!r}") from None


@dataclass(frozen=True, eq=False)
class SobolevFunction:
    """A scalar field with pointwise value and weak-derivative access.

    ``kinks`` lists the points where the field is only piecewise smooth:
    breakpoints on an interval, radial centres on R^3.  Quadrature splits
    panels there (1-D) or centres its shells there (R^3).
    """

    domain: DomainTag
    value_fn: Callable
    grad_fn: Optional[Callable] = None
    hess_fn: Optional[Callable] = None
    mode: str = "analytic"
    kinks: tuple = ()
    zero: bool = False
    label: str = ""
    jet_fn: Optional[Callable] = None

    def __call__(self, pts):
        return self.eval(pts)

    def eval(self, pts):
        pts = self.domain.check(pts)
        if self.zero:
            return np.zeros(len(pts))
        return _as_values(self.value_fn(pts), len(pts))

    def grad(self, pts):
        if self.grad_fn is None and not self.zero:
            raise CapabilityError(f"field {self.label or '?'} has no first derivatives")
        pts = self.domain.check(pts)
        n = len(pts)
        if self.zero:
            return np.zeros((n, 3)) if self.domain.dim == 3 else np.zeros(n)
        g = np.asarray(self.grad_fn(pts), dtype=float)
        if self.domain.dim == 3:
            return np.broadcast_to(g, (n, 3))
        return _as_values(g, n)

    def hess(self, pts):
        if self.domain.dim != 3:
            raise CapabilityError("second derivatives are only tracked on R^3")
        if self.hess_fn is None and not self.zero:
            raise CapabilityError(f"field {self.label or '?'} has no second derivatives")
        pts = self.domain.check(pts)
        if self.zero:
            return np.zeros((len(pts), 3, 3))
        return np.broadcast_to(np.asarray(self.hess_fn(pts), dtype=float), (len(pts), 3, 3))

    def deriv(self, pts, index=()):
        """Partial derivative along the axes in ``index`` (order at most 2)."""
        index = tuple(index)
        if len(index) == 0:
            return self.eval(pts)
        if len(index) == 1:
            g = self.grad(pts)
            return g if self.domain.dim == 1 else g[:, index[0]]
        if len(index) == 2:
            return self.hess(pts)[:, index[0], index[1]]
        raise CapabilityError("derivatives above order 2 are not available")

    @property
    def has_second_derivatives(self):
        return self.zero or self.hess_fn is not None

    # linear structure ---------------------------------------------------

    def __add__(self, other):
        if not isinstance(other, SobolevFunction):
            return NotImplemented
        return lincomb([1.0, 1.0], [self, other])

    def __sub__(self, other):
        if not isinstance(other, SobolevFunction):
            return NotImplemented
        return lincomb([1.0, -1.0], [self, other])

    def __neg__(self):
        return lincomb([-1.0], [self])

    def __mul__(self, c):
        if isinstance(c, SobolevFunction):
            return NotImplemented
        return lincomb([float(c)], [self])

    __rmul__ = __mul__


def _as_values(v, n):
    v = np.asarray(v, dtype=float)
    if v.ndim == 0:
        return np.full(n, float(v))
    return np.broadcast_to(v, (n,)).copy() if v.shape != (n,) else v


def zero_field(domain):
    domain = _domain(domain)
    return SobolevFunction(domain, lambda p: 0.0, lambda p: 0.0, (lambda p: 0.0) if domain.dim == 3 else None,
                           zero=True, label="0")


def constant_field(domain, c):
    domain = _domain(domain)
    c = float(c)
    if c == 0.0:
        return zero_field(domain)
    return SobolevFunction(domain, lambda p: c, lambda p: 0.0,
                           (lambda p: 0.0) if domain.dim == 3 else None, label=repr(c))


def lincomb(coeffs, funcs):
    """``sum(c * f)`` as a new field; derivatives combine linearly."""
    pairs = [(float(c), f) for c, f in zip(coeffs, funcs) if c != 0 and not f.zero]
    if not funcs:
        raise ValueError("empty linear combination")
    domain = funcs[0].domain
    for f in funcs:
        if not f.domain.same_space(domain):
            raise DomainError("cannot combine fields on different domains")
    if not pairs:
        return zero_field(domain)
    if len(pairs) == 1 and pairs[0][0] == 1.0:
        return pairs[0][1]

    def value(p):
        return sum(c * _as_values(f.value_fn(p), len(p)) for c, f in pairs)

    grad = hess = None
    if all(f.grad_fn is not None for _, f in pairs):
        if domain.dim == 3:
            def grad(p):
                return sum(c * np.broadcast_to(np.asarray(f.grad_fn(p), float), (len(p), 3)) for c, f in pairs)
        else:
            def grad(p):
                return sum(c * _as_values(f.grad_fn(p), len(p)) for c, f in pairs)
    if domain.dim == 3 and all(f.hess_fn is not None for _, f in pairs):
        def hess(p):
            return sum(c * np.broadcast_to(np.asarray(f.hess_fn(p), float), (len(p), 3, 3)) for c, f in pairs)

    kinks = []
    for _, f in pairs:
        for k in f.kinks:
            if k not in kinks:
                kinks.append(k)
    mode = "analytic" if all(f.mode == "analytic" for _, f in pairs) else "finite-difference"
    return SobolevFunction(domain, value, grad, hess, mode=mode, kinks=tuple(kinks), label="lincomb")


# finite differences --------------------------------------------------------

# base step; fields are expected to vary on unit length scales on every domain
FD_STEP = 1e-2


def _fd_first_1d(f, h0):
    def d(t, h):
        return (f(t + h) - f(t - h)) / (2 * h)

    def grad(t):
        return (4 * d(t, h0 / 2) - d(t, h0)) / 3

    return grad


def _fd_derivs_3d(f, h0):
    eye = np.eye(3)

    def grad(p):
        out = np.empty((len(p), 3))
        for i in range(3):
            e = eye[i]

            def d(h):
                return (f(p + h * e) - f(p - h * e)) / (2 * h)

            out[:, i] = (4 * d(h0 / 2) - d(h0)) / 3
        return out

    def hess(p):
        out = np.empty((len(p), 3, 3))
        f0 = f(p)
        for i in range(3):
            ei = eye[i]

            def d2(h):
                return (f(p + h * ei) - 2 * f0 + f(p - h * ei)) / (h * h)

            out[:, i, i] = (4 * d2(h0 / 2) - d2(h0)) / 3
            for j in range(i + 1, 3):
                ej = eye[j]

                def m(h):
                    return (f(p + h * (ei + ej)) - f(p + h * (ei - ej))
                            - f(p - h * (ei - ej)) + f(p - h * (ei + ej))) / (4 * h * h)

                out[:, i, j] = out[:, j, i] = (4 * m(h0 / 2) - m(h0)) / 3
        return out

    return grad, hess


def parse_field(source: str, domain="unit") -> SobolevFunction:
    """Compile an expression into a field with finite-difference derivatives.

    Derivatives use central differences with one Richardson step
    (fourth order); Hessians use the matching second-difference stencils.
    """
    domain = _domain(domain)
    tree = _expr.parse(source, domain.variables)
    fn = _expr.compile_tree(tree)

    if domain.dim == 1:
        def raw(t):
            with np.errstate(all="ignore"):
                return _as_values(fn({"t": t}), len(np.atleast_1d(t)))
        grad = _fd_first_1d(raw, FD_STEP)
        return SobolevFunction(domain, raw, grad, None, mode="finite-difference", label=source)

    def raw3(p):
        with np.errstate(all="ignore"):
            return _as_values(fn({"x": p[:, 0], "y": p[:, 1], "z": p[:, 2]}), len(p))

    grad, hess = _fd_derivs_3d(raw3, FD_STEP)
    return SobolevFunction(domain, raw3, grad, hess, mode="finite-difference", label=source)


def field_from_config(cfg) -> SobolevFunction:
    """Build a field from a ``{"expr": ..., "domain": "unit|line|r3"}`` record."""
    if not isinstance(cfg, dict):
        raise ParseError("field config must be an object")
    unknown = set(cfg) - {"expr", "domain"}
    if unknown:
        raise ParseError(f"unknown field config keys: {sorted(unknown)}")
    if "expr" not in cfg:
        raise ParseError("field config needs an 'expr'")
    return parse_field(cfg["expr"], cfg.get("domain", "unit"))


def _lambdify(symbols, e):
    f = sympy.lambdify(symbols, e, modules="numpy")
    return f


def symbolic_field(source, domain="unit", label=None) -> SobolevFunction:
    """Field with exact derivatives obtained by symbolic differentiation.

    ``source`` is a sympy expression or a string sympy can parse (``**`` for
    powers).  Used for the reference catalogs where analytic derivatives are
    wanted.
    """
    domain = _domain(domain)
    syms = sympy.symbols(domain.variables, real=True)
    local = {s.name: s for s in syms}
    e = sympy.sympify(source, locals=local) if isinstance(source, str) else source
    label = label or str(source)
    if domain.dim == 1:
        (t,) = syms
        fv = _lambdify(t, e)
        fd = _lambdify(t, sympy.diff(e, t))
        return SobolevFunction(domain, lambda p: fv(p), lambda p: fd(p), None, label=label)

    fv = _lambdify(syms, e)
    grads = [_lambdify(syms, sympy.diff(e, s)) for s in syms]
    hs = {}
    for i in range(3):
        for j in range(i, 3):
            hs[i, j] = _lambdify(syms, sympy.diff(e, syms[i], syms[j]))
    pairs = list(hs)
    all_terms = [e] + [sympy.diff(e, s) for s in syms] + [sympy.diff(e, syms[i], syms[j]) for i, j in pairs]
    fused = sympy.lambdify(syms, all_terms, modules="numpy", cse=True)

    def jet(p):
        n = len(p)
        vals = [np.broadcast_to(np.asarray(v, float), (n,)) for v in fused(p[:, 0], p[:, 1], p[:, 2])]
        h = np.empty((n, 3, 3))
        for (i, j), v in zip(pairs, vals[4:]):
            h[:, i, j] = h[:, j, i] = v
        return vals[0], np.stack(vals[1:4], axis=1), h

    def value(p):
        return fv(p[:, 0], p[:, 1], p[:, 2])

    def grad(p):
        n = len(p)
        return np.stack([np.broadcast_to(g(p[:, 0], p[:, 1], p[:, 2]), (n,)) for g in grads], axis=1)

    def hess(p):
        n = len(p)
        out = np.empty((n, 3, 3))
        for (i, j), h in hs.items():
            out[:, i, j] = out[:, j, i] = np.broadcast_to(h(p[:, 0], p[:, 1], p[:, 2]), (n,))
        return out

    return SobolevFunction(domain, value, grad, hess, label=label, jet_fn=jet)


def expression_field(source: str, domain="unit") -> SobolevFunction:
    """Parse ``source`` with the package grammar and differentiate it exactly."""
    domain = _domain(domain)
    tree = _expr.parse(source, domain.variables)
    syms = {name: sympy.Symbol(name, real=True) for name in domain.variables}
    return symbolic_field(_expr.to_sympy(tree, syms), domain, label=source)


# quadrature front ends -----------------------------------------------------

def default_scheme(domain) -> QuadratureScheme:
    domain = _domain(domain)
    if domain.variant == "unit":
        return QuadratureScheme("gl1d", panels=16, nodes_per_panel=16)
    if domain.variant == "line":
        return QuadratureScheme("gl1d", panels=4 * int(2 * domain.r_cut), nodes_per_panel=12,
                                r_cut=domain.r_cut)
    # two radial panels per unit out to r = 4, geometric beyond; 47th-order angular rule
    return QuadratureScheme("shell3d", panels=2, nodes_per_panel=6, r_cut=domain.r_cut, lebedev_order=47,
                            inner_radius=4.0)


def _interval_nodes(u, v, q):
    domain = u.domain
    breaks = sorted(set(float(k) for k in u.kinks) | set(float(k) for k in v.kinks))
    if domain.variant == "unit":
        return interval_rule(0.0, 1.0, q.panels, q.nodes_per_panel, breaks)
    r = domain.r_cut if q.r_cut is None else q.r_cut
    lo = min([0.0] + breaks) - r
    hi = max([0.0] + breaks) + r
    return interval_rule(lo, hi, q.panels, q.nodes_per_panel, breaks)


def _finite(a, what):
    if not np.all(np.isfinite(a)):
        raise EvaluationError(f"non-finite {what} at a quadrature node")
    return a


def _check_1d_pair(u, v):
    if not u.domain.same_space(v.domain):
        raise DomainError(f"domain mismatch: {u.domain.variant} vs {v.domain.variant}")
    if u.domain.variant not in ("unit", "line"):
        raise DomainError("H1 inner product is defined on the unit interval or the real line")


def inner_product_h1(u: SobolevFunction, v: SobolevFunction, q: QuadratureScheme | None = None) -> float:
    """``integral(u v + u' v')`` over the interval or the (truncated) line."""
    _check_1d_pair(u, v)
    if u.zero or v.zero:
        return 0.0
    q = q or default_scheme(u.domain)
    t, w = _interval_nodes(u, v, q)
    uv = _finite(u.eval(t), "value") * _finite(v.eval(t), "value")
    du = _finite(u.grad(t), "derivative")
    dv = _finite(v.grad(t), "derivative")
    return float(w @ (uv + du * dv))


def inner_product_l2(u: SobolevFunction, v: SobolevFunction, q: QuadratureScheme | None = None) -> float:
    _check_1d_pair(u, v)
    if u.zero or v.zero:
        return 0.0
    q = q or default_scheme(u.domain)
    t, w = _interval_nodes(u, v, q)
    return float(w @ (_finite(u.eval(t), "value") * _finite(v.eval(t), "value")))


def _shell_centers(u, v):
    centers = []
    for f in (u, v):
        for k in f.kinks:
            c = np.asarray(k, dtype=float)
            if not any(np.array_equal(c, d) for d in centers):
                centers.append(c)
    return centers or [np.zeros(3)]


def _check_r3_pair(u, v):
    if u.domain.variant != "r3" or v.domain.variant != "r3":
        raise DomainError("the H2 inner product needs two fields on R^3")
    for f in (u, v):
        if not f.has_second_derivatives:
            raise CapabilityError(f"field {f.label or '?'} has no second derivatives")


#: power of the distance weights in the multi-centre partition of unity
PARTITION_POWER = 4
#: default rule when an integrand has several radial centres; the partition
#: varies on the scale of the centre separation, so shells are finer
MULTI_CENTER_SCHEME = QuadratureScheme("shell3d", panels=4, nodes_per_panel=8, r_cut=25.0, lebedev_order=89)


def r3_rule(u, v, q=None):
    """Spherical rule(s) for a pair of fields on R^3.

    With a single radial centre (the kink of a kernel, else the origin) this
    is one shell rule about it.  With several centres the integrand is split
    by the partition of unity ``P_c = r_c^-k / sum_d r_d^-k`` (Becke-style
    multi-centre integration): each piece is smooth away from its own centre
    and vanishes to order ``k`` at the others, and is integrated on shells
    about its centre.
    """
    centers = _shell_centers(u, v)
    if len(centers) == 1:
        return spherical_rule(centers[0], q or default_scheme(R3))
    q = q or MULTI_CENTER_SCHEME
    C = np.stack(centers)
    k = PARTITION_POWER
    pts_all, w_all = [], []
    for j, c in enumerate(centers):
        pts, w = spherical_rule(c, q)
        r = np.linalg.norm(pts[:, None, :] - C[None, :, :], axis=2)
        # P_j = 1 / sum_d (r_j / r_d)^k, evaluated without forming r^-k
        ratio = (r[:, j:j + 1] / r) ** k
        pts_all.append(pts)
        w_all.append(w / ratio.sum(axis=1))
    return np.concatenate(pts_all), np.concatenate(w_all)


def h2_integrand_parts(f, pts):
    """Value, gradient and Hessian of ``f`` at ``pts`` with finiteness checks."""
    if f.jet_fn is not None and not f.zero:
        v, g, h = f.jet_fn(R3.check(pts))
        return _finite(v, "value"), _finite(g, "gradient"), _finite(h, "Hessian")
    return (_finite(f.eval(pts), "value"), _finite(f.grad(pts), "gradient"),
            _finite(f.hess(pts), "Hessian"))


def h2_pairing(parts_u, parts_v, w, gradient_weight=2.0):
    fu, gu, hu = parts_u
    fv, gv, hv = parts_v
    dens = fu * fv + gradient_weight * np.einsum("ni,ni->n", gu, gv) + np.einsum("nij,nij->n", hu, hv)
    return float(w @ dens)


def inner_product_h2r3(u: SobolevFunction, v: SobolevFunction, q: QuadratureScheme | None = None) -> float:
    """``integral(u v + 2 grad u . grad v + Hess u : Hess v)`` over R^3.

    The gradient term carries a factor 2, which is what makes the kernel
    ``exp(-|x - x0|) / (8 pi)`` reproducing.
    """
    _check_r3_pair(u, v)
    if u.zero or v.zero:
        return 0.0
    pts, w = r3_rule(u, v, q)
    return h2_pairing(h2_integrand_parts(u, pts), h2_integrand_parts(v, pts), w)


def standard_h2_norm(u: SobolevFunction, q: QuadratureScheme | None = None) -> float:
    """The usual H^2 norm (gradient weight 1), for the norm-equivalence check."""
    _check_r3_pair(u, u)
    if u.zero:
        return 0.0
    pts, w = r3_rule(u, u, q)
    parts = h2_integrand_parts(u, pts)
    return float(np.sqrt(h2_pairing(parts, parts, w, gradient_weight=1.0)))
