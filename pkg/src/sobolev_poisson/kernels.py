"""Reproducing kernels (evaluation representatives) of the three spaces.

* ``H^1(0,1)``: ``E_x(t) = cosh(1-x) cosh(t) / sinh(1)`` for ``t <= x`` and
  ``cosh(x) cosh(1-t) / sinh(1)`` for ``t >= x``.
* ``H^1(R)``: ``E_x(t) = exp(-|t-x|) / 2``.
* ``H^2(R^3)`` with the doubled gradient term: ``E_x0(x) = exp(-|x-x0|) / (8 pi)``.

Also here: the explicit orthonormal basis of ``H^1(0,1)``, the Fourier-type
series of the interval kernel, the operator norm of point evaluation and the
partial sums showing that evaluation of the derivative is unbounded.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DomainError, SingularPointError
from .fields import (
    LINE,
    R3,
    UNIT,
    DomainTag,
    SobolevFunction,
    _domain,
    default_scheme,
    h2_integrand_parts,
    h2_pairing,
    inner_product_h1,
    inner_product_h2r3,
    r3_rule,
)
from .quadrature import QuadratureScheme

SINH1 = np.sinh(1.0)
INV_8PI = 1.0 / (8.0 * np.pi)


@dataclass(frozen=True)
class KernelPoint:
    """A space together with the point whose evaluation the kernel represents."""

    space: DomainTag
    x: object

    def __post_init__(self):
        space = _domain(self.space)
        object.__setattr__(self, "space", space)
        if space.dim == 3:
            x = tuple(float(c) for c in np.asarray(self.x, dtype=float).reshape(3))
        else:
            x = float(self.x)
            if space.variant == "unit" and not (0.0 <= x <= 1.0):
                raise DomainError(f"kernel point {x} outside [0, 1]")
        if not np.all(np.isfinite(x)):
            raise DomainError("kernel point must be finite")
        object.__setattr__(self, "x", x)


# closed forms ---------------------------------------------------------------

def interval_kernel(x, t):
    x = np.asarray(x, dtype=float)
    t = np.asarray(t, dtype=float)
    lo = np.minimum(x, t)
    hi = np.maximum(x, t)
    return np.cosh(lo) * np.cosh(1.0 - hi) / SINH1


def interval_kernel_derivative(x, t):
    """d/dt of the interval kernel away from ``t == x``."""
    x = np.asarray(x, dtype=float)
    t = np.asarray(t, dtype=float)
    left = np.cosh(1.0 - x) * np.sinh(t) / SINH1
    right = -np.cosh(x) * np.sinh(1.0 - t) / SINH1
    return np.where(t < x, left, right)


def line_kernel(x, t):
    return 0.5 * np.exp(-np.abs(np.asarray(t, dtype=float) - x))


def line_kernel_derivative(x, t):
    d = np.asarray(t, dtype=float) - x
    return -0.5 * np.sign(d) * np.exp(-np.abs(d))


def r3_kernel(x0, pts):
    d = np.asarray(pts, dtype=float).reshape(-1, 3) - np.asarray(x0, dtype=float)
    return INV_8PI * np.exp(-np.linalg.norm(d, axis=1))


def r3_kernel_grad(x0, pts):
    d = np.asarray(pts, dtype=float).reshape(-1, 3) - np.asarray(x0, dtype=float)
    r = np.linalg.norm(d, axis=1)
    e = INV_8PI * np.exp(-r)
    return -(d / r[:, None]) * e[:, None]


def r3_kernel_hess(x0, pts):
    d = np.asarray(pts, dtype=float).reshape(-1, 3) - np.asarray(x0, dtype=float)
    r = np.linalg.norm(d, axis=1)
    e = INV_8PI * np.exp(-r)
    outer = d[:, :, None] * d[:, None, :]
    a = (1.0 + 1.0 / r) / r**2
    return (a[:, None, None] * outer - (1.0 / r)[:, None, None] * np.eye(3)) * e[:, None, None]


def _reject_kink_1d(x, t):
    if np.any(np.asarray(t) == x):
        raise SingularPointError(f"weak derivative requested at the kink t = {x}")


def _reject_kink_3d(x0, pts):
    d = np.asarray(pts, dtype=float).reshape(-1, 3) - np.asarray(x0, dtype=float)
    if np.any(np.all(d == 0.0, axis=1)):
        raise SingularPointError("kernel derivative requested at its centre")


def kernel_field(point: KernelPoint) -> SobolevFunction:
    """The kernel as a field, with analytic piecewise derivatives and its kink."""
    space, x = point.space, point.x
    if space.variant == "unit":
        def grad(t):
            _reject_kink_1d(x, t)
            return interval_kernel_derivative(x, t)
        return SobolevFunction(space, lambda t: interval_kernel(x, t), grad, None,
                               kinks=(x,), label=f"E_{x}")
    if space.variant == "line":
        def grad(t):
            _reject_kink_1d(x, t)
            return line_kernel_derivative(x, t)
        return SobolevFunction(space, lambda t: line_kernel(x, t), grad, None,
                               kinks=(x,), label=f"E_{x}")

    def grad3(p):
        _reject_kink_3d(x, p)
        return r3_kernel_grad(x, p)

    def hess3(p):
        _reject_kink_3d(x, p)
        return r3_kernel_hess(x, p)

    return SobolevFunction(space, lambda p: r3_kernel(x, p), grad3, hess3, kinks=(x,),
                           label=f"E3_{x}")


def kernel_eval(point: KernelPoint, t):
    """Value of the kernel at ``t`` (scalar in, scalar out)."""
    scalar = np.ndim(t) == 0 if point.space.dim == 1 else np.ndim(t) == 1
    vals = kernel_field(point).eval(t)
    return float(vals[0]) if scalar else vals


def kernel_weak_derivative(point: KernelPoint, t, index=(0,)):
    """Piecewise analytic weak derivative; ``index`` selects the direction(s).

    Raises :class:`SingularPointError` exactly at the kink.
    """
    index = tuple(index) if np.ndim(index) else (int(index),)
    if point.space.dim == 1 and index != (0,):
        raise DomainError("only the first derivative exists on an interval")
    if len(index) > 2:
        raise DomainError("kernel derivatives are available up to order 2")
    scalar = np.ndim(t) == 0 if point.space.dim == 1 else np.ndim(t) == 1
    vals = kernel_field(point).deriv(t, index)
    return float(vals[0]) if scalar else vals


def kernel_expression(point: KernelPoint) -> str:
    """Kernel as text in the field-expression grammar (for external tools)."""
    x = point.x
    if point.space.variant == "unit":
        return (f"(cosh(1 - abs(t - {x!r})) + cosh(1 - t - {x!r}))"
                f" / (2 * sinh(1))")
    if point.space.variant == "line":
        return f"0.5 * exp(-abs(t - {x!r}))"
    a, b, c = x
    return f"exp(-sqrt((x - {a!r})^2 + (y - {b!r})^2 + (z - {c!r})^2)) / (8 * pi)"


# reproducing property -------------------------------------------------------

@dataclass(frozen=True)
class ReproducingResult:
    lhs: float
    rhs: float
    gap: float

    def __iter__(self):
        return iter((self.lhs, self.rhs, self.gap))


def reproducing_check(point: KernelPoint, u: SobolevFunction, q: QuadratureScheme | None = None):
    """Compare ``<E_x, u>`` (kink-split quadrature) with ``u(x)``."""
    if not u.domain.same_space(point.space):
        raise DomainError("field and kernel live on different spaces")
    k = kernel_field(point)
    if point.space.dim == 3:
        lhs = inner_product_h2r3(k, u, q)
        rhs = float(u.eval(np.asarray(point.x)[None, :])[0])
    else:
        lhs = inner_product_h1(k, u, q)
        rhs = float(u.eval(point.x)[0])
    return ReproducingResult(lhs, rhs, abs(lhs - rhs))


def reproducing_gaps(point: KernelPoint, fields: Sequence[SobolevFunction], q=None):
    """Batched :func:`reproducing_check` on R^3 sharing one kernel evaluation.

    Returns an array of ``(lhs, rhs, gap)`` rows.
    """
    if point.space.dim != 3:
        return np.array([tuple(reproducing_check(point, u, q)) for u in fields])
    k = kernel_field(point)
    pts, w = r3_rule(k, k, q or default_scheme(R3))
    kparts = h2_integrand_parts(k, pts)
    x = np.asarray(point.x)[None, :]
    rows = []
    for u in fields:
        lhs = h2_pairing(kparts, h2_integrand_parts(u, pts), w)
        rhs = float(u.eval(x)[0])
        rows.append((lhs, rhs, abs(lhs - rhs)))
    return np.array(rows)


# orthonormal basis of H^1(0,1) ----------------------------------------------

@dataclass(frozen=True)
class BasisElement:
    family: str
    k: int
    field: SobolevFunction

    def __call__(self, t):
        return self.field.eval(t)


def _basis_norm(k):
    return np.sqrt(2.0 / (1.0 + 4.0 * np.pi**2 * k**2))


def basis_element(family: str, k: int) -> BasisElement:
    """``s_k`` / ``c_k`` of the orthonormal basis; ``s_0`` is the sinh mode, ``c_0 = 1``."""
    if family not in ("s", "c") or k < 0:
        raise ValueError(f"no basis element {family}{k}")
    if k == 0 and family == "s":
        a = 1.0 / np.sqrt(SINH1)
        f = SobolevFunction(UNIT, lambda t: a * np.sinh(t - 0.5), lambda t: a * np.cosh(t - 0.5),
                            label="s0")
    elif k == 0:
        f = SobolevFunction(UNIT, lambda t: np.ones_like(t), lambda t: np.zeros_like(t), label="c0")
    else:
        a = _basis_norm(k)
        w = 2.0 * np.pi * k
        if family == "s":
            f = SobolevFunction(UNIT, lambda t: a * np.sin(w * t), lambda t: a * w * np.cos(w * t),
                                label=f"s{k}")
        else:
            f = SobolevFunction(UNIT, lambda t: a * np.cos(w * t), lambda t: -a * w * np.sin(w * t),
                                label=f"c{k}")
    return BasisElement(family, k, f)


def basis_index(n_basis: int):
    """Basis labels in the order ``c0, s0, c1, s1, ...`` up to ``k = n_basis``."""
    out = [("c", 0), ("s", 0)]
    for k in range(1, n_basis + 1):
        out += [("c", k), ("s", k)]
    return out


def basis_table(t, n_basis: int):
    """Values and derivatives of every basis element at ``t``.

    Returns two arrays of shape ``(2 * n_basis + 2, len(t))`` ordered as
    :func:`basis_index`.
    """
    t = np.asarray(t, dtype=float).reshape(-1)
    k = np.arange(1, n_basis + 1)[:, None]
    a = _basis_norm(k)
    w = 2.0 * np.pi * k
    vals = np.empty((2 * n_basis + 2, t.size))
    ders = np.empty_like(vals)
    s0 = 1.0 / np.sqrt(SINH1)
    vals[0], ders[0] = 1.0, 0.0
    vals[1], ders[1] = s0 * np.sinh(t - 0.5), s0 * np.cosh(t - 0.5)
    vals[2::2], ders[2::2] = a * np.cos(w * t), -a * w * np.sin(w * t)
    vals[3::2], ders[3::2] = a * np.sin(w * t), a * w * np.cos(w * t)
    return vals, ders


def kernel_series(x, t, N: int) -> float:
    """Partial sum (``k <= N``) of the basis expansion of the interval kernel."""
    k = np.arange(1, int(N) + 1)
    tail = 2.0 * np.sum(np.cos(2 * np.pi * k * (x - t)) / (1.0 + 4.0 * np.pi**2 * k**2))
    return float(1.0 + np.sinh(x - 0.5) * np.sinh(t - 0.5) / SINH1 + tail)


def series_tail_bound(N: int) -> float:
    """``2 * sum_{k>N} 1/(4 pi^2 k^2) <= 1/(2 pi^2 N)``."""
    return 1.0 / (2.0 * np.pi**2 * N)


def evaluation_operator_norm(x) -> float:
    """Operator norm of ``u -> u(x)`` on ``H^1(0,1)``."""
    if not 0.0 <= x <= 1.0:
        raise DomainError(f"x = {x} outside [0, 1]")
    e = np.e
    return float(np.sqrt((np.exp(x) + np.exp(2.0 - x)) / (e**2 - 1.0) * np.cosh(x)))


def derivative_evaluation_partial_sums(x, K: int) -> np.ndarray:
    """Partial sums ``S_1..S_K`` of ``sum_n |Ev'_x(e_n)|^2``; they grow like ``2K``."""
    if K < 1:
        raise ValueError("K must be at least 1")
    k = np.arange(1, int(K) + 1, dtype=float)
    terms = 8.0 * np.pi**2 * k**2 / (1.0 + 4.0 * np.pi**2 * k**2)
    return np.cosh(x - 0.5) ** 2 / SINH1 + np.cumsum(terms)


def derivative_evaluation_divergence(x, K: int) -> float:
    return float(derivative_evaluation_partial_sums(x, K)[-1])


def coefficient_a0(u: SobolevFunction, q: QuadratureScheme | None = None):
    """``<s_0, u>`` by quadrature and by the boundary formula.

    Returns ``(series, boundary)``.
    """
    if u.domain.variant != "unit":
        raise DomainError("a0 is defined for fields on the unit interval")
    series = inner_product_h1(basis_element("s", 0).field, u, q)
    ends = u.eval(np.array([0.0, 1.0]))
    boundary = float(np.sqrt(0.5 / np.tanh(0.5)) * (ends[1] - ends[0]))
    return series, boundary
