"""Poisson brackets on the phase space ``H^1(0,1) x H^1(0,1)``.

Covectors are identified with their Riesz representatives, so a phase point
is a pair of fields ``(phi, pi)`` and the partial functional derivatives
``D1 f`` and ``D2 f`` of an observable are again fields on the interval.  The
bracket is

    {f, g} = <D1 f, D2 g> - <D1 g, D2 f>            (H^1 inner products)

The observables ``K = 1/2 int phi^2`` and ``V = 1/2 int phi'^2`` have
derivatives that depend on the phase point.  ``D K`` is built from its
coefficients on the orthonormal basis of ``H^1(0,1)``; ``D V`` follows from
``dV(h) = <phi, h>_{H^1} - int phi h``, i.e. ``D V(phi) = phi - D K(phi)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Optional

import numpy as np

from .errors import DomainError, EvaluationError, UnsupportedObservableError
from .fields import (
    UNIT,
    SobolevFunction,
    inner_product_h1,
    lincomb,
    parse_field,
    zero_field,
)
from .kernels import KernelPoint, basis_index, basis_table, interval_kernel_derivative, kernel_field
from .quadrature import QuadratureScheme, interval_rule

#: basis size used for Riesz representatives of integral functionals
N_BASIS = 256

#: quadrature resolving basis modes up to ``N_BASIS`` (two wavelengths per panel)
PHASE_SCHEME = QuadratureScheme("gl1d", panels=N_BASIS // 2, nodes_per_panel=16)


def h1(u, v):
    """H^1(0,1) inner product with the phase-space quadrature."""
    return inner_product_h1(u, v, PHASE_SCHEME)


@dataclass(frozen=True)
class PhasePoint1D:
    """Configuration ``phi`` and (Riesz-identified) momentum ``pi``."""

    phi: SobolevFunction
    pi: SobolevFunction

    def __post_init__(self):
        for name in ("phi", "pi"):
            f = getattr(self, name)
            if f.domain.variant != "unit":
                raise DomainError(f"{name} must live on the unit interval")
            norm2 = h1(f, f)
            if not np.isfinite(norm2):
                raise EvaluationError(f"{name} has no finite H^1 norm")

    @classmethod
    def from_expressions(cls, phi="0", pi="0"):
        return cls(parse_field(phi, UNIT), parse_field(pi, UNIT))

    def shifted(self, h1_dir, h2_dir, eps):
        """``(phi + eps h1, pi + eps h2)``."""
        return PhasePoint1D(lincomb([1.0, eps], [self.phi, h1_dir]),
                            lincomb([1.0, eps], [self.pi, h2_dir]))


@dataclass(frozen=True)
class TangentVector1D:
    x1: SobolevFunction
    x2: SobolevFunction


@dataclass(frozen=True, eq=False)
class Observable1D:
    """A differentiable phase-space function.

    ``family`` records membership of the family closed under brackets:
    ``("const", c)``, ``("linear", c0, a, b)`` meaning
    ``c0 + <a, phi> + <b, pi>``, ``("K",)`` or ``("V",)``.  ``None`` marks an
    observable outside it.
    """

    name: str
    value: Callable[[PhasePoint1D], float]
    d1: Callable[[PhasePoint1D], SobolevFunction]
    d2: Callable[[PhasePoint1D], SobolevFunction]
    family: Optional[tuple] = None

    def __call__(self, p):
        return self.value(p)


# Riesz representatives --------------------------------------------------------

def _phase_nodes(*fields):
    breaks = sorted({float(k) for f in fields for k in f.kinks})
    return interval_rule(0.0, 1.0, PHASE_SCHEME.panels, PHASE_SCHEME.nodes_per_panel, breaks)


def basis_expansion(coeffs, label="") -> SobolevFunction:
    """Field ``sum_n c_n e_n`` for coefficients ordered as :func:`basis_index`."""
    coeffs = np.asarray(coeffs, dtype=float)
    n_basis = (len(coeffs) - 2) // 2

    def value(t):
        return coeffs @ basis_table(t, n_basis)[0]

    def grad(t):
        return coeffs @ basis_table(t, n_basis)[1]

    return SobolevFunction(UNIT, value, grad, None, label=label)


def riesz_coefficients(weight_values, weight_derivs, t, w, n_basis=N_BASIS):
    """Coefficients ``F(e_n)`` of ``F(h) = int (a h + b h')`` on the basis."""
    vals, ders = basis_table(t, n_basis)
    return vals @ (w * weight_values) + ders @ (w * weight_derivs)


@lru_cache(maxsize=256)
def dK(u: SobolevFunction, n_basis: int = N_BASIS) -> SobolevFunction:
    """Riesz representative of ``h -> int u h`` (derivative of ``K`` at ``u``)."""
    if u.zero:
        return zero_field(UNIT)
    t, w = _phase_nodes(u)
    c = riesz_coefficients(u.eval(t), np.zeros_like(t), t, w, n_basis)
    return basis_expansion(c, label=f"DK({u.label})")


@lru_cache(maxsize=256)
def dV(u: SobolevFunction, n_basis: int = N_BASIS) -> SobolevFunction:
    """Riesz representative of ``h -> int u' h'`` (derivative of ``V`` at ``u``)."""
    if u.zero:
        return zero_field(UNIT)
    return lincomb([1.0, -1.0], [u, dK(u, n_basis)])


def _zero(_p=None):
    return zero_field(UNIT)


# observables --------------------------------------------------------------------

def constant_observable(c) -> Observable1D:
    c = float(c)
    return Observable1D(f"{c!r}", lambda p: c, _zero, _zero, ("const", c))


def linear_observable(c0, a: SobolevFunction, b: SobolevFunction, name="L") -> Observable1D:
    """``c0 + <a, phi> + <b, pi>``; derivatives are ``a`` and ``b`` everywhere."""
    c0 = float(c0)

    def value(p):
        return c0 + h1(a, p.phi) + h1(b, p.pi)

    return Observable1D(name, value, lambda p: a, lambda p: b, ("linear", c0, a, b))


def make_evaluation_observable(which: str, x) -> Observable1D:
    """``Phi_x(phi, pi) = phi(x)`` or ``Pi_x(phi, pi) = pi(x)``."""
    kp = KernelPoint(UNIT, x)
    e = kernel_field(kp)
    z = zero_field(UNIT)
    if which.lower() == "phi":
        obs = Observable1D(f"Phi_{kp.x}", lambda p: float(p.phi.eval(kp.x)[0]),
                           lambda p: e, lambda p: z, ("linear", 0.0, e, z))
    elif which.lower() == "pi":
        obs = Observable1D(f"Pi_{kp.x}", lambda p: float(p.pi.eval(kp.x)[0]),
                           lambda p: z, lambda p: e, ("linear", 0.0, z, e))
    else:
        raise ValueError(f"which must be 'phi' or 'pi', got {which!r}")
    return obs


def _integral(p_field, deriv=False):
    t, w = _phase_nodes(p_field)
    vals = p_field.grad(t) if deriv else p_field.eval(t)
    return float(w @ (vals * vals))


def make_K_observable(n_basis: int = N_BASIS) -> Observable1D:
    """``K(phi, pi) = 1/2 int phi^2``."""
    return Observable1D("K", lambda p: 0.5 * _integral(p.phi), lambda p: dK(p.phi, n_basis),
                        _zero, ("K",))


def make_V_observable(n_basis: int = N_BASIS) -> Observable1D:
    """``V(phi, pi) = 1/2 int phi'^2``."""
    return Observable1D("V", lambda p: 0.5 * _integral(p.phi, deriv=True),
                        lambda p: dV(p.phi, n_basis), _zero, ("V",))


def product_observable(f: Observable1D, g: Observable1D) -> Observable1D:
    """``f g`` with derivatives from the product rule."""
    def d(which):
        def deriv(p):
            return lincomb([f.value(p), g.value(p)], [getattr(g, which)(p), getattr(f, which)(p)])
        return deriv

    return Observable1D(f"{f.name}*{g.name}", lambda p: f.value(p) * g.value(p), d("d1"), d("d2"))


def fd_observable(name, value: Callable[[PhasePoint1D], float], n_basis=32, eps=1e-4) -> Observable1D:
    """Wrap an arbitrary functional; derivatives by central differences along
    each basis direction, truncated at ``n_basis`` modes.

    Accuracy is limited by both the truncation and the difference step.
    """
    labels = basis_index(n_basis)
    from .kernels import basis_element

    directions = [basis_element(fam, k).field for fam, k in labels]
    z = zero_field(UNIT)

    def partial(which):
        def deriv(p):
            c = []
            for e in directions:
                hp = (e, z) if which == 1 else (z, e)
                plus = value(p.shifted(*hp, eps))
                minus = value(p.shifted(*hp, -eps))
                c.append((plus - minus) / (2 * eps))
            return basis_expansion(c, label=f"D{which}{name}")
        return deriv

    return Observable1D(name, value, partial(1), partial(2))


# symplectic structure ---------------------------------------------------------

def symplectic_eval(X: TangentVector1D, Y: TangentVector1D) -> float:
    """``Omega(X, Y) = <Y2, X1> - <X2, Y1>``."""
    return h1(Y.x2, X.x1) - h1(X.x2, Y.x1)


def hamiltonian_vector_field(f: Observable1D, p: PhasePoint1D) -> TangentVector1D:
    """``X_f = (D2 f, -D1 f)``."""
    return TangentVector1D(f.d2(p), -f.d1(p))


def poisson_bracket(f: Observable1D, g: Observable1D, p: PhasePoint1D) -> float:
    return h1(f.d1(p), g.d2(p)) - h1(g.d1(p), f.d2(p))


def directional_check(f: Observable1D, p: PhasePoint1D, h: SobolevFunction, slot=1, eps=None):
    """Central difference of ``f`` along ``h`` in slot 1 or 2 against ``<D f, h>``.

    ``eps`` defaults to ``1e-4 / ||h||``.  Returns ``(finite_difference, analytic)``.
    """
    z = zero_field(UNIT)
    if eps is None:
        eps = 1e-4 / np.sqrt(h1(h, h))
    dirs = (h, z) if slot == 1 else (z, h)
    fd = (f.value(p.shifted(*dirs, eps)) - f.value(p.shifted(*dirs, -eps))) / (2 * eps)
    d = f.d1(p) if slot == 1 else f.d2(p)
    return fd, h1(d, h)


# closed-form bracket integrals --------------------------------------------------

def bracket_with_K(which: str, x, p: PhasePoint1D) -> float:
    """``{Phi_x, K} = 0`` and ``{Pi_y, K} = -int E_y phi`` by direct quadrature."""
    if which.lower() == "phi":
        return 0.0
    y = KernelPoint(UNIT, x).x
    t, w = _phase_nodes(p.phi, kernel_field(KernelPoint(UNIT, y)))
    return -float(w @ (kernel_field(KernelPoint(UNIT, y)).eval(t) * p.phi.eval(t)))


def bracket_with_V(which: str, x, p: PhasePoint1D) -> float:
    """``{Phi_x, V} = 0`` and ``{Pi_y, V} = -int E_y' phi'`` by kink-split quadrature."""
    if which.lower() == "phi":
        return 0.0
    if which.lower() != "pi":
        raise ValueError(f"which must be 'phi' or 'pi', got {which!r}")
    y = KernelPoint(UNIT, x).x
    t, w = _phase_nodes(p.phi, kernel_field(KernelPoint(UNIT, y)))
    return -float(w @ (interval_kernel_derivative(y, t) * p.phi.grad(t)))


# the family closed under brackets ---------------------------------------------

def bracket_observable(f: Observable1D, g: Observable1D) -> Observable1D:
    """``{f, g}`` as an observable, for members of the closed family.

    Linear-linear brackets are constants; a linear observable with momentum
    coefficient ``b`` bracketed with ``K`` (resp. ``V``) is the linear
    observable ``-<D K(b), phi>`` (resp. ``-<D V(b), phi>``).
    """
    ff, gf = f.family, g.family
    if ff is None or gf is None:
        raise UnsupportedObservableError(f"{f.name} or {g.name} is outside the closed family")
    kf, kg = ff[0], gf[0]
    if kf == "const" or kg == "const":
        return constant_observable(0.0)
    if kf == "linear" and kg == "linear":
        _, _, af, bf = ff
        _, _, ag, bg = gf
        return constant_observable(h1(af, bg) - h1(ag, bf))
    if kf == "linear" and kg in ("K", "V"):
        b = ff[3]
        rep = dK(b) if kg == "K" else dV(b)
        return linear_observable(0.0, -rep, zero_field(UNIT), name=f"{{{f.name},{g.name}}}")
    if kf in ("K", "V") and kg == "linear":
        inner = bracket_observable(g, f)
        _, c0, a, b = inner.family
        return linear_observable(-c0, -a, -b, name=f"{{{f.name},{g.name}}}")
    if kf in ("K", "V") and kg in ("K", "V"):
        return constant_observable(0.0)
    raise UnsupportedObservableError(f"cannot bracket {f.name} with {g.name}")


def jacobi_residual_1d(f, g, h, p: PhasePoint1D, eps=None) -> float:
    """``|{{f,g},h} + {{g,h},f} + {{h,f},g}|`` at ``p``.

    Inner brackets are materialised inside the closed family; when ``eps`` is
    given each materialised bracket is also checked against the numeric
    bracket at ``p`` and a mismatch above ``eps`` raises.
    """
    total = 0.0
    for a, b, c in ((f, g, h), (g, h, f), (h, f, g)):
        inner = bracket_observable(a, b)
        if eps is not None:
            direct = poisson_bracket(a, b, p)
            if abs(inner.value(p) - direct) > eps:
                raise UnsupportedObservableError(
                    f"materialised bracket {{{a.name},{b.name}}} disagrees with the engine")
        total += poisson_bracket(inner, c, p)
    return abs(total)
