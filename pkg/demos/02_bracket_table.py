"""Poisson brackets on H^1(0,1) x H^1(0,1)."""
import numpy as np

from sobolev_poisson.fields import UNIT, expression_field
from sobolev_poisson.kernels import KernelPoint, kernel_eval
from sobolev_poisson.phase import (PhasePoint1D, bracket_with_K, bracket_with_V, jacobi_residual_1d,
                                   make_evaluation_observable, make_K_observable, make_V_observable,
                                   poisson_bracket)

p = PhasePoint1D(expression_field("sin(pi*t) + t", UNIT), expression_field("exp(-t)", UNIT))
Phi = lambda x: make_evaluation_observable("phi", x)
Pi = lambda x: make_evaluation_observable("pi", x)
K, V = make_K_observable(), make_V_observable()

# {Phi_x, Pi_y} is the kernel, whatever the phase point
xs = np.linspace(0, 1, 5)
table = np.array([[poisson_bracket(Phi(x), Pi(y), p) for y in xs] for x in xs])
print(np.round(table, 6))
print("max gap to E_x(y):", np.abs(table - [[kernel_eval(KernelPoint(UNIT, x), y) for y in xs] for x in xs]).max())

# fields alone commute
print("{Phi,Phi} =", poisson_bracket(Phi(0.2), Phi(0.8), p), " {Pi,Pi} =", poisson_bracket(Pi(0.2), Pi(0.8), p))
print("{Phi,K} =", poisson_bracket(Phi(0.4), K, p), " {Phi,V} =", poisson_bracket(Phi(0.4), V, p))

# momenta against K and V, engine vs direct integrals
for y in (0.0, 0.5, 1.0):
    print(f"y={y}: {{Pi,K}} {poisson_bracket(Pi(y), K, p):+.10f} vs {bracket_with_K('pi', y, p):+.10f}   "
          f"{{Pi,V}} {poisson_bracket(Pi(y), V, p):+.10f} vs {bracket_with_V('pi', y, p):+.10f}")

# Jacobi within the family closed under brackets
print("Jacobi (Phi, Pi, K):", jacobi_residual_1d(Phi(0.3), Pi(0.6), K, p))
print("Jacobi (Pi, Pi, V): ", jacobi_residual_1d(Pi(0.1), Pi(0.9), V, p))
