"""Evaluation kernels of H^1(0,1), H^1(R) and H^2(R^3), and what they reproduce."""
import numpy as np

from sobolev_poisson import catalog
from sobolev_poisson.fields import LINE, R3, UNIT, expression_field
from sobolev_poisson.kernels import (KernelPoint, evaluation_operator_norm, kernel_eval, kernel_series,
                                     reproducing_check, derivative_evaluation_partial_sums, series_tail_bound)

# the interval kernel at a few points, including both ends
for x in (0.0, 0.3, 1.0):
    t = np.linspace(0, 1, 5)
    print("E_%.1f(t) =" % x, np.round(kernel_eval(KernelPoint(UNIT, x), t), 6))

# reproducing property: <E_x, u> returns u(x)
u = expression_field("sin(pi*t) + t^3", UNIT)
for x in (0.0, 0.5, 1.0):
    r = reproducing_check(KernelPoint(UNIT, x), u)
    print(f"x={x}: <E_x,u>={r.lhs:.12f}  u(x)={r.rhs:.12f}  gap={r.gap:.1e}")

# same on the line and on R^3
r = reproducing_check(KernelPoint(LINE, 0.7), expression_field("exp(-t^2)*cos(t)", LINE))
print("line gap", r.gap)
r = reproducing_check(KernelPoint(R3, (0.2, -0.1, 0.4)), catalog.field_catalog("r3")[1])
print("R^3 gap ", r.gap)

# the basis series converges like 1/N
closed = kernel_eval(KernelPoint(UNIT, 0.3), 0.7)
for N in (10, 100, 1000):
    print(f"N={N:5d} series gap {abs(kernel_series(0.3, 0.7, N) - closed):.2e}  bound {series_tail_bound(N):.2e}")

# point evaluation is bounded, its norm is sqrt(E_x(x))
print("||Ev_0|| =", evaluation_operator_norm(0.0), " sqrt(coth 1) =", np.sqrt(1 / np.tanh(1)))

# evaluation of the derivative is not: the partial sums grow linearly
S = derivative_evaluation_partial_sums(0.5, 10000)
print("partial sums at K=10, 100, 10000:", S[9], S[99], S[-1])
