"""Holonomies along a curve, a flux through a surface, and their bracket."""
import numpy as np

from sobolev_poisson import catalog
from sobolev_poisson.holoflux import (flux, holonomy, holonomy_flux_bracket, holonomy_flux_flow_oracle,
                                      trace_holonomy_flux_bracket)
from sobolev_poisson.su2 import det_gap, unitarity_gap

sc = catalog.scene_catalog()["helix"]

# transport by RK4 and by the truncated Dyson series
h_ode = holonomy(sc.curve, sc.point, method="ode:1000")
h_dys = holonomy(sc.curve, sc.point, method="dyson:8")
print(np.round(h_ode, 6))
print("ode vs dyson:", np.abs(h_ode - h_dys).max(), " unitarity", unitarity_gap(h_ode), " det", det_gap(h_ode))

# h(1,0) = h(1,s) h(s,0)
s = 0.37
print("composition:", np.abs(holonomy(sc.curve, sc.point, s, 1) @ holonomy(sc.curve, sc.point, 0, s) - h_ode).max())

print("flux E[f] =", flux(sc.flux_f, sc.point))

# bracket formula against the flow generated by the flux
B = holonomy_flux_bracket(sc.curve, sc.flux_f, sc.point)
O = holonomy_flux_flow_oracle(sc.curve, sc.flux_f, sc.point)
print(np.round(B, 8))
print("relative gap to flow oracle:", np.linalg.norm(B - O, 2) / np.linalg.norm(O, 2))
print("trace:", np.trace(B).real, trace_holonomy_flux_bracket(sc.curve, sc.flux_f, sc.point))
