"""The Jacobi identity for (Tr h, E[f], E[g]) on the reference scenes."""
from sobolev_poisson import catalog
from sobolev_poisson.holoflux import jacobi_verifier

for name, sc in catalog.scene_catalog().items():
    r = jacobi_verifier(sc.curve, sc.flux_f, sc.flux_g, sc.point)
    print(f"{name:13s} T(f,g)={r.t_fg:+.12e} T(g,f)={r.t_gf:+.12e} |J|={r.residual:.1e} "
          f"jac_tol={r.jac_tol:.1e} passed={r.passed}")
