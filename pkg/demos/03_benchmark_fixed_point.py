"""
Clamped block with frictional heating
=====================================

The coupled problem is solved by iterating a map on the coupling history:
solve the mechanical problem for a given coupling, then the heat problem for
its velocity, then evaluate elastic, memory and thermal stress. The iteration
is measured in an exponentially weighted sup norm, with the weight fitted so
that each step should halve the distance.
"""

import numpy as np

from hemicontact.coupling import fixed_point_solve, verify_estimates
from hemicontact.scenario import parse_scenario

sc = parse_scenario("benchmark.scn")
print(f"{sc.name}: {sc.mesh.n_triangles} triangles, {sc.grid.n_steps} steps")

# %% fixed point
res = fixed_point_solve(sc)
rep = res.report
print(f"rho = {rep.rho:.4f}, {rep.iterations} iterations")
print("ratios:", np.array2string(np.array(rep.ratios), precision=3))

# %% final state on the contact edge
disc = sc.disc
cn = disc.contact
v = res.mechanical.v[-1].reshape(-1, 2)[cn.nodes]
slip = np.einsum("ki,ki->k", v, cn.tangents)
theta = res.thermal.theta[-1][cn.nodes]
order = np.argsort(sc.mesh.vertices[cn.nodes, 0])
print(" x      slip speed   temperature")
for k in order:
    print(f" {sc.mesh.vertices[cn.nodes[k], 0]:.3f}  {slip[k]:+.4e}  {theta[k]:+.4e}")

# %% stability constants of the subproblem solution maps under time refinement
for n in (20, 40):
    fit = verify_estimates(sc.with_grid(n_steps=n))
    print(f"n_steps={n}: c_u={fit.c_displacement:.4g} c_v={fit.c_velocity:.4g} "
          f"c_theta={fit.c_temperature:.4g} c_coupling={fit.c_coupling:.4g}")
