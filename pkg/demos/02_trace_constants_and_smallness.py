"""
Trace constants and the solvability audit
=========================================

Uniqueness of the coupled solution needs the viscous and conductive
monotonicity to dominate the nonmonotonicity of the boundary laws, each
weighted by a trace constant of the contact boundary. The trace constants
are Rayleigh quotients (trace norm over energy norm) estimated on the mesh.
"""

from hemicontact import nonsmooth as ns
from hemicontact.coupling import check_smallness
from hemicontact.fem import estimate_trace_constants
from hemicontact.mesh import rectangle_mesh
from hemicontact.scenario import parse_scenario

# %% trace constants settle under refinement
for n in (4, 8, 16):
    tc = estimate_trace_constants(rectangle_mesh(n, n))
    print(f"{n:2d}x{n:<2d}  mechanical {tc.mechanical:.4f}  thermal {tc.thermal:.4f}")

# %% the shipped benchmark passes every condition
sc = parse_scenario("benchmark.scn")
rep = check_smallness(sc)
print(rep.format(), end="")

# %% a steeper friction drop violates the first condition
for m in (0.3, 0.6, 0.9):
    law = ns.piecewise_law((-1.0, 1.0), ((m,), (0.0, -m), (-m,)), kind="tangential")
    c = check_smallness(sc.replace(tangential_law=law))["viscous_monotonicity_vs_contact"]
    print(f"friction slope -{m}: margin {c.margin:+.4f} ({'pass' if c.passed else 'fail'})")
