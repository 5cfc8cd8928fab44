"""
Nonmonotone boundary laws
=========================

A boundary law is a piecewise polynomial density beta. Where beta jumps, the
graph is filled with the vertical segment between the one-sided limits, and
the generalized directional derivative of the superpotential is the support
function of that segment. Newton needs a smooth graph, so each law also has a
box-mollified version of width epsilon.
"""

import numpy as np

from hemicontact import nonsmooth as ns
from hemicontact.scenario import load_law, shipped_law

# %% the three shipped discontinuous densities
for name in ("sign.law", "jump_up.law", "drop.law"):
    law = load_law(shipped_law(name))
    print(f"{name}: kind={law.kind.value}")
    for b in law.breakpoints:
        iv = law.fill_in_gaps(b)
        print(f"  filled at {b:g}: [{iv.lo:g}, {iv.hi:g}]")
    print(f"  j regular: {law.j_regular}, -j regular: {law.minus_j_regular}")

# %% support function at a jump: j0(x; v) = max(zeta v) over the filled interval
law = load_law(shipped_law("jump_up.law"))
for v in (-2.0, -1.0, 1.0, 2.0):
    print(f"j0(1; {v:+g}) = {law.clarke_dd(1.0, v):+g}")

# %% slip weakening: static threshold 0.2 dropping to 0.1 over slip speed 0.5
weak = ns.slip_weakening_law(0.2, 0.1, 0.5)
print("slip-weakening relaxed monotonicity m =", weak.monotonicity_constant)
print("growth (c0, c1) =", weak.growth)

# %% regularization converges to the filled graph away from the breakpoints
s = np.array([-0.5, -0.01, 0.01, 0.5])
for eps in (1e-1, 1e-2, 1e-3):
    reg = weak.regularize(eps, anchored=True)
    print(f"eps={eps:g}: beta_eps(s) =", np.array2string(reg(s), precision=5), " beta_eps(0) =", reg(0.0))
print("selection:           ", np.array2string(weak.selection(s), precision=5))
