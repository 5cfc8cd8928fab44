"""Manufactured solution of the fully coupled system on the unit square.

The exact fields are

    u(x, y, t) = b(t) U(x, y),      U = (x y^2, x^2 y^2 / 2),
    theta(x, y, t) = a(t) Th(x, y), Th = sin(pi x) (y^2 - y^3),

with ``b(t) = t + t^2`` and ``a(t) = 1 + t``. The block is clamped on the left,
in contact on the bottom and loaded on the top and right. Both fields and the
strain of ``U`` vanish on the contact edge, so any boundary law with
``beta(0) = 0`` is satisfied exactly there. Body force, traction and heat
source are computed from the closed-form stress.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from . import nonsmooth as ns
from .coupling import fixed_point_solve
from .materials import (
    LinearConductivity,
    LinearHeatSource,
    LinearIsotropicLaw,
    LinearTangentialHeating,
    LinearThermalExpansion,
    MaterialModel,
    MemoryKernel,
)
from .mesh import Mesh, Tag, rectangle_mesh
from .scenario import LoadTerm, Scenario
from .solvers import SolverConfig, TimeGrid


def b(t):
    return t + t * t


def db(t):
    return 1.0 + 2.0 * t


def ddb(t):
    return 2.0 + 0.0 * t


def a(t):
    return 1.0 + t


def da(t):
    return 1.0 + 0.0 * t


def shape_u(x, y):
    return np.stack([x * y**2, 0.5 * x**2 * y**2], axis=-1)


def shape_theta(x, y):
    return np.sin(math.pi * x) * (y**2 - y**3)


def strain_u(x, y):
    """``eps(U)`` as ``(..., 2, 2)``."""
    off = x * y + 0.5 * x * y**2
    return np.stack([np.stack([y**2, off], axis=-1), np.stack([off, x**2 * y], axis=-1)], axis=-2)


def div_u(x, y):
    return y**2 + x**2 * y


def laplace_u(x, y):
    return np.stack([2.0 * x, x**2 + y**2], axis=-1)


def grad_div_u(x, y):
    return np.stack([2.0 * x * y, 2.0 * y + x**2], axis=-1)


def grad_theta(x, y):
    p = math.pi
    return np.stack([p * np.cos(p * x) * (y**2 - y**3), np.sin(p * x) * (2.0 * y - 3.0 * y**2)], axis=-1)


def laplace_theta(x, y):
    return -math.pi**2 * shape_theta(x, y) + np.sin(math.pi * x) * (2.0 - 6.0 * y)


def iso_stress(mu, lam, x, y):
    """``2 mu eps(U) + lam tr eps(U) I``."""
    eps = strain_u(x, y)
    tr = eps[..., 0, 0] + eps[..., 1, 1]
    return 2.0 * mu * eps + lam * tr[..., None, None] * np.eye(2)


def iso_div(mu, lam, x, y):
    """``Div (2 mu eps(U) + lam tr eps(U) I) = mu Lap U + (mu + lam) grad div U``."""
    return mu * laplace_u(x, y) + (mu + lam) * grad_div_u(x, y)


@dataclass(frozen=True)
class ManufacturedCase:
    viscosity: tuple[float, float] = (1.0, 1.0)
    elasticity: tuple[float, float] = (1.0, 0.5)
    memory: tuple[float, float, float] = (0.2, 0.1, 0.5)
    expansion: float = 0.1
    conductivity: float = 1.0
    heat_source: float = 0.05
    heating: float = 0.2
    normal_stiffness: float = 0.05
    friction_slope: float = 0.05
    exchange: float = 0.5
    T: float = 1.0
    base_cells: int = 4
    base_steps: int = 8

    def memory_factor(self, t: float) -> float:
        """``int_0^t exp(-(t - s) / tau) b(s) ds``."""
        tau = self.memory[2]
        if t <= 0.0:
            return 0.0
        val, _ = integrate.quad(lambda s: math.exp(-(t - s) / tau) * b(s), 0.0, t, epsabs=1e-14, epsrel=1e-13)
        return val


def _edge_traction_duals(mesh: Mesh, stress_fn) -> np.ndarray:
    """``int_{Gamma_N} (S nu) . phi_i`` by 3-point Gauss quadrature on every Neumann edge, exact for cubic integrands."""
    gp = np.array([-math.sqrt(0.6), 0.0, math.sqrt(0.6)])
    gw = np.array([5.0, 8.0, 5.0]) / 9.0
    s = 0.5 * (gp + 1.0)
    w = 0.5 * gw
    edges = mesh.edges_with(Tag.NEUMANN)
    normals = mesh.outward_normals(edges)
    out = np.zeros(2 * mesh.n_vertices)
    for (i, j), nu in zip(edges, normals):
        p, q = mesh.vertices[i], mesh.vertices[j]
        length = float(np.hypot(*(q - p)))
        pts = p[None, :] * (1.0 - s[:, None]) + q[None, :] * s[:, None]
        trac = np.einsum("kab,b->ka", stress_fn(pts[:, 0], pts[:, 1]), nu)
        for node, phi in ((i, 1.0 - s), (j, s)):
            out[2 * node : 2 * node + 2] += length * np.sum((w * phi)[:, None] * trac, axis=0)
    return out


def manufactured_scenario(level: int = 0, case: ManufacturedCase | None = None, config: SolverConfig | None = None) -> Scenario:
    """Scenario at refinement ``level``: ``h = 1 / (base_cells 2^level)``, ``dt = T / (base_steps 2^level)``."""
    c = ManufacturedCase() if case is None else case
    n = c.base_cells * 2**level
    mesh = rectangle_mesh(n, n, 1.0, 1.0)
    x, y = mesh.vertices[:, 0], mesh.vertices[:, 1]
    mu_v, lam_v = c.viscosity
    mu_e, lam_e = c.elasticity
    mu_m, lam_m, tau = c.memory
    model = MaterialModel(
        viscosity=LinearIsotropicLaw(mu_v, lam_v),
        elasticity=LinearIsotropicLaw(mu_e, lam_e),
        memory=MemoryKernel(((mu_m, lam_m, tau),)),
        thermal_expansion=LinearThermalExpansion(c.expansion),
        conductivity=LinearConductivity(c.conductivity),
        heat_source=LinearHeatSource(c.heat_source),
        tangential_heating=LinearTangentialHeating(c.heating),
    )
    mem = c.memory_factor
    # u'' - Div sigma = f0 with sigma = A eps(u') + B eps(u) + memory - c_e theta I
    f0 = (
        LoadTerm(shape_u(x, y), ddb),
        LoadTerm(-iso_div(mu_v, lam_v, x, y), db),
        LoadTerm(-iso_div(mu_e, lam_e, x, y), b),
        LoadTerm(-iso_div(mu_m, lam_m, x, y), mem),
        LoadTerm(c.expansion * grad_theta(x, y), a),
    )
    f1 = (
        LoadTerm(_edge_traction_duals(mesh, lambda px, py: iso_stress(mu_v, lam_v, px, py)), db, dual=True),
        LoadTerm(_edge_traction_duals(mesh, lambda px, py: iso_stress(mu_e, lam_e, px, py)), b, dual=True),
        LoadTerm(_edge_traction_duals(mesh, lambda px, py: iso_stress(mu_m, lam_m, px, py)), mem, dual=True),
        LoadTerm(_edge_traction_duals(mesh, lambda px, py: -shape_theta(px, py)[:, None, None] * np.eye(2)), lambda t: c.expansion * a(t), dual=True),
    )
    # theta' - k Lap theta = -c_R div u' + g
    g = (
        LoadTerm(shape_theta(x, y), da),
        LoadTerm(-c.conductivity * laplace_theta(x, y), a),
        LoadTerm(c.heat_source * div_u(x, y), db),
    )
    return Scenario(
        mesh=mesh,
        model=model,
        grid=TimeGrid(c.T, c.base_steps * 2**level),
        normal_law=ns.linear_law(c.normal_stiffness, kind=ns.LawKind.NORMAL),
        tangential_law=ns.linear_law(c.friction_slope, kind=ns.LawKind.TANGENTIAL),
        thermal_law=ns.robin_law(c.exchange),
        f0=f0,
        f1=f1,
        g=g,
        u0=b(0.0) * shape_u(x, y).reshape(-1),
        v0=db(0.0) * shape_u(x, y).reshape(-1),
        theta0=a(0.0) * shape_theta(x, y),
        config=SolverConfig() if config is None else config,
        name=f"manufactured-level-{level}",
    )


# error measurement


def _midpoints(mesh: Mesh) -> np.ndarray:
    """Edge midpoints of every triangle, shape ``(m, 3, 2)``; with weights ``area / 3`` exact for quadratics."""
    P = mesh.vertices[mesh.triangles]
    return 0.5 * (P + np.roll(P, -1, axis=1))


def l2_error_vector(mesh: Mesh, nodal: np.ndarray, exact) -> float:
    """``||u_h - u||_{L^2}`` for a P1 vector field against a callable ``exact(x, y) -> (..., 2)``."""
    vals = np.asarray(nodal, dtype=float).reshape(-1, 2)[mesh.triangles]
    uh = 0.5 * (vals + np.roll(vals, -1, axis=1))
    mid = _midpoints(mesh)
    err = uh - exact(mid[..., 0], mid[..., 1])
    return float(math.sqrt(np.sum(mesh.areas[:, None] / 3.0 * np.sum(err**2, axis=-1))))


def l2_error_scalar(mesh: Mesh, nodal: np.ndarray, exact) -> float:
    vals = np.asarray(nodal, dtype=float)[mesh.triangles]
    th = 0.5 * (vals + np.roll(vals, -1, axis=1))
    mid = _midpoints(mesh)
    err = th - exact(mid[..., 0], mid[..., 1])
    return float(math.sqrt(np.sum(mesh.areas[:, None] / 3.0 * err**2)))


@dataclass
class ConvergenceRow:
    level: int
    h: float
    dt: float
    triangles: int
    error_u: float
    error_theta: float
    iterations: int
    seconds: float


@dataclass
class ConvergenceTable:
    rows: list[ConvergenceRow] = field(default_factory=list)

    def factors(self, key: str) -> list[float]:
        errs = [getattr(r, key) for r in self.rows]
        return [errs[i] / errs[i + 1] for i in range(len(errs) - 1)]

    def orders(self, key: str) -> list[float]:
        return [math.log2(f) for f in self.factors(key)]

    def to_csv(self) -> str:
        lines = ["level,h,dt,triangles,error_u,error_theta,order_u,order_theta,iterations,seconds"]
        ou = [float("nan")] + self.orders("error_u")
        ot = [float("nan")] + self.orders("error_theta")
        for r, a_, b_ in zip(self.rows, ou, ot):
            lines.append(
                f"{r.level},{r.h:.17g},{r.dt:.17g},{r.triangles},{r.error_u:.17g},{r.error_theta:.17g},"
                f"{'' if math.isnan(a_) else format(a_, '.6f')},{'' if math.isnan(b_) else format(b_, '.6f')},"
                f"{r.iterations},{r.seconds:.3f}"
            )
        return "\n".join(lines) + "\n"


def solve_level(level: int, case: ManufacturedCase | None = None, config: SolverConfig | None = None) -> ConvergenceRow:
    c = ManufacturedCase() if case is None else case
    start = time.perf_counter()
    sc = manufactured_scenario(level, c, config)
    res = fixed_point_solve(sc)
    T = sc.grid.T
    eu = l2_error_vector(sc.mesh, res.mechanical.u[-1], lambda x, y: b(T) * shape_u(x, y))
    et = l2_error_scalar(sc.mesh, res.thermal.theta[-1], lambda x, y: a(T) * shape_theta(x, y))
    return ConvergenceRow(
        level, 1.0 / (c.base_cells * 2**level), sc.grid.dt, sc.mesh.n_triangles, eu, et,
        res.report.iterations, time.perf_counter() - start,
    )


def convergence_study(levels: int = 3, case: ManufacturedCase | None = None, config: SolverConfig | None = None) -> ConvergenceTable:
    """Final-time L^2 errors under simultaneous halving of ``h`` and ``dt``."""
    return ConvergenceTable([solve_level(k, case, config) for k in range(levels)])
