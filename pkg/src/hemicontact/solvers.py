"""Time stepping for the mechanical and thermal subproblems.

Both subproblems are discretized by backward Euler, the mechanical one in
the velocity (the displacement follows by ``u_{n+1} = u_n + dt w_{n+1}``).
Multivalued boundary terms are replaced by anchored box-kernel smoothings
(see :meth:`BoundaryLaw.regularize`), and every step is solved by a damped
Newton iteration with epsilon-continuation as fallback.

Contact terms use nodal quadrature on the contact boundary: node ``p`` with
lumped weight ``w_p``, normal ``n_p`` and tangent ``t_p`` contributes
``w_p [beta_n(w . n_p) n_p + beta_t(w . t_p) t_p]`` to the mechanical
residual and ``w_p beta(theta_p)`` to the thermal one.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import TYPE_CHECKING, Callable

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .fem import Discretization, scatter_blocks
from .materials import conduction_jacobian, conduction_residual, heating_residual, tensor_jacobian, tensor_residual

if TYPE_CHECKING:
    from .scenario import Scenario

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TimeGrid:
    T: float
    n_steps: int

    def __post_init__(self):
        if int(self.n_steps) != self.n_steps or self.n_steps < 1:
            raise ValueError("n_steps must be a positive integer")
        if not self.T > 0:
            raise ValueError("final time must be positive")
        object.__setattr__(self, "n_steps", int(self.n_steps))
        object.__setattr__(self, "T", float(self.T))

    @property
    def dt(self) -> float:
        return self.T / self.n_steps

    @property
    def times(self) -> np.ndarray:
        return np.linspace(0.0, self.T, self.n_steps + 1)


@dataclass(frozen=True)
class SolverConfig:
    newton_rtol: float = 1e-11
    newton_atol: float = 1e-14
    newton_max_iter: int = 50
    line_search_min: float = 2.0**-20
    epsilon_floor: float = 1e-6
    epsilon_start_factor: float = 1e-2
    epsilon_decay: float = 0.1
    velocity_scale: float = 1.0
    linear_rtol: float = 1e-12
    direct_limit: int = 2000
    fixed_point_tol: float = 1e-8
    fixed_point_max_iter: int = 30
    rho: float | None = None
    lumped_dual: bool = False
    force: bool = False

    def with_updates(self, **kw) -> "SolverConfig":
        return replace(self, **kw)


@dataclass(frozen=True)
class StepSolveStats:
    newton_iterations: int
    residual_norm: float
    regularization_epsilon_used: float
    converged: bool
    tolerance: float = 0.0
    continuation_stages: int = 0


class SolverError(RuntimeError):
    """A subproblem step failed to converge."""

    def __init__(self, subproblem: str, step: int, stats: StepSolveStats):
        super().__init__(
            f"{subproblem} subproblem failed at step {step}: residual {stats.residual_norm:.3e} "
            f"after {stats.newton_iterations} Newton iterations (epsilon {stats.regularization_epsilon_used:g})"
        )
        self.subproblem = subproblem
        self.step = step
        self.stats = stats


@dataclass
class Trajectory:
    """Time samples of the unknowns on ``grid``; each array has ``n_steps + 1`` rows."""

    grid: TimeGrid
    u: np.ndarray | None = None
    v: np.ndarray | None = None
    theta: np.ndarray | None = None
    stats: list[StepSolveStats] = field(default_factory=list)

    @property
    def newton_total(self) -> int:
        return sum(s.newton_iterations for s in self.stats)


# linear algebra


def _is_symmetric(A, tol: float = 1e-12) -> bool:
    if sp.issparse(A):
        d = abs(A - A.T)
        big = abs(A).max() if A.nnz else 0.0
        return (d.max() if d.nnz else 0.0) <= tol * max(big, 1e-300)
    A = np.asarray(A)
    return np.max(np.abs(A - A.T), initial=0.0) <= tol * max(np.max(np.abs(A), initial=0.0), 1e-300)


def solve_linear(A, b: np.ndarray, config: SolverConfig = SolverConfig(), symmetric: bool | None = None) -> np.ndarray:
    """Solve ``A x = b``.

    Sparse systems below ``direct_limit`` unknowns are factorized directly
    (sparse LU). Larger symmetric systems go to Jacobi-preconditioned CG,
    falling back to LU when CG stalls (e.g. for indefinite matrices); larger
    nonsymmetric ones to ILU-preconditioned GMRES.
    """
    b = np.asarray(b, dtype=float)
    n = b.shape[0]
    if not sp.issparse(A):
        return np.linalg.solve(np.atleast_2d(np.asarray(A, dtype=float)), b)
    A = A.tocsr()
    if not np.any(b):
        return np.zeros(n)
    if n < config.direct_limit:
        return spla.splu(A.tocsc()).solve(b)
    if symmetric is None:
        symmetric = _is_symmetric(A)
    if symmetric:
        diag = A.diagonal()
        if np.all(diag > 0):
            M = sp.diags(1.0 / diag)
            x, info = spla.cg(A, b, rtol=config.linear_rtol, atol=0.0, maxiter=10 * n + 100, M=M)
            if info == 0:
                return x
        return spla.splu(A.tocsc()).solve(b)
    ilu = spla.spilu(A.tocsc())
    x, info = spla.gmres(A, b, rtol=config.linear_rtol, atol=0.0, M=spla.LinearOperator(A.shape, ilu.solve), restart=100, maxiter=200)
    if info != 0:
        x = spla.spsolve(A.tocsc(), b)
    return x


# Newton


def newton_nonsmooth_step(
    residual: Callable[[np.ndarray], np.ndarray],
    jacobian: Callable[[np.ndarray], object],
    state: np.ndarray,
    config: SolverConfig = SolverConfig(),
    scale: float = 0.0,
    epsilon: float = float("nan"),
) -> tuple[np.ndarray, StepSolveStats]:
    """Damped Newton iteration on a (regularized) residual.

    Steps are halved until the residual norm decreases (Armijo with constant
    ``1e-4``), so the norm sequence is monotone. Stops once ``||r|| <=
    max(atol, rtol * max(||r_0||, scale))``. Never raises on failure; the
    returned stats carry ``converged = False``.
    """
    x = np.array(state, dtype=float, copy=True)
    r = np.asarray(residual(x), dtype=float)
    rn = float(np.linalg.norm(r))
    tol = max(config.newton_atol, config.newton_rtol * max(rn, scale))
    it = 0
    while rn > tol and it < config.newton_max_iter:
        it += 1
        try:
            dx = solve_linear(jacobian(x), -r, config)
        except (np.linalg.LinAlgError, RuntimeError, ValueError):
            return x, StepSolveStats(it, rn, epsilon, False, tol)
        if not np.all(np.isfinite(dx)):
            return x, StepSolveStats(it, rn, epsilon, False, tol)
        alpha = 1.0
        while True:
            xt = x + alpha * dx
            rt = np.asarray(residual(xt), dtype=float)
            rtn = float(np.linalg.norm(rt))
            if np.isfinite(rtn) and rtn <= (1.0 - 1e-4 * alpha) * rn:
                break
            alpha *= 0.5
            if alpha < config.line_search_min:
                return x, StepSolveStats(it, rn, epsilon, False, tol)
        x, r, rn = xt, rt, rtn
    return x, StepSolveStats(it, rn, epsilon, rn <= tol, tol)


def continuation_solve(
    system: Callable[[float], tuple[Callable, Callable]],
    state: np.ndarray,
    config: SolverConfig = SolverConfig(),
    scale: float = 0.0,
) -> tuple[np.ndarray, StepSolveStats]:
    """Solve at the epsilon floor, retrying through a decreasing epsilon schedule on failure.

    ``system(eps)`` returns the residual and Jacobian callables of the problem
    smoothed with width ``eps``.
    """
    floor = config.epsilon_floor
    res, jac = system(floor)
    x, stats = newton_nonsmooth_step(res, jac, state, config, scale, floor)
    if stats.converged:
        return x, stats
    total = stats.newton_iterations
    eps = max(config.epsilon_start_factor * config.velocity_scale, floor)
    x = np.array(state, dtype=float, copy=True)
    stages = 0
    while True:
        stages += 1
        res, jac = system(eps)
        x, stats = newton_nonsmooth_step(res, jac, x, config, scale, eps)
        total += stats.newton_iterations
        if eps <= floor:
            break
        eps = max(eps * config.epsilon_decay, floor)
    return x, replace(stats, newton_iterations=total, continuation_stages=stages)


# boundary terms


class SmoothedLaws:
    """Cache of anchored smoothings of one law, keyed by width."""

    def __init__(self, law):
        self.law = law
        self._cache: dict[float, object] = {}

    def __call__(self, eps: float):
        if eps not in self._cache:
            self._cache[eps] = self.law.regularize(eps, anchored=True)
        return self._cache[eps]


def _free_position(free: np.ndarray, size: int) -> np.ndarray:
    pos = np.full(size, -1, dtype=np.int64)
    pos[free] = np.arange(free.shape[0])
    return pos


def contact_terms(disc: Discretization, w: np.ndarray, normal, tangential, free_pos: np.ndarray | None = None):
    """Nodal contact force and its Jacobian for the full velocity ``w``.

    ``normal`` and ``tangential`` are smoothed laws. The Jacobian is returned
    in the numbering given by ``free_pos`` (full numbering when None).
    """
    cn = disc.contact
    idx = disc.contact_mech
    force = np.zeros(disc.n_u)
    size = disc.n_u if free_pos is None else int(free_pos.max()) + 1
    if idx.size == 0:
        return force, sp.csr_matrix((size, size))
    nodes = cn.nodes[idx]
    wts = cn.weights[idx]
    nrm = cn.normals[idx]
    tan = cn.tangents[idx]
    W = w.reshape(-1, 2)[nodes]
    vn = np.einsum("ki,ki->k", W, nrm)
    vt = np.einsum("ki,ki->k", W, tan)
    bn, dn = np.asarray(normal.value(vn)), np.asarray(normal.derivative(vn))
    bt, dt_ = np.asarray(tangential.value(vt)), np.asarray(tangential.derivative(vt))
    nodal = wts[:, None] * (bn[:, None] * nrm + bt[:, None] * tan)
    dofs = np.stack([2 * nodes, 2 * nodes + 1], axis=1)
    np.add.at(force, dofs.reshape(-1), nodal.reshape(-1))
    blocks = wts[:, None, None] * (dn[:, None, None] * nrm[:, :, None] * nrm[:, None, :] + dt_[:, None, None] * tan[:, :, None] * tan[:, None, :])
    if free_pos is not None:
        dofs = free_pos[dofs]
    return force, scatter_blocks(dofs, blocks, size)


def thermal_boundary_terms(disc: Discretization, theta: np.ndarray, law, free_pos: np.ndarray):
    cn = disc.contact
    out = np.zeros(disc.n_vertices)
    size = int(free_pos.max()) + 1 if free_pos.size else 0
    if cn.size == 0:
        return out, sp.csr_matrix((size, size))
    local = free_pos[cn.nodes]
    keep = local >= 0
    nodes = cn.nodes[keep]
    wts = cn.weights[keep]
    th = theta[nodes]
    out[nodes] = wts * np.asarray(law.value(th))
    jac = sp.csr_matrix((wts * np.asarray(law.derivative(th)), (local[keep], local[keep])), shape=(size, size))
    return out, jac


# subproblems


def _restrict(A: sp.spmatrix, idx: np.ndarray) -> sp.csr_matrix:
    return A.tocsr()[idx][:, idx]


def solve_mechanical(scenario: "Scenario", eta: np.ndarray, config: SolverConfig | None = None) -> Trajectory:
    """Backward-Euler solve of the mechanical problem driven by the coupling ``eta``.

    ``eta`` has shape ``(n_steps + 1, n_free_u)``: dual coefficients against
    the free mechanical basis functions. Raises :class:`SolverError` when a
    step fails.
    """
    cfg = scenario.config if config is None else config
    disc = scenario.disc
    grid = scenario.grid
    f = disc.free_u
    nf = f.shape[0]
    eta = np.asarray(eta, dtype=float)
    if eta.shape != (grid.n_steps + 1, nf):
        raise ValueError(f"coupling has shape {eta.shape}, expected {(grid.n_steps + 1, nf)}")
    dt = grid.dt
    times = grid.times
    fpos = _free_position(f, disc.n_u)
    M = _restrict(disc.mass, f)
    visc = scenario.model.viscosity
    normal = SmoothedLaws(scenario.normal_law)
    tangential = SmoothedLaws(scenario.tangential_law)
    linear_visc = getattr(visc, "is_linear", False) and hasattr(visc, "matrix")
    cached: dict[float, sp.csr_matrix] = {}

    u = np.zeros((grid.n_steps + 1, disc.n_u))
    v = np.zeros_like(u)
    u[0] = scenario.u0
    v[0] = scenario.v0
    traj = Trajectory(grid, u=u, v=v)
    for n in range(grid.n_steps):
        t = times[n + 1]
        rhs = (disc.mass @ v[n])[f] / dt + scenario.mechanical_load(t)[f] - eta[n + 1]
        base = None
        if linear_visc:
            key = visc.modulation(t)
            if key not in cached:
                cached[key] = (M / dt + _restrict(visc.matrix(t, disc), f)).tocsr()
            base = cached[key]
        scale = float(np.linalg.norm(rhs))

        def system(eps, t=t, rhs=rhs, base=base):
            nl, tl = normal(eps), tangential(eps)

            def full(x):
                w = np.zeros(disc.n_u)
                w[f] = x
                return w

            def residual(x):
                w = full(x)
                force, _ = contact_terms(disc, w, nl, tl, fpos)
                if base is not None:
                    r = base @ x
                else:
                    r = M @ x / dt + tensor_residual(visc, t, disc, w)[f]
                return r + force[f] - rhs

            def jacobian(x):
                w = full(x)
                _, cj = contact_terms(disc, w, nl, tl, fpos)
                if base is not None:
                    return base + cj
                return M / dt + _restrict(tensor_jacobian(visc, t, disc, w), f) + cj

            return residual, jacobian

        x, stats = continuation_solve(system, v[n][f], cfg, scale)
        traj.stats.append(stats)
        if not stats.converged:
            raise SolverError("mechanical", n + 1, stats)
        v[n + 1, f] = x
        u[n + 1] = u[n] + dt * v[n + 1]
    return traj


def solve_thermal(scenario: "Scenario", velocity: np.ndarray, config: SolverConfig | None = None) -> Trajectory:
    """Backward-Euler solve of the heat problem for a given velocity history ``(n_steps + 1, n_u)``."""
    cfg = scenario.config if config is None else config
    disc = scenario.disc
    grid = scenario.grid
    velocity = np.asarray(velocity, dtype=float)
    if velocity.shape != (grid.n_steps + 1, disc.n_u):
        raise ValueError(f"velocity history has shape {velocity.shape}, expected {(grid.n_steps + 1, disc.n_u)}")
    ft = disc.free_theta
    dt = grid.dt
    times = grid.times
    fpos = _free_position(ft, disc.n_vertices)
    Ms = _restrict(disc.mass_scalar, ft)
    K = scenario.model.conductivity
    law = SmoothedLaws(scenario.thermal_law)
    linear_K = getattr(K, "is_linear", False) and hasattr(K, "matrix")
    cached: dict[float, sp.csr_matrix] = {}

    theta = np.zeros((grid.n_steps + 1, disc.n_vertices))
    theta[0] = scenario.theta0
    traj = Trajectory(grid, theta=theta)
    for n in range(grid.n_steps):
        t = times[n + 1]
        rhs = (disc.mass_scalar @ theta[n])[ft] / dt + heating_residual(scenario.model, t, disc, velocity[n + 1])[ft] + scenario.thermal_load(t)[ft]
        base = None
        if linear_K:
            key = K.modulation(t)
            if key not in cached:
                cached[key] = (Ms / dt + _restrict(K.matrix(t, disc), ft)).tocsr()
            base = cached[key]
        scale = float(np.linalg.norm(rhs))

        def system(eps, t=t, rhs=rhs, base=base):
            bl = law(eps)

            def full(x):
                th = np.zeros(disc.n_vertices)
                th[ft] = x
                return th

            def residual(x):
                th = full(x)
                bnd, _ = thermal_boundary_terms(disc, th, bl, fpos)
                r = base @ x if base is not None else Ms @ x / dt + conduction_residual(K, t, disc, th)[ft]
                return r + bnd[ft] - rhs

            def jacobian(x):
                th = full(x)
                _, bj = thermal_boundary_terms(disc, th, bl, fpos)
                if base is not None:
                    return base + bj
                return Ms / dt + _restrict(conduction_jacobian(K, t, disc, th), ft) + bj

            return residual, jacobian

        if ft.size == 0:
            traj.stats.append(StepSolveStats(0, 0.0, cfg.epsilon_floor, True, 0.0))
            continue
        x, stats = continuation_solve(system, theta[n][ft], cfg, scale)
        traj.stats.append(stats)
        if not stats.converged:
            raise SolverError("thermal", n + 1, stats)
        theta[n + 1, ft] = x
    return traj
