"""Staggered coupling of the mechanical and thermal subproblems.

The coupling unknown ``eta`` is a time-sampled dual vector over the free
mechanical dofs. One application of the coupling map solves the mechanical
problem driven by ``eta``, feeds its velocity to the heat problem, and
returns the elastic stress, the memory term and the thermal stress of the
resulting fields. Its fixed point is the solution of the coupled system.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import TYPE_CHECKING

import numpy as np

from .fem import TraceConstants, estimate_trace_constants
from .materials import expansion_residual, tensor_residual
from .solvers import SolverConfig, TimeGrid, Trajectory, solve_mechanical, solve_thermal

if TYPE_CHECKING:
    from .scenario import Scenario

log = logging.getLogger(__name__)


class FixedPointError(RuntimeError):
    def __init__(self, message: str, report: "IterationReport"):
        super().__init__(message)
        self.report = report


class SmallnessError(RuntimeError):
    def __init__(self, report: "SmallnessReport"):
        failed = ", ".join(c.name for c in report.conditions if not c.passed)
        failed_flags = [k for k, v in report.regular.items() if not v]
        if failed_flags:
            failed = ", ".join([failed] + failed_flags if failed else failed_flags)
        super().__init__(f"solvability conditions violated: {failed}")
        self.report = report


class MissingConstantError(ValueError):
    pass


@dataclass
class CouplingState:
    grid: TimeGrid
    eta: np.ndarray

    def __post_init__(self):
        self.eta = np.asarray(self.eta, dtype=float)
        if self.eta.ndim != 2 or self.eta.shape[0] != self.grid.n_steps + 1:
            raise ValueError(f"coupling needs {self.grid.n_steps + 1} time samples, got shape {self.eta.shape}")

    @classmethod
    def zeros(cls, grid: TimeGrid, n_free: int) -> "CouplingState":
        return cls(grid, np.zeros((grid.n_steps + 1, n_free)))

    @classmethod
    def random(cls, grid: TimeGrid, n_free: int, seed: int = 0, scale: float = 1.0) -> "CouplingState":
        rng = np.random.default_rng(seed)
        return cls(grid, scale * rng.standard_normal((grid.n_steps + 1, n_free)))


# memory term


def _trapezoid_weights(grid: TimeGrid, tau: float) -> np.ndarray:
    """``W[n, m]``: trapezoid weight of sample ``m`` in ``int_0^{t_n} exp(-(t_n - s) / tau) u(s) ds``."""
    t = grid.times
    lag = t[:, None] - t[None, :]
    W = np.where(lag >= 0, np.exp(-np.maximum(lag, 0.0) / tau), 0.0) * grid.dt
    np.fill_diagonal(W, 0.5 * grid.dt)
    W[:, 0] *= 0.5
    W[0, 0] = 0.0
    return W


def memory_history(scenario: "Scenario", u: np.ndarray) -> np.ndarray:
    """Memory term at every time sample, shape ``(n_steps + 1, n_u)`` (full dof numbering)."""
    disc = scenario.disc
    u = np.asarray(u, dtype=float)
    out = np.zeros_like(u)
    for mu, lam, tau in scenario.model.memory.terms:
        if mu == 0.0 and lam == 0.0:
            continue
        conv = _trapezoid_weights(scenario.grid, tau) @ u
        K = 2.0 * mu * disc.energy + lam * disc.divdiv
        out += (K @ conv.T).T
    return out


def memory_convolution(scenario: "Scenario", u, t_index: int) -> np.ndarray:
    """Trapezoidal memory term ``int_0^t C(t - s) eps(u(s)) ds`` paired with the vector basis at ``t_index``."""
    U = u.u if isinstance(u, Trajectory) else np.asarray(u, dtype=float)
    if not 0 <= t_index <= scenario.grid.n_steps:
        raise IndexError(f"time index {t_index} out of range [0, {scenario.grid.n_steps}]")
    disc = scenario.disc
    out = np.zeros(disc.n_u)
    grid = scenario.grid
    for mu, lam, tau in scenario.model.memory.terms:
        w = _trapezoid_weights(grid, tau)[t_index]
        conv = w @ U
        out += 2.0 * mu * (disc.energy @ conv) + lam * (disc.divdiv @ conv)
    return out


# coupling map


@dataclass
class CouplingResult:
    state: CouplingState
    mechanical: Trajectory
    thermal: Trajectory


def coupling_terms(scenario: "Scenario", u: np.ndarray, theta: np.ndarray) -> np.ndarray:
    """Elastic + memory + thermal-stress dual vectors on the free dofs, one row per time sample."""
    disc = scenario.disc
    f = disc.free_u
    model = scenario.model
    times = scenario.grid.times
    out = memory_history(scenario, u)
    for n, t in enumerate(times):
        out[n] += tensor_residual(model.elasticity, t, disc, u[n])
        out[n] += expansion_residual(model.thermal_expansion, t, disc, theta[n])
    return out[:, f]


def coupling_map(scenario: "Scenario", eta: CouplingState | np.ndarray, config: SolverConfig | None = None) -> CouplingResult:
    """One application of the coupling map; solver failures propagate as :class:`SolverError`."""
    e = eta.eta if isinstance(eta, CouplingState) else np.asarray(eta, dtype=float)
    mech = solve_mechanical(scenario, e, config)
    heat = solve_thermal(scenario, mech.v, config)
    new = coupling_terms(scenario, mech.u, heat.theta)
    return CouplingResult(CouplingState(scenario.grid, new), mech, heat)


def weighted_norm(scenario: "Scenario", eta: np.ndarray, rho: float, lumped: bool = False) -> float:
    """``max_n exp(-rho t_n) ||eta_n||_*``."""
    e = eta.eta if isinstance(eta, CouplingState) else np.asarray(eta, dtype=float)
    norms = scenario.disc.dual_norms(e, lumped=lumped)
    return float(np.max(np.exp(-rho * scenario.grid.times) * norms))


# stability estimates


@dataclass
class EstimateFit:
    """Empirical constants of the Lipschitz estimates of the subproblem solution maps.

    ``ratios_*[n] = ||difference at t_n||^2 / (dt sum_{m<=n} ||eta_1 - eta_2||_*^2)``;
    NaN where the denominator is below ``1e-14``.
    """

    c_displacement: float
    c_velocity: float
    c_temperature: float
    c_coupling: float
    ratios_displacement: np.ndarray
    ratios_velocity: np.ndarray
    ratios_temperature: np.ndarray
    ratios_coupling: np.ndarray
    unbounded: bool

    @property
    def c_max(self) -> float:
        return max(self.c_displacement, self.c_temperature)


def _chain(scenario, eta, config):
    mech = solve_mechanical(scenario, eta, config)
    heat = solve_thermal(scenario, mech.v, config)
    return mech, heat


def fit_estimates(scenario: "Scenario", eta1: np.ndarray, eta2: np.ndarray, chain1=None, chain2=None, config=None) -> EstimateFit:
    disc = scenario.disc
    grid = scenario.grid
    e1 = np.asarray(eta1, dtype=float)
    e2 = np.asarray(eta2, dtype=float)
    m1, h1 = chain1 if chain1 is not None else _chain(scenario, e1, config)
    m2, h2 = chain2 if chain2 is not None else _chain(scenario, e2, config)
    lumped = (config or scenario.config).lumped_dual
    d = disc.dual_norms(e1 - e2, lumped=lumped) ** 2
    denom = grid.dt * np.concatenate([[0.0], np.cumsum(d[1:])])
    ok = denom >= 1e-14

    def ratios(num):
        r = np.full(num.shape, np.nan)
        r[ok] = num[ok] / denom[ok]
        return r

    ru = ratios(disc.energy_norms(m1.u - m2.u) ** 2)
    rv = ratios(disc.energy_norms(m1.v - m2.v) ** 2)
    rt = ratios(disc.l2_norms_scalar(h1.theta - h2.theta) ** 2)
    lam_diff = coupling_terms(scenario, m1.u, h1.theta) - coupling_terms(scenario, m2.u, h2.theta)
    rc = ratios(disc.dual_norms(lam_diff, lumped=lumped) ** 2)

    def peak(r):
        return float(np.nanmax(r)) if np.any(np.isfinite(r)) else 0.0

    cs = (peak(ru), peak(rv), peak(rt), peak(rc))
    unbounded = not all(np.isfinite(cs)) or any(c > 1e12 for c in cs)
    return EstimateFit(*cs, ru, rv, rt, rc, unbounded)


def constant_perturbation(scenario: "Scenario", size: float = 1e-3) -> np.ndarray:
    """A time-constant coupling: the dual vector of a uniform body force ``size * (1, 1)``."""
    disc = scenario.disc
    body = np.tile([1.0, 1.0], disc.n_vertices) * size
    row = (disc.mass @ body)[disc.free_u]
    return np.tile(row, (scenario.grid.n_steps + 1, 1))


def verify_estimates(scenario: "Scenario", eta1=None, eta2=None, config: SolverConfig | None = None) -> EstimateFit:
    """Fit the constants of the subproblem stability estimates from two coupling inputs.

    Defaults: ``eta1 = 0`` and ``eta2 = eta1 + constant_perturbation``.
    """
    nf = scenario.disc.free_u.shape[0]
    shape = (scenario.grid.n_steps + 1, nf)
    e1 = np.zeros(shape) if eta1 is None else np.asarray(eta1.eta if isinstance(eta1, CouplingState) else eta1, dtype=float)
    e2 = e1 + constant_perturbation(scenario) if eta2 is None else np.asarray(eta2.eta if isinstance(eta2, CouplingState) else eta2, dtype=float)
    return fit_estimates(scenario, e1, e2, config=config)


# fixed point


@dataclass
class IterationReport:
    distances: list[float] = field(default_factory=list)
    ratios: list[float] = field(default_factory=list)
    newton_totals: list[tuple[int, int]] = field(default_factory=list)
    converged: bool = False
    rho: float = 0.0
    tolerance: float = 0.0
    worst_step: int = -1

    @property
    def iterations(self) -> int:
        return len(self.distances)

    @property
    def final_residual(self) -> float:
        return self.distances[-1] if self.distances else float("nan")

    @property
    def asymptotic_ratio(self) -> float:
        """Geometric mean of the ratios after the first one, which still carries the start-up transient."""
        r = np.asarray(self.ratios[1:] if len(self.ratios) > 1 else self.ratios, dtype=float)
        r = r[r > 0]
        return float(np.exp(np.mean(np.log(r)))) if r.size else float("nan")

    def to_csv(self) -> str:
        lines = ["iteration,weighted_distance,ratio,mechanical_newton,thermal_newton"]
        for k, d in enumerate(self.distances):
            ratio = self.ratios[k - 1] if k >= 1 else float("nan")
            nm, nt = self.newton_totals[k]
            lines.append(f"{k + 1},{d:.17g},{'' if k == 0 else format(ratio, '.17g')},{nm},{nt}")
        return "\n".join(lines) + "\n"


@dataclass
class FixedPointResult:
    mechanical: Trajectory
    thermal: Trajectory
    eta: CouplingState
    report: IterationReport
    smallness: "SmallnessReport | None" = None


def default_rho(scenario: "Scenario", config: SolverConfig | None = None, chain_at_zero=None) -> tuple[float, EstimateFit]:
    """``2 c`` with ``c`` the fitted constant of ``||L eta_1(t) - L eta_2(t)||^2 <= c int_0^t ||eta_1 - eta_2||^2``.

    With this weight the coupling map ``L`` contracts by about ``1/2`` in the
    weighted sup norm. The fit uses a zero and a constant perturbed coupling.
    """
    nf = scenario.disc.free_u.shape[0]
    zero = np.zeros((scenario.grid.n_steps + 1, nf))
    pert = constant_perturbation(scenario)
    fit = fit_estimates(scenario, zero, pert, chain1=chain_at_zero, config=config)
    return 2.0 * fit.c_coupling, fit


def fixed_point_solve(
    scenario: "Scenario",
    config: SolverConfig | None = None,
    eta0: CouplingState | np.ndarray | None = None,
    trace_constants: TraceConstants | None = None,
) -> FixedPointResult:
    """Iterate the coupling map to its fixed point in the exponentially weighted norm.

    The solvability conditions are audited first; violating them raises
    :class:`SmallnessError` unless ``config.force`` is set, in which case the
    iteration proceeds with a warning.
    """
    cfg = scenario.config if config is None else config
    small = check_smallness(scenario, trace_constants)
    if not small.passed:
        if not cfg.force:
            raise SmallnessError(small)
        log.warning("solvability conditions violated; iterating anyway")
    nf = scenario.disc.free_u.shape[0]
    grid = scenario.grid
    eta = np.zeros((grid.n_steps + 1, nf)) if eta0 is None else np.array(eta0.eta if isinstance(eta0, CouplingState) else eta0, dtype=float)
    report = IterationReport(tolerance=cfg.fixed_point_tol)
    rho = cfg.rho
    for k in range(cfg.fixed_point_max_iter):
        res = coupling_map(scenario, eta, cfg)
        if rho is None:
            chain = (res.mechanical, res.thermal) if not np.any(eta) else None
            rho, _ = default_rho(scenario, cfg, chain)
            report.rho = rho
        report.rho = rho
        diff = res.state.eta - eta
        w = np.exp(-rho * grid.times) * scenario.disc.dual_norms(diff, lumped=cfg.lumped_dual)
        dist = float(np.max(w))
        report.worst_step = int(np.argmax(w))
        if report.distances:
            prev = report.distances[-1]
            report.ratios.append(dist / prev if prev > 0 else 0.0)
        report.distances.append(dist)
        report.newton_totals.append((res.mechanical.newton_total, res.thermal.newton_total))
        log.info("coupling iteration %d: weighted distance %.3e", k + 1, dist)
        eta = res.state.eta
        if dist <= cfg.fixed_point_tol:
            report.converged = True
            return FixedPointResult(res.mechanical, res.thermal, res.state, report, small)
    raise FixedPointError(
        f"no convergence in {cfg.fixed_point_max_iter} iterations; last distance {report.final_residual:.3e}, "
        f"largest weighted difference at step {report.worst_step}",
        report,
    )


# solvability conditions


@dataclass(frozen=True)
class Condition:
    name: str
    lhs: float
    rhs: float
    strict: bool

    @property
    def margin(self) -> float:
        return self.lhs - self.rhs

    @property
    def passed(self) -> bool:
        return self.margin > 0 if self.strict else self.margin >= 0


@dataclass(frozen=True)
class SmallnessReport:
    m_A: float
    alpha_A: float
    m_nu: float
    m_tau: float
    m_0: float
    c1_nu: float
    c1_tau: float
    c1: float
    m_K: float
    alpha_K: float
    trace_mechanical: float
    trace_thermal: float
    conditions: tuple[Condition, ...]
    regular: dict

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.conditions) and all(self.regular.values())

    def __getitem__(self, name: str) -> Condition:
        for c in self.conditions:
            if c.name == name:
                return c
        raise KeyError(name)

    def margins(self) -> dict[str, float]:
        return {c.name: c.margin for c in self.conditions}

    def format(self, units: str = "") -> str:
        lines = [f"# solvability report{(' (' + units + ')') if units else ''}"]
        for key in ("m_A", "alpha_A", "m_nu", "m_tau", "m_0", "c1_nu", "c1_tau", "c1", "m_K", "alpha_K", "trace_mechanical", "trace_thermal"):
            lines.append(f"{key} = {getattr(self, key):.17g}")
        lines.append("condition,lhs,rhs,margin,strict,passed")
        for c in self.conditions:
            lines.append(f"{c.name},{c.lhs:.17g},{c.rhs:.17g},{c.margin:.17g},{'yes' if c.strict else 'no'},{'yes' if c.passed else 'no'}")
        for k, v in self.regular.items():
            lines.append(f"{k},{'yes' if v else 'no'}")
        return "\n".join(lines) + "\n"


def smallness_from_constants(
    m_A, alpha_A, m_nu, m_tau, m_0, c1_nu, c1_tau, c1, m_K, alpha_K, trace: TraceConstants, regular: dict | None = None
) -> SmallnessReport:
    gu, gt = trace.mechanical, trace.thermal
    conds = (
        Condition("viscous_monotonicity_vs_contact", m_A, max(m_nu, m_tau) * gu, strict=False),
        Condition("viscous_coercivity_vs_contact_growth", alpha_A, 6.0 * max(c1_nu, c1_tau) * gu, strict=True),
        Condition("conductive_monotonicity_vs_exchange", m_K, m_0 * gt, strict=False),
        Condition("conductive_coercivity_vs_exchange_growth", alpha_K, c1 * gt, strict=True),
    )
    return SmallnessReport(m_A, alpha_A, m_nu, m_tau, m_0, c1_nu, c1_tau, c1, m_K, alpha_K, gu, gt, conds, dict(regular or {}))


def check_smallness(scenario: "Scenario", trace_constants: TraceConstants | None = None) -> SmallnessReport:
    """Audit the solvability conditions with the scenario's law constants and the mesh trace constants."""
    tc = scenario.trace_constants if trace_constants is None else trace_constants
    T = scenario.grid.T
    try:
        visc = scenario.model.viscosity.constants(T)
        cond = scenario.model.conductivity.constants(T)
        laws = (scenario.normal_law, scenario.tangential_law, scenario.thermal_law)
        growth = [law.growth for law in laws]
        mono = [law.monotonicity_constant for law in laws]
    except Exception as exc:  # noqa: BLE001 - reported as a missing constant
        raise MissingConstantError(f"cannot determine a hypothesis constant: {exc}") from exc
    n, t, h = laws
    regular = {
        "contact_laws_regular": (n.j_regular and t.j_regular) or (n.minus_j_regular and t.minus_j_regular),
        "exchange_law_regular": h.j_regular or h.minus_j_regular,
    }
    return smallness_from_constants(
        visc.monotonicity, visc.coercivity, mono[0], mono[1], mono[2], growth[0][1], growth[1][1], growth[2][1],
        cond["m_K"], cond["alpha_K"], tc, regular,
    )


def trace_constants_for(scenario: "Scenario") -> TraceConstants:
    return estimate_trace_constants(scenario.mesh)
