import math

import numpy as np
import pytest

from hemicontact import nonsmooth as ns
from hemicontact.coupling import (
    CouplingState,
    FixedPointError,
    SmallnessError,
    check_smallness,
    coupling_map,
    default_rho,
    fixed_point_solve,
    memory_convolution,
    smallness_from_constants,
    verify_estimates,
    weighted_norm,
)
from hemicontact.fem import TraceConstants
from hemicontact.mesh import Mesh, rectangle_mesh
from hemicontact.scenario import LoadTerm
from hemicontact.solvers import SolverConfig, solve_mechanical

from conftest import linear_model, small_scenario


def trace(mech, therm):
    return TraceConstants(math.sqrt(mech), math.sqrt(therm))


def forced(n=4, steps=6, **kw):
    mesh = rectangle_mesh(n, n)
    x, y = mesh.vertices[:, 0], mesh.vertices[:, 1]
    f1 = (LoadTerm(np.column_stack([0.5 * y, -0.2 * x]).reshape(-1)),)
    return small_scenario(mesh=mesh, steps=steps, f1=f1, **kw)


def linear_forced(**kw):
    return forced(model=linear_model(elast=(1.0, 0.5)), normal_law=ns.linear_law(0.05, kind="normal"),
                  tangential_law=ns.linear_law(0.05, kind="tangential"), **kw)


# coupling map


def test_rest_is_a_fixed_point(rest):
    nf = rest.disc.free_u.size
    res = coupling_map(rest, CouplingState.zeros(rest.grid, nf))
    assert np.all(res.state.eta == 0.0)
    out = fixed_point_solve(rest)
    assert out.report.iterations == 1
    assert np.all(out.mechanical.u == 0.0) and np.all(out.thermal.theta == 0.0)


def test_decoupled_map_is_elastic_response_of_velocity_solve(rng):
    sc = linear_forced()
    nf = sc.disc.free_u.size
    eta = 0.01 * rng.standard_normal((sc.grid.n_steps + 1, nf))
    res = coupling_map(sc, eta)
    mech = solve_mechanical(sc, eta)
    E = sc.model.elasticity.matrix(0.0, sc.disc)
    expected = np.array([(E @ u)[sc.disc.free_u] for u in mech.u])
    assert np.allclose(res.state.eta, expected, atol=1e-12)


def test_single_triangle_hand_assembly():
    mesh = Mesh(np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]), np.array([[0, 1, 2]]),
                np.array([[0, 1], [1, 2], [2, 0]]), ("C", "N", "D"))
    mu, lam = 1.0, 0.5
    sc = small_scenario(mesh=mesh, T=0.2, steps=2, model=linear_model(elast=(mu, lam)),
                        f1=(LoadTerm(np.tile([1.0, -0.5], 3)),))
    res = coupling_map(sc, np.zeros((3, sc.disc.free_u.size)))
    # element stiffness from hand-coded strain-displacement rows
    g = np.array([[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]])
    Bm = np.zeros((3, 6))
    for i, (gx, gy) in enumerate(g):
        Bm[:, 2 * i:2 * i + 2] = [[gx, 0.0], [0.0, gy], [gy, gx]]
    D = np.array([[2 * mu + lam, lam, 0.0], [lam, 2 * mu + lam, 0.0], [0.0, 0.0, mu]])
    K = 0.5 * Bm.T @ D @ Bm
    for n in range(3):
        full = K @ res.mechanical.u[n]
        assert full.shape == (6,)
        assert np.allclose(res.state.eta[n], full[sc.disc.free_u], atol=1e-14)


def test_memory_convolution_closed_form():
    tau, mu = 1.0, 0.3
    sc = small_scenario(n=2, T=1.0, steps=200, model=linear_model(memory=[(mu, 0.0, tau)]))
    U = np.linspace(0.0, 1.0, sc.disc.n_u)
    times = sc.grid.times
    hist = times[:, None] * U[None, :]
    EU = 2 * mu * (sc.disc.energy @ U)
    for n in (50, 200):
        t = times[n]
        exact = (t - tau + tau * math.exp(-t / tau)) * EU
        assert np.allclose(memory_convolution(sc, hist, n), exact, atol=2 * sc.grid.dt**2 * np.max(np.abs(EU)))
    const = np.tile(U, (sc.grid.n_steps + 1, 1))
    exact = (1.0 - math.exp(-1.0)) * EU
    assert np.allclose(memory_convolution(sc, const, 200), exact, atol=sc.grid.dt**2 * np.max(np.abs(EU)))
    assert np.all(memory_convolution(sc, hist, 0) == 0.0)


def test_memory_convolution_linear(rng):
    sc = small_scenario(n=3, steps=8, model=linear_model(memory=[(0.2, 0.1, 0.5), (0.05, 0.0, 2.0)]))
    a, b = rng.standard_normal((2, 9, sc.disc.n_u))
    for n in (3, 8):
        lhs = memory_convolution(sc, 2.5 * a - b, n)
        rhs = 2.5 * memory_convolution(sc, a, n) - memory_convolution(sc, b, n)
        assert np.allclose(lhs, rhs, atol=1e-12 * max(1.0, np.max(np.abs(rhs))))


def test_memory_index_checked():
    sc = small_scenario(n=2, steps=3, model=linear_model(memory=[(0.2, 0.1, 0.5)]))
    with pytest.raises(IndexError):
        memory_convolution(sc, np.zeros((4, sc.disc.n_u)), 4)


def test_coupling_state_shape_checked():
    sc = small_scenario(n=2, steps=3)
    with pytest.raises(ValueError):
        CouplingState(sc.grid, np.zeros((3, 5)))


# solvability conditions


def test_smallness_trivial_margin():
    rep = smallness_from_constants(2.0, 2.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 1.0, trace(3.0, 0.3))
    assert rep["viscous_monotonicity_vs_contact"].margin == 2.0
    assert rep.passed


def test_smallness_exchange_growth_margin():
    rep = smallness_from_constants(1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0, trace(1.0, 0.3))
    c = rep["conductive_coercivity_vs_exchange_growth"]
    assert c.margin == pytest.approx(0.7, abs=1e-15) and c.passed


def test_smallness_violation_flagged():
    rep = smallness_from_constants(0.1, 1.0, 0.0, 2.0, 0.0, 0.0, 0.0, 0.0, 1.0, 1.0, trace(0.5, 0.3))
    c = rep["viscous_monotonicity_vs_contact"]
    assert c.margin == pytest.approx(0.1 - 1.0) and not c.passed and not rep.passed


def test_strict_conditions_reject_zero_margin():
    rep = smallness_from_constants(0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, trace(1.0, 1.0))
    assert rep["viscous_monotonicity_vs_contact"].passed
    assert rep["conductive_monotonicity_vs_exchange"].passed
    assert not rep["viscous_coercivity_vs_contact_growth"].passed
    assert not rep["conductive_coercivity_vs_exchange_growth"].passed


def test_smallness_from_scenario_uses_law_constants(benchmark):
    rep = check_smallness(benchmark)
    tc = benchmark.trace_constants
    m_tau = benchmark.tangential_law.monotonicity_constant
    c = rep["viscous_monotonicity_vs_contact"]
    assert c.rhs == pytest.approx(max(benchmark.normal_law.monotonicity_constant, m_tau) * tc.mechanical, rel=1e-15)
    assert c.lhs == 2.0  # 2 mu_v
    assert rep.regular == {"contact_laws_regular": True, "exchange_law_regular": True}


def test_smallness_failure_raises_unless_forced():
    steep = ns.piecewise_law((-1.0, 1.0), ((20.0,), (0.0, -20.0), (-20.0,)), kind="tangential")
    sc = forced(tangential_law=steep)
    assert not check_smallness(sc).passed
    with pytest.raises(SmallnessError):
        fixed_point_solve(sc)


# stability estimates and the fixed point


def test_estimates_vanish_for_equal_couplings(rng):
    sc = forced()
    eta = 0.01 * rng.standard_normal((sc.grid.n_steps + 1, sc.disc.free_u.size))
    fit = verify_estimates(sc, eta, eta)
    assert fit.c_displacement == 0.0 and fit.c_temperature == 0.0 and fit.c_coupling == 0.0
    assert not fit.unbounded


def test_estimates_invariant_under_scaling():
    from hemicontact.coupling import constant_perturbation

    sc = linear_forced()
    p = constant_perturbation(sc)
    zero = np.zeros_like(p)
    a = verify_estimates(sc, zero, p)
    b = verify_estimates(sc, zero, 2.0 * p)
    for key in ("c_displacement", "c_velocity", "c_temperature", "c_coupling"):
        assert getattr(b, key) == pytest.approx(getattr(a, key), rel=1e-6)
    assert 0 < a.c_coupling < np.inf


def test_two_starts_reach_the_same_solution(rng):
    sc = forced()
    cfg = sc.config
    a = fixed_point_solve(sc)
    eta0 = 0.05 * rng.standard_normal(a.eta.eta.shape)
    b = fixed_point_solve(sc, config=cfg.with_updates(rho=a.report.rho), eta0=eta0)
    assert a.report.converged and b.report.converged
    dist = weighted_norm(sc, a.eta.eta - b.eta.eta, a.report.rho)
    assert dist <= 10 * cfg.fixed_point_tol
    assert all(r < 1 for r in a.report.ratios)


def test_fixed_point_reproduces_itself():
    sc = forced()
    res = fixed_point_solve(sc)
    again = coupling_map(sc, res.eta)
    assert weighted_norm(sc, again.state.eta - res.eta.eta, res.report.rho) <= 10 * sc.config.fixed_point_tol


def test_default_rho_is_twice_coupling_constant():
    sc = forced()
    rho, fit = default_rho(sc)
    assert rho == 2.0 * fit.c_coupling and rho > 0


def test_iteration_limit_reports_diagnostics():
    sc = forced(config=SolverConfig(fixed_point_max_iter=2))
    with pytest.raises(FixedPointError) as info:
        fixed_point_solve(sc)
    rep = info.value.report
    assert rep.iterations == 2 and not rep.converged and 0 <= rep.worst_step <= sc.grid.n_steps
    assert "step" in str(info.value)


def test_iteration_log_csv():
    res = fixed_point_solve(forced())
    lines = res.report.to_csv().splitlines()
    assert lines[0] == "iteration,weighted_distance,ratio,mechanical_newton,thermal_newton"
    assert len(lines) == res.report.iterations + 1
    assert lines[1].split(",")[2] == ""


def test_contraction_ratio_grows_with_friction_weakening(benchmark):
    # continuous odd friction law with slope -m near zero slip; m stays below the viscous threshold
    values = (0.0, 0.3, 0.6)
    late = []
    for m in values:
        law = ns.piecewise_law((-1.0, 1.0), ((m,), (0.0, -m), (-m,)), kind="tangential")
        sc = benchmark.replace(tangential_law=law, config=benchmark.config.with_updates(rho=1.9))
        assert check_smallness(sc).passed
        rep = fixed_point_solve(sc).report
        late.append(np.mean(rep.ratios[1:]))
    assert late[0] <= late[1] <= late[2]
