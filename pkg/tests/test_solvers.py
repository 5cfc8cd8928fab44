import math

import numpy as np
import pytest
import scipy.linalg as sla
import scipy.sparse as sp
from scipy import optimize

from hemicontact import nonsmooth as ns
from hemicontact.mesh import rectangle_mesh
from hemicontact.scenario import LoadTerm
from hemicontact.solvers import (
    SolverConfig,
    SolverError,
    continuation_solve,
    newton_nonsmooth_step,
    solve_linear,
    solve_mechanical,
    solve_thermal,
)

from conftest import linear_model, small_scenario


def test_rest_state_is_exact(rest):
    disc = rest.disc
    mech = solve_mechanical(rest, np.zeros((rest.grid.n_steps + 1, disc.free_u.size)))
    th = solve_thermal(rest, mech.v)
    assert np.all(mech.u == 0.0) and np.all(mech.v == 0.0) and np.all(th.theta == 0.0)
    assert all(s.converged for s in mech.stats + th.stats)


def test_linear_residual_converges_in_one_step(rng):
    A = rng.standard_normal((6, 6))
    A = A @ A.T + 6 * np.eye(6)
    b = rng.standard_normal(6)
    x, stats = newton_nonsmooth_step(lambda x: A @ x - b, lambda x: A, np.zeros(6))
    assert stats.converged and stats.newton_iterations == 1
    assert np.allclose(x, np.linalg.solve(A, b), atol=1e-12)


def test_zero_residual_needs_no_iteration():
    x, stats = newton_nonsmooth_step(lambda x: x, lambda x: np.eye(2), np.zeros(2))
    assert stats.converged and stats.newton_iterations == 0


def test_inconsistent_system_reports_failure():
    x, stats = newton_nonsmooth_step(lambda x: x**2 + 1.0, lambda x: np.diag(2 * x + 1e-3), np.array([0.3]))
    assert not stats.converged
    assert stats.residual_norm >= 1.0


def test_line_search_rescues_overshooting_newton():
    # undamped Newton on arctan diverges from |x| > 1.39
    x, stats = newton_nonsmooth_step(np.arctan, lambda x: np.diag(1.0 / (1.0 + x**2)), np.array([3.0]))
    assert stats.converged and abs(x[0]) < 1e-10


@pytest.mark.parametrize("law", [
    ns.sign_law(0.3, kind="tangential"),
    ns.slip_weakening_law(0.2, 0.1, 0.5),
    ns.piecewise_law((0.0,), ((0.0,), (0.5, 1.0)), kind="normal"),
])
@pytest.mark.parametrize("f", [-0.7, -0.01, 0.0, 0.02, 0.9])
def test_scalar_regularized_step_matches_bisection(law, f):
    dt = 0.2
    config = SolverConfig(epsilon_floor=1e-6)

    def system(eps):
        reg = law.regularize(eps, anchored=True)
        return (lambda x: x / dt + np.atleast_1d(reg.value(x)) - f,
                lambda x: np.atleast_2d(1.0 / dt + reg.derivative(x)))

    x, stats = continuation_solve(system, np.zeros(1), config)
    assert stats.converged
    reg = law.regularize(1e-6, anchored=True)
    root = optimize.brentq(lambda s: s / dt + float(reg.value(s)) - f, -10.0, 10.0, xtol=1e-15)
    assert x[0] == pytest.approx(root, abs=1e-9)


def test_solve_linear_paths_agree(rng):
    n = 40
    A = sp.random(n, n, density=0.2, random_state=1) + 20 * sp.eye(n)
    S = (A + A.T).tocsr()
    b = rng.standard_normal(n)
    iterative = SolverConfig(direct_limit=0)
    for cfg in (SolverConfig(), iterative):
        assert np.allclose(solve_linear(S, b, cfg), sla.solve(S.toarray(), b), atol=1e-9)
        assert np.allclose(solve_linear(A.tocsr(), b, cfg), sla.solve(A.toarray(), b), atol=1e-9)
    indefinite = (S - 25 * sp.eye(n)).tocsr()
    assert np.allclose(solve_linear(indefinite, b, iterative), sla.solve(indefinite.toarray(), b), atol=1e-8)
    assert np.all(solve_linear(S, np.zeros(n)) == 0.0)


def _clamped_heat_scenario(n, T, steps):
    mesh = rectangle_mesh(n, n, left="D", right="D", bottom="D", top="D")
    x, y = mesh.vertices[:, 0], mesh.vertices[:, 1]
    return small_scenario(mesh=mesh, T=T, steps=steps, theta0=np.sin(math.pi * x) * np.sin(math.pi * y))


def test_heat_eigenmode_decay():
    T = 0.05
    sc = _clamped_heat_scenario(16, T, 50)
    th = solve_thermal(sc, np.zeros((sc.grid.n_steps + 1, sc.disc.n_u)))
    M = sc.disc.mass_scalar
    ratio = math.sqrt(th.theta[-1] @ (M @ th.theta[-1]) / (th.theta[0] @ (M @ th.theta[0])))
    assert ratio == pytest.approx(math.exp(-2 * math.pi**2 * T), rel=0.05)


def test_heat_discrete_eigenvector_decays_geometrically():
    sc = _clamped_heat_scenario(6, 0.1, 10)
    disc = sc.disc
    f = disc.free_theta
    K = disc.laplace.toarray()[np.ix_(f, f)]
    M = disc.mass_scalar.toarray()[np.ix_(f, f)]
    lam, vecs = sla.eigh(K, M)
    theta0 = np.zeros(disc.n_vertices)
    theta0[f] = vecs[:, 0]
    sc.theta0 = theta0
    th = solve_thermal(sc, np.zeros((sc.grid.n_steps + 1, disc.n_u)))
    expected = theta0 / (1.0 + sc.grid.dt * lam[0]) ** sc.grid.n_steps
    assert np.allclose(th.theta[-1], expected, atol=1e-10 * np.max(np.abs(theta0)))


def test_steady_robin_state():
    # long-time limit equals the direct solve of the stationary discrete problem
    kappa, source = 0.5, 1.0
    mesh = rectangle_mesh(4, 4, left="D", right="C", bottom="C", top="C")
    sc = small_scenario(mesh=mesh, T=40.0, steps=200, thermal_law=ns.robin_law(kappa),
                        g=(LoadTerm(np.full(mesh.n_vertices, source)),))
    th = solve_thermal(sc, np.zeros((sc.grid.n_steps + 1, sc.disc.n_u)))
    disc = sc.disc
    f = disc.free_theta
    R = np.zeros(disc.n_vertices)
    np.add.at(R, disc.contact.nodes, disc.contact.weights * kappa)
    A = disc.laplace.toarray() + np.diag(R)
    rhs = disc.mass_scalar @ np.full(disc.n_vertices, source)
    steady = np.zeros(disc.n_vertices)
    steady[f] = np.linalg.solve(A[np.ix_(f, f)], rhs[f])
    assert np.allclose(th.theta[-1], steady, atol=1e-8)
    assert np.all(steady[f] > 0)


def test_kinetic_energy_nonincreasing_without_friction(rng):
    mesh = rectangle_mesh(4, 4)
    v0 = rng.standard_normal(2 * mesh.n_vertices)
    v0.reshape(-1, 2)[mesh.vertices_on("D")] = 0.0
    sc = small_scenario(mesh=mesh, T=0.5, steps=10, v0=v0, normal_law=ns.damped_response_law(0.3))
    mech = solve_mechanical(sc, np.zeros((sc.grid.n_steps + 1, sc.disc.free_u.size)))
    M = sc.disc.mass
    energy = np.array([v @ (M @ v) for v in mech.v])
    assert np.all(np.diff(energy) <= 1e-12 * energy[0])
    assert energy[-1] < energy[0]


def test_mechanical_step_oracle_without_contact(rng):
    # with a linear contact law each step is one linear solve
    mesh = rectangle_mesh(3, 3)
    sc = small_scenario(mesh=mesh, T=0.3, steps=3, normal_law=ns.linear_law(0.4, kind="normal"),
                        tangential_law=ns.linear_law(0.2, kind="tangential"),
                        f0=(LoadTerm(rng.standard_normal(2 * mesh.n_vertices)),))
    disc = sc.disc
    f = disc.free_u
    eta = rng.standard_normal((sc.grid.n_steps + 1, f.size)) * 0.1
    mech = solve_mechanical(sc, eta)
    cn = disc.contact
    idx = disc.contact_mech
    C = np.zeros((disc.n_u, disc.n_u))
    for k in idx:
        node, w = cn.nodes[k], cn.weights[k]
        blk = w * (0.4 * np.outer(cn.normals[k], cn.normals[k]) + 0.2 * np.outer(cn.tangents[k], cn.tangents[k]))
        C[2 * node:2 * node + 2, 2 * node:2 * node + 2] += blk
    dt = sc.grid.dt
    A = (disc.mass.toarray() / dt + sc.model.viscosity.matrix(0.0, disc).toarray() + C)[np.ix_(f, f)]
    v = sc.v0.copy()
    for n in range(sc.grid.n_steps):
        rhs = (disc.mass @ v)[f] / dt + sc.mechanical_load(sc.grid.times[n + 1])[f] - eta[n + 1]
        v = np.zeros(disc.n_u)
        v[f] = np.linalg.solve(A, rhs)
        assert np.allclose(mech.v[n + 1], v, atol=1e-10)


def test_solver_failure_raises():
    sc = small_scenario(n=2, f0=(LoadTerm(np.ones(18)),), config=SolverConfig(newton_max_iter=0))
    with pytest.raises(SolverError) as info:
        solve_mechanical(sc, np.zeros((sc.grid.n_steps + 1, sc.disc.free_u.size)))
    assert info.value.subproblem == "mechanical" and info.value.step == 1
    assert not info.value.stats.converged


def test_coupling_shape_checked():
    sc = small_scenario(n=2)
    with pytest.raises(ValueError):
        solve_mechanical(sc, np.zeros((3, 3)))
    with pytest.raises(ValueError):
        solve_thermal(sc, np.zeros((3, 3)))


def test_nonlinear_conductivity_path_matches_linear():
    from hemicontact.materials import BoundedGradientConductivity, MaterialModel

    base = linear_model()
    model = MaterialModel(base.viscosity, base.elasticity, conductivity=BoundedGradientConductivity(1.0, 0.0))
    mesh = rectangle_mesh(4, 4)
    th0 = np.sin(math.pi * mesh.vertices[:, 0]) * mesh.vertices[:, 1]
    a = small_scenario(mesh=mesh, theta0=th0, thermal_law=ns.robin_law(0.5))
    b = small_scenario(mesh=mesh, model=model, theta0=th0, thermal_law=ns.robin_law(0.5))
    z = np.zeros((a.grid.n_steps + 1, a.disc.n_u))
    assert np.allclose(solve_thermal(a, z).theta, solve_thermal(b, z).theta, atol=1e-10)
