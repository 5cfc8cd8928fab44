import numpy as np
import pytest
import scipy.linalg as sla
from hypothesis import given, settings
from hypothesis import strategies as st

from hemicontact.fem import (
    Discretization,
    FormKind,
    GreenKind,
    assemble_bilinear,
    contact_trace_norm,
    discrete_green_residual,
    element_strain,
    energy_norm,
    estimate_trace_constants,
)
from hemicontact.mesh import Field, Mesh, Tag, load_mesh, rectangle_mesh, refine
from hemicontact.scenario import DATA_DIR
from hemicontact.tensors import SymTensor

SHIPPED = sorted((DATA_DIR / "meshes").glob("*.msh"))


def one_triangle():
    return Mesh(np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]), np.array([[0, 1, 2]]),
                np.array([[0, 1], [1, 2], [2, 0]]), ("C", "N", "D"))


@pytest.mark.parametrize("fn,expected", [
    (lambda x, y: (x, 0 * x), [[1, 0], [0, 0]]),
    (lambda x, y: (-y, x), [[0, 0], [0, 0]]),
    (lambda x, y: (y, x), [[0, 1], [1, 0]]),
])
def test_element_strain_examples(fn, expected):
    mesh = rectangle_mesh(3, 3)
    u = Field.interpolate(mesh, fn)
    for k in range(mesh.n_triangles):
        assert element_strain(u, k).allclose(SymTensor(expected), atol=1e-13)


def test_element_strain_index_checked():
    mesh = rectangle_mesh(1, 1)
    with pytest.raises(IndexError):
        element_strain(Field.vector(mesh, np.zeros(8)), 2)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-5, 5), min_size=6, max_size=6))
def test_affine_reproduction(c):
    mesh = rectangle_mesh(3, 2, 1.3, 0.7)
    u = Field.interpolate(mesh, lambda x, y: (c[0] + c[1] * x + c[2] * y, c[3] + c[4] * x + c[5] * y))
    expected = SymTensor([[c[1], 0.5 * (c[2] + c[4])], [0.5 * (c[2] + c[4]), c[5]]])
    for k in range(mesh.n_triangles):
        assert np.max(np.abs(element_strain(u, k).entries - expected.entries)) <= 1e-13 * max(1.0, max(map(abs, c)))


def test_mass_row_sums_give_area():
    mesh = rectangle_mesh(4, 4)
    M = assemble_bilinear(FormKind.MASS_SCALAR, mesh)
    assert M.sum() == pytest.approx(1.0, abs=1e-14)
    Mv = assemble_bilinear(FormKind.MASS, mesh)
    assert Mv.sum() == pytest.approx(2.0, abs=1e-14)


def test_reference_triangle_scalar_mass():
    mesh = one_triangle()
    M = assemble_bilinear(FormKind.MASS_SCALAR, mesh).toarray()
    expected = 0.5 / 12.0 * np.array([[2, 1, 1], [1, 2, 1], [1, 1, 2]])
    assert np.allclose(M, expected, atol=1e-15)


def test_contact_trace_empty():
    mesh = rectangle_mesh(2, 2, bottom="N")
    assert assemble_bilinear(FormKind.CONTACT_TRACE, mesh).nnz == 0
    assert estimate_trace_constants(mesh).gamma_norm == 0.0


@pytest.mark.parametrize("kind", list(FormKind))
def test_forms_symmetric_psd(kind):
    mesh = refine(rectangle_mesh(2, 3, 2.0, 1.0))
    A = assemble_bilinear(kind, mesh).toarray()
    assert np.max(np.abs(A - A.T)) <= 1e-14
    assert np.linalg.eigvalsh(A).min() >= -1e-12


def test_mass_positive_definite():
    mesh = rectangle_mesh(3, 3)
    for kind in (FormKind.MASS, FormKind.MASS_SCALAR):
        assert np.linalg.eigvalsh(assemble_bilinear(kind, mesh).toarray()).min() > 0


def test_energy_norm_examples():
    mesh = rectangle_mesh(4, 4)
    assert energy_norm(Field.vector(mesh, np.zeros((25, 2)))) == 0.0
    assert energy_norm(Field.interpolate(mesh, lambda x, y: (x, 0 * x))) == pytest.approx(1.0, abs=1e-14)
    rot = Field.interpolate(mesh, lambda x, y: (-y, x)).clamped()
    assert energy_norm(rot) > 0.1


def test_discrete_korn():
    mesh = rectangle_mesh(3, 3)
    disc = Discretization(mesh)
    S = disc.energy_free.toarray()
    assert np.linalg.eigvalsh(S).min() > 1e-6


def test_trace_constants_match_dense_eigensolve():
    mesh = rectangle_mesh(5, 4, 2.0, 1.0)
    assert mesh.n_vertices <= 50
    disc = Discretization(mesh)
    tc = estimate_trace_constants(mesh)
    f, ft = disc.free_u, disc.free_theta
    Tu = assemble_bilinear(FormKind.CONTACT_TRACE, mesh, lumped=True).toarray()[np.ix_(f, f)]
    lam = sla.eigh(Tu, disc.energy_free.toarray(), eigvals_only=True).max()
    assert tc.gamma_norm**2 == pytest.approx(lam, rel=1e-8)
    Ts = assemble_bilinear(FormKind.CONTACT_TRACE_SCALAR, mesh, lumped=True).toarray()[np.ix_(ft, ft)]
    lam_s = sla.eigh(Ts, disc.laplace.toarray()[np.ix_(ft, ft)], eigvals_only=True).max()
    assert tc.gamma_s_norm**2 == pytest.approx(lam_s, rel=1e-8)


def test_trace_constants_refinement_stable():
    coarse = estimate_trace_constants(rectangle_mesh(8, 8))
    fine = estimate_trace_constants(rectangle_mesh(16, 16))
    assert abs(fine.gamma_norm - coarse.gamma_norm) / fine.gamma_norm < 0.05
    assert abs(fine.gamma_s_norm - coarse.gamma_s_norm) / fine.gamma_s_norm < 0.05


def test_trace_constants_composites():
    tc = estimate_trace_constants(rectangle_mesh(4, 4))
    assert tc.c_e_bar == 1.0 and tc.c_e == 1.0
    assert tc.mechanical == pytest.approx(tc.gamma_norm**2)
    assert tc.gamma_norm > 0 and tc.gamma_s_norm > 0


def test_trace_variational_bound(rng):
    mesh = rectangle_mesh(6, 6)
    tc = estimate_trace_constants(mesh)
    for _ in range(100):
        u = Field.vector(mesh, rng.standard_normal((mesh.n_vertices, 2))).clamped()
        assert contact_trace_norm(mesh, u.flat) ** 2 <= (tc.gamma_norm**2 + 1e-8) * energy_norm(u) ** 2


@pytest.mark.parametrize("path", SHIPPED, ids=lambda p: p.name)
def test_green_identities_exact_on_shipped_meshes(path, rng):
    mesh = load_mesh(path)
    x, y = mesh.vertices[:, 0], mesh.vertices[:, 1]
    a = rng.standard_normal(9)
    u = a[0] + a[1] * x + a[2] * y
    v = np.column_stack([a[3] + a[4] * x + a[5] * y, a[6] + a[7] * x + a[8] * y])
    assert discrete_green_residual(GreenKind.SCALAR, mesh, u, v) <= 1e-12
    sigma = np.broadcast_to(np.array([[a[0], a[1]], [a[1], a[2]]]), (mesh.n_triangles, 2, 2))
    assert discrete_green_residual(GreenKind.TENSOR, mesh, sigma, v) <= 1e-12


def test_green_tensor_defect_decreases_with_h():
    res = []
    for n in (4, 8, 16):
        mesh = rectangle_mesh(n, n)
        c = mesh.vertices[mesh.triangles].mean(axis=1)
        sigma = np.zeros((mesh.n_triangles, 2, 2))
        sigma[:, 0, 0] = c[:, 1] ** 2
        sigma[:, 1, 1] = c[:, 0] ** 2
        v = np.column_stack([mesh.vertices[:, 0] ** 2, mesh.vertices[:, 1] ** 2])
        res.append(discrete_green_residual(GreenKind.TENSOR, mesh, sigma, v))
    assert res[0] > res[1] > res[2]
    assert res[1] / res[2] > 1.6


def test_dual_norm_of_riesz_image(rng):
    disc = Discretization(rectangle_mesh(4, 4))
    u = np.zeros(disc.n_u)
    u[disc.free_u] = rng.standard_normal(disc.free_u.size)
    eta = (disc.energy @ u)[disc.free_u]
    assert disc.dual_norms(eta) == pytest.approx(disc.energy_norms(u), rel=1e-12)
