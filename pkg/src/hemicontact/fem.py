"""P1 finite elements on triangle meshes.

Vector dofs are interleaved, ``(u_x, u_y)`` of vertex ``p`` live at ``2p`` and
``2p + 1``. Strains, stresses and temperature gradients are constant on each
triangle, so every volume integral below is computed exactly.

Assembly is vectorized over elements: per-element blocks are built in one
array and summed into a COO matrix at the end.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .mesh import Field, FieldKind, Mesh, Tag
from .tensors import SymTensor

_SCALAR_MASS_REF = np.array([[2.0, 1.0, 1.0], [1.0, 2.0, 1.0], [1.0, 1.0, 2.0]]) / 12.0
_EDGE_MASS_REF = np.array([[2.0, 1.0], [1.0, 2.0]]) / 6.0


class FormKind(enum.Enum):
    MASS = "mass"
    MASS_SCALAR = "mass_scalar"
    CONTACT_TRACE = "contact_trace"
    CONTACT_TRACE_SCALAR = "contact_trace_scalar"


class TraceEstimateError(RuntimeError):
    def __init__(self, message: str, iterations: int):
        super().__init__(f"{message} after {iterations} iterations")
        self.iterations = iterations


def basis_gradients(mesh: Mesh) -> np.ndarray:
    """Gradients of the three P1 hat functions on every triangle, shape ``(m, 3, 2)``."""
    p = mesh.vertices[mesh.triangles]
    x, y = p[..., 0], p[..., 1]
    two_a = 2.0 * mesh.areas
    g = np.empty(p.shape)
    g[:, 0, 0] = y[:, 1] - y[:, 2]
    g[:, 0, 1] = x[:, 2] - x[:, 1]
    g[:, 1, 0] = y[:, 2] - y[:, 0]
    g[:, 1, 1] = x[:, 0] - x[:, 2]
    g[:, 2, 0] = y[:, 0] - y[:, 1]
    g[:, 2, 1] = x[:, 1] - x[:, 0]
    return g / two_a[:, None, None]


def element_dofs(mesh: Mesh) -> np.ndarray:
    """Vector dof indices of every triangle, shape ``(m, 6)``."""
    t = mesh.triangles
    return np.stack([2 * t[:, 0], 2 * t[:, 0] + 1, 2 * t[:, 1], 2 * t[:, 1] + 1, 2 * t[:, 2], 2 * t[:, 2] + 1], axis=1)


def strain_operator(mesh: Mesh) -> np.ndarray:
    """Element strain-displacement operators, shape ``(m, 2, 2, 6)``.

    ``eps_T = strain_operator[T] @ u[element_dofs[T]]``.
    """
    g = basis_gradients(mesh)
    m = mesh.n_triangles
    B = np.zeros((m, 2, 2, 6))
    for a in range(3):
        for i in range(2):
            col = 2 * a + i
            e = np.zeros((m, 2, 2))
            e[:, i, :] = g[:, a, :]
            B[..., col] = 0.5 * (e + np.swapaxes(e, 1, 2))
    return B


def _scatter_matrix(rows_local: np.ndarray, cols_local: np.ndarray, blocks: np.ndarray, shape) -> sp.csr_matrix:
    k_r, k_c = blocks.shape[1], blocks.shape[2]
    rows = np.repeat(rows_local, k_c, axis=1).reshape(-1)
    cols = np.tile(cols_local, (1, k_r)).reshape(-1)
    return sp.coo_matrix((blocks.reshape(-1), (rows, cols)), shape=shape).tocsr()


def scatter_blocks(dofs: np.ndarray, blocks: np.ndarray, n: int) -> sp.csr_matrix:
    """Sum per-element square ``blocks`` into an ``n x n`` sparse matrix."""
    return _scatter_matrix(dofs, dofs, blocks, (n, n))


def scatter_vector(dofs: np.ndarray, values: np.ndarray, n: int) -> np.ndarray:
    return np.bincount(dofs.reshape(-1), weights=values.reshape(-1), minlength=n)


def _vector_dofs_of(vertices: np.ndarray) -> np.ndarray:
    return np.stack([2 * vertices, 2 * vertices + 1], axis=-1).reshape(vertices.shape[0], -1)


def _edge_lengths(mesh: Mesh, edges: np.ndarray) -> np.ndarray:
    if edges.size == 0:
        return np.zeros(0)
    d = mesh.vertices[edges[:, 1]] - mesh.vertices[edges[:, 0]]
    return np.linalg.norm(d, axis=1)


def edge_mass(mesh: Mesh, tags: tuple[Tag, ...], vector: bool, lumped: bool = False) -> sp.csr_matrix:
    """Boundary L2 form over the edges carrying ``tags``."""
    n = mesh.n_vertices
    size = 2 * n if vector else n
    edges = mesh.edges_with(*tags)
    if edges.size == 0:
        return sp.csr_matrix((size, size))
    lengths = _edge_lengths(mesh, edges)
    ref = np.diag([0.5, 0.5]) if lumped else _EDGE_MASS_REF
    blocks = lengths[:, None, None] * ref
    if not vector:
        return scatter_blocks(edges, blocks, n)
    blocks = np.kron(blocks, np.eye(2)[None]) if blocks.ndim == 2 else np.einsum("kab,ij->kaibj", blocks, np.eye(2)).reshape(-1, 4, 4)
    return scatter_blocks(_vector_dofs_of(edges), blocks, size)


def assemble_bilinear(kind: FormKind | str, mesh: Mesh, lumped: bool = False) -> sp.csr_matrix:
    """Assemble one of the L2-type forms of the P1 space.

    ``MASS``/``MASS_SCALAR`` are the consistent volume mass matrices (unit
    density). ``CONTACT_TRACE``/``CONTACT_TRACE_SCALAR`` integrate over the
    contact edges. ``lumped`` switches to nodal (trapezoidal) quadrature.
    """
    kind = FormKind(kind)
    n = mesh.n_vertices
    if kind in (FormKind.MASS, FormKind.MASS_SCALAR):
        ref = np.diag([1.0, 1.0, 1.0]) / 3.0 if lumped else _SCALAR_MASS_REF
        blocks = mesh.areas[:, None, None] * ref
        if kind is FormKind.MASS_SCALAR:
            return scatter_blocks(mesh.triangles, blocks, n)
        blocks = np.einsum("kab,ij->kaibj", blocks, np.eye(2)).reshape(-1, 6, 6)
        return scatter_blocks(element_dofs(mesh), blocks, 2 * n)
    return edge_mass(mesh, (Tag.CONTACT,), vector=kind is FormKind.CONTACT_TRACE, lumped=lumped)


def energy_form(mesh: Mesh) -> sp.csr_matrix:
    """``(u, v) -> integral of eps(u) : eps(v)``."""
    B = strain_operator(mesh)
    blocks = mesh.areas[:, None, None] * np.einsum("tijk,tijl->tkl", B, B)
    return scatter_blocks(element_dofs(mesh), blocks, 2 * mesh.n_vertices)


def divergence_form(mesh: Mesh) -> sp.csr_matrix:
    """``(u, v) -> integral of div u * div v``."""
    B = strain_operator(mesh)
    div = np.einsum("tiik->tk", B)
    blocks = mesh.areas[:, None, None] * div[:, :, None] * div[:, None, :]
    return scatter_blocks(element_dofs(mesh), blocks, 2 * mesh.n_vertices)


def laplace_form(mesh: Mesh) -> sp.csr_matrix:
    """``(theta, zeta) -> integral of grad theta . grad zeta``."""
    g = basis_gradients(mesh)
    blocks = mesh.areas[:, None, None] * np.einsum("tai,tbi->tab", g, g)
    return scatter_blocks(mesh.triangles, blocks, mesh.n_vertices)


def divergence_coupling(mesh: Mesh) -> sp.csr_matrix:
    """``(theta, v) -> integral of theta * div v`` as a ``(2n, n)`` matrix (rows: v)."""
    B = strain_operator(mesh)
    div = np.einsum("tiik->tk", B)
    blocks = (mesh.areas / 3.0)[:, None, None] * div[:, :, None] * np.ones((1, 1, 3))
    return _scatter_matrix(element_dofs(mesh), mesh.triangles, blocks, (2 * mesh.n_vertices, mesh.n_vertices))


def element_strains(mesh: Mesh, u: np.ndarray) -> np.ndarray:
    """Strain of a flat vector dof array on every triangle, shape ``(m, 2, 2)``."""
    u = np.asarray(u, dtype=float).reshape(-1)
    return np.einsum("tijk,tk->tij", strain_operator(mesh), u[element_dofs(mesh)])


def element_gradients(mesh: Mesh, values: np.ndarray) -> np.ndarray:
    """Per-triangle gradient of a field; ``(m, 2)`` for scalars, ``(m, 2, 2)`` for vectors.

    For vectors, ``out[T, i, j] = d u_i / d x_j``.
    """
    g = basis_gradients(mesh)
    vals = np.asarray(values, dtype=float)
    if vals.ndim == 1 and vals.shape[0] == mesh.n_vertices:
        return np.einsum("tai,ta->ti", g, vals[mesh.triangles])
    vals = vals.reshape(mesh.n_vertices, 2)
    return np.einsum("taj,tai->tij", g, vals[mesh.triangles])


def element_strain(u: Field, tri_index: int) -> SymTensor:
    """Constant strain of a P1 vector field on one triangle."""
    if u.kind is not FieldKind.VECTOR_NODAL:
        raise TypeError("element_strain needs a VECTOR_NODAL field")
    m = u.mesh.n_triangles
    if not 0 <= tri_index < m:
        raise IndexError(f"triangle index {tri_index} out of range [0, {m})")
    tri = u.mesh.triangles[tri_index]
    g = basis_gradients(u.mesh)[tri_index]
    grad = np.einsum("aj,ai->ij", g, u.values[tri])
    return SymTensor(0.5 * (grad + grad.T))


def energy_norm(u: Field) -> float:
    """``||eps(u)||`` in L2(Omega)."""
    if u.kind is not FieldKind.VECTOR_NODAL:
        raise TypeError("energy_norm needs a VECTOR_NODAL field")
    eps = element_strains(u.mesh, u.flat)
    return float(np.sqrt(np.sum(u.mesh.areas * np.einsum("tij,tij->t", eps, eps))))


@dataclass(frozen=True)
class ContactNodes:
    """Nodal quadrature data of the contact boundary.

    ``weights`` are the lumped (trapezoidal) boundary masses, ``normals`` the
    length-weighted averages of the adjacent edge normals.
    """

    nodes: np.ndarray
    weights: np.ndarray
    normals: np.ndarray
    tangents: np.ndarray

    @property
    def size(self) -> int:
        return int(self.nodes.shape[0])


def contact_nodes(mesh: Mesh) -> ContactNodes:
    edges = mesh.edges_with(Tag.CONTACT)
    if edges.size == 0:
        z = np.zeros(0)
        return ContactNodes(np.zeros(0, dtype=np.int64), z, np.zeros((0, 2)), np.zeros((0, 2)))
    lengths = _edge_lengths(mesh, edges)
    normals = mesh.outward_normals(edges)
    nodes = np.unique(edges.reshape(-1))
    pos = {int(p): k for k, p in enumerate(nodes)}
    w = np.zeros(len(nodes))
    nsum = np.zeros((len(nodes), 2))
    for (a, b), L, n in zip(edges, lengths, normals):
        for p in (a, b):
            w[pos[int(p)]] += 0.5 * L
            nsum[pos[int(p)]] += L * n
    nrm = nsum / np.linalg.norm(nsum, axis=1)[:, None]
    tang = np.column_stack([-nrm[:, 1], nrm[:, 0]])
    return ContactNodes(nodes, w, nrm, tang)


class Discretization:
    """Assembled operators and dof bookkeeping of one mesh.

    Mechanical unknowns live on the vertices off the Dirichlet edges; thermal
    unknowns on the vertices off the Dirichlet and Neumann edges. All
    matrices are built on first use and then shared read-only.
    """

    def __init__(self, mesh: Mesh):
        self.mesh = mesh
        n = mesh.n_vertices
        self.n_vertices = n
        clamped = mesh.vertices_on(Tag.DIRICHLET)
        mech_free = np.setdiff1d(np.arange(n), clamped)
        self.free_u = _vector_dofs_of(mech_free).reshape(-1)
        self.free_theta = np.setdiff1d(np.arange(n), mesh.vertices_on(Tag.DIRICHLET, Tag.NEUMANN))

    @property
    def n_u(self) -> int:
        return 2 * self.n_vertices

    @cached_property
    def areas(self) -> np.ndarray:
        return self.mesh.areas

    @cached_property
    def strain_op(self) -> np.ndarray:
        return strain_operator(self.mesh)

    @cached_property
    def elem_dofs(self) -> np.ndarray:
        return element_dofs(self.mesh)

    @cached_property
    def grads(self) -> np.ndarray:
        return basis_gradients(self.mesh)

    @cached_property
    def mass(self) -> sp.csr_matrix:
        return assemble_bilinear(FormKind.MASS, self.mesh)

    @cached_property
    def mass_scalar(self) -> sp.csr_matrix:
        return assemble_bilinear(FormKind.MASS_SCALAR, self.mesh)

    @cached_property
    def energy(self) -> sp.csr_matrix:
        return energy_form(self.mesh)

    @cached_property
    def divdiv(self) -> sp.csr_matrix:
        return divergence_form(self.mesh)

    @cached_property
    def laplace(self) -> sp.csr_matrix:
        return laplace_form(self.mesh)

    @cached_property
    def div_coupling(self) -> sp.csr_matrix:
        return divergence_coupling(self.mesh)

    @cached_property
    def neumann_mass(self) -> sp.csr_matrix:
        return edge_mass(self.mesh, (Tag.NEUMANN,), vector=True)

    @cached_property
    def contact(self) -> ContactNodes:
        return contact_nodes(self.mesh)

    @cached_property
    def contact_mech(self) -> np.ndarray:
        """Positions (into ``contact.nodes``) of contact nodes carrying mechanical unknowns."""
        clamped = self.mesh.vertices_on(Tag.DIRICHLET)
        return np.flatnonzero(~np.isin(self.contact.nodes, clamped))

    @cached_property
    def energy_free(self) -> sp.csc_matrix:
        f = self.free_u
        return self.energy[f][:, f].tocsc()

    @cached_property
    def riesz(self):
        """Factorization of the energy form on the free dofs (the E -> E* Riesz map)."""
        return spla.splu(self.energy_free)

    @cached_property
    def lumped_mass_free(self) -> np.ndarray:
        return np.asarray(assemble_bilinear(FormKind.MASS, self.mesh, lumped=True).diagonal())[self.free_u]

    def dual_norms(self, eta: np.ndarray, lumped: bool = False) -> np.ndarray:
        """Dual norms of coefficient vectors over the free mechanical dofs.

        ``eta`` is ``(n_free,)`` or ``(k, n_free)``; the norm is
        ``sqrt(eta . S^{-1} eta)`` with ``S`` the energy form, or the
        mass-lumped L2 dual norm when ``lumped`` is set.
        """
        e = np.atleast_2d(eta)
        if lumped:
            out = np.sqrt(np.einsum("ki,ki->k", e, e / self.lumped_mass_free))
        else:
            sol = self.riesz.solve(np.ascontiguousarray(e.T))
            out = np.sqrt(np.maximum(np.einsum("ik,ik->k", e.T, sol), 0.0))
        return out if np.ndim(eta) > 1 else out[0]

    def energy_norms(self, u: np.ndarray) -> np.ndarray:
        """Energy norms of full vector dof arrays, ``(n_u,)`` or ``(k, n_u)``."""
        uu = np.atleast_2d(u)
        out = np.sqrt(np.maximum(np.einsum("ki,ki->k", uu, (self.energy @ uu.T).T), 0.0))
        return out if np.ndim(u) > 1 else out[0]

    def l2_norms_scalar(self, theta: np.ndarray) -> np.ndarray:
        tt = np.atleast_2d(theta)
        out = np.sqrt(np.maximum(np.einsum("ki,ki->k", tt, (self.mass_scalar @ tt.T).T), 0.0))
        return out if np.ndim(theta) > 1 else out[0]

    def l2_norms_vector(self, u: np.ndarray) -> np.ndarray:
        uu = np.atleast_2d(u)
        out = np.sqrt(np.maximum(np.einsum("ki,ki->k", uu, (self.mass @ uu.T).T), 0.0))
        return out if np.ndim(u) > 1 else out[0]


@dataclass(frozen=True)
class TraceConstants:
    """Trace constants of the contact boundary.

    Only the products ``c_e_bar * gamma_norm`` and ``c_e * gamma_s_norm``
    enter the solvability conditions, so they are estimated directly as
    trace-versus-energy Rayleigh quotients and stored with
    ``c_e_bar = c_e = 1``.
    """

    gamma_norm: float
    gamma_s_norm: float
    c_e_bar: float = 1.0
    c_e: float = 1.0
    iterations: tuple[int, int] = (0, 0)

    @property
    def mechanical(self) -> float:
        """``(c_e_bar * ||gamma||)^2``."""
        return (self.c_e_bar * self.gamma_norm) ** 2

    @property
    def thermal(self) -> float:
        """``(c_e * ||gamma_s||)^2``."""
        return (self.c_e * self.gamma_s_norm) ** 2


def generalized_power_iteration(
    A: sp.spmatrix, B: sp.spmatrix, tol: float = 1e-14, max_iter: int = 20000, x0: np.ndarray | None = None
) -> tuple[float, np.ndarray, int]:
    """Largest eigenvalue of ``A x = lam B x`` for PSD ``A`` and SPD ``B``.

    Power iteration on ``B^{-1} A`` with Rayleigh-quotient stopping.
    """
    n = A.shape[0]
    if n == 0 or A.nnz == 0 or abs(A).max() == 0.0:
        return 0.0, np.zeros(n), 0
    lu = spla.splu(sp.csc_matrix(B))
    x = lu.solve(A @ np.ones(n)) if x0 is None else np.asarray(x0, dtype=float)
    if not np.any(x):
        x = np.ones(n)
    lam_old = np.inf
    for k in range(1, max_iter + 1):
        x = x / np.sqrt(x @ (B @ x))
        y = lu.solve(A @ x)
        lam = float(x @ (A @ x))
        if abs(lam - lam_old) <= tol * abs(lam):
            return lam, x, k
        lam_old = lam
        x = y
    raise TraceEstimateError("power iteration did not converge", max_iter)


def estimate_trace_constants(mesh: Mesh, tol: float = 1e-14, max_iter: int = 20000) -> TraceConstants:
    """Estimate the contact trace constants of ``mesh``.

    The squared mechanical constant is the largest Rayleigh quotient of the
    nodal contact-trace L2 norm against the energy norm over fields vanishing
    on the Dirichlet edges; the thermal one uses the gradient norm over
    fields vanishing on the Dirichlet and Neumann edges.
    """
    disc = Discretization(mesh)
    f = disc.free_u
    trace_u = assemble_bilinear(FormKind.CONTACT_TRACE, mesh, lumped=True)[f][:, f]
    lam_u, _, it_u = generalized_power_iteration(trace_u, disc.energy_free, tol, max_iter)
    ft = disc.free_theta
    lam_t, it_t = 0.0, 0
    if ft.size:
        trace_t = assemble_bilinear(FormKind.CONTACT_TRACE_SCALAR, mesh, lumped=True)[ft][:, ft]
        lam_t, _, it_t = generalized_power_iteration(trace_t, disc.laplace[ft][:, ft], tol, max_iter)
    return TraceConstants(float(np.sqrt(lam_u)), float(np.sqrt(lam_t)), iterations=(it_u, it_t))


def contact_trace_norm(mesh: Mesh, values: np.ndarray) -> float:
    """Nodal-quadrature L2(contact) norm of a vector or scalar nodal field."""
    vals = np.asarray(values, dtype=float)
    vector = vals.size == 2 * mesh.n_vertices
    kind = FormKind.CONTACT_TRACE if vector else FormKind.CONTACT_TRACE_SCALAR
    flat = vals.reshape(-1)
    return float(np.sqrt(max(flat @ (assemble_bilinear(kind, mesh, lumped=True) @ flat), 0.0)))


class GreenKind(enum.Enum):
    SCALAR = "scalar"
    TENSOR = "tensor"


def discrete_green_residual(kind: GreenKind | str, mesh: Mesh, first, second) -> float:
    """Defect of an integration-by-parts identity evaluated with exact quadrature.

    ``SCALAR``: ``first`` is a nodal scalar ``u``, ``second`` a nodal vector
    ``v``; returns ``|int(u div v + grad u . v) - int_boundary u v.n|``.

    ``TENSOR``: ``first`` is a per-triangle symmetric tensor field ``sigma``
    of shape ``(m, 2, 2)``, ``second`` a nodal vector ``v``; the broken
    divergence of a piecewise-constant tensor vanishes, so the defect is
    ``|int sigma : eps(v) - int_boundary sigma n . v|``.
    """
    kind = GreenKind(kind)
    edges = mesh.boundary_edges
    lengths = _edge_lengths(mesh, edges)
    normals = mesh.outward_normals(edges)
    a, b = edges[:, 0], edges[:, 1]
    areas = mesh.areas
    if kind is GreenKind.SCALAR:
        u = np.asarray(first, dtype=float).reshape(mesh.n_vertices)
        v = np.asarray(second, dtype=float).reshape(mesh.n_vertices, 2)
        grad_v = element_gradients(mesh, v)
        div_v = np.einsum("tii->t", grad_v)
        grad_u = element_gradients(mesh, u)
        u_mean = u[mesh.triangles].mean(axis=1)
        v_mean = v[mesh.triangles].mean(axis=1)
        volume = np.sum(areas * (u_mean * div_v + np.einsum("ti,ti->t", grad_u, v_mean)))
        vn_a = np.einsum("ki,ki->k", v[a], normals)
        vn_b = np.einsum("ki,ki->k", v[b], normals)
        boundary = np.sum(lengths / 6.0 * (2 * u[a] * vn_a + u[a] * vn_b + u[b] * vn_a + 2 * u[b] * vn_b))
        return float(abs(volume - boundary))
    sigma = np.asarray(first, dtype=float).reshape(mesh.n_triangles, 2, 2)
    v = np.asarray(second, dtype=float).reshape(mesh.n_vertices, 2)
    eps_v = element_strains(mesh, v.reshape(-1))
    volume = np.sum(areas * np.einsum("tij,tij->t", sigma, eps_v))
    tri_of = np.array([mesh.edge_triangle[(min(p, q), max(p, q))] for p, q in edges.tolist()], dtype=np.int64)
    traction = np.einsum("kij,kj->ki", sigma[tri_of], normals) if len(edges) else np.zeros((0, 2))
    boundary = np.sum(lengths * np.einsum("ki,ki->k", traction, 0.5 * (v[a] + v[b])))
    return float(abs(volume - boundary))
