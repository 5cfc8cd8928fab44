"""Triangular meshes with tagged boundary edges, and nodal fields on them.

Mesh file format (plain text, 0-based indices, ``#`` starts a comment)::

    v <x> <y>
    t <i> <j> <k>
    b <i> <j> <TAG>      # TAG in {D, N, C}
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Callable

import numpy as np


class Tag(str, enum.Enum):
    DIRICHLET = "D"
    NEUMANN = "N"
    CONTACT = "C"


class MeshError(ValueError):
    """Invalid mesh file or mesh data."""

    def __init__(self, message: str, line: int | None = None, source: str | None = None):
        where = ""
        if source is not None:
            where += f"{source}:"
        if line is not None:
            where += f"{line}: "
        elif where:
            where += " "
        super().__init__(where + message)
        self.line = line


@dataclass(frozen=True, eq=False)
class Mesh:
    """2D triangulation; ``boundary_edges[k]`` carries ``edge_tags[k]``."""

    vertices: np.ndarray
    triangles: np.ndarray
    boundary_edges: np.ndarray
    edge_tags: tuple[Tag, ...]

    def __post_init__(self):
        v = np.ascontiguousarray(self.vertices, dtype=float).reshape(-1, 2)
        t = np.ascontiguousarray(self.triangles, dtype=np.int64).reshape(-1, 3)
        b = np.ascontiguousarray(self.boundary_edges, dtype=np.int64).reshape(-1, 2)
        tags = tuple(Tag(x) for x in self.edge_tags)
        for name, arr in (("vertices", v), ("triangles", t), ("boundary_edges", b)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "edge_tags", tags)
        _validate(self)

    @property
    def n_vertices(self) -> int:
        return self.vertices.shape[0]

    @property
    def n_triangles(self) -> int:
        return self.triangles.shape[0]

    @cached_property
    def signed_areas(self) -> np.ndarray:
        p = self.vertices[self.triangles]
        e1 = p[:, 1] - p[:, 0]
        e2 = p[:, 2] - p[:, 0]
        return 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])

    @property
    def areas(self) -> np.ndarray:
        return self.signed_areas

    @property
    def area(self) -> float:
        return float(np.sum(self.signed_areas))

    def edges_with(self, *tags: Tag | str) -> np.ndarray:
        """Boundary edges carrying one of ``tags`` as an ``(k, 2)`` array."""
        wanted = {Tag(x) for x in tags}
        mask = np.array([tag in wanted for tag in self.edge_tags], dtype=bool)
        return self.boundary_edges[mask] if mask.size else np.zeros((0, 2), dtype=np.int64)

    def vertices_on(self, *tags: Tag | str) -> np.ndarray:
        """Sorted indices of vertices lying on edges with the given tags."""
        return np.unique(self.edges_with(*tags).reshape(-1))

    def boundary_length(self, *tags: Tag | str) -> float:
        e = self.edges_with(*tags)
        if e.size == 0:
            return 0.0
        d = self.vertices[e[:, 1]] - self.vertices[e[:, 0]]
        return float(np.sum(np.linalg.norm(d, axis=1)))

    @cached_property
    def h(self) -> float:
        """Longest edge length."""
        p = self.vertices[self.triangles]
        lengths = np.linalg.norm(p - np.roll(p, -1, axis=1), axis=2)
        return float(lengths.max())

    @cached_property
    def edge_triangle(self) -> dict[tuple[int, int], int]:
        """Map from sorted boundary edge to the triangle containing it."""
        out = {}
        for k, tri in enumerate(self.triangles):
            for a, b in ((tri[0], tri[1]), (tri[1], tri[2]), (tri[2], tri[0])):
                key = (min(a, b), max(a, b))
                out.setdefault(key, k)
        return {tuple(sorted(map(int, e))): out[tuple(sorted(map(int, e)))] for e in self.boundary_edges}

    def outward_normals(self, edges: np.ndarray) -> np.ndarray:
        """Unit outward normals of boundary ``edges``."""
        normals = np.zeros((len(edges), 2))
        for k, (a, b) in enumerate(edges):
            tri = self.triangles[self.edge_triangle[(min(a, b), max(a, b))]]
            c = [x for x in tri if x != a and x != b][0]
            d = self.vertices[b] - self.vertices[a]
            n = np.array([d[1], -d[0]]) / np.hypot(*d)
            if n @ (self.vertices[c] - self.vertices[a]) > 0:
                n = -n
            normals[k] = n
        return normals


def _topological_boundary(triangles: np.ndarray) -> set[tuple[int, int]]:
    counts: dict[tuple[int, int], int] = {}
    for tri in triangles:
        for a, b in ((tri[0], tri[1]), (tri[1], tri[2]), (tri[2], tri[0])):
            key = (int(min(a, b)), int(max(a, b)))
            counts[key] = counts.get(key, 0) + 1
    bad = [e for e, c in counts.items() if c > 2]
    if bad:
        raise MeshError(f"edge {bad[0]} is shared by more than two triangles")
    return {e for e, c in counts.items() if c == 1}


def _validate(mesh: Mesh) -> None:
    n = mesh.n_vertices
    if mesh.n_triangles == 0:
        raise MeshError("mesh has no triangles")
    if mesh.triangles.min() < 0 or mesh.triangles.max() >= n:
        raise MeshError("triangle references a vertex index out of range")
    if len(mesh.edge_tags) != len(mesh.boundary_edges):
        raise MeshError("every boundary edge needs exactly one tag")
    area = mesh.signed_areas
    scale = max(mesh.h, 1e-300) ** 2
    bad = np.flatnonzero(area <= 1e-14 * scale)
    if bad.size:
        k = int(bad[0])
        kind = "zero-area" if abs(area[k]) <= 1e-14 * scale else "clockwise"
        raise MeshError(f"triangle {k} is {kind} (signed area {area[k]:.3g})")
    boundary = _topological_boundary(mesh.triangles)
    tagged: set[tuple[int, int]] = set()
    for a, b in mesh.boundary_edges:
        key = (int(min(a, b)), int(max(a, b)))
        if key in tagged:
            raise MeshError(f"boundary edge {key} is tagged twice")
        if key not in boundary:
            raise MeshError(f"tagged edge {key} is not on the boundary")
        tagged.add(key)
    missing = sorted(boundary - tagged)
    if missing:
        raise MeshError(f"boundary not covered: {len(missing)} untagged edge(s), e.g. {missing[0]}")
    if Tag.DIRICHLET not in mesh.edge_tags:
        raise MeshError("meas(Γ_D) = 0 violates clamping")


def parse_mesh(text: str, fix_orientation: bool = False, source: str | None = None) -> Mesh:
    """Parse the plain-text mesh format.

    Clockwise triangles are reoriented when ``fix_orientation`` is set and
    rejected otherwise.
    """
    vertices: list[tuple[float, float]] = []
    triangles: list[tuple[int, int, int]] = []
    edges: list[tuple[int, int]] = []
    tags: list[Tag] = []
    tri_lines: list[int] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        key, args = parts[0], parts[1:]
        try:
            if key == "v" and len(args) == 2:
                vertices.append((float(args[0]), float(args[1])))
            elif key == "t" and len(args) == 3:
                triangles.append(tuple(int(x) for x in args))  # type: ignore[arg-type]
                tri_lines.append(lineno)
            elif key == "b" and len(args) == 3:
                edges.append((int(args[0]), int(args[1])))
                tags.append(Tag(args[2]))
            else:
                raise ValueError(f"unrecognized record {line!r}")
        except ValueError as exc:
            raise MeshError(str(exc), line=lineno, source=source) from None
    v = np.array(vertices, dtype=float).reshape(-1, 2)
    t = np.array(triangles, dtype=np.int64).reshape(-1, 3)
    for idx, lineno in enumerate(tri_lines):
        if t[idx].min() < 0 or t[idx].max() >= len(v):
            raise MeshError(f"vertex index out of range in triangle {t[idx].tolist()}", line=lineno, source=source)
    if len(t):
        p = v[t]
        e1, e2 = p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]
        signed = 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])
        for idx in np.flatnonzero(signed < 0):
            if not fix_orientation:
                raise MeshError(f"triangle {int(idx)} is clockwise", line=tri_lines[idx], source=source)
            t[idx, [1, 2]] = t[idx, [2, 1]]
    for (a, b), tag in zip(edges, tags):
        if max(a, b) >= len(v) or min(a, b) < 0:
            raise MeshError(f"boundary edge ({a}, {b}) references a missing vertex", source=source)
    try:
        return Mesh(v, t, np.array(edges, dtype=np.int64).reshape(-1, 2), tuple(tags))
    except MeshError as exc:
        if source is None:
            raise
        raise MeshError(str(exc), source=source) from None


def load_mesh(path: str | Path, fix_orientation: bool = False) -> Mesh:
    path = Path(path)
    return parse_mesh(path.read_text(), fix_orientation=fix_orientation, source=str(path))


def format_mesh(mesh: Mesh, comment: str | None = None) -> str:
    lines = []
    if comment:
        lines += [f"# {c}" for c in comment.splitlines()]
    lines += [f"v {x!r} {y!r}" for x, y in mesh.vertices.tolist()]
    lines += [f"t {i} {j} {k}" for i, j, k in mesh.triangles.tolist()]
    lines += [f"b {a} {b} {tag.value}" for (a, b), tag in zip(mesh.boundary_edges.tolist(), mesh.edge_tags)]
    return "\n".join(lines) + "\n"


def save_mesh(mesh: Mesh, path: str | Path, comment: str | None = None) -> None:
    Path(path).write_text(format_mesh(mesh, comment))


def rectangle_mesh(
    nx: int,
    ny: int,
    lx: float = 1.0,
    ly: float = 1.0,
    left: str = "D",
    right: str = "N",
    bottom: str = "C",
    top: str = "N",
) -> Mesh:
    """Structured ``nx x ny`` mesh of ``[0, lx] x [0, ly]``, each cell split along its diagonal."""
    xs = np.linspace(0.0, lx, nx + 1)
    ys = np.linspace(0.0, ly, ny + 1)
    X, Y = np.meshgrid(xs, ys)
    vertices = np.column_stack([X.ravel(), Y.ravel()])

    def vid(i, j):
        return j * (nx + 1) + i

    tris = []
    for j in range(ny):
        for i in range(nx):
            a, b, c, d = vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)
            tris += [(a, b, c), (a, c, d)]
    edges, tags = [], []
    for i in range(nx):
        edges.append((vid(i, 0), vid(i + 1, 0)))
        tags.append(bottom)
        edges.append((vid(i + 1, ny), vid(i, ny)))
        tags.append(top)
    for j in range(ny):
        edges.append((vid(nx, j), vid(nx, j + 1)))
        tags.append(right)
        edges.append((vid(0, j + 1), vid(0, j)))
        tags.append(left)
    return Mesh(vertices, np.array(tris), np.array(edges), tuple(tags))


def unit_square_mesh(n: int, **tags: str) -> Mesh:
    return rectangle_mesh(n, n, **tags)


def refine(mesh: Mesh) -> Mesh:
    """Uniform red refinement: every triangle is split into four, tags are inherited."""
    midpoint: dict[tuple[int, int], int] = {}
    verts = [tuple(p) for p in mesh.vertices.tolist()]

    def mid(a: int, b: int) -> int:
        key = (min(a, b), max(a, b))
        if key not in midpoint:
            pa, pb = mesh.vertices[a], mesh.vertices[b]
            verts.append(tuple(0.5 * (pa + pb)))
            midpoint[key] = len(verts) - 1
        return midpoint[key]

    tris = []
    for a, b, c in mesh.triangles.tolist():
        ab, bc, ca = mid(a, b), mid(b, c), mid(c, a)
        tris += [(a, ab, ca), (ab, b, bc), (ca, bc, c), (ab, bc, ca)]
    edges, tags = [], []
    for (a, b), tag in zip(mesh.boundary_edges.tolist(), mesh.edge_tags):
        m = mid(a, b)
        edges += [(a, m), (m, b)]
        tags += [tag, tag]
    return Mesh(np.array(verts), np.array(tris), np.array(edges), tuple(tags))


class FieldKind(enum.Enum):
    VECTOR_NODAL = 2
    SCALAR_NODAL = 1


@dataclass(frozen=True, eq=False)
class Field:
    """Nodal P1 field; vector values are stored as ``(n_vertices, 2)``."""

    mesh: Mesh
    kind: FieldKind
    values: np.ndarray

    def __post_init__(self):
        n = self.mesh.n_vertices
        shape = (n, 2) if self.kind is FieldKind.VECTOR_NODAL else (n,)
        vals = np.array(self.values, dtype=float)
        if vals.size != int(np.prod(shape)):
            raise ValueError(f"{self.kind.name} field needs {int(np.prod(shape))} values, got {vals.size}")
        vals = vals.reshape(shape)
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @classmethod
    def vector(cls, mesh: Mesh, values) -> "Field":
        return cls(mesh, FieldKind.VECTOR_NODAL, values)

    @classmethod
    def scalar(cls, mesh: Mesh, values) -> "Field":
        return cls(mesh, FieldKind.SCALAR_NODAL, values)

    @classmethod
    def interpolate(cls, mesh: Mesh, fn: Callable, kind: FieldKind = FieldKind.VECTOR_NODAL) -> "Field":
        x, y = mesh.vertices[:, 0], mesh.vertices[:, 1]
        vals = fn(x, y)
        if kind is FieldKind.VECTOR_NODAL:
            vals = np.column_stack([np.broadcast_to(c, x.shape) for c in vals])
        else:
            vals = np.broadcast_to(vals, x.shape)
        return cls(mesh, kind, vals)

    @property
    def flat(self) -> np.ndarray:
        """Values as a flat dof vector (vector fields interleave x and y)."""
        return self.values.reshape(-1)

    def constrained_vertices(self) -> np.ndarray:
        if self.kind is FieldKind.VECTOR_NODAL:
            return self.mesh.vertices_on(Tag.DIRICHLET)
        return self.mesh.vertices_on(Tag.DIRICHLET, Tag.NEUMANN)

    def clamped(self) -> "Field":
        """Copy with the constrained entries set to zero."""
        vals = np.array(self.values)
        vals[self.constrained_vertices()] = 0.0
        return Field(self.mesh, self.kind, vals)

    def is_admissible(self, atol: float = 0.0) -> bool:
        return bool(np.all(np.abs(self.values[self.constrained_vertices()]) <= atol))
