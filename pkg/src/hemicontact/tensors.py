"""Small-dimension symmetric tensor algebra.

Values are stored as full ``d x d`` matrices; packing into Voigt vectors is
left to the assembly code. Batched helpers operate on arrays whose trailing
axes are ``(d, d)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_SYM_ATOL = 1e-12


@dataclass(frozen=True, eq=False)
class SymTensor:
    """Symmetric second-order tensor on R^d."""

    entries: np.ndarray

    def __post_init__(self):
        a = np.array(self.entries, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError(f"expected a square matrix, got shape {a.shape}")
        if not np.all(np.isfinite(a)):
            raise ValueError("tensor entries must be finite")
        scale = max(1.0, float(np.max(np.abs(a)))) if a.size else 1.0
        if np.max(np.abs(a - a.T), initial=0.0) > _SYM_ATOL * scale:
            raise ValueError("tensor is not symmetric")
        # round-off asymmetry is removed so that entries[i, j] == entries[j, i] exactly
        a = 0.5 * (a + a.T)
        a.setflags(write=False)
        object.__setattr__(self, "entries", a)

    @property
    def d(self) -> int:
        return self.entries.shape[0]

    @classmethod
    def identity(cls, d: int = 2) -> "SymTensor":
        return cls(np.eye(d))

    @classmethod
    def zeros(cls, d: int = 2) -> "SymTensor":
        return cls(np.zeros((d, d)))

    def trace(self) -> float:
        return float(np.trace(self.entries))

    def norm(self) -> float:
        return float(np.sqrt(tensor_inner(self, self)))

    def __add__(self, other: "SymTensor") -> "SymTensor":
        _check_dims(self, other)
        return SymTensor(self.entries + other.entries)

    def __sub__(self, other: "SymTensor") -> "SymTensor":
        _check_dims(self, other)
        return SymTensor(self.entries - other.entries)

    def __mul__(self, alpha: float) -> "SymTensor":
        return SymTensor(float(alpha) * self.entries)

    __rmul__ = __mul__

    def __neg__(self) -> "SymTensor":
        return SymTensor(-self.entries)

    def __eq__(self, other) -> bool:
        if not isinstance(other, SymTensor):
            return NotImplemented
        return self.d == other.d and bool(np.array_equal(self.entries, other.entries))

    def allclose(self, other: "SymTensor", atol: float = 1e-12) -> bool:
        return self.d == other.d and bool(np.allclose(self.entries, other.entries, rtol=0.0, atol=atol))

    def __repr__(self) -> str:
        return f"SymTensor({self.entries.tolist()})"


@dataclass(frozen=True, eq=False)
class VectorValue:
    """Vector in R^d with finite components."""

    components: np.ndarray

    def __post_init__(self):
        c = np.array(self.components, dtype=float).reshape(-1)
        if not np.all(np.isfinite(c)):
            raise ValueError("vector components must be finite")
        c.setflags(write=False)
        object.__setattr__(self, "components", c)

    @property
    def d(self) -> int:
        return self.components.shape[0]

    def dot(self, other: "VectorValue") -> float:
        if self.d != other.d:
            raise ValueError(f"dimension mismatch: {self.d} vs {other.d}")
        return float(self.components @ other.components)

    def norm(self) -> float:
        return float(np.linalg.norm(self.components))

    def __eq__(self, other) -> bool:
        if not isinstance(other, VectorValue):
            return NotImplemented
        return bool(np.array_equal(self.components, other.components))

    def __repr__(self) -> str:
        return f"VectorValue({self.components.tolist()})"


def _check_dims(a: SymTensor, b: SymTensor) -> None:
    if a.d != b.d:
        raise ValueError(f"dimension mismatch: {a.d} vs {b.d}")


def tensor_inner(a: SymTensor, b: SymTensor) -> float:
    """Return the double contraction ``a : b``."""
    _check_dims(a, b)
    return float(np.sum(a.entries * b.entries))


def deviatoric_split(a: SymTensor) -> tuple[float, SymTensor]:
    """Split ``a`` into its trace and traceless part.

    ``a == deviator + (trace / d) * I``.
    """
    tr = a.trace()
    dev = a.entries - (tr / a.d) * np.eye(a.d)
    # the diagonal of the deviator is shifted so that it sums to zero exactly
    diag = np.diag(dev).copy()
    diag[-1] = -np.sum(diag[:-1])
    dev[np.diag_indices(a.d)] = diag
    return tr, SymTensor(dev)


def isotropic_tensor(mu: float, lam: float, d: int = 2) -> np.ndarray:
    """Fourth-order isotropic tensor ``c_ijkl = lam d_ij d_kl + mu (d_ik d_jl + d_il d_jk)``."""
    eye = np.eye(d)
    return (
        lam * np.einsum("ij,kl->ijkl", eye, eye)
        + mu * (np.einsum("ik,jl->ijkl", eye, eye) + np.einsum("il,jk->ijkl", eye, eye))
    )


def batched_inner(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.einsum("...ij,...ij->...", a, b)


def batched_trace(a: np.ndarray) -> np.ndarray:
    return np.einsum("...ii->...", a)


def batched_norm(a: np.ndarray) -> np.ndarray:
    return np.sqrt(batched_inner(a, a))


def random_sym(rng: np.random.Generator, n: int, d: int = 2, scale: float | np.ndarray = 1.0) -> np.ndarray:
    """Draw ``n`` random symmetric ``d x d`` matrices with Gaussian entries."""
    g = rng.standard_normal((n, d, d))
    s = 0.5 * (g + np.swapaxes(g, -1, -2))
    return s * np.reshape(scale, (-1, 1, 1)) if np.ndim(scale) else s * scale
