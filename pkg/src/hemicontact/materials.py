"""Constitutive laws of the thermoviscoelastic body and their discrete operators.

Every law evaluates on batches: tensors have trailing shape ``(d, d)``,
gradients ``(d,)``. Time dependence enters through a scalar piecewise-linear
:class:`Modulation` multiplying the law, so hypothesis constants over a time
window follow from the extreme multiplier values.

Operator assembly works with piecewise-constant strains and gradients, which
makes every volume term exact for the linear families.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.sparse as sp

from .fem import Discretization, scatter_blocks, scatter_vector
from .mesh import Field, FieldKind
from .tensors import SymTensor, VectorValue, isotropic_tensor, random_sym

HYPOTHESIS_SLACK = 1e-9


@dataclass(frozen=True)
class Modulation:
    """Piecewise-linear multiplier ``m(t)``; constant beyond the listed times."""

    times: tuple[float, ...] = (0.0,)
    values: tuple[float, ...] = (1.0,)

    def __post_init__(self):
        t = tuple(float(x) for x in self.times)
        v = tuple(float(x) for x in self.values)
        if len(t) != len(v) or not t:
            raise ValueError("modulation needs matching, nonempty times and values")
        if any(b <= a for a, b in zip(t, t[1:])):
            raise ValueError("modulation times must be strictly increasing")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)

    @classmethod
    def constant(cls, value: float = 1.0) -> "Modulation":
        return cls((0.0,), (float(value),))

    def __call__(self, t):
        out = np.interp(t, self.times, self.values)
        return float(out) if np.ndim(out) == 0 else out

    def bounds(self, T: float | None = None) -> tuple[float, float]:
        """Extreme values on ``[0, T]`` (on the whole line when ``T`` is None)."""
        t = np.asarray(self.times)
        pts = list(self.values)
        if T is not None:
            inside = (t >= 0) & (t <= T)
            pts = [self(0.0), self(T)] + list(np.asarray(self.values)[inside])
        return float(min(pts)), float(max(pts))

    @property
    def is_constant(self) -> bool:
        return len(set(self.values)) == 1


UNIT = Modulation()


def _weighted(lo_coef: float, bounds: tuple[float, float]) -> float:
    # min over t of m(t) * coef
    return min(lo_coef * bounds[0], lo_coef * bounds[1])


@dataclass(frozen=True)
class TensorLawConstants:
    monotonicity: float
    coercivity: float
    growth0: float
    growth1: float
    lipschitz: float


@dataclass(frozen=True)
class LinearIsotropicLaw:
    """``sigma = m(t) (2 mu eps + lam tr(eps) I)``."""

    mu: float
    lam: float
    modulation: Modulation = UNIT
    is_linear = True

    def _eigs(self, d: int) -> tuple[float, float]:
        return 2.0 * self.mu, 2.0 * self.mu + d * self.lam

    def stress(self, t: float, eps: np.ndarray) -> np.ndarray:
        eps = np.asarray(eps, dtype=float)
        d = eps.shape[-1]
        tr = np.einsum("...ii->...", eps)
        return self.modulation(t) * (2.0 * self.mu * eps + self.lam * tr[..., None, None] * np.eye(d))

    def tangent(self, t: float, eps: np.ndarray) -> np.ndarray:
        eps = np.asarray(eps)
        C = self.modulation(t) * isotropic_tensor(self.mu, self.lam, eps.shape[-1])
        return np.broadcast_to(C, eps.shape[:-2] + C.shape)

    def matrix(self, t: float, disc: Discretization) -> sp.csr_matrix:
        return self.modulation(t) * (2.0 * self.mu * disc.energy + self.lam * disc.divdiv)

    def constants(self, T: float | None = None, d: int = 2) -> TensorLawConstants:
        lo, hi = self.modulation.bounds(T)
        e = self._eigs(d)
        low = min(_weighted(x, (lo, hi)) for x in e)
        up = max(abs(x) for x in e) * max(abs(lo), abs(hi))
        return TensorLawConstants(low, low, 0.0, up, up)


@dataclass(frozen=True)
class CallableTensorLaw:
    """User-supplied tensor law with declared hypothesis constants.

    ``fn(t, eps)`` works on batches. Without ``tangent_fn`` the Jacobian is
    approximated by central differences.
    """

    fn: Callable[[float, np.ndarray], np.ndarray]
    declared: TensorLawConstants
    tangent_fn: Callable[[float, np.ndarray], np.ndarray] | None = None
    fd_step: float = 1e-7
    is_linear = False

    def stress(self, t: float, eps: np.ndarray) -> np.ndarray:
        return np.asarray(self.fn(t, np.asarray(eps, dtype=float)), dtype=float)

    def tangent(self, t: float, eps: np.ndarray) -> np.ndarray:
        eps = np.asarray(eps, dtype=float)
        if self.tangent_fn is not None:
            return np.asarray(self.tangent_fn(t, eps), dtype=float)
        d = eps.shape[-1]
        out = np.zeros(eps.shape + (d, d))
        h = self.fd_step * max(1.0, float(np.max(np.abs(eps), initial=0.0)))
        for k in range(d):
            for l in range(k, d):
                e = np.zeros((d, d))
                e[k, l] = e[l, k] = 0.5 if k != l else 1.0
                # by minor symmetry the derivative along e is the (k, l) column of the tangent
                ds = (self.stress(t, eps + h * e) - self.stress(t, eps - h * e)) / (2 * h)
                out[..., k, l] = ds
                out[..., l, k] = ds
        return out

    def constants(self, T: float | None = None, d: int = 2) -> TensorLawConstants:
        return self.declared


@dataclass(frozen=True)
class MemoryKernel:
    """Relaxation kernel ``sum_k exp(-lag / tau_k)`` times an isotropic tensor ``(mu_k, lam_k)``.

    ``tau = inf`` gives a constant term.
    """

    terms: tuple[tuple[float, float, float], ...] = ()

    def __post_init__(self):
        terms = tuple((float(m), float(l), float(tau)) for m, l, tau in self.terms)
        for _, _, tau in terms:
            if not tau > 0:
                raise ValueError("relaxation times must be positive")
        object.__setattr__(self, "terms", terms)

    @property
    def is_zero(self) -> bool:
        return not self.terms or all(m == 0 and l == 0 for m, l, _ in self.terms)

    def coefficients(self, lag):
        """``(mu(lag), lam(lag))``, vectorized over ``lag``."""
        lag = np.asarray(lag, dtype=float)
        if np.any(lag < 0):
            raise ValueError("memory kernel lag must be nonnegative")
        mu = np.zeros(lag.shape)
        lam = np.zeros(lag.shape)
        for m, l, tau in self.terms:
            w = np.exp(-lag / tau)
            mu = mu + m * w
            lam = lam + l * w
        return (float(mu), float(lam)) if lag.ndim == 0 else (mu, lam)

    def tensor(self, lag: float, d: int = 2) -> np.ndarray:
        mu, lam = self.coefficients(float(lag))
        return isotropic_tensor(mu, lam, d)

    def norm_bound(self, d: int = 2) -> float:
        """Bound of the operator norm over all lags."""
        return sum(max(abs(2 * m), abs(2 * m + d * l)) for m, l, _ in self.terms)


@dataclass(frozen=True)
class LinearThermalExpansion:
    """``C_e(t, theta) = -c m(t) theta I``."""

    coefficient: float = 0.0
    modulation: Modulation = UNIT
    is_linear = True

    def stress(self, t: float, theta: np.ndarray, d: int = 2) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        return -self.coefficient * self.modulation(t) * theta[..., None, None] * np.eye(d)

    def constants(self, T: float | None = None, d: int = 2) -> dict:
        lo, hi = self.modulation.bounds(T)
        L = abs(self.coefficient) * np.sqrt(d) * max(abs(lo), abs(hi))
        return {"c0e": 0.0, "c1e": L, "L_e": L}


@dataclass(frozen=True)
class CallableThermalExpansion:
    """``fn(t, theta) -> (..., d, d)`` with declared Lipschitz constant ``L_e`` and growth ``c0e``, ``c1e``."""

    fn: Callable[[float, np.ndarray], np.ndarray]
    L_e: float
    c0e: float = 0.0
    c1e: float | None = None
    is_linear = False

    def stress(self, t: float, theta: np.ndarray, d: int = 2) -> np.ndarray:
        return np.asarray(self.fn(t, np.asarray(theta, dtype=float)), dtype=float)

    def constants(self, T: float | None = None, d: int = 2) -> dict:
        return {"c0e": self.c0e, "c1e": self.L_e if self.c1e is None else self.c1e, "L_e": self.L_e}


@dataclass(frozen=True)
class LinearConductivity:
    """``K(t, xi) = k m(t) xi``."""

    k: float = 1.0
    modulation: Modulation = UNIT
    is_linear = True

    def flux(self, t: float, xi: np.ndarray) -> np.ndarray:
        return self.k * self.modulation(t) * np.asarray(xi, dtype=float)

    def tangent(self, t: float, xi: np.ndarray) -> np.ndarray:
        xi = np.asarray(xi)
        d = xi.shape[-1]
        return np.broadcast_to(self.k * self.modulation(t) * np.eye(d), xi.shape + (d,))

    def matrix(self, t: float, disc: Discretization) -> sp.csr_matrix:
        return self.k * self.modulation(t) * disc.laplace

    def constants(self, T: float | None = None) -> dict:
        lo, hi = self.modulation.bounds(T)
        low = _weighted(self.k, (lo, hi))
        return {"m_K": low, "alpha_K": low, "k0": 0.0, "k1": abs(self.k) * max(abs(lo), abs(hi))}


@dataclass(frozen=True)
class BoundedGradientConductivity:
    """``K(t, xi) = m(t) (k xi + kappa xi / sqrt(1 + |xi|^2))``.

    The second term is the gradient of the convex ``kappa sqrt(1 + |xi|^2)``,
    so the law is strongly monotone with constant ``k`` and its deviation
    from linear is bounded by ``kappa``.
    """

    k: float = 1.0
    kappa: float = 0.0
    modulation: Modulation = UNIT
    is_linear = False

    def flux(self, t: float, xi: np.ndarray) -> np.ndarray:
        xi = np.asarray(xi, dtype=float)
        s = np.sqrt(1.0 + np.sum(xi * xi, axis=-1, keepdims=True))
        return self.modulation(t) * (self.k * xi + self.kappa * xi / s)

    def tangent(self, t: float, xi: np.ndarray) -> np.ndarray:
        xi = np.asarray(xi, dtype=float)
        d = xi.shape[-1]
        s = np.sqrt(1.0 + np.sum(xi * xi, axis=-1))[..., None, None]
        eye = np.eye(d)
        outer = xi[..., :, None] * xi[..., None, :]
        return self.modulation(t) * (self.k * eye + self.kappa * (eye / s - outer / s**3))

    def constants(self, T: float | None = None) -> dict:
        lo, hi = self.modulation.bounds(T)
        if lo < 0:
            raise ValueError("bounded-gradient conductivity needs a nonnegative modulation")
        return {"m_K": self.k * lo, "alpha_K": self.k * lo, "k0": self.kappa * hi, "k1": self.k * hi}


@dataclass(frozen=True)
class LinearHeatSource:
    """Mechanical heat source ``R(t, v) = -c_R m(t) tr(grad v)``."""

    coefficient: float = 0.0
    modulation: Modulation = UNIT
    is_linear = True

    def source(self, t: float, eps: np.ndarray) -> np.ndarray:
        """Pointwise source from the strain rate (``tr grad v == tr eps(v)``)."""
        return -self.coefficient * self.modulation(t) * np.einsum("...ii->...", np.asarray(eps, dtype=float))

    def constants(self, T: float | None = None, d: int = 2) -> dict:
        lo, hi = self.modulation.bounds(T)
        return {"L_R": abs(self.coefficient) * np.sqrt(d) * max(abs(lo), abs(hi))}


@dataclass(frozen=True)
class LinearTangentialHeating:
    """Frictional heat ``h(t, r) = lam m(t) r`` for slip speed ``r >= 0``."""

    lam: float = 0.0
    modulation: Modulation = UNIT
    is_linear = True

    def __call__(self, t: float, r):
        return self.lam * self.modulation(t) * np.asarray(r, dtype=float)

    def derivative(self, t: float, r):
        return self.lam * self.modulation(t) * np.ones_like(np.asarray(r, dtype=float))

    def constants(self, T: float | None = None) -> dict:
        lo, hi = self.modulation.bounds(T)
        return {"L_tau": abs(self.lam) * max(abs(lo), abs(hi))}


@dataclass(frozen=True)
class MaterialModel:
    viscosity: LinearIsotropicLaw | CallableTensorLaw
    elasticity: LinearIsotropicLaw | CallableTensorLaw
    memory: MemoryKernel = field(default_factory=MemoryKernel)
    thermal_expansion: LinearThermalExpansion | CallableThermalExpansion = field(default_factory=LinearThermalExpansion)
    conductivity: LinearConductivity | BoundedGradientConductivity = field(default_factory=LinearConductivity)
    heat_source: LinearHeatSource = field(default_factory=LinearHeatSource)
    tangential_heating: LinearTangentialHeating = field(default_factory=LinearTangentialHeating)


# pointwise evaluation


def eval_viscosity(model: MaterialModel, t: float, strain_rate: SymTensor) -> SymTensor:
    return SymTensor(model.viscosity.stress(t, strain_rate.entries))


def eval_elasticity(model: MaterialModel, t: float, strain: SymTensor) -> SymTensor:
    return SymTensor(model.elasticity.stress(t, strain.entries))


def eval_thermal_expansion(model: MaterialModel, t: float, theta: float, d: int = 2) -> SymTensor:
    return SymTensor(model.thermal_expansion.stress(t, np.asarray(float(theta)), d))


def eval_conductivity(model: MaterialModel, t: float, grad_theta: VectorValue) -> VectorValue:
    return VectorValue(model.conductivity.flux(t, grad_theta.components))


def eval_memory_kernel(model: MaterialModel, lag: float) -> tuple[float, float]:
    return model.memory.coefficients(float(lag))


# discrete operators on flat dof arrays


def tensor_residual(law, t: float, disc: Discretization, u: np.ndarray) -> np.ndarray:
    """``<A(t, u), phi_i> = sum_T area sigma(eps(u)) : eps(phi_i)`` for all vector basis functions."""
    if getattr(law, "is_linear", False) and hasattr(law, "matrix"):
        return law.matrix(t, disc) @ u
    B = disc.strain_op
    eps = np.einsum("tijk,tk->tij", B, u[disc.elem_dofs])
    sig = law.stress(t, eps)
    loc = disc.areas[:, None] * np.einsum("tij,tijk->tk", sig, B)
    return scatter_vector(disc.elem_dofs, loc, disc.n_u)


def tensor_jacobian(law, t: float, disc: Discretization, u: np.ndarray) -> sp.csr_matrix:
    if getattr(law, "is_linear", False) and hasattr(law, "matrix"):
        return law.matrix(t, disc)
    B = disc.strain_op
    eps = np.einsum("tijk,tk->tij", B, u[disc.elem_dofs])
    D = law.tangent(t, eps)
    blocks = disc.areas[:, None, None] * np.einsum("tijk,tijab,tabl->tkl", B, D, B)
    return scatter_blocks(disc.elem_dofs, blocks, disc.n_u)


def expansion_residual(law, t: float, disc: Discretization, theta: np.ndarray) -> np.ndarray:
    """``<C_1(t, theta), phi_i> = int C_e(t, theta) : eps(phi_i)``, using element means of ``theta``."""
    if isinstance(law, LinearThermalExpansion):
        return -law.coefficient * law.modulation(t) * (disc.div_coupling @ theta)
    th = theta[disc.mesh.triangles].mean(axis=1)
    sig = law.stress(t, th)
    loc = disc.areas[:, None] * np.einsum("tij,tijk->tk", sig, disc.strain_op)
    return scatter_vector(disc.elem_dofs, loc, disc.n_u)


def conduction_residual(law, t: float, disc: Discretization, theta: np.ndarray) -> np.ndarray:
    """``<C_2(t, theta), zeta_a> = int K(t, grad theta) . grad zeta_a``."""
    if isinstance(law, LinearConductivity):
        return law.matrix(t, disc) @ theta
    g = disc.grads
    grad = np.einsum("tai,ta->ti", g, theta[disc.mesh.triangles])
    q = law.flux(t, grad)
    loc = disc.areas[:, None] * np.einsum("ti,tai->ta", q, g)
    return scatter_vector(disc.mesh.triangles, loc, disc.n_vertices)


def conduction_jacobian(law, t: float, disc: Discretization, theta: np.ndarray) -> sp.csr_matrix:
    if isinstance(law, LinearConductivity):
        return law.matrix(t, disc)
    g = disc.grads
    grad = np.einsum("tai,ta->ti", g, theta[disc.mesh.triangles])
    D = law.tangent(t, grad)
    blocks = disc.areas[:, None, None] * np.einsum("tai,tij,tbj->tab", g, D, g)
    return scatter_blocks(disc.mesh.triangles, blocks, disc.n_vertices)


def slip_speeds(disc: Discretization, v: np.ndarray) -> np.ndarray:
    """``|v . t|`` at the contact nodes."""
    cn = disc.contact
    vv = v.reshape(-1, 2)[cn.nodes]
    return np.abs(np.einsum("ki,ki->k", vv, cn.tangents))


def heating_residual(model: MaterialModel, t: float, disc: Discretization, v: np.ndarray) -> np.ndarray:
    """``<C_3(t, v), zeta_a>``: mechanical heat source plus frictional heating on the contact nodes."""
    out = np.zeros(disc.n_vertices)
    src = model.heat_source
    if isinstance(src, LinearHeatSource):
        if src.coefficient != 0.0:
            out -= src.coefficient * src.modulation(t) * (disc.div_coupling.T @ v)
    else:
        eps = np.einsum("tijk,tk->tij", disc.strain_op, v[disc.elem_dofs])
        r = src.source(t, eps)
        out += scatter_vector(disc.mesh.triangles, np.repeat((disc.areas * r / 3.0)[:, None], 3, axis=1), disc.n_vertices)
    cn = disc.contact
    if cn.size:
        h = np.asarray(model.tangential_heating(t, slip_speeds(disc, v)))
        if np.any(h):
            np.add.at(out, cn.nodes, cn.weights * h)
    return out


def _check_field(disc: Discretization, f: Field, kind: FieldKind) -> np.ndarray:
    if f.mesh is not disc.mesh:
        raise ValueError("field lives on a different mesh")
    if f.kind is not kind:
        raise TypeError(f"expected a {kind.name} field, got {f.kind.name}")
    return f.flat


def _disc_for(field_: Field, disc: Discretization | None) -> Discretization:
    return Discretization(field_.mesh) if disc is None else disc


def assemble_A_residual(model: MaterialModel, t: float, velocity: Field, disc: Discretization | None = None) -> np.ndarray:
    disc = _disc_for(velocity, disc)
    return tensor_residual(model.viscosity, t, disc, _check_field(disc, velocity, FieldKind.VECTOR_NODAL))


def assemble_B_residual(model: MaterialModel, t: float, displacement: Field, disc: Discretization | None = None) -> np.ndarray:
    disc = _disc_for(displacement, disc)
    return tensor_residual(model.elasticity, t, disc, _check_field(disc, displacement, FieldKind.VECTOR_NODAL))


def assemble_C1_residual(model: MaterialModel, t: float, theta: Field, disc: Discretization | None = None) -> np.ndarray:
    disc = _disc_for(theta, disc)
    return expansion_residual(model.thermal_expansion, t, disc, _check_field(disc, theta, FieldKind.SCALAR_NODAL))


def assemble_C2_residual(model: MaterialModel, t: float, theta: Field, disc: Discretization | None = None) -> np.ndarray:
    disc = _disc_for(theta, disc)
    return conduction_residual(model.conductivity, t, disc, _check_field(disc, theta, FieldKind.SCALAR_NODAL))


def assemble_C3_residual(model: MaterialModel, t: float, velocity: Field, disc: Discretization | None = None) -> np.ndarray:
    disc = _disc_for(velocity, disc)
    return heating_residual(model, t, disc, _check_field(disc, velocity, FieldKind.VECTOR_NODAL))


# hypothesis checks


@dataclass(frozen=True)
class HypothesisRecord:
    name: str
    claimed: float
    empirical: float
    samples: int
    passed: bool
    kind: str  # "lower" (empirical must not fall below) or "upper"


@dataclass(frozen=True)
class HypothesisReport:
    records: tuple[HypothesisRecord, ...]

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.records)

    def __getitem__(self, name: str) -> HypothesisRecord:
        for r in self.records:
            if r.name == name:
                return r
        raise KeyError(name)

    def failures(self) -> list[HypothesisRecord]:
        return [r for r in self.records if not r.passed]

    def format(self, units: str = "") -> str:
        lines = [f"# hypothesis report{(' (' + units + ')') if units else ''}", "name,bound,claimed,empirical,samples,passed"]
        for r in self.records:
            lines.append(f"{r.name},{r.kind},{r.claimed:.12g},{r.empirical:.12g},{r.samples},{'yes' if r.passed else 'no'}")
        return "\n".join(lines) + "\n"


def _record(name: str, claimed: float, ratios: np.ndarray, lower: bool) -> HypothesisRecord:
    ratios = np.asarray(ratios, dtype=float)
    ratios = ratios[np.isfinite(ratios)]
    emp = float(ratios.min() if lower else ratios.max()) if ratios.size else float("nan")
    scale = max(1.0, abs(claimed))
    ok = bool(ratios.size) and (emp >= claimed - HYPOTHESIS_SLACK * scale if lower else emp <= claimed + HYPOTHESIS_SLACK * scale)
    return HypothesisRecord(name, float(claimed), emp, int(ratios.size), ok, "lower" if lower else "upper")


def _magnitudes(rng: np.random.Generator, n: int) -> np.ndarray:
    return 10.0 ** rng.uniform(-3, 3, n)


def _tensor_law_records(prefix: str, law, T: float, rng, n: int, role: str) -> list[HypothesisRecord]:
    c = law.constants(T)
    t = rng.uniform(0.0, T, n)
    e1 = random_sym(rng, n, 2, _magnitudes(rng, n))
    e2 = random_sym(rng, n, 2, _magnitudes(rng, n))
    s1 = np.stack([law.stress(ti, e) for ti, e in zip(t, e1)])
    s2 = np.stack([law.stress(ti, e) for ti, e in zip(t, e2)])
    de = e1 - e2
    dn2 = np.einsum("kij,kij->k", de, de)
    n1 = np.sqrt(np.einsum("kij,kij->k", e1, e1))
    out = []
    if role == "viscosity":
        out.append(_record(f"{prefix}.growth", c.growth1, (np.sqrt(np.einsum("kij,kij->k", s1, s1)) - c.growth0) / n1, lower=False))
        out.append(_record(f"{prefix}.strong_monotonicity", c.monotonicity, np.einsum("kij,kij->k", s1 - s2, de) / dn2, lower=True))
        out.append(_record(f"{prefix}.coercivity", c.coercivity, np.einsum("kij,kij->k", s1, e1) / n1**2, lower=True))
    else:
        ds = s1 - s2
        out.append(_record(f"{prefix}.lipschitz", c.lipschitz, np.sqrt(np.einsum("kij,kij->k", ds, ds) / dn2), lower=False))
    return out


def check_hypotheses(model: MaterialModel, sample_count: int = 1000, seed: int = 0, T: float = 1.0) -> HypothesisReport:
    """Sample every hypothesis constant of ``model`` on ``sample_count`` random inputs."""
    if sample_count < 1000:
        raise ValueError("at least 1000 samples are required")
    rng = np.random.default_rng(seed)
    n = int(sample_count)
    recs: list[HypothesisRecord] = []
    recs += _tensor_law_records("viscosity", model.viscosity, T, rng, n, "viscosity")
    recs += _tensor_law_records("elasticity", model.elasticity, T, rng, n, "elasticity")

    lags = rng.uniform(0.0, 10.0 * T, 100)
    worst = 0.0
    for lag in lags:
        C = model.memory.tensor(lag)
        worst = max(worst, float(np.max(np.abs(C - C.transpose(1, 0, 2, 3)))), float(np.max(np.abs(C - C.transpose(2, 3, 0, 1)))))
    recs.append(HypothesisRecord("memory.symmetry", 0.0, worst, len(lags), worst <= 1e-14, "upper"))

    te = model.thermal_expansion
    ce = te.constants(T)
    t = rng.uniform(0.0, T, n)
    r1 = rng.standard_normal(n) * _magnitudes(rng, n)
    r2 = rng.standard_normal(n) * _magnitudes(rng, n)
    s1 = np.stack([te.stress(ti, np.asarray(ri)) for ti, ri in zip(t, r1)])
    s2 = np.stack([te.stress(ti, np.asarray(ri)) for ti, ri in zip(t, r2)])
    d = s1 - s2
    recs.append(_record("thermal_expansion.lipschitz", ce["L_e"], np.sqrt(np.einsum("kij,kij->k", d, d)) / np.abs(r1 - r2), lower=False))
    g1 = np.sqrt(np.einsum("kij,kij->k", s1, s1))
    recs.append(_record("thermal_expansion.growth", ce["c1e"], (g1 - ce["c0e"]) / np.abs(r1), lower=False))

    K = model.conductivity
    ck = K.constants(T)
    x1 = rng.standard_normal((n, 2)) * _magnitudes(rng, n)[:, None]
    x2 = rng.standard_normal((n, 2)) * _magnitudes(rng, n)[:, None]
    q1 = np.stack([K.flux(ti, xi) for ti, xi in zip(t, x1)])
    q2 = np.stack([K.flux(ti, xi) for ti, xi in zip(t, x2)])
    dx = x1 - x2
    dx2 = np.einsum("ki,ki->k", dx, dx)
    nx1 = np.linalg.norm(x1, axis=1)
    recs.append(_record("conductivity.growth", ck["k1"], (np.linalg.norm(q1, axis=1) - ck["k0"]) / nx1, lower=False))
    recs.append(_record("conductivity.strong_monotonicity", ck["m_K"], np.einsum("ki,ki->k", q1 - q2, dx) / dx2, lower=True))
    recs.append(_record("conductivity.coercivity", ck["alpha_K"], np.einsum("ki,ki->k", q1, x1) / nx1**2, lower=True))

    R = model.heat_source
    cr = R.constants(T)
    e1 = random_sym(rng, n, 2, _magnitudes(rng, n))
    e2 = random_sym(rng, n, 2, _magnitudes(rng, n))
    src1 = np.array([R.source(ti, e) for ti, e in zip(t, e1)])
    src2 = np.array([R.source(ti, e) for ti, e in zip(t, e2)])
    de = e1 - e2
    recs.append(_record("heat_source.lipschitz", cr["L_R"], np.abs(src1 - src2) / np.sqrt(np.einsum("kij,kij->k", de, de)), lower=False))

    h = model.tangential_heating
    ch = h.constants(T)
    a = np.abs(rng.standard_normal(n)) * _magnitudes(rng, n)
    b = np.abs(rng.standard_normal(n)) * _magnitudes(rng, n)
    ha = np.array([h(ti, ai) for ti, ai in zip(t, a)])
    hb = np.array([h(ti, bi) for ti, bi in zip(t, b)])
    recs.append(_record("tangential_heating.lipschitz", ch["L_tau"], np.abs(ha - hb) / np.abs(a - b), lower=False))
    recs.append(_record("tangential_heating.nonnegative", 0.0, ha, lower=True))
    return HypothesisReport(tuple(recs))
