"""Piecewise-smooth boundary laws and their Clarke-subdifferential calculus.

A law is a scalar density ``beta`` made of polynomial pieces separated by
finitely many breakpoints. Its superpotential ``j(s) = int_0^s beta`` is
locally Lipschitz, and the Clarke gradient of ``j`` at ``s`` is the interval
spanned by the one-sided limits of ``beta`` there (the filled graph).

Tangential (friction) laws in 2D act on the signed slip rate and must be odd,
so that ``j`` is even and depends on the slip speed only.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from numpy.polynomial import legendre
from numpy.polynomial import polynomial as P

_ODD_TOL = 1e-12


class LawKind(str, enum.Enum):
    NORMAL = "normal"
    TANGENTIAL = "tangential"
    THERMAL = "thermal"


class LawError(ValueError):
    pass


@dataclass(frozen=True)
class IntervalValue:
    lo: float
    hi: float

    def __post_init__(self):
        if not self.lo <= self.hi:
            raise ValueError(f"empty interval [{self.lo}, {self.hi}]")

    @property
    def width(self) -> float:
        return self.hi - self.lo

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.lo + self.hi)

    def contains(self, x: float, tol: float = 0.0) -> bool:
        return self.lo - tol <= x <= self.hi + tol


def _as_coeffs(piece) -> np.ndarray:
    c = np.atleast_1d(np.asarray(piece, dtype=float))
    if c.ndim != 1 or c.size == 0 or not np.all(np.isfinite(c)):
        raise LawError(f"invalid polynomial piece {piece!r}")
    return np.trim_zeros(c, "b") if np.any(c) else np.zeros(1)


@dataclass(frozen=True, eq=False)
class BoundaryLaw:
    """Piecewise-polynomial density with breakpoints.

    ``pieces[k]`` holds ascending monomial coefficients (in the global
    variable ``s``) valid on ``[breakpoints[k-1], breakpoints[k])``. Between
    pieces the density is right-continuous unless ``point_values`` supplies
    the value at a breakpoint. ``c0``, ``c1`` (growth) and ``m`` (relaxed
    monotonicity) are estimated when not declared. ``regular`` may assert
    which of ``j`` (``"j"``) or ``-j`` (``"-j"``) is Clarke regular.
    """

    breakpoints: tuple[float, ...]
    pieces: tuple[tuple[float, ...], ...]
    kind: LawKind = LawKind.NORMAL
    c0: float | None = None
    c1: float | None = None
    m: float | None = None
    regular: str | None = None
    epsilon: float = 1e-6
    point_values: tuple[tuple[float, float], ...] = ()
    name: str = ""
    _coeffs: tuple[np.ndarray, ...] = field(init=False, repr=False)

    def __post_init__(self):
        bp = tuple(float(b) for b in self.breakpoints)
        if any(not np.isfinite(b) for b in bp) or any(b2 <= b1 for b1, b2 in zip(bp, bp[1:])):
            raise LawError("breakpoints must be finite and strictly increasing")
        if len(self.pieces) != len(bp) + 1:
            raise LawError(f"{len(bp)} breakpoints need {len(bp) + 1} pieces, got {len(self.pieces)}")
        coeffs = tuple(_as_coeffs(p) for p in self.pieces)
        pv = tuple((float(x), float(y)) for x, y in self.point_values)
        for x, _ in pv:
            if x not in bp:
                raise LawError(f"point value given at {x}, which is not a breakpoint")
        if self.regular not in (None, "j", "-j"):
            raise LawError(f"regular must be 'j', '-j' or unset, got {self.regular!r}")
        if not self.epsilon > 0:
            raise LawError("regularization epsilon must be positive")
        object.__setattr__(self, "breakpoints", bp)
        object.__setattr__(self, "pieces", tuple(tuple(c.tolist()) for c in coeffs))
        object.__setattr__(self, "point_values", pv)
        object.__setattr__(self, "kind", LawKind(self.kind))
        object.__setattr__(self, "_coeffs", coeffs)
        lo, hi = self.jump_limits()
        pvd = dict(pv)
        for k, b in enumerate(bp):
            if b in pvd and not min(lo[k], hi[k]) <= pvd[b] <= max(lo[k], hi[k]):
                raise LawError(f"point value at {b} lies outside the one-sided limits")

    # evaluation

    def _piece_index(self, s: np.ndarray) -> np.ndarray:
        return np.searchsorted(np.asarray(self.breakpoints), s, side="right")

    def density(self, s):
        """Pointwise value of the density (right-continuous at breakpoints)."""
        s = np.asarray(s, dtype=float)
        idx = self._piece_index(s)
        out = np.zeros(s.shape)
        for k, c in enumerate(self._coeffs):
            mask = idx == k
            if np.any(mask):
                out[mask] = P.polyval(s[mask], c)
        for x, y in self.point_values:
            out[s == x] = y
        return out if out.ndim else float(out)

    __call__ = density

    def jump_limits(self) -> tuple[np.ndarray, np.ndarray]:
        """Left and right limits of the density at every breakpoint."""
        bp = np.asarray(self.breakpoints)
        left = np.array([P.polyval(b, self._coeffs[k]) for k, b in enumerate(bp)])
        right = np.array([P.polyval(b, self._coeffs[k + 1]) for k, b in enumerate(bp)])
        return left, right

    def envelopes(self, xi):
        """Vectorized ``(lower, upper)`` envelopes of the filled graph."""
        xi = np.asarray(xi, dtype=float)
        lo = np.array(self.density(xi), dtype=float, ndmin=1).reshape(xi.shape)
        hi = lo.copy()
        left, right = self.jump_limits()
        for b, l, r in zip(self.breakpoints, left, right):
            at = xi == b
            if np.any(at):
                lo[at] = min(l, r)
                hi[at] = max(l, r)
        return (lo, hi) if xi.ndim else (float(lo), float(hi))

    def fill_in_gaps(self, xi: float) -> IntervalValue:
        """The filled interval ``[lower(xi), upper(xi)]``."""
        lo, hi = self.envelopes(float(xi))
        return IntervalValue(lo, hi)

    def selection(self, xi):
        """Midpoint selection from the filled graph."""
        lo, hi = self.envelopes(xi)
        return 0.5 * (np.asarray(lo) + np.asarray(hi)) if np.ndim(xi) else 0.5 * (lo + hi)

    def clarke_dd(self, x, v):
        """Generalized directional derivative ``j0(x; v)``: the support function of the filled interval."""
        lo, hi = self.envelopes(x)
        v = np.asarray(v, dtype=float)
        out = np.where(v >= 0, np.asarray(hi) * v, np.asarray(lo) * v)
        return out if out.ndim else float(out)

    @cached_property
    def _antiderivatives(self) -> tuple[tuple[np.ndarray, float], ...]:
        # continuous antiderivative G with G(0) = 0, stored as (poly, offset) per piece
        bp = self.breakpoints
        polys = [P.polyint(c) for c in self._coeffs]
        offsets = [0.0] * len(polys)
        for k in range(1, len(polys)):
            b = bp[k - 1]
            offsets[k] = offsets[k - 1] + P.polyval(b, polys[k - 1]) - P.polyval(b, polys[k])
        k0 = int(self._piece_index(np.asarray(0.0)))
        shift = P.polyval(0.0, polys[k0]) + offsets[k0]
        return tuple((p, o - shift) for p, o in zip(polys, offsets))

    def superpotential(self, s):
        """``j(s) = int_0^s beta`` by exact piecewise antiderivatives."""
        s = np.asarray(s, dtype=float)
        idx = self._piece_index(s)
        out = np.zeros(s.shape)
        for k, (poly, off) in enumerate(self._antiderivatives):
            mask = idx == k
            if np.any(mask):
                out[mask] = P.polyval(s[mask], poly) + off
        return out if out.ndim else float(out)

    # constants

    @property
    def sample_range(self) -> tuple[float, float]:
        if not self.breakpoints:
            return -10.0, 10.0
        r = 2.0 * max(abs(self.breakpoints[0]), abs(self.breakpoints[-1])) + 10.0
        return -r, r

    def relaxed_monotonicity_estimate(self, grid_range: tuple[float, float] | None = None, grid_count: int = 4001) -> float:
        """``-min (beta(x1) - beta(x2)) / (x1 - x2)`` over a uniform grid, clamped at 0.

        Over a 1D grid the minimal difference quotient is attained by adjacent
        points, so only neighbours are compared.
        """
        if grid_count < 2:
            raise ValueError("grid_count must be at least 2")
        a, b = grid_range if grid_range is not None else self.sample_range
        x = np.linspace(a, b, int(grid_count))
        y = np.asarray(self.density(x))
        q = np.diff(y) / np.diff(x)
        return max(0.0, float(-q.min()))

    def estimated_growth(self) -> tuple[float, float]:
        """Smallest ``c1`` allowed by the outer pieces and the matching ``c0``."""
        outer = (self._coeffs[0], self._coeffs[-1])
        if any(c.size > 2 for c in outer):
            raise LawError("density grows superlinearly; no linear growth bound exists")
        c1 = max(abs(c[1]) if c.size > 1 else 0.0 for c in outer)
        a, b = self.sample_range
        x = np.union1d(np.linspace(a, b, 4001), np.asarray(self.breakpoints))
        lo, hi = self.envelopes(x)
        c0 = float(np.max(np.maximum(np.abs(lo), np.abs(hi)) - c1 * np.abs(x)))
        return max(c0, 0.0), c1

    @property
    def growth(self) -> tuple[float, float]:
        if self.c0 is not None and self.c1 is not None:
            return float(self.c0), float(self.c1)
        c0, c1 = self.estimated_growth()
        return (float(self.c0) if self.c0 is not None else c0, float(self.c1) if self.c1 is not None else c1)

    @property
    def monotonicity_constant(self) -> float:
        """Declared ``m`` or the grid estimate with continuous pieces only.

        Downward jumps of the density admit no finite constant; they are
        reported by :meth:`validate`.
        """
        if self.m is not None:
            return float(self.m)
        return self._piecewise_slope_bound()

    def _piecewise_slope_bound(self) -> float:
        worst = 0.0
        bp = (-np.inf, *self.breakpoints, np.inf)
        a, b = self.sample_range
        for k, c in enumerate(self._coeffs):
            lo, hi = max(bp[k], a), min(bp[k + 1], b)
            if hi <= lo:
                continue
            x = np.linspace(lo, hi, 2001)
            worst = max(worst, float(-np.min(P.polyval(x, P.polyder(c)))))
        return worst

    def regularity(self) -> tuple[bool, bool]:
        """Whether ``j`` and ``-j`` are Clarke regular.

        With smooth pieces ``j`` is regular iff no jump of the density goes
        down, and ``-j`` is regular iff no jump goes up.
        """
        left, right = self.jump_limits()
        jumps = right - left
        return bool(np.all(jumps >= 0)), bool(np.all(jumps <= 0))

    @property
    def j_regular(self) -> bool:
        return self.regularity()[0]

    @property
    def minus_j_regular(self) -> bool:
        return self.regularity()[1]

    def validate(self, samples: int = 4001) -> None:
        """Check declared constants and kind-specific structure; raises :class:`LawError`."""
        a, b = self.sample_range
        x = np.union1d(np.linspace(a, b, samples), np.asarray(self.breakpoints))
        lo, hi = self.envelopes(x)
        c0, c1 = self.growth
        excess = np.maximum(np.abs(lo), np.abs(hi)) - (c0 + c1 * np.abs(x))
        if np.max(excess) > 1e-9 * max(1.0, c0):
            raise LawError(f"growth bound c0={c0}, c1={c1} violated by {np.max(excess):.3e}")
        if self.m is not None:
            est = self.relaxed_monotonicity_estimate((a, b), samples)
            if est > self.m + 1e-9:
                raise LawError(f"declared m={self.m} is below the grid estimate {est:.6g}")
        if self.kind is LawKind.TANGENTIAL:
            xp = x[x > 0]
            lo_p, hi_p = self.envelopes(xp)
            lo_m, hi_m = self.envelopes(-xp)
            tol = _ODD_TOL * max(1.0, float(np.max(np.abs(hi_p), initial=0.0)))
            if np.max(np.abs(lo_m + hi_p), initial=0.0) > tol or np.max(np.abs(hi_m + lo_p), initial=0.0) > tol:
                raise LawError("tangential density must be odd")
        if self.regular is not None:
            j_reg, mj_reg = self.regularity()
            if self.regular == "j" and not j_reg:
                raise LawError("declared regular = j, but the density has a downward jump")
            if self.regular == "-j" and not mj_reg:
                raise LawError("declared regular = -j, but the density has an upward jump")

    def regularize(self, epsilon: float | None = None, anchored: bool = False) -> "RegularizedLaw":
        """Smooth single-valued approximation of width ``epsilon``.

        ``anchored`` shifts the smoothed density so that it takes the midpoint
        selection at the origin; rest states of the unsmoothed law then stay
        exact rest states of the smoothed one.
        """
        eps = self.epsilon if epsilon is None else float(epsilon)
        if not eps > 0:
            raise LawError("regularization epsilon must be positive")
        return RegularizedLaw(self, eps, anchored)

    def scaled(self, factor: float) -> "BoundaryLaw":
        """The density multiplied by ``factor`` (constants rescaled, ``regular`` reset)."""
        f = float(factor)
        return BoundaryLaw(
            self.breakpoints,
            tuple(tuple(f * c for c in p) for p in self.pieces),
            kind=self.kind,
            c0=None if self.c0 is None else abs(f) * self.c0,
            c1=None if self.c1 is None else abs(f) * self.c1,
            m=None if (self.m is None or f < 0) else f * self.m,
            epsilon=self.epsilon,
            point_values=tuple((x, f * y) for x, y in self.point_values),
            name=self.name,
        )


class RegularizedLaw:
    """Box-kernel mollification of a density.

    ``beta_eps(s) = (1 / 2 eps) int_{s-eps}^{s+eps} beta``. Both the value and
    the derivative are integrated piece by piece with Gauss-Legendre rules of
    sufficient degree, so no difference of nearby values is ever formed.
    """

    def __init__(self, law: BoundaryLaw, epsilon: float, anchored: bool = False):
        self.law = law
        self.epsilon = float(epsilon)
        deg = max(c.size for c in law._coeffs)
        self._nodes, self._weights = legendre.leggauss(max(1, deg // 2 + 1))
        self._derivs = tuple(P.polyder(c) for c in law._coeffs)
        left, right = law.jump_limits()
        self._bp = np.asarray(law.breakpoints)
        self._jumps = right - left
        self.offset = 0.0
        if anchored:
            self.offset = float(law.selection(0.0)) - float(self._integrate(np.asarray(0.0), law._coeffs))

    @property
    def growth(self) -> tuple[float, float]:
        c0, c1 = self.law.growth
        return c0 + c1 * self.epsilon + abs(self.offset), c1

    def _integrate(self, s: np.ndarray, polys) -> np.ndarray:
        eps = self.epsilon
        edges = (-np.inf, *self.law.breakpoints, np.inf)
        total = np.zeros(s.shape)
        for k, c in enumerate(polys):
            # window offsets relative to s, so an interior window has width exactly 2 eps
            with np.errstate(invalid="ignore"):
                a = np.maximum(-eps, edges[k] - s)
                b = np.minimum(eps, edges[k + 1] - s)
            half = 0.5 * np.maximum(b - a, 0.0)
            if not np.any(half > 0):
                continue
            mid = s + 0.5 * (a + b)
            vals = P.polyval(mid[..., None] + half[..., None] * self._nodes, c)
            total += half * (vals @ self._weights)
        return total / (2.0 * eps)

    def value(self, s):
        s = np.asarray(s, dtype=float)
        out = self._integrate(s, self.law._coeffs)
        if self.offset:
            out = out + self.offset
        return out if out.ndim else float(out)

    __call__ = value

    def derivative(self, s):
        s = np.asarray(s, dtype=float)
        out = self._integrate(s, self._derivs)
        eps = self.epsilon
        for b, jump in zip(self._bp, self._jumps):
            inside = (s - eps < b) & (b < s + eps)
            out = out + np.where(inside, jump / (2.0 * eps), 0.0)
        return out if out.ndim else float(out)

    def potential(self, s):
        """Antiderivative of ``beta_eps`` vanishing at 0, by composite Gauss quadrature."""
        s = np.asarray(s, dtype=float)
        flat = s.reshape(-1)
        out = np.empty_like(flat)
        for i, x in enumerate(flat):
            pts = np.unique(np.concatenate([[0.0, x], self._bp - self.epsilon, self._bp + self.epsilon]))
            pts = pts[(pts >= min(0.0, x)) & (pts <= max(0.0, x))]
            nodes, weights = legendre.leggauss(8)
            acc = 0.0
            for a, b in zip(pts[:-1], pts[1:]):
                half = 0.5 * (b - a)
                acc += half * float(np.dot(weights, self.value(0.5 * (a + b) + half * nodes)))
            out[i] = acc if x >= 0 else -acc
        return out.reshape(s.shape) if s.ndim else float(out[0])


# families


def linear_law(slope: float = 1.0, offset: float = 0.0, kind: LawKind | str = LawKind.NORMAL, **kw) -> BoundaryLaw:
    return BoundaryLaw((), ((offset, slope),), kind=kind, **kw)


def piecewise_law(breakpoints, pieces, kind: LawKind | str = LawKind.NORMAL, **kw) -> BoundaryLaw:
    return BoundaryLaw(tuple(breakpoints), tuple(tuple(np.atleast_1d(p)) for p in pieces), kind=kind, **kw)


def sign_law(amplitude: float = 1.0, kind: LawKind | str = LawKind.TANGENTIAL, **kw) -> BoundaryLaw:
    """``amplitude * sign(s)``, filled to ``[-|a|, |a|]`` at the origin."""
    a = float(amplitude)
    return BoundaryLaw((0.0,), ((-a,), (a,)), kind=kind, point_values=((0.0, 0.0),), **kw)


def slip_weakening_law(static: float, kinetic: float, slip_scale: float, **kw) -> BoundaryLaw:
    """Odd friction density dropping linearly from ``static`` to ``kinetic`` over ``slip_scale``."""
    if not (static >= kinetic >= 0 and slip_scale > 0):
        raise LawError("slip weakening needs static >= kinetic >= 0 and slip_scale > 0")
    s, k, L = float(static), float(kinetic), float(slip_scale)
    slope = (s - k) / L
    return BoundaryLaw(
        (-L, 0.0, L),
        ((-k,), (-s, -slope), (s, -slope), (k,)),
        kind=LawKind.TANGENTIAL,
        point_values=((0.0, 0.0),),
        **kw,
    )


def damped_response_law(stiffness: float, **kw) -> BoundaryLaw:
    """Normal damped response: resistance ``stiffness * s`` for outward normal velocity, none inward."""
    k = float(stiffness)
    if k < 0:
        raise LawError("stiffness must be nonnegative")
    return BoundaryLaw((0.0,), ((0.0,), (0.0, k)), kind=LawKind.NORMAL, **kw)


def robin_law(coefficient: float, reference: float = 0.0, **kw) -> BoundaryLaw:
    """Heat exchange ``coefficient * (r - reference)`` with the foundation."""
    h = float(coefficient)
    return BoundaryLaw((), ((-h * float(reference), h),), kind=LawKind.THERMAL, **kw)


# boundary functional


@dataclass(frozen=True)
class FunctionalValue:
    """Nodal quadrature of ``J`` and its subgradient box.

    ``lo[p], hi[p]`` bound the ``p``-th dual coefficient of an element of the
    Clarke gradient of the discretized ``J``.
    """

    value: float
    lo: np.ndarray
    hi: np.ndarray
    weights: np.ndarray

    def box(self, p: int) -> IntervalValue:
        return IntervalValue(float(self.lo[p]), float(self.hi[p]))

    def box_norm(self) -> float:
        """Largest L2(contact) norm of a nodal function whose dual coefficients lie in the box."""
        big = np.maximum(np.abs(self.lo), np.abs(self.hi))
        mask = self.weights > 0
        return float(np.sqrt(np.sum(big[mask] ** 2 / self.weights[mask])))

    def directional(self, zeta: np.ndarray) -> float:
        """Support function of the box in direction ``zeta``."""
        z = np.asarray(zeta, dtype=float)
        return float(np.sum(np.maximum(self.lo * z, self.hi * z)))


def integral_functional_J(law: BoundaryLaw, theta_trace, mesh, t: float = 0.0) -> FunctionalValue:
    """Nodal (trapezoidal) quadrature of ``int_C j(theta)`` over the contact boundary.

    ``theta_trace`` lists values at the contact nodes in increasing vertex
    order. The law has no explicit time dependence; ``t`` is accepted for
    signature uniformity.
    """
    from .fem import contact_nodes

    cn = contact_nodes(mesh)
    th = np.asarray(theta_trace, dtype=float).reshape(-1)
    if th.shape[0] != cn.size:
        raise ValueError(f"expected {cn.size} contact-node values, got {th.shape[0]}")
    w = cn.weights
    value = float(np.sum(w * np.asarray(law.superpotential(th))))
    lo, hi = law.envelopes(th)
    return FunctionalValue(value, w * np.asarray(lo), w * np.asarray(hi), w)
