"""Star-shaped bodies described by their radial function.

All evaluators are vectorized: points are ``(..., n)`` arrays and scalar
outputs have shape ``(...)``. Volumes of a body and of its polar come from
the polar-coordinate identities ``|K| = (1/n) int rho^n`` and
``|K°| = (1/n) int h^{-n}`` over the unit sphere.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import ConvexityLost, NonSmoothKind, NotInvariant, NotOnBoundary, ZeroVector
from .geometry import DEFAULT_TOLERANCES, Tolerances
from .polytope import HPolytope, VPolytope, _as_v

__all__ = [
    "StarBody",
    "LpBall",
    "PolytopeBody",
    "PerturbedBody",
    "SectionBody",
    "PolarBody",
    "ScaledBody",
    "SphereQuadrature",
    "sphere_quadrature",
    "unit_ball",
    "lp_ball",
    "radial",
    "gauge",
    "lambda_map",
    "support",
    "volume_star",
    "polar_volume",
    "perturbed_invariant_body",
    "sphere_area",
]

FD_STEP = 1e-5


def sphere_area(n: int) -> float:
    """Surface measure of the unit sphere in R^n."""
    return 2.0 * math.pi ** (n / 2) / math.gamma(n / 2)


def _unit(x):
    x = np.asarray(x, dtype=float)
    r = np.linalg.norm(x, axis=-1)
    if np.any(r == 0):
        raise ZeroVector("zero vector has no direction")
    return x / r[..., None], r


@dataclass(frozen=True)
class SphereQuadrature:
    nodes: np.ndarray
    weights: np.ndarray

    def integrate(self, values) -> float:
        return float(np.dot(self.weights, values))


@lru_cache(maxsize=32)
def _sphere_quadrature(n: int, nodes: int, mc_samples: int) -> SphereQuadrature:
    if n == 1:
        return SphereQuadrature(np.array([[1.0], [-1.0]]), np.ones(2))
    if n == 2:
        m = 4 * nodes
        phi = 2 * np.pi * (np.arange(m) + 0.5) / m
        return SphereQuadrature(np.column_stack([np.cos(phi), np.sin(phi)]), np.full(m, 2 * np.pi / m))
    if n == 3:
        t, wt = np.polynomial.legendre.leggauss(nodes)
        m = 2 * nodes
        phi = 2 * np.pi * (np.arange(m) + 0.5) / m
        tt, pp = np.meshgrid(t, phi, indexing="ij")
        s = np.sqrt(1 - tt**2)
        pts = np.stack([s * np.cos(pp), s * np.sin(pp), tt], axis=-1).reshape(-1, 3)
        w = (wt[:, None] * np.full(m, 2 * np.pi / m)[None, :]).reshape(-1)
        return SphereQuadrature(pts, w)
    rng = np.random.default_rng(20240601 + n)
    half = rng.standard_normal((mc_samples // 2, n))
    half /= np.linalg.norm(half, axis=1, keepdims=True)
    pts = np.vstack([half, -half])
    return SphereQuadrature(pts, np.full(len(pts), sphere_area(n) / len(pts)))


def sphere_quadrature(n: int, tol: Tolerances = DEFAULT_TOLERANCES) -> SphereQuadrature:
    """Product Gauss-Legendre rule for n = 3, trapezoid on the circle for n = 2,
    antipodally symmetrized Monte Carlo with a fixed seed for n >= 4."""
    return _sphere_quadrature(n, tol.sphere_nodes, tol.mc_samples)


@lru_cache(maxsize=16)
def _scan_directions(n: int) -> np.ndarray:
    if n == 2:
        phi = np.linspace(0, 2 * np.pi, 2048, endpoint=False)
        return np.column_stack([np.cos(phi), np.sin(phi)])
    if n == 3:
        m = 6000
        i = np.arange(m) + 0.5
        z = 1 - 2 * i / m
        phi = np.pi * (1 + 5**0.5) * i
        s = np.sqrt(1 - z**2)
        return np.column_stack([s * np.cos(phi), s * np.sin(phi), z])
    rng = np.random.default_rng(7 + n)
    d = rng.standard_normal((40000, n))
    return d / np.linalg.norm(d, axis=1, keepdims=True)


def _tangent_frames(u: np.ndarray) -> np.ndarray:
    """Orthonormal bases (m, n, n-1) of the tangent spaces at unit vectors u."""
    m, n = u.shape
    a = np.broadcast_to(np.eye(n), (m, n, n)).copy()
    # put u first and the canonical axis least aligned with u second
    a[:, :, 0] = u
    worst = np.argsort(np.abs(u), axis=1)
    for j in range(1, n):
        a[:, :, j] = np.eye(n)[worst[:, j - 1]]
    q, _ = np.linalg.qr(a)
    return q[:, :, 1:]


class StarBody:
    """Body star-shaped about the origin with a positive, continuous radial function.

    Subclasses implement ``_radial_unit`` on unit directions; everything
    else has generic numerical fallbacks.
    """

    kind = "star"
    smooth = False

    def __init__(self, dim: int):
        self.dim = int(dim)

    # evaluators -----------------------------------------------------------
    def _radial_unit(self, u: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def radial(self, x) -> np.ndarray:
        u, r = _unit(x)
        return self._radial_unit(u) / r

    def gauge(self, x) -> np.ndarray:
        return 1.0 / self.radial(x)

    def boundary_point(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return self.radial(x)[..., None] * x

    def support(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        flat = y.reshape(-1, self.dim)
        v, r = _unit(flat)
        return (r * self._support_unit_numeric(v)).reshape(y.shape[:-1])

    def grad_gauge(self, x) -> np.ndarray:
        """Gradient of the gauge by central differences."""
        if not self.smooth:
            raise NonSmoothKind(f"{self.kind} body has no smooth gauge")
        x = np.asarray(x, dtype=float)
        h = FD_STEP * np.maximum(np.linalg.norm(x, axis=-1), 1e-300)[..., None]
        out = np.empty_like(x)
        for i in range(self.dim):
            e = np.zeros(self.dim)
            e[i] = 1.0
            out[..., i] = (self.gauge(x + h * e) - self.gauge(x - h * e)) / (2 * h[..., 0])
        return out

    # numerics -------------------------------------------------------------
    def _support_unit_numeric(self, v: np.ndarray) -> np.ndarray:
        """max over boundary points of x . v: dense scan, then Newton ascent on the sphere."""
        d = _scan_directions(self.dim)
        bx = d * self._radial_unit(d)[:, None]
        best = np.empty(len(v), dtype=int)
        for s in range(0, len(v), 2048):
            best[s : s + 2048] = np.argmax(v[s : s + 2048] @ bx.T, axis=1)
        u = d[best]

        def objective(uu, vv):
            uu = uu / np.linalg.norm(uu, axis=-1, keepdims=True)
            return self._radial_unit(uu) * np.einsum("...i,...i->...", uu, vv)

        g0 = objective(u, v)
        k = self.dim - 1
        delta = 2e-4
        for _ in range(8):
            t = _tangent_frames(u)
            f_plus = np.empty((len(u), k))
            f_minus = np.empty((len(u), k))
            for i in range(k):
                f_plus[:, i] = objective(u + delta * t[:, :, i], v)
                f_minus[:, i] = objective(u - delta * t[:, :, i], v)
            grad = (f_plus - f_minus) / (2 * delta)
            hess = np.empty((len(u), k, k))
            for i in range(k):
                hess[:, i, i] = (f_plus[:, i] - 2 * g0 + f_minus[:, i]) / delta**2
                for j in range(i + 1, k):
                    fpp = objective(u + delta * (t[:, :, i] + t[:, :, j]), v)
                    fmm = objective(u - delta * (t[:, :, i] + t[:, :, j]), v)
                    mixed = (fpp - f_plus[:, i] - f_plus[:, j] + 2 * g0 - f_minus[:, i] - f_minus[:, j] + fmm) / (
                        2 * delta**2
                    )
                    hess[:, i, j] = hess[:, j, i] = mixed
            top = np.linalg.eigvalsh(hess)[:, -1]
            shift = np.maximum(0.0, top + 1e-3 * np.abs(g0))
            hess = hess - shift[:, None, None] * np.eye(k)
            step = -np.linalg.solve(hess, grad[..., None])[..., 0]
            size = np.linalg.norm(step, axis=1)
            step *= np.minimum(1.0, 0.2 / np.maximum(size, 1e-300))[:, None]
            improved = np.zeros(len(u), bool)
            for _half in range(6):
                cand = u + np.einsum("mnk,mk->mn", t, step)
                cand /= np.linalg.norm(cand, axis=1, keepdims=True)
                g1 = objective(cand, v)
                ok = (g1 > g0) & ~improved
                u[ok] = cand[ok]
                g0 = np.where(ok, g1, g0)
                improved |= ok
                step[~improved] *= 0.5
                if improved.all():
                    break
            if np.max(np.linalg.norm(step, axis=1)) < 1e-9:
                break
        return g0

    # convenience ----------------------------------------------------------
    def volume(self, tol: Tolerances = DEFAULT_TOLERANCES) -> float:
        return volume_star(self, tol)

    def polar_volume(self, tol: Tolerances = DEFAULT_TOLERANCES) -> float:
        return polar_volume(self, tol)

    def scaled(self, factor: float) -> "StarBody":
        return ScaledBody(self, factor)

    def __repr__(self):
        return f"{type(self).__name__}(dim={self.dim})"


class LpBall(StarBody):
    """Unit ball of the l_p norm, ``1 < p < inf``."""

    kind = "lp_ball"
    smooth = True

    def __init__(self, p: float, dim: int):
        super().__init__(dim)
        p = float(p)
        if not 1.0 < p < math.inf:
            raise ValueError(f"p must lie in (1, inf), got {p}")
        self.p = p
        self.q = p / (p - 1.0)

    def _radial_unit(self, u):
        return 1.0 / np.linalg.norm(u, ord=self.p, axis=-1)

    def radial(self, x):
        x = np.asarray(x, dtype=float)
        nrm = np.linalg.norm(x, ord=self.p, axis=-1)
        if np.any(nrm == 0):
            raise ZeroVector("zero vector has no direction")
        return 1.0 / nrm

    def gauge(self, x):
        return np.linalg.norm(np.asarray(x, dtype=float), ord=self.p, axis=-1)

    def support(self, y):
        y = np.asarray(y, dtype=float)
        if np.any(np.linalg.norm(y, axis=-1) == 0):
            raise ZeroVector("support needs a nonzero direction")
        return np.linalg.norm(y, ord=self.q, axis=-1)

    def grad_gauge(self, x):
        x = np.asarray(x, dtype=float)
        nrm = np.linalg.norm(x, ord=self.p, axis=-1)[..., None]
        return np.sign(x) * (np.abs(x) / nrm) ** (self.p - 1)

    def __repr__(self):
        return f"LpBall(p={self.p:g}, dim={self.dim})"


def unit_ball(dim: int) -> LpBall:
    return LpBall(2.0, dim)


def lp_ball(p: float, dim: int) -> LpBall:
    return LpBall(p, dim)


class PolytopeBody(StarBody):
    """Radial view of a polytope containing the origin in its interior."""

    kind = "polytope"
    smooth = False

    def __init__(self, polytope):
        p = _as_v(polytope)
        super().__init__(p.dim)
        if np.any(p.offsets <= p.tol_geom * p.scale):
            from .errors import OriginNotInterior

            raise OriginNotInterior("origin must be interior to a polytope-backed body")
        self.polytope = p

    def _radial_unit(self, u):
        a = u @ self.polytope.normals.T
        with np.errstate(divide="ignore"):
            ratio = np.where(a > 0, self.polytope.offsets / np.where(a > 0, a, 1.0), np.inf)
        return ratio.min(axis=-1)

    def support(self, y):
        y = np.asarray(y, dtype=float)
        if np.any(np.linalg.norm(y, axis=-1) == 0):
            raise ZeroVector("support needs a nonzero direction")
        return (y @ self.polytope.vertices.T).max(axis=-1)


class PerturbedBody(StarBody):
    """``rho(u) = rho_base(u) * (1 + eps * f(u))`` with ``f`` averaged over a finite group."""

    kind = "perturbed"

    def __init__(self, base: StarBody, matrices, eps: float, seed: int, bumps: int = 4, concentration: float = 3.0):
        super().__init__(base.dim)
        self.base = base
        self.eps = float(eps)
        self.seed = int(seed)
        self.smooth = base.smooth
        rng = np.random.default_rng(self.seed)
        centers = rng.standard_normal((bumps, self.dim))
        centers /= np.linalg.norm(centers, axis=1, keepdims=True)
        coeffs = rng.uniform(-1.0, 1.0, bumps)
        mats = np.asarray(matrices, dtype=float)
        # f(u) = mean_g sum_j c_j exp(kappa (g u . w_j - 1)); g u . w = u . g^T w
        self._centers = np.einsum("gji,bj->gbi", mats, centers).reshape(-1, self.dim)
        self._coeffs = np.tile(coeffs, len(mats)) / len(mats)
        self._kappa = float(concentration)
        probe = _scan_directions(self.dim)
        peak = np.abs(self._profile(probe)).max()
        self._coeffs = self._coeffs / max(peak, 1e-300)

    def _profile(self, u):
        return np.exp(self._kappa * (u @ self._centers.T - 1.0)) @ self._coeffs

    def _radial_unit(self, u):
        return self.base._radial_unit(u) * (1.0 + self.eps * self._profile(u))

    def __repr__(self):
        return f"PerturbedBody(base={self.base!r}, eps={self.eps:g}, seed={self.seed})"


class SectionBody(StarBody):
    """``K ∩ span(B)`` written in the orthonormal coordinates given by the columns of ``B``."""

    kind = "section"

    def __init__(self, parent: StarBody, basis):
        basis = np.asarray(basis, dtype=float)
        super().__init__(basis.shape[1])
        self.parent = parent
        self.basis = basis
        self.smooth = parent.smooth

    def _radial_unit(self, u):
        return self.parent._radial_unit(u @ self.basis.T)

    def grad_gauge(self, x):
        if not self.smooth:
            raise NonSmoothKind("section of a non-smooth body")
        x = np.asarray(x, dtype=float)
        return self.parent.grad_gauge(x @ self.basis.T) @ self.basis


class PolarBody(StarBody):
    """Polar body about the origin: radial function ``1 / h_K``."""

    kind = "polar"

    def __init__(self, parent: StarBody):
        super().__init__(parent.dim)
        self.parent = parent
        self.smooth = parent.smooth

    def _radial_unit(self, u):
        return 1.0 / self.parent.support(u)

    def support(self, y):
        return 1.0 / self.parent.radial(y)


class ScaledBody(StarBody):
    """Dilate ``factor * K``."""

    kind = "scaled"

    def __init__(self, parent: StarBody, factor: float):
        super().__init__(parent.dim)
        if not factor > 0:
            raise ValueError("dilation factor must be positive")
        self.parent = parent
        self.factor = float(factor)
        self.smooth = parent.smooth

    def _radial_unit(self, u):
        return self.factor * self.parent._radial_unit(u)

    def support(self, y):
        return self.factor * self.parent.support(y)

    def grad_gauge(self, x):
        x = np.asarray(x, dtype=float)
        return self.parent.grad_gauge(x / self.factor) / self.factor


# module-level operations ---------------------------------------------------


def radial(body: StarBody, x) -> np.ndarray:
    return body.radial(x)


def gauge(body: StarBody, x) -> np.ndarray:
    return body.gauge(x)


def support(body: StarBody, y) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    if np.any(np.linalg.norm(y, axis=-1) == 0):
        raise ZeroVector("support needs a nonzero direction")
    return body.support(y)


def lambda_map(body: StarBody, x, tol: Tolerances = DEFAULT_TOLERANCES) -> np.ndarray:
    """Gradient of the gauge at boundary points; lands on the boundary of the polar."""
    if not body.smooth:
        raise NonSmoothKind(f"{body.kind} body has no smooth gauge")
    x = np.asarray(x, dtype=float)
    mu = body.gauge(x)
    if np.any(np.abs(mu - 1.0) > tol.tol_quad):
        raise NotOnBoundary(f"gauge values {np.atleast_1d(mu)[:3]} differ from 1")
    return body.grad_gauge(x)


def volume_star(body: StarBody, tol: Tolerances = DEFAULT_TOLERANCES) -> float:
    q = sphere_quadrature(body.dim, tol)
    return q.integrate(body._radial_unit(q.nodes) ** body.dim) / body.dim


def polar_volume(body: StarBody, tol: Tolerances = DEFAULT_TOLERANCES) -> float:
    q = sphere_quadrature(body.dim, tol)
    h = body.support(q.nodes)
    if np.any(h <= 0):
        from .errors import OriginNotInterior

        raise OriginNotInterior("support function must be positive")
    return q.integrate(h ** (-body.dim)) / body.dim


def check_convexity(body: StarBody, pairs: int = 10_000, seed: int = 0, tol: float = 1e-10) -> float:
    """Largest midpoint-convexity violation ``mu((p+q)/2) - 1`` over sampled boundary pairs.

    Half of the pairs are far apart, half are within a small angle of each
    other so that local concavity is also detected.
    """
    rng = np.random.default_rng(seed)
    n = body.dim
    u = rng.standard_normal((pairs, n))
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    v = rng.standard_normal((pairs, n))
    near = pairs // 2
    v[:near] = u[:near] + rng.uniform(0.02, 0.3, (near, 1)) * v[:near] / np.linalg.norm(v[:near], axis=1, keepdims=True)
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    antipodal = np.abs(np.einsum("ij,ij->i", u, v) + 1) < 1e-6
    p = body.boundary_point(u[~antipodal])
    q = body.boundary_point(v[~antipodal])
    mid = 0.5 * (p + q)
    small = np.linalg.norm(mid, axis=1) < 1e-9
    return float(np.max(body.gauge(mid[~small]) - 1.0))


def perturbed_invariant_body(base: StarBody, group, eps: float, seed: int, bumps: int = 4) -> StarBody:
    """Group-invariant smooth perturbation of an invariant base body.

    ``group`` is anything with a ``matrices`` attribute (an ``(m, n, n)``
    array of orthogonal matrices closed under products).
    """
    if eps == 0:
        return base
    mats = np.asarray(group.matrices)
    rng = np.random.default_rng(seed + 1)
    u = rng.standard_normal((200, base.dim))
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    ref = base._radial_unit(u)
    resid = max(float(np.abs(base._radial_unit(u @ g.T) - ref).max()) for g in mats)
    if resid > 1e-10:
        raise NotInvariant(f"base body is not invariant under the group (residual {resid:.2e})")
    body = PerturbedBody(base, mats, eps, seed, bumps=bumps)
    if np.min(1.0 + body.eps * body._profile(_scan_directions(body.dim))) <= 0:
        raise ConvexityLost("perturbation makes the radial function non-positive")
    worst = check_convexity(body, seed=seed)
    if worst > 1e-12:
        raise ConvexityLost(f"sampled midpoint convexity fails by {worst:.3e}")
    return body
