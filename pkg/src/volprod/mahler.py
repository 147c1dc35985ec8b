"""Volume products, Santaló points and the Mahler-type lower bounds.

The polar volume ``f(z) = |(K - z)°|`` is strictly convex in the center
``z`` with

    grad f = (n+1) int_P y dy,    Hess f = (n+1)(n+2) int_P y y^T dy,

where ``P = (K - z)°``.  Both moments are exact for polytopes (fan
triangulation of the polar) and quadrature sums for star bodies, so the
Santaló point is found by damped Newton steps ``-M2^{-1} M1 / (n+2)``.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.optimize import minimize

from .errors import CenterNotInterior, NonConvergence, NotInvariant, ScalingRequired
from .geometry import DEFAULT_TOLERANCES, Tolerances, simplex_vertices
from .polytope import HPolytope, VPolytope, _as_v, polar_dual, polar_moments
from .polytope import volume as polytope_volume
from .signed_volume import cone_volume
from .starbody import PolarBody, PolytopeBody, ScaledBody, StarBody, polar_volume, sphere_quadrature, volume_star
from .symmetry import GroupSpec, generate, is_invariant, random_invariant_body

__all__ = [
    "VolumeProductResult",
    "BoundCheck",
    "FundamentalDomainResult",
    "santalo_point",
    "volume_product",
    "mahler_bound",
    "bound_for",
    "check_bound",
    "fundamental_domain_product",
    "verify_bound",
]

DEFAULT_MARGIN_TOL = 1e-6


@dataclass(frozen=True)
class VolumeProductResult:
    body_id: str
    santalo_point: np.ndarray
    volume: float
    polar_volume_at_santalo: float
    product: float
    iterations: int = 0
    unimodal: bool = True
    path: str = "exact"


@dataclass(frozen=True)
class BoundCheck:
    name: str
    bound: float
    product: float
    margin: float
    passed: bool
    tolerance: float
    index: int = 0
    santalo_point: np.ndarray | None = field(default=None, repr=False)


@dataclass(frozen=True)
class FundamentalDomainResult:
    piece_volume: float
    piece_polar_volume: float
    volume: float
    polar_volume: float
    factor: float
    expected: int
    deviation: float
    scale: float
    path: str


# polar-volume objectives ------------------------------------------------------


class _PolytopeObjective:
    path = "exact"

    def __init__(self, p: VPolytope):
        self.p = p
        self.dim = p.dim
        self.scale = p.scale

    def start(self):
        return self.p.centroid()

    def moments(self, z):
        return polar_moments(self.p, z)


class _StarObjective:
    path = "quadrature"

    def __init__(self, body: StarBody, tol: Tolerances):
        q = sphere_quadrature(body.dim, tol)
        self.nodes, self.weights = q.nodes, q.weights
        self.h = body.support(q.nodes)
        self.dim = body.dim
        self.scale = float(self.h.max())

    def start(self):
        return np.zeros(self.dim)

    def moments(self, z):
        n = self.dim
        g = self.h - self.nodes @ z
        if np.any(g <= 0):
            raise CenterNotInterior("center left the interior")
        w = self.weights
        vol = float(w @ g ** (-n)) / n
        m1 = (w * g ** (-(n + 1))) @ self.nodes / (n + 1)
        m2 = np.einsum("k,ki,kj->ij", w * g ** (-(n + 2)), self.nodes, self.nodes) / (n + 2)
        return vol, m1, m2


def _objective(body, tol):
    if isinstance(body, (VPolytope, HPolytope)):
        return _PolytopeObjective(_as_v(body))
    if isinstance(body, PolytopeBody):
        return _PolytopeObjective(body.polytope)
    if isinstance(body, StarBody):
        return _StarObjective(body, tol)
    raise TypeError(f"unsupported body type {type(body).__name__}")


def _safe_volume(obj, z):
    try:
        return obj.moments(z)[0]
    except CenterNotInterior:
        return math.inf


def _newton(obj, z, max_iter: int = 60):
    n = obj.dim
    f, m1, m2 = obj.moments(z)
    for it in range(1, max_iter + 1):
        step = -np.linalg.solve(m2, m1) / (n + 2)
        t = 1.0
        while True:
            cand = z + t * step
            try:
                fc, c1, c2 = obj.moments(cand)
            except CenterNotInterior:
                fc = math.inf
            if fc <= f * (1 + 1e-15):
                break
            t *= 0.5
            if t < 1e-12:
                return z, f, it, False
        moved = t * np.linalg.norm(step)
        z, f, m1, m2 = cand, fc, c1, c2
        if moved <= 1e-13 * obj.scale:
            return z, f, it, True
    return z, f, max_iter, False


def _nelder_mead(obj, z0):
    res = minimize(
        lambda z: math.log(_safe_volume(obj, z)) if np.isfinite(_safe_volume(obj, z)) else 1e300,
        z0,
        method="Nelder-Mead",
        options={"xatol": 1e-12 * obj.scale, "fatol": 1e-15, "maxiter": 20000, "adaptive": True},
    )
    return res.x, float(math.exp(res.fun)), int(res.nit), bool(res.success)


def _unimodal(obj, z, f, seed: int = 0, directions: int = 4, points: int = 9) -> bool:
    """Sampled segment check: values along lines through ``z`` rise away from it."""
    rng = np.random.default_rng(seed)
    radius = 1e-2 * obj.scale
    for _ in range(directions):
        d = rng.standard_normal(obj.dim)
        d /= np.linalg.norm(d)
        s = np.linspace(-radius, radius, points)
        vals = np.array([_safe_volume(obj, z + si * d) for si in s])
        mid = points // 2
        if np.min(vals) < f * (1 - 1e-12):
            return False
        if np.any(np.diff(vals[: mid + 1]) > 1e-12 * f) or np.any(np.diff(vals[mid:]) < -1e-12 * f):
            return False
    return True


def _solve(body, tol):
    obj = _objective(body, tol)
    z0 = obj.start()
    try:
        z, f, it, ok = _newton(obj, z0)
    except np.linalg.LinAlgError:
        ok = False
    if not ok:
        z, f, it, ok = _nelder_mead(obj, z0)
        if not ok:
            raise NonConvergence(f"Santalo solver did not converge after {it} iterations")
    return obj, z, f, it


def santalo_point(body, tol: Tolerances = DEFAULT_TOLERANCES) -> np.ndarray:
    """Interior point minimizing ``|K^z|``."""
    return _solve(body, tol)[1]


def volume_product(body, tol: Tolerances = DEFAULT_TOLERANCES, body_id: str = "") -> VolumeProductResult:
    """``|K| |K^s|`` at the Santaló point ``s``."""
    obj, z, f, it = _solve(body, tol)
    if obj.path == "exact":
        vol = polytope_volume(obj.p)
    else:
        vol = volume_star(body, tol)
    return VolumeProductResult(
        body_id or repr(body), z, vol, f, vol * f, iterations=it, unimodal=_unimodal(obj, z, f), path=obj.path
    )


def mahler_bound(n: int, kind: str = "symmetric", exact: bool = False):
    """``4^n / n!`` (symmetric) or ``(n+1)^(n+1) / (n!)^2`` (nonsymmetric)."""
    if int(n) != n or n < 1:
        raise ValueError("n must be a positive integer")
    n = int(n)
    if kind == "symmetric":
        val = Fraction(4**n, math.factorial(n))
    elif kind == "nonsymmetric":
        val = Fraction((n + 1) ** (n + 1), math.factorial(n) ** 2)
    else:
        raise ValueError(f"kind must be 'symmetric' or 'nonsymmetric', got {kind!r}")
    return val if exact else float(val)


def bound_for(spec: GroupSpec) -> float:
    return mahler_bound(spec.dim, "nonsymmetric" if spec.is_simplex else "symmetric")


def _bound_name(spec: GroupSpec) -> str:
    return "simplex-bound" if spec.is_simplex else "mahler-diamond-bound"


def check_bound(body, spec: GroupSpec, tolerance: float = DEFAULT_MARGIN_TOL, index: int = 0,
                tol: Tolerances = DEFAULT_TOLERANCES) -> BoundCheck:
    res = volume_product(body, tol)
    bound = bound_for(spec)
    margin = res.product - bound
    return BoundCheck(_bound_name(spec), bound, res.product, margin, margin >= -tolerance, tolerance, index,
                      res.santalo_point)


def _verify_one(args):
    spec, seed, index, generators_count, tolerance = args
    rng = np.random.default_rng([seed, index])
    body = random_invariant_body(spec, seed, generators_count, rng=rng)
    return check_bound(body, spec, tolerance, index)


def verify_bound(spec: GroupSpec, samples: int, seed: int = 0, generators_count: int = 3, workers: int = 1,
                 tolerance: float = DEFAULT_MARGIN_TOL) -> list[BoundCheck]:
    """Volume-product bound checks on seeded random invariant orbit hulls.

    Sample ``i`` uses the generator ``default_rng([seed, i])``, so results do
    not depend on ``workers``.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    jobs = [(spec, seed, i, generators_count, tolerance) for i in range(samples)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_verify_one, jobs))
    return [_verify_one(j) for j in jobs]


def _group_frame(spec: GroupSpec) -> np.ndarray:
    return simplex_vertices(spec.dim)[: spec.dim] if spec.is_simplex else np.eye(spec.dim)


def _cone_piece(p: VPolytope, frame: np.ndarray) -> VPolytope:
    """``P ∩ pos(frame)``; the cone is ``A^{-1} x >= 0`` with ``A`` the frame as columns."""
    inv = np.linalg.inv(frame.T)
    normals = np.vstack([p.normals, -inv / np.linalg.norm(inv, axis=1, keepdims=True)])
    offsets = np.concatenate([p.offsets, np.zeros(len(inv))])
    return HPolytope(normals, offsets, tol_geom=p.tol_geom).to_vpolytope()


def fundamental_domain_product(body, spec: GroupSpec, autoscale: bool = True,
                               tol: Tolerances = DEFAULT_TOLERANCES) -> FundamentalDomainResult:
    """Compare ``|K||K°|`` with ``|K~||K~°|`` for the group's fundamental cone.

    ``K~ = K ∩ pos(frame)`` and ``K~° = K° ∩ pos(frame)`` with frame
    ``v_1..v_n`` (simplex) or ``e_1..e_n`` (cross-polytope).  The expected
    ratio is ``(n+1)^2`` or ``4^n``.  The body is dilated so that the frame
    points lie on its boundary unless ``autoscale`` is false, in which case
    :class:`ScalingRequired` is raised.
    """
    group = generate(spec)
    ok, resid = is_invariant(body, group)
    if not ok:
        raise NotInvariant(f"body is not invariant under {spec} (residual {resid:.2e})")
    frame = _group_frame(spec)
    expected = (spec.dim + 1) ** 2 if spec.is_simplex else 4**spec.dim
    exact = isinstance(body, (VPolytope, HPolytope, PolytopeBody))
    if exact:
        p = body.polytope if isinstance(body, PolytopeBody) else _as_v(body)
        rho = float(PolytopeBody(p).radial(frame[0]))
    else:
        rho = float(body.radial(frame[0]))
    if abs(rho - 1.0) > tol.tol_geom:
        if not autoscale:
            raise ScalingRequired(f"frame points are not on the boundary (radial value {rho:.6g})")
    scale = 1.0 / rho
    if exact:
        p = p * scale if abs(scale - 1) > 0 else p
        pol = polar_dual(p)
        vol, pvol = polytope_volume(p), polytope_volume(pol)
        piece, ppiece = polytope_volume(_cone_piece(p, frame)), polytope_volume(_cone_piece(pol, frame))
        path = "exact"
    else:
        k = ScaledBody(body, scale) if abs(scale - 1) > 0 else body
        vol, pvol = volume_star(k, tol), polar_volume(k, tol)
        piece, ppiece = cone_volume(k, *frame, tol=tol), cone_volume(PolarBody(k), *frame, tol=tol)
        path = "quadrature"
    factor = vol * pvol / (piece * ppiece)
    return FundamentalDomainResult(piece, ppiece, vol, pvol, factor, expected, abs(factor / expected - 1), scale, path)
