"""Signed-volume vectors of boundary patches and the estimates built on them.

A patch ``C(a_1..a_k)`` is the radial image on the boundary of ``K`` of the
simplex ``conv{a_1..a_k}``, parametrized by
``s(t) = a_1 + t_1 (a_2 - a_1) + ... + t_{k-1} (a_k - a_1)`` over the
standard simplex ``D``.  All integrals over ``D`` use
:func:`volprod.geometry.integrate_simplex`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DependentVectors, HypothesisViolated, NonSmoothKind, PointOutside
from .geometry import DEFAULT_TOLERANCES, Tolerances, generalized_cross, integrate_simplex, orthonormal_basis
from .starbody import PolarBody, SectionBody, StarBody

__all__ = [
    "Patch",
    "PatchVector",
    "SignedEstimate",
    "DualityIdentity",
    "BFResult",
    "IkChain",
    "patch_vector",
    "image_patch_vector",
    "cone_volume",
    "image_cone_volume",
    "signed_estimate_check",
    "duality_identity",
    "bf_factor",
    "bf_inequality",
    "equiangular_frame",
    "ik_chain",
    "ik_chain_bound",
]

# parameter-space step for derivatives of the image parametrization
IMAGE_FD_STEP = 1e-4


@dataclass(frozen=True)
class Patch:
    body: StarBody
    spanning: np.ndarray
    orientation: int = 1

    def __post_init__(self):
        a = np.atleast_2d(np.asarray(self.spanning, dtype=float))
        object.__setattr__(self, "spanning", a)
        _check_independent(a)

    @property
    def k(self) -> int:
        return len(self.spanning)

    def parameter(self, t) -> np.ndarray:
        """Points ``s(t)`` of the spanning simplex."""
        a = self.spanning
        t = np.asarray(t, dtype=float)
        return a[0] + t @ (a[1:] - a[0])

    def points(self, t) -> np.ndarray:
        """Boundary points ``rho(s) s`` of the patch."""
        return self.body.boundary_point(self.parameter(t))


@dataclass(frozen=True)
class PatchVector:
    vector: np.ndarray
    patch: Patch
    error: float


@dataclass(frozen=True)
class SignedEstimate:
    lhs: float
    rhs: float
    passed: bool
    vectors: np.ndarray = field(repr=False)


@dataclass(frozen=True)
class DualityIdentity:
    lhs: float
    rhs: float
    residual: float
    patch: np.ndarray = field(repr=False)
    image: np.ndarray = field(repr=False)


@dataclass(frozen=True)
class BFResult:
    lhs: float
    rhs: float
    passed: bool
    factor: float
    k: int
    alpha: float


@dataclass(frozen=True)
class IkChain:
    values: tuple
    factors: tuple
    passes: tuple
    chain_bound: float
    scale: float

    @property
    def passed(self) -> bool:
        return all(self.passes)


def _check_independent(a: np.ndarray, tol: float = DEFAULT_TOLERANCES.tol_geom) -> float:
    """Return ``sqrt(det(A^T A))`` for the rows of ``a``; raise if they are dependent."""
    norms = np.linalg.norm(a, axis=1)
    if np.any(norms == 0):
        raise DependentVectors("zero spanning vector")
    gram = np.linalg.det(a @ a.T)
    if gram <= tol * np.prod(norms**2):
        raise DependentVectors("spanning vectors are linearly dependent")
    return math.sqrt(gram)


def _frame(vectors) -> np.ndarray:
    if len(vectors) == 1 and np.ndim(vectors[0]) == 2:
        vectors = vectors[0]
    return np.atleast_2d(np.asarray(vectors, dtype=float))


def patch_vector(body: StarBody, *vectors, orientation: int = 1, tol: Tolerances = DEFAULT_TOLERANCES) -> PatchVector:
    """Signed-volume vector of the patch ``C(a_1..a_{n-1})`` on the boundary of ``body``.

    Equals ``(1/(n-1)) * (int_D rho^{n-1}(s(t)) dt) * N`` where ``N`` is the
    generalized cross product of the spanning vectors.  ``orientation=-1``
    gives the reversed patch ``-C``.
    """
    a = _frame(vectors)
    n = body.dim
    if a.shape != (n - 1, n):
        raise ValueError(f"need {n - 1} vectors in R^{n}, got shape {a.shape}")
    if orientation not in (1, -1):
        raise ValueError("orientation must be +1 or -1")
    patch = Patch(body, a, orientation)
    integral, err = integrate_simplex(lambda t: body.radial(patch.parameter(t)) ** (n - 1), n - 2, tol.quad_subdivisions)
    normal = generalized_cross(*a)
    vec = orientation * float(integral) / (n - 1) * normal
    return PatchVector(vec, patch, err * float(np.linalg.norm(normal)) / (n - 1))


def _image_map(body: StarBody, patch: Patch, basis=None):
    """``t -> Lambda(rho(s) s)``, optionally in coordinates of an orthonormal basis."""
    if not body.smooth:
        raise NonSmoothKind(f"{body.kind} body has no Lambda map")

    def r(t):
        # the gauge gradient is homogeneous of degree 0, so it can be taken at s(t)
        g = body.grad_gauge(patch.parameter(t))
        return g if basis is None else g @ basis

    return r


def _image_jacobian(r, t, m):
    """Columns ``r(t), dr/dt_1, ..., dr/dt_m`` by central differences; shape ``(N, d, m+1)``."""
    h = IMAGE_FD_STEP
    cols = [r(t)]
    for j in range(m):
        e = np.zeros(m)
        e[j] = h
        cols.append((r(t + e) - r(t - e)) / (2 * h))
    return np.stack(cols, axis=-1)


def image_patch_vector(body: StarBody, *vectors, tol: Tolerances = DEFAULT_TOLERANCES) -> PatchVector:
    """Signed-volume vector of ``Lambda(C(a_1..a_{n-1}))`` on the boundary of the polar."""
    a = _frame(vectors)
    n = body.dim
    if a.shape != (n - 1, n):
        raise ValueError(f"need {n - 1} vectors in R^{n}, got shape {a.shape}")
    patch = Patch(body, a)
    r = _image_map(body, patch)

    def integrand(t):
        jac = _image_jacobian(r, t, n - 2)
        return generalized_cross(*np.moveaxis(jac, -1, 0))

    integral, err = integrate_simplex(integrand, n - 2, tol.quad_subdivisions)
    return PatchVector(np.asarray(integral) / (n - 1), patch, err / (n - 1))


def cone_volume(body: StarBody, *vectors, tol: Tolerances = DEFAULT_TOLERANCES, with_error: bool = False):
    """k-volume of ``K ∩ pos{a_1..a_k}`` inside ``span{a_1..a_k}``.

    ``|det_k A| * int_D rho^k(s(t)) / k dt`` with ``det_k A = sqrt(det(A^T A))``.
    """
    a = _frame(vectors)
    k = len(a)
    det_k = _check_independent(a)
    patch = Patch(body, a)
    integral, err = integrate_simplex(lambda t: body.radial(patch.parameter(t)) ** k / k, k - 1, tol.quad_subdivisions)
    val = det_k * float(integral)
    return (val, det_k * err) if with_error else val


def image_cone_volume(
    body: StarBody, *vectors, project: bool = False, tol: Tolerances = DEFAULT_TOLERANCES, with_error: bool = False
):
    """k-volume of the cone ``o * Lambda(C(a_1..a_k))``.

    With ``project=True`` the image is first projected orthogonally onto
    ``span{a_1..a_k}``; otherwise the volume is the k-dimensional measure of
    the cone surface, which is the cone volume whenever the image lies in a
    k-plane.
    """
    a = _frame(vectors)
    k = len(a)
    _check_independent(a)
    patch = Patch(body, a)
    if k == 1:
        lam = body.grad_gauge(patch.points(np.zeros((1, 0))))[0]
        val = float(abs(lam @ orthonormal_basis(a)[:, 0])) if project else float(np.linalg.norm(lam))
        return (val, 0.0) if with_error else val
    basis = orthonormal_basis(a) if project else None
    r = _image_map(body, patch, basis)

    def integrand(t):
        jac = _image_jacobian(r, t, k - 1)
        if project:
            return np.abs(np.linalg.det(jac)) / k
        gram = np.einsum("nia,nib->nab", jac, jac)
        return np.sqrt(np.maximum(np.linalg.det(gram), 0.0)) / k

    integral, err = integrate_simplex(integrand, k - 1, tol.quad_subdivisions)
    return (float(integral), err) if with_error else float(integral)


def signed_estimate_check(body: StarBody, spanning, x, tol: Tolerances = DEFAULT_TOLERANCES) -> SignedEstimate:
    """Compare ``(sum_i (-1)^(i-1) C_i) . x / n`` with the volume of ``K ∩ pos{a_1..a_n}``.

    ``C_i`` is the patch vector of the face omitting ``a_i``.  The alternating
    sum is multiplied by ``sign det(a_1..a_n)`` so that it is the outward
    oriented boundary of the patch for either handedness of the frame.
    """
    a = _frame([spanning])
    n = body.dim
    if a.shape != (n, n):
        raise ValueError(f"need {n} vectors in R^{n}")
    _check_independent(a)
    x = np.asarray(x, dtype=float)
    if np.linalg.norm(x) > 0 and float(body.gauge(x)) > 1.0 + tol.tol_quad:
        raise PointOutside("test point lies outside the body")
    vecs = np.array([patch_vector(body, *np.delete(a, i, axis=0), tol=tol).vector for i in range(n)])
    signs = (-1.0) ** np.arange(n)
    total = np.sign(np.linalg.det(a)) * (signs @ vecs)
    lhs = float(total @ x) / n
    rhs = cone_volume(body, *a, tol=tol)
    return SignedEstimate(lhs, rhs, lhs <= rhs + tol.tol_quad, vecs)


def duality_identity(body: StarBody, *vectors, tol: Tolerances = DEFAULT_TOLERANCES) -> DualityIdentity:
    """Both sides of ``C . Lambda(C) = |o*C| |o*pi_H Lambda(C)|`` for ``k = n-1`` patches.

    The left side pairs the patch vector with the image patch vector.  The
    right side multiplies the primal cone volume by the polar-side volume,
    computed in ``H = span{a_i}`` from the section ``L = K ∩ H``: in the
    plane case (``n = 3``) as the sector of ``L°`` between the rays through
    ``Lambda_L`` of the patch endpoints, otherwise from the projected image
    parametrization.
    """
    a = _frame(vectors)
    n = body.dim
    if not body.smooth:
        raise NonSmoothKind(f"{body.kind} body has no Lambda map")
    pv = patch_vector(body, *a, tol=tol)
    iv = image_patch_vector(body, *a, tol=tol)
    lhs = float(pv.vector @ iv.vector)
    primal = cone_volume(body, *a, tol=tol)
    if n == 3:
        basis = orthonormal_basis(a)
        section = SectionBody(body, basis)
        ends = body.boundary_point(a) @ basis
        lam_ends = section.grad_gauge(ends)
        polar_side = cone_volume(PolarBody(section), *lam_ends, tol=tol)
    else:
        polar_side = image_cone_volume(body, *a, project=True, tol=tol)
    rhs = primal * polar_side
    return DualityIdentity(lhs, rhs, abs(lhs - rhs), pv.vector, iv.vector)


def bf_factor(alpha: float, k: int) -> float:
    return (1.0 - alpha) / (k * (1.0 + (k - 2) * alpha))


def equiangular_frame(n: int, alpha: float) -> np.ndarray:
    """``n`` unit vectors in R^n with pairwise inner products ``alpha`` (rows)."""
    if not -1.0 / (n - 1) < alpha < 1.0:
        raise ValueError("alpha must lie in (-1/(n-1), 1) for a real frame")
    gram = (1.0 - alpha) * np.eye(n) + alpha * np.ones((n, n))
    return np.linalg.cholesky(gram)


def _faces(a: np.ndarray):
    return [np.delete(a, i, axis=0) for i in range(len(a))]


def _check_bf_hypotheses(body, a, tol, samples=9):
    limit = 10 * tol.tol_quad
    faces = _faces(a)
    prim = np.array([cone_volume(body, *f, tol=tol) for f in faces])
    if np.ptp(prim) > limit * max(1.0, np.abs(prim).max()):
        raise HypothesisViolated(1, f"face cone volumes differ by {np.ptp(prim):.2e}")
    m = len(a) - 2
    if m == 0:
        t = np.zeros((1, 0))
    else:
        t = np.random.default_rng(0).dirichlet(np.ones(m + 1), samples)[:, :m]
    worst = 0.0
    for f in faces:
        basis = orthonormal_basis(f)
        lam = body.grad_gauge(Patch(body, f).parameter(t))
        off = lam - (lam @ basis) @ basis.T
        worst = max(worst, float((np.linalg.norm(off, axis=1) / np.linalg.norm(lam, axis=1)).max()))
    if worst > limit:
        raise HypothesisViolated(2, f"Lambda image leaves its face span by {worst:.2e}")
    pol = np.array([image_cone_volume(body, *f, tol=tol) for f in faces])
    if np.ptp(pol) > limit * max(1.0, np.abs(pol).max()):
        raise HypothesisViolated(3, f"face image volumes differ by {np.ptp(pol):.2e}")


def bf_inequality(body: StarBody, alpha: float, k: int, frame, tol: Tolerances = DEFAULT_TOLERANCES) -> BFResult:
    """Check ``|o*C_k| |o*pi_H Lambda(C_k)| >= factor * |o*C_{k-1}| |o*Lambda(C_{k-1})|``.

    ``frame`` holds at least ``k`` vectors with unit length and pairwise
    inner products ``alpha``; only the first ``k`` are used.  The three
    hypotheses on the faces are checked numerically first.
    """
    a = np.atleast_2d(np.asarray(frame, dtype=float))[:k]
    if not 2 <= k <= body.dim or len(a) < k:
        raise ValueError(f"need 2 <= k <= n and at least k frame vectors, got k={k}")
    if not abs(alpha) < 1 or (k > 1 and abs(alpha + 1.0 / (k - 1)) < 1e-12):
        raise ValueError("alpha must satisfy |alpha| < 1 and alpha != -1/(k-1)")
    gram = a @ a.T
    expect = (1.0 - alpha) * np.eye(k) + alpha * np.ones((k, k))
    if np.abs(gram - expect).max() > tol.tol_geom * 1e3:
        raise ValueError("frame inner products do not match alpha")
    if not body.smooth:
        raise NonSmoothKind(f"{body.kind} body has no Lambda map")
    _check_bf_hypotheses(body, a, tol)
    lhs = cone_volume(body, *a, tol=tol) * image_cone_volume(body, *a, project=True, tol=tol)
    sub = a[: k - 1]
    factor = bf_factor(alpha, k)
    rhs = factor * cone_volume(body, *sub, tol=tol) * image_cone_volume(body, *sub, tol=tol)
    return BFResult(lhs, rhs, lhs >= rhs - tol.tol_quad, factor, k, float(alpha))


def ik_chain_bound(n: int, family: str) -> float:
    """Lower bound for the last chain value implied by ``I_1 = 1``."""
    if family.endswith("simplex"):
        return 2 * n * (n + 1) ** (n - 2) / math.factorial(n) ** 2
    return 1.0 / math.factorial(n - 1)


def ik_chain(body: StarBody, spec, tol: Tolerances = DEFAULT_TOLERANCES) -> IkChain:
    """Products ``I_k`` of primal and polar cone volumes along the group frame.

    The frame is ``v_1..v_{n-1}`` (simplex families) or ``e_1..e_{n-1}``
    (cross-polytope families).  The body is dilated so that the frame points
    lie on its boundary.  The last level uses the polar image projected onto
    the frame span.
    """
    from .geometry import simplex_vertices
    from .starbody import ScaledBody

    n = body.dim
    if spec.dim != n:
        raise ValueError("group and body dimensions differ")
    if n < 3:
        raise ValueError("the chain needs n >= 3")
    frame = simplex_vertices(n)[: n - 1] if spec.is_simplex else np.eye(n)[: n - 1]
    scale = 1.0 / float(body.radial(frame[0]))
    k_body = ScaledBody(body, scale) if abs(scale - 1.0) > 1e-15 else body
    alpha = -1.0 / n if spec.is_simplex else 0.0
    values = [float(k_body.radial(frame[0]) * np.linalg.norm(frame[0])) * image_cone_volume(k_body, frame[0], tol=tol)]
    factors, passes = [], []
    for k in range(2, n):
        sub = frame[:k]
        project = k == n - 1
        val = cone_volume(k_body, *sub, tol=tol) * image_cone_volume(k_body, *sub, project=project, tol=tol)
        fac = bf_factor(alpha, k)
        factors.append(fac)
        passes.append(val >= fac * values[-1] - tol.tol_quad)
        values.append(val)
    chain = values[0] * float(np.prod(factors))
    return IkChain(tuple(values), tuple(factors), tuple(passes), chain, scale)
