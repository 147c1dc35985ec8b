"""Linear-algebra primitives and the tolerance policy shared by every module."""

from __future__ import annotations

import itertools
import math
import os
from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np

from .errors import DegenerateInput

__all__ = [
    "Tolerances",
    "DEFAULT_TOLERANCES",
    "tolerances_from_env",
    "simplex_vertices",
    "generalized_cross",
    "determinant",
    "orthonormal_basis",
    "simplex_rule",
]

TOLERANCE_ENV = "VOLPROD_TOLERANCE_PROFILE"


@dataclass(frozen=True)
class Tolerances:
    """Numerical tolerances.

    ``tol_orth`` and ``tol_geom`` govern exact-arithmetic-grade checks
    (orthogonality, facet membership); ``tol_quad`` governs anything computed
    by quadrature.
    """

    tol_orth: float = 1e-12
    tol_geom: float = 1e-9
    tol_quad: float = 1e-4
    quad_subdivisions: int = 6
    mc_samples: int = 200_000
    sphere_nodes: int = 64

    def __post_init__(self):
        for name in ("tol_orth", "tol_geom", "tol_quad"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.quad_subdivisions < 1:
            raise ValueError("quad_subdivisions must be >= 1")
        if self.mc_samples < 1 or self.sphere_nodes < 4:
            raise ValueError("sample counts must be positive")

    def with_(self, **kw) -> "Tolerances":
        return replace(self, **kw)


DEFAULT_TOLERANCES = Tolerances()

PROFILES = {
    "strict": DEFAULT_TOLERANCES,
    "fast": Tolerances(tol_quad=1e-3, quad_subdivisions=4, mc_samples=50_000, sphere_nodes=32),
}


def tolerances_from_env(environ=None) -> Tolerances:
    environ = os.environ if environ is None else environ
    name = environ.get(TOLERANCE_ENV, "strict").strip().lower()
    try:
        return PROFILES[name]
    except KeyError:
        raise ValueError(f"unknown tolerance profile {name!r}; expected one of {sorted(PROFILES)}")


@lru_cache(maxsize=None)
def _simplex_vertices(n: int) -> np.ndarray:
    # Project the standard basis of R^{n+1} off the all-ones vector, normalize,
    # then express the result in an orthonormal basis of that complement.
    proj = np.eye(n + 1) - np.full((n + 1, n + 1), 1.0 / (n + 1))
    cols = proj / np.linalg.norm(proj, axis=0)
    q, r = np.linalg.qr(cols[:, :n])
    q = q * np.sign(np.diag(r))
    verts = (q.T @ cols).T
    verts.setflags(write=False)
    return verts


def simplex_vertices(n: int) -> np.ndarray:
    """Vertices of the regular simplex inscribed in the unit sphere.

    Returns an ``(n+1, n)`` array of unit vectors with pairwise inner
    products ``-1/n`` that sum to zero. The first vertex is ``e_1`` and the
    second lies in the ``(e_1, e_2)`` half-plane with positive second
    coordinate.
    """
    if int(n) != n or n < 1:
        raise ValueError(f"dimension must be a positive integer, got {n!r}")
    return _simplex_vertices(int(n)).copy()


def generalized_cross(*vectors) -> np.ndarray:
    """Vector ``N`` with ``N . x = det(x, a_1, ..., a_{n-1})`` for every ``x``.

    Accepts ``n-1`` arrays of shape ``(..., n)`` and broadcasts over the
    leading axes. Linearly dependent inputs give the zero vector.
    """
    arrs = np.broadcast_arrays(*[np.asarray(v, dtype=float) for v in vectors])
    m = np.stack(arrs, axis=-1)  # (..., n, n-1)
    n = m.shape[-2]
    if m.shape[-1] != n - 1:
        raise ValueError(f"need {n - 1} vectors in R^{n}, got {m.shape[-1]}")
    if n == 1:
        return np.ones(m.shape[:-1])
    out = np.empty(m.shape[:-1])
    rows = np.arange(n)
    for i in range(n):
        sub = m[..., rows != i, :]
        out[..., i] = (-1) ** i * np.linalg.det(sub)
    return out


def determinant(matrix) -> float:
    """Determinant via LU factorization with partial pivoting (LAPACK getrf)."""
    m = np.asarray(matrix, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError("determinant needs a square matrix")
    return float(np.linalg.det(m))


def orthonormal_basis(vectors, tol: float = 1e-12) -> np.ndarray:
    """Orthonormal basis (as columns) of span(vectors), oriented like the input.

    The returned ``n x k`` matrix ``B`` satisfies ``det(B^T A) > 0`` where
    ``A`` has the input vectors as columns.
    """
    a = np.atleast_2d(np.asarray(vectors, dtype=float)).T
    q, r = np.linalg.qr(a)
    d = np.diag(r)
    if np.any(np.abs(d) <= tol * max(1.0, np.abs(a).max())):
        raise DegenerateInput("vectors are linearly dependent")
    return q * np.sign(d)


@lru_cache(maxsize=64)
def _kuhn_centroids(m: int, levels: int) -> np.ndarray:
    """Centroids of the uniform Kuhn subdivision of the ordered simplex.

    The region ``1 >= s_1 >= ... >= s_m >= 0`` is cut into ``N**m`` congruent
    pieces, ``N = 2**levels``.
    """
    nsub = 2**levels
    perms = np.array(list(itertools.permutations(range(m))))
    # vertex offsets of each Kuhn simplex in the unit cube, averaged
    offs = np.zeros((len(perms), m))
    for p_idx, perm in enumerate(perms):
        acc = np.zeros(m)
        tot = np.zeros(m)
        for j in perm:
            acc[j] += 1.0
            tot += acc
        offs[p_idx] = tot / (m + 1)
    grid = np.stack(np.meshgrid(*([np.arange(nsub)] * m), indexing="ij"), axis=-1).reshape(-1, m)
    cents = (grid[:, None, :] + offs[None, :, :]).reshape(-1, m) / nsub
    keep = np.all(np.diff(cents, axis=1) < 0, axis=1) if m > 1 else np.ones(len(cents), bool)
    cents = cents[keep]
    assert len(cents) == nsub**m
    return cents


def simplex_rule(m: int, levels: int) -> tuple[np.ndarray, np.ndarray]:
    """Composite centroid rule on ``D = {t >= 0, sum(t) <= 1}`` in R^m.

    Returns ``(points, weights)``; weights sum to ``1/m!``.
    """
    if m == 0:
        return np.zeros((1, 0)), np.ones(1)
    s = _kuhn_centroids(m, levels)
    t = s - np.concatenate([s[:, 1:], np.zeros((len(s), 1))], axis=1)
    w = np.full(len(t), 1.0 / (math.factorial(m) * len(t)))
    return t, w


def integrate_simplex(func, m: int, levels: int) -> tuple[np.ndarray, float]:
    """Richardson-extrapolated composite centroid rule over the simplex D.

    ``func`` maps an ``(N, m)`` array of parameter points to an ``(N, ...)``
    array. Returns the extrapolated integral and an error estimate (the
    magnitude of the extrapolation correction).
    """
    if m == 0:
        val = np.asarray(func(np.zeros((1, 0))))[0]
        return val, 0.0
    t_fine, w_fine = simplex_rule(m, levels)
    t_coarse, w_coarse = simplex_rule(m, levels - 1) if levels > 1 else simplex_rule(m, levels)
    fine = np.tensordot(w_fine, np.asarray(func(t_fine)), axes=(0, 0))
    coarse = np.tensordot(w_coarse, np.asarray(func(t_coarse)), axes=(0, 0))
    if levels == 1:
        return fine, float("nan")
    corr = (fine - coarse) / 3.0
    return fine + corr, float(np.max(np.abs(corr)))
