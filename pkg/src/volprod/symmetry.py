"""Finite symmetry groups of the regular simplex and the cross-polytope.

Groups are enumerated eagerly as stacks of orthogonal matrices.  The simplex
families act by permuting the vertices returned by
:func:`volprod.geometry.simplex_vertices`; the cross-polytope families are
the signed permutation matrices.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import DegenerateInput, NonSmoothKind, TooLarge
from .geometry import DEFAULT_TOLERANCES, simplex_vertices
from .polytope import HPolytope, VPolytope, hausdorff_vertices
from .starbody import StarBody

__all__ = [
    "FAMILIES",
    "GroupSpec",
    "SymmetryGroup",
    "generate",
    "is_invariant",
    "orbit_hull",
    "random_invariant_body",
    "check_equivariance",
    "group_order",
]

FAMILIES = ("o_simplex", "so_simplex", "o_diamond", "so_diamond")
MAX_ORDER = 10**6


@dataclass(frozen=True)
class GroupSpec:
    family: str
    dim: int

    def __post_init__(self):
        fam = self.family.replace("-", "_").lower()
        if fam not in FAMILIES:
            raise ValueError(f"unknown group family {self.family!r}; expected one of {FAMILIES}")
        object.__setattr__(self, "family", fam)
        if int(self.dim) != self.dim or self.dim < 2:
            raise ValueError(f"group dimension must be an integer >= 2, got {self.dim!r}")
        object.__setattr__(self, "dim", int(self.dim))

    @classmethod
    def parse(cls, text: str, dim: int) -> "GroupSpec":
        return cls(text, dim)

    @property
    def rotations_only(self) -> bool:
        return self.family.startswith("so_")

    @property
    def is_simplex(self) -> bool:
        return self.family.endswith("simplex")

    def __str__(self):
        return f"{self.family.replace('_', '-')}({self.dim})"


def group_order(spec: GroupSpec) -> int:
    n = spec.dim
    full = math.factorial(n + 1) if spec.is_simplex else 2**n * math.factorial(n)
    return full // 2 if spec.rotations_only else full


@dataclass(frozen=True, eq=False)
class SymmetryGroup:
    spec: GroupSpec
    matrices: np.ndarray
    dets: np.ndarray
    generators: np.ndarray
    labels: tuple = field(repr=False)

    def __len__(self):
        return len(self.matrices)

    @property
    def dim(self) -> int:
        return self.spec.dim

    def contains(self, matrix, tol: float = 1e-9) -> bool:
        d = np.abs(self.matrices - np.asarray(matrix)).max(axis=(1, 2))
        return bool(d.min() <= tol)

    def orbit(self, points) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return np.einsum("gij,pj->gpi", self.matrices, pts).reshape(-1, self.dim)

    def closure_residual(self, pairs: int = 200, seed: int = 0) -> float:
        """Max distance from products of random element pairs to the group."""
        rng = np.random.default_rng(seed)
        i = rng.integers(len(self), size=pairs)
        j = rng.integers(len(self), size=pairs)
        worst = 0.0
        for a, b in zip(i, j):
            prod = self.matrices[a] @ self.matrices[b]
            worst = max(worst, float(np.abs(self.matrices - prod).max(axis=(1, 2)).min()))
        return worst


def _perm_sign(perm) -> int:
    perm = list(perm)
    sign = 1
    seen = [False] * len(perm)
    for i in range(len(perm)):
        if seen[i]:
            continue
        j, length = i, 0
        while not seen[j]:
            seen[j] = True
            j = perm[j]
            length += 1
        if length % 2 == 0:
            sign = -sign
    return sign


def simplex_permutation_matrix(perm, n: int | None = None) -> np.ndarray:
    """Orthogonal matrix sending ``v_i`` to ``v_perm[i]`` (0-based indices)."""
    n = len(perm) - 1 if n is None else n
    v = simplex_vertices(n)
    a = v[:n].T
    b = v[list(perm)][:n].T
    # least squares on the spanning set v_1..v_n
    return np.linalg.lstsq(a.T, b.T, rcond=None)[0].T


def _simplex_group(spec: GroupSpec) -> SymmetryGroup:
    n = spec.dim
    v = simplex_vertices(n)
    ainv = np.linalg.inv(v[:n].T)
    perms = [p for p in itertools.permutations(range(n + 1)) if not spec.rotations_only or _perm_sign(p) == 1]
    idx = np.asarray(perms)[:, :n]
    mats = np.einsum("gni,ij->gnj", np.transpose(v[idx], (0, 2, 1)), ainv)
    dets = np.array([_perm_sign(p) for p in perms], dtype=float)
    if spec.rotations_only:
        gens = [tuple(_cycle3(n + 1, 0, 1, k)) for k in range(2, n + 1)]
    else:
        gens = [tuple(_swap(n + 1, k, k + 1)) for k in range(n)]
    gen_mats = np.stack([mats[perms.index(g)] for g in gens])
    return SymmetryGroup(spec, mats, dets, gen_mats, tuple(perms))


def _swap(m, i, j):
    p = list(range(m))
    p[i], p[j] = p[j], p[i]
    return p


def _cycle3(m, a, b, c):
    p = list(range(m))
    p[a], p[b], p[c] = b, c, a
    return p


def _diamond_group(spec: GroupSpec) -> SymmetryGroup:
    n = spec.dim
    perms = np.array(list(itertools.permutations(range(n))))
    psign = np.array([_perm_sign(p) for p in perms])
    signs = np.array(list(itertools.product((1.0, -1.0), repeat=n)))
    ssign = signs.prod(axis=1)
    dets = (psign[:, None] * ssign[None, :]).ravel()
    pi = np.repeat(np.arange(len(perms)), len(signs))
    si = np.tile(np.arange(len(signs)), len(perms))
    if spec.rotations_only:
        keep = dets == 1
        pi, si, dets = pi[keep], si[keep], dets[keep]
    mats = np.zeros((len(dets), n, n))
    g = np.arange(len(dets))[:, None]
    mats[g, perms[pi], np.arange(n)[None, :]] = signs[si]
    labels = tuple(zip(map(tuple, perms[pi]), map(tuple, signs[si])))
    gens = []
    for i in range(1, n):
        # quarter turn in the (e_1, e_i) plane: e_i -> e_1, e_1 -> -e_i
        r = np.eye(n)
        r[:, 0] = 0.0
        r[:, i] = 0.0
        r[i, 0] = -1.0
        r[0, i] = 1.0
        gens.append(r)
    if not spec.rotations_only:
        gens.append(np.diag([-1.0] + [1.0] * (n - 1)))
    return SymmetryGroup(spec, mats, dets.astype(float), np.asarray(gens), labels)


@lru_cache(maxsize=32)
def _generate(spec: GroupSpec) -> SymmetryGroup:
    grp = _simplex_group(spec) if spec.is_simplex else _diamond_group(spec)
    grp.matrices.setflags(write=False)
    return grp


def generate(spec: GroupSpec, cap: int = MAX_ORDER) -> SymmetryGroup:
    """Enumerate the group as explicit orthogonal matrices (cached)."""
    if isinstance(spec, str):
        raise TypeError("pass a GroupSpec, e.g. GroupSpec('so-diamond', 3)")
    order = group_order(spec)
    if order > cap:
        raise TooLarge(f"{spec} has {order} elements, above the cap {cap}")
    return _generate(spec)


def is_invariant(body, group: SymmetryGroup, samples: int = 2000, seed: int = 0, tol: float | None = None):
    """Check ``gK = K`` for the group generators. Returns ``(ok, residual)``."""
    if isinstance(body, HPolytope):
        body = body.to_vpolytope()
    if isinstance(body, VPolytope):
        tol = body.tol_geom * body.scale if tol is None else tol
        v = body.vertices
        resid = max(hausdorff_vertices(v, v @ g.T) for g in group.generators)
        return resid <= tol, resid
    if isinstance(body, StarBody):
        tol = DEFAULT_TOLERANCES.tol_geom if tol is None else tol
        rng = np.random.default_rng(seed)
        u = rng.standard_normal((samples, body.dim))
        u /= np.linalg.norm(u, axis=1, keepdims=True)
        ref = body.radial(u)
        resid = max(float(np.abs(body.radial(u @ g.T) - ref).max()) for g in group.generators)
        return resid <= tol, resid
    raise TypeError(f"cannot test invariance of {type(body).__name__}")


def orbit_hull(points, group: SymmetryGroup, tol_geom: float = DEFAULT_TOLERANCES.tol_geom) -> VPolytope:
    return VPolytope(group.orbit(points), tol_geom=tol_geom)


def random_invariant_body(spec: GroupSpec, seed: int, generators_count: int = 3, rng=None) -> VPolytope:
    """Orbit hull of seeded random points (uniform directions, norms in [0.5, 1.5])."""
    if generators_count < 1:
        raise ValueError("generators_count must be >= 1")
    group = generate(spec)
    rng = np.random.default_rng(seed) if rng is None else rng
    last = None
    for _ in range(10):
        d = rng.standard_normal((generators_count, spec.dim))
        d /= np.linalg.norm(d, axis=1, keepdims=True)
        pts = d * rng.uniform(0.5, 1.5, (generators_count, 1))
        try:
            return orbit_hull(pts, group)
        except DegenerateInput as exc:
            last = exc
    raise DegenerateInput(f"no full-dimensional orbit hull after 10 draws: {last}")


def check_equivariance(body: StarBody, group: SymmetryGroup, samples: int = 64, seed: int = 0) -> float:
    """Max over sampled boundary x and all g of ``|g Lambda(x) - Lambda(g x)|``."""
    if not getattr(body, "smooth", False):
        raise NonSmoothKind("equivariance needs a smooth body")
    rng = np.random.default_rng(seed)
    u = rng.standard_normal((samples, body.dim))
    x = body.boundary_point(u)
    lam = body.grad_gauge(x)
    gx = np.einsum("gij,sj->gsi", group.matrices, x)
    lhs = np.einsum("gij,sj->gsi", group.matrices, lam)
    rhs = body.grad_gauge(gx)
    return float(np.linalg.norm(lhs - rhs, axis=-1).max())
