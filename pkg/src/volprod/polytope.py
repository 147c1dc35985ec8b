"""Convex polytopes in vertex and halfspace form.

Facet enumeration is delegated to Qhull (through :mod:`scipy.spatial`); the
output is canonicalized here: duplicate points are merged, coplanar
triangles are merged into facets, and points that are not extreme are
dropped. Polar duality swaps facets and vertices.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog
from scipy.spatial import ConvexHull, QhullError

from .errors import CenterNotInterior, DegenerateInput, OriginNotInterior
from .geometry import DEFAULT_TOLERANCES

__all__ = [
    "FacetComplex",
    "VPolytope",
    "HPolytope",
    "convex_hull",
    "polar_dual",
    "volume",
    "inradius_gauge",
    "contains",
    "cube",
    "cross_polytope",
    "simplex",
    "coordinate_section",
    "coordinate_projection",
]


@dataclass(frozen=True)
class FacetComplex:
    """Boundary description of a full-dimensional polytope.

    ``normals[i] . x <= offsets[i]`` are the facet inequalities (unit outward
    normals), ``facets[i]`` lists the vertex indices on facet ``i`` and
    ``simplices`` is a triangulation of the boundary into ``(n-1)``-simplices.
    """

    normals: np.ndarray
    offsets: np.ndarray
    facets: tuple
    simplices: np.ndarray

    def __len__(self):
        return len(self.offsets)


def _dedupe(points: np.ndarray, tol: float) -> np.ndarray:
    keep = []
    for p in points:
        if not keep or np.min(np.max(np.abs(np.asarray(keep) - p), axis=1)) > tol:
            keep.append(p)
    return np.asarray(keep)


def _qhull(points: np.ndarray) -> ConvexHull:
    try:
        return ConvexHull(points)
    except (QhullError, ValueError) as exc:
        raise DegenerateInput(f"convex hull failed: {exc}") from None


def _build(points, tol_geom: float):
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or len(pts) == 0:
        raise DegenerateInput("expected a non-empty (m, n) array of points")
    if not np.all(np.isfinite(pts)):
        raise DegenerateInput("non-finite coordinates")
    n = pts.shape[1]
    if n == 1:
        lo, hi = pts.min(), pts.max()
        if hi - lo <= tol_geom * max(1.0, abs(lo), abs(hi)):
            raise DegenerateInput("points are not full-dimensional")
        verts = np.array([[lo], [hi]])
        fc = FacetComplex(np.array([[-1.0], [1.0]]), np.array([-lo, hi]), ((0,), (1,)), np.array([[0], [1]]))
        return verts, fc
    scale = max(1.0, float(np.abs(pts).max()))
    tol = tol_geom * scale
    pts = _dedupe(pts, tol)
    if len(pts) < n + 1:
        raise DegenerateInput("fewer than n+1 distinct points")
    centered = pts - pts.mean(axis=0)
    sv = np.linalg.svd(centered, compute_uv=False)
    if sv[-1] <= tol * max(1.0, sv[0]):
        raise DegenerateInput("points are not full-dimensional")
    hull = _qhull(pts)
    # Extreme points: a hull vertex is a vertex of the polytope iff the
    # merged facets through it have normals of full rank.
    normals, offsets = _merge_planes(hull.equations, tol)
    on = np.abs(pts[hull.vertices] @ normals.T - offsets) <= tol
    keep = [v for v, row in zip(hull.vertices, on) if np.linalg.matrix_rank(normals[row], tol=1e-9) == n]
    verts = pts[np.sort(np.asarray(keep))]
    order = np.lexsort(verts.T[::-1])
    verts = verts[order]
    hull = _qhull(verts)
    normals, offsets = _merge_planes(hull.equations, tol)
    incid = np.abs(verts @ normals.T - offsets) <= tol
    facets = tuple(tuple(int(i) for i in np.flatnonzero(incid[:, f])) for f in range(len(offsets)))
    return verts, FacetComplex(normals, offsets, facets, np.asarray(hull.simplices))


def _merge_planes(equations: np.ndarray, tol: float):
    eq = np.column_stack([equations[:, :-1], -equations[:, -1]])
    eq = eq[np.argsort(eq[:, 0], kind="stable")]
    tol = max(tol, 1e-10)
    kept = np.empty_like(eq)
    count = start = 0
    # sweep in order of the first coordinate; only kept planes within tol of it can match
    for row in eq:
        while start < count and kept[start, 0] < row[0] - tol:
            start += 1
        if count > start:
            window = kept[start:count]
            d = np.max(np.abs(window[:, :-1] - row[:-1]), axis=1) + np.abs(window[:, -1] - row[-1])
            if d.min() <= tol:
                continue
        kept[count] = row
        count += 1
    out = kept[:count]
    out = out[np.lexsort(out.T[::-1])]
    return out[:, :-1].copy(), out[:, -1].copy()


class VPolytope:
    """Full-dimensional polytope given by its (canonical) vertex set.

    Constructing from any finite point set takes the convex hull.
    """

    def __init__(self, points, tol_geom: float = DEFAULT_TOLERANCES.tol_geom):
        verts, fc = _build(points, tol_geom)
        self.vertices = verts
        self.vertices.setflags(write=False)
        self.facet_complex = fc
        self.tol_geom = tol_geom

    @property
    def dim(self) -> int:
        return self.vertices.shape[1]

    @property
    def normals(self) -> np.ndarray:
        return self.facet_complex.normals

    @property
    def offsets(self) -> np.ndarray:
        return self.facet_complex.offsets

    @property
    def scale(self) -> float:
        return max(1.0, float(np.abs(self.vertices).max()))

    def to_hpolytope(self) -> "HPolytope":
        return HPolytope(self.normals, self.offsets, tol_geom=self.tol_geom)

    def volume(self) -> float:
        return volume(self)

    def centroid(self) -> np.ndarray:
        apex = self.vertices.mean(axis=0)
        vol, m1, _ = fan_moments(self.vertices - apex, self.facet_complex.simplices)
        return apex + m1 / vol

    def transform(self, matrix=None, shift=None) -> "VPolytope":
        v = self.vertices
        if matrix is not None:
            v = v @ np.asarray(matrix, dtype=float).T
        if shift is not None:
            v = v + np.asarray(shift, dtype=float)
        return VPolytope(v, tol_geom=self.tol_geom)

    def __mul__(self, factor: float) -> "VPolytope":
        return self.transform(shift=None, matrix=float(factor) * np.eye(self.dim))

    __rmul__ = __mul__

    def __repr__(self):
        return f"VPolytope(dim={self.dim}, vertices={len(self.vertices)}, facets={len(self.offsets)})"


@dataclass
class HPolytope:
    """Polytope ``{x : normals @ x <= offsets}``."""

    normals: np.ndarray
    offsets: np.ndarray
    tol_geom: float = DEFAULT_TOLERANCES.tol_geom
    _v: VPolytope | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        self.normals = np.atleast_2d(np.asarray(self.normals, dtype=float))
        self.offsets = np.asarray(self.offsets, dtype=float).reshape(-1)
        if len(self.normals) != len(self.offsets):
            raise ValueError("normals and offsets disagree in length")

    @property
    def dim(self) -> int:
        return self.normals.shape[1]

    def interior_point(self) -> tuple[np.ndarray, float]:
        """Chebyshev center and radius."""
        norms = np.linalg.norm(self.normals, axis=1)
        n = self.dim
        c = np.zeros(n + 1)
        c[-1] = -1.0
        res = linprog(
            c,
            A_ub=np.column_stack([self.normals, norms]),
            b_ub=self.offsets,
            bounds=[(None, None)] * n + [(0, None)],
            method="highs",
        )
        if res.status == 3:
            raise DegenerateInput("halfspace system is unbounded")
        if res.status != 0:
            raise DegenerateInput(f"halfspace system is infeasible: {res.message}")
        return res.x[:n], float(res.x[-1])

    def to_vpolytope(self) -> VPolytope:
        """Vertex enumeration by polar duality about the Chebyshev center."""
        if self._v is None:
            center, radius = self.interior_point()
            if radius <= self.tol_geom:
                raise DegenerateInput("halfspace system has empty interior")
            slack = self.offsets - self.normals @ center
            dual = VPolytope(self.normals / slack[:, None], tol_geom=self.tol_geom)
            if np.any(dual.offsets <= self.tol_geom):
                raise DegenerateInput("halfspace system is unbounded")
            self._v = VPolytope(center + dual.normals / dual.offsets[:, None], tol_geom=self.tol_geom)
        return self._v


def _as_v(p) -> VPolytope:
    if isinstance(p, VPolytope):
        return p
    if isinstance(p, HPolytope):
        return p.to_vpolytope()
    return VPolytope(p)


def convex_hull(points, tol_geom: float = DEFAULT_TOLERANCES.tol_geom) -> tuple[VPolytope, FacetComplex]:
    p = VPolytope(points, tol_geom=tol_geom)
    return p, p.facet_complex


def polar_dual(p, z=None) -> VPolytope:
    """Polar body ``{y : (y - z) . (x - z) <= 1 for x in P}`` as a VPolytope."""
    if isinstance(p, HPolytope):
        normals, offsets, tol = p.normals, p.offsets, p.tol_geom
        scale = 1.0
    else:
        p = _as_v(p)
        normals, offsets, tol = p.normals, p.offsets, p.tol_geom
        scale = p.scale
    z = np.zeros(normals.shape[1]) if z is None else np.asarray(z, dtype=float)
    slack = offsets - normals @ z
    if np.any(slack <= tol * scale):
        raise CenterNotInterior(f"center {z} is not interior (min slack {slack.min():.3g})")
    return VPolytope(z + normals / slack[:, None], tol_geom=tol)


def fan_moments(points: np.ndarray, simplices: np.ndarray, apex=None):
    """Volume, first and second moments of the cone over a boundary triangulation.

    ``points`` are taken relative to ``apex`` (default: the origin), which
    must lie inside the polytope. Returns ``(vol, int y dy, int y y^T dy)``
    in apex-relative coordinates.
    """
    pts = np.asarray(points, dtype=float)
    if apex is not None:
        pts = pts - apex
    w = pts[simplices]  # (s, n, n)
    n = w.shape[-1]
    vols = np.abs(np.linalg.det(w)) / math.factorial(n)
    s = w.sum(axis=1)
    vol = vols.sum()
    m1 = (vols[:, None] * s).sum(axis=0) / (n + 1)
    outer = np.einsum("sij,sik->sjk", w, w) + np.einsum("sj,sk->sjk", s, s)
    m2 = np.einsum("s,sjk->jk", vols, outer) / ((n + 1) * (n + 2))
    return float(vol), m1, m2


def volume(p) -> float:
    """Lebesgue measure, by a fan from the vertex centroid over the boundary triangulation."""
    p = _as_v(p)
    if p.dim == 1:
        return float(p.vertices.max() - p.vertices.min())
    apex = p.vertices.mean(axis=0)
    w = (p.vertices - apex)[p.facet_complex.simplices]
    return float(np.abs(np.linalg.det(w)).sum() / math.factorial(p.dim))


def polar_moments(p: VPolytope, z) -> tuple[float, np.ndarray, np.ndarray]:
    """Moments of the polar body about ``z``, in coordinates centered at ``z``."""
    slack = p.offsets - p.normals @ z
    if np.any(slack <= p.tol_geom * p.scale):
        raise CenterNotInterior("center left the interior")
    pts = p.normals / slack[:, None]
    hull = _qhull(pts)
    return fan_moments(pts, hull.simplices)


def contains(p, x, tol: float | None = None) -> bool:
    if isinstance(p, HPolytope):
        normals, offsets, scale = p.normals, p.offsets, 1.0
        tol = p.tol_geom if tol is None else tol
    else:
        p = _as_v(p)
        normals, offsets, scale = p.normals, p.offsets, p.scale
        tol = p.tol_geom if tol is None else tol
    x = np.asarray(x, dtype=float)
    return bool(np.all(normals @ x <= offsets + tol * scale))


def inradius_gauge(k, t_polar) -> float:
    """Largest ``r`` with ``r * T_polar`` inside ``K``; both must contain o in the interior."""
    if isinstance(k, HPolytope):
        normals, offsets = k.normals, k.offsets
        kv = k.to_vpolytope()
    else:
        kv = _as_v(k)
        normals, offsets = kv.normals, kv.offsets
    t = _as_v(t_polar)
    if np.any(kv.offsets <= kv.tol_geom * kv.scale):
        raise OriginNotInterior("origin is not interior to K")
    if np.any(t.offsets <= t.tol_geom * t.scale):
        raise OriginNotInterior("origin is not interior to the gauge body")
    support = (normals @ t.vertices.T).max(axis=1)
    mask = offsets > 0
    return float(np.min(offsets[mask] / support[mask]))


def is_centrally_symmetric(p, tol: float | None = None) -> bool:
    p = _as_v(p)
    tol = p.tol_geom * p.scale if tol is None else tol
    v = p.vertices
    d = np.abs(v[:, None, :] + v[None, :, :]).max(axis=2)
    return bool(np.all(d.min(axis=1) <= tol))


def hausdorff_vertices(a: np.ndarray, b: np.ndarray) -> float:
    d = np.linalg.norm(a[:, None, :] - b[None, :, :], axis=2)
    return float(max(d.min(axis=1).max(), d.min(axis=0).max()))


def coordinate_section(p, axis: int = -1) -> HPolytope:
    """``P ∩ {x_axis = 0}`` as a halfspace system in the remaining coordinates."""
    p = _as_v(p)
    keep = np.ones(p.dim, bool)
    keep[axis] = False
    normals = p.normals[:, keep]
    ok = np.linalg.norm(normals, axis=1) > p.tol_geom
    return HPolytope(normals[ok], p.offsets[ok], tol_geom=p.tol_geom)


def coordinate_projection(p, axis: int = -1) -> VPolytope:
    p = _as_v(p)
    keep = np.ones(p.dim, bool)
    keep[axis] = False
    return VPolytope(p.vertices[:, keep], tol_geom=p.tol_geom)


def cube(n: int, half_width: float = 1.0) -> VPolytope:
    corners = np.array(np.meshgrid(*([[-1.0, 1.0]] * n), indexing="ij")).reshape(n, -1).T
    return VPolytope(half_width * corners)


def cross_polytope(n: int, radius: float = 1.0) -> VPolytope:
    e = np.eye(n)
    return VPolytope(radius * np.vstack([e, -e]))


def simplex(n: int) -> VPolytope:
    """Regular simplex with vertices on the unit sphere and centroid at o."""
    from .geometry import simplex_vertices

    return VPolytope(simplex_vertices(n))
