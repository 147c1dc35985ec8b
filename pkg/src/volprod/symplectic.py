"""Hofer-Zehnder capacity of symmetric Lagrangian products and the Viterbo check.

For centrally symmetric ``K, T`` the capacity of ``K x T`` equals
``4 inrad_{T°}(K)``, where ``inrad_{T°}(K)`` is the largest ``r`` with
``r T° ⊆ K``.  The Viterbo inequality ``c^n <= n! |K| |T|`` follows from a
Mahler-type bound for ``K`` through the chain recorded by
:func:`mahler_implies_viterbo_chain`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .errors import HypothesisNotCovered, NotCentrallySymmetric
from .geometry import DEFAULT_TOLERANCES, Tolerances
from .mahler import mahler_bound
from .polytope import HPolytope, VPolytope, _as_v, hausdorff_vertices, inradius_gauge, is_centrally_symmetric, polar_dual
from .polytope import volume as polytope_volume
from .starbody import PolytopeBody, StarBody, _scan_directions, polar_volume, volume_star
from .symmetry import GroupSpec, generate

__all__ = [
    "LagrangianProduct",
    "CapacityReport",
    "ChainLink",
    "ViterboChain",
    "chz_lagrangian",
    "viterbo_check",
    "mahler_implies_viterbo_chain",
    "inradius",
    "is_symmetric",
    "mahler_class",
]


@dataclass(frozen=True)
class LagrangianProduct:
    K: object
    T: object

    @property
    def n(self) -> int:
        return _dim(self.K)


@dataclass(frozen=True)
class CapacityReport:
    inradius: float
    c_hz: float
    volume: float
    viterbo_lhs: float
    viterbo_rhs: float
    passed: bool
    tolerance: float
    exact: bool

    @property
    def margin(self) -> float:
        return self.viterbo_rhs - self.viterbo_lhs

    @property
    def capacity_upper_bound(self) -> float:
        """Cylindrical capacity; every normalized capacity of ``K x T`` is at most this."""
        return self.c_hz


@dataclass(frozen=True)
class ChainLink:
    name: str
    lhs: float
    rhs: float
    slack: float
    passed: bool


@dataclass(frozen=True)
class ViterboChain:
    mahler_class: str
    links: tuple
    capacity: CapacityReport

    @property
    def passed(self) -> bool:
        return all(link.passed for link in self.links)


def _dim(body) -> int:
    return body.dim


def _is_polytope(body) -> bool:
    return isinstance(body, (VPolytope, HPolytope, PolytopeBody))


def _poly(body) -> VPolytope:
    return body.polytope if isinstance(body, PolytopeBody) else _as_v(body)


def _star(body) -> StarBody:
    return PolytopeBody(body) if isinstance(body, (VPolytope, HPolytope)) else body


def _sample_dirs(n: int, samples: int, seed: int) -> np.ndarray:
    u = np.random.default_rng(seed).standard_normal((samples, n))
    return u / np.linalg.norm(u, axis=1, keepdims=True)


def is_symmetric(body, tol: float = DEFAULT_TOLERANCES.tol_geom, samples: int = 2000) -> bool:
    """Central symmetry: antipodal vertex set, or sampled ``rho(u) = rho(-u)``."""
    if _is_polytope(body):
        return is_centrally_symmetric(_poly(body))
    u = _sample_dirs(body.dim, samples, 11)
    return bool(np.abs(body.radial(u) - body.radial(-u)).max() <= tol)


def _volume(body, tol) -> float:
    return polytope_volume(_poly(body)) if _is_polytope(body) else volume_star(body, tol)


def _polar_volume(body, tol) -> float:
    return polytope_volume(polar_dual(_poly(body))) if _is_polytope(body) else polar_volume(body, tol)


def inradius(k_body, t_body, tol: Tolerances = DEFAULT_TOLERANCES) -> float:
    """``inrad_{T°}(K) = min_u rho_K(u) h_T(u)``; exact when both are polytopes."""
    if _is_polytope(k_body) and _is_polytope(t_body):
        return inradius_gauge(_poly(k_body), polar_dual(_poly(t_body)))
    k, t = _star(k_body), _star(t_body)
    d = _scan_directions(k.dim)

    def ratio(u):
        return k.radial(u) * t.support(u)

    vals = ratio(d)
    best = float(vals.min())
    for i in np.argsort(vals)[:4]:
        res = minimize(lambda x: float(ratio(x[None, :])[0]), d[i], method="Nelder-Mead",
                       options={"xatol": 1e-10, "fatol": 1e-14, "maxiter": 4000})
        best = min(best, float(res.fun))
    return best


def chz_lagrangian(k_body, t_body, tol: Tolerances = DEFAULT_TOLERANCES) -> CapacityReport:
    """Capacity ``4 inrad_{T°}(K)`` of the Lagrangian product, with Viterbo fields filled."""
    if _dim(k_body) != _dim(t_body):
        raise ValueError("K and T must have the same dimension")
    for name, b in (("K", k_body), ("T", t_body)):
        if not is_symmetric(b):
            raise NotCentrallySymmetric(f"{name} is not centrally symmetric")
    n = _dim(k_body)
    exact = _is_polytope(k_body) and _is_polytope(t_body)
    r = inradius(k_body, t_body, tol)
    c = 4.0 * r
    vol = _volume(k_body, tol) * _volume(t_body, tol)
    lhs, rhs = c**n, math.factorial(n) * vol
    eps = 1e-9 if exact else tol.tol_quad
    return CapacityReport(r, c, vol, lhs, rhs, lhs <= rhs * (1 + eps), eps, exact)


def viterbo_check(k_body, t_body, tol: Tolerances = DEFAULT_TOLERANCES) -> CapacityReport:
    """``c_HZ(K x T)^n <= n! |K| |T|`` for symmetric ``K, T``."""
    return chz_lagrangian(k_body, t_body, tol)


def _invariant_under(body, mats, tol) -> bool:
    if _is_polytope(body):
        p = _poly(body)
        v = p.vertices
        return max(hausdorff_vertices(v, v @ g.T) for g in mats) <= tol * p.scale
    u = _sample_dirs(body.dim, 2000, 5)
    ref = body.radial(u)
    return max(float(np.abs(body.radial(u @ g.T) - ref).max()) for g in mats) <= tol


def mahler_class(body, tol: float = DEFAULT_TOLERANCES.tol_geom) -> str:
    """Name of a class of symmetric bodies for which the symmetric Mahler bound is known.

    In odd dimension a symmetric SO-cross-polytope-invariant body is also
    invariant under the full hyperoctahedral group, hence unconditional; so
    the uncovered odd case is the non-symmetric invariant body.
    """
    n = _dim(body)
    sym = is_symmetric(body)
    if sym and n <= 3:
        return "symmetric-low-dimension"
    flips = [np.diag(np.where(np.arange(n) == i, -1.0, 1.0)) for i in range(n)]
    if sym and _invariant_under(body, flips, tol):
        return "unconditional"
    so_inv = _invariant_under(body, generate(GroupSpec("so_diamond", n)).generators, tol)
    if so_inv and n % 2 == 0:
        return "so-diamond-even"
    if so_inv:
        raise HypothesisNotCovered(f"SO-cross-polytope invariance in odd dimension {n} is not a known Mahler class")
    if not sym:
        raise NotCentrallySymmetric("K is not centrally symmetric")
    raise HypothesisNotCovered("K matches no class with a known symmetric Mahler bound")


def mahler_implies_viterbo_chain(k_body, t_body, tol: Tolerances = DEFAULT_TOLERANCES) -> ViterboChain:
    """Every link from the Mahler bound for ``K`` to the Viterbo inequality for ``K x T``.

    1. ``inrad^{-n} |T| >= |K°|`` since ``inrad * T° ⊆ K``;
    2. ``|K| |K°| >= 4^n / n!``;
    3. hence ``(4 inrad)^n <= n! |K| |T|``.
    """
    cls = mahler_class(k_body)
    cap = chz_lagrangian(k_body, t_body, tol)
    n = _dim(k_body)
    eps = cap.tolerance
    r = cap.inradius
    vol_t = _volume(t_body, tol)
    vol_k = _volume(k_body, tol)
    pol_k = _polar_volume(k_body, tol)
    links = []
    lhs, rhs = r ** (-n) * vol_t, pol_k
    links.append(ChainLink("bipolar-inradius", lhs, rhs, lhs - rhs, lhs >= rhs * (1 - eps)))
    lhs, rhs = vol_k * pol_k, mahler_bound(n)
    links.append(ChainLink("mahler-bound", lhs, rhs, lhs - rhs, lhs >= rhs * (1 - eps)))
    lhs, rhs = cap.viterbo_rhs, cap.viterbo_lhs
    links.append(ChainLink("viterbo", lhs, rhs, lhs - rhs, lhs >= rhs * (1 - eps)))
    return ViterboChain(cls, tuple(links), cap)
