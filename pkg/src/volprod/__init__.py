"""Volume products, polar duality, symmetry groups and capacities of convex bodies."""

from .errors import *  # noqa: F401,F403
from .geometry import DEFAULT_TOLERANCES, Tolerances, determinant, generalized_cross, simplex_vertices
from .mahler import fundamental_domain_product, mahler_bound, santalo_point, verify_bound, volume_product
from .polytope import HPolytope, VPolytope, convex_hull, cross_polytope, cube, inradius_gauge, polar_dual, simplex, volume
from .signed_volume import (
    bf_inequality,
    cone_volume,
    duality_identity,
    ik_chain,
    patch_vector,
    signed_estimate_check,
)
from .starbody import (
    LpBall,
    PolytopeBody,
    StarBody,
    lambda_map,
    lp_ball,
    perturbed_invariant_body,
    polar_volume,
    unit_ball,
    volume_star,
)
from .symmetry import GroupSpec, SymmetryGroup, check_equivariance, generate, is_invariant, orbit_hull, random_invariant_body
from .symplectic import chz_lagrangian, mahler_implies_viterbo_chain, viterbo_check

__version__ = "0.1.0"
