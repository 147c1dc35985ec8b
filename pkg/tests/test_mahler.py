import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from volprod.errors import NotInvariant, ScalingRequired
from volprod.geometry import simplex_vertices
from volprod.mahler import (
    check_bound,
    fundamental_domain_product,
    mahler_bound,
    santalo_point,
    verify_bound,
    volume_product,
)
from volprod.polytope import VPolytope, cross_polytope, cube, polar_dual, simplex
from volprod.polytope import volume as polytope_volume
from volprod.starbody import PolytopeBody, lp_ball, unit_ball
from volprod.symmetry import GroupSpec, generate, orbit_hull, random_invariant_body


def polar_volume_at(p, z):
    return polytope_volume(polar_dual(p, z))


def test_mahler_bound_values():
    assert mahler_bound(3) == pytest.approx(32 / 3, rel=1e-15)
    assert mahler_bound(3, "nonsymmetric") == pytest.approx(256 / 36, rel=1e-15)
    assert mahler_bound(2, "nonsymmetric") == pytest.approx(27 / 4, rel=1e-15)
    assert mahler_bound(3, exact=True) == Fraction(32, 3)
    with pytest.raises(ValueError):
        mahler_bound(0)
    with pytest.raises(ValueError):
        mahler_bound(3, "other")


def test_santalo_point_of_cube_is_origin():
    assert np.linalg.norm(santalo_point(cube(3))) <= 1e-7


@pytest.mark.parametrize("n", [2, 3, 4])
def test_santalo_point_of_centered_simplex(n):
    assert np.linalg.norm(santalo_point(simplex(n))) <= 1e-7


def test_santalo_point_translation_equivariant():
    t = np.array([0.3, -0.7, 0.2])
    assert np.allclose(santalo_point(cube(3).transform(shift=t)), t, atol=1e-7)


@pytest.mark.parametrize("seed", range(5))
def test_santalo_point_beats_perturbed_centers(seed):
    rng = np.random.default_rng(seed)
    p = VPolytope(rng.standard_normal((15, 3)))
    z = santalo_point(p)
    f = polar_volume_at(p, z)
    for d in rng.standard_normal((20, 3)):
        assert polar_volume_at(p, z + 1e-3 * d / np.linalg.norm(d)) >= f


@pytest.mark.parametrize("seed", range(5))
def test_polar_volume_unimodal_along_segments(seed):
    rng = np.random.default_rng(seed)
    p = VPolytope(rng.standard_normal((15, 3)))
    z = santalo_point(p)
    for d in rng.standard_normal((3, 3)):
        d *= 0.2 / np.linalg.norm(d)
        vals = [polar_volume_at(p, z + s * d) for s in np.linspace(-1, 1, 11)]
        i = int(np.argmin(vals))
        assert i == 5
        assert all(np.diff(vals[: i + 1]) <= 0) and all(np.diff(vals[i:]) >= 0)


def test_volume_product_examples():
    res = volume_product(cube(3))
    assert res.product == pytest.approx(32 / 3, rel=1e-9)
    assert res.product == pytest.approx(res.volume * res.polar_volume_at_santalo, rel=1e-15)
    assert volume_product(simplex(2)).product == pytest.approx(27 / 4, rel=1e-9)


@pytest.mark.parametrize("seed", range(5))
def test_affine_invariance(seed):
    rng = np.random.default_rng(seed)
    p = VPolytope(rng.standard_normal((12, 3)))
    a = rng.standard_normal((3, 3)) + 2 * np.eye(3)
    b = rng.standard_normal(3)
    assert volume_product(p.transform(a, b)).product == pytest.approx(volume_product(p).product, rel=1e-6)


def test_volume_product_quadrature_path():
    res = volume_product(unit_ball(3))
    assert res.path == "quadrature"
    assert res.product == pytest.approx((4 * math.pi / 3) ** 2, rel=1e-4)
    assert np.linalg.norm(res.santalo_point) <= 1e-7


def test_volume_product_lp_ball_matches_dual_exponent_oracle():
    from scipy.special import gamma

    def vol(p):
        return (2 * gamma(1 + 1 / p)) ** 3 / gamma(1 + 3 / p)

    assert volume_product(lp_ball(3, 3)).product == pytest.approx(vol(3) * vol(1.5), rel=1e-3)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10_000))
def test_symmetric_polytope_santalo_at_origin(seed):
    rng = np.random.default_rng(seed)
    pts = rng.standard_normal((6, 3))
    p = VPolytope(np.vstack([pts, -pts]))
    res = volume_product(p)
    assert np.linalg.norm(res.santalo_point) <= 1e-7
    assert res.product >= mahler_bound(3) - 1e-9


def test_check_bound_pass_iff_margin():
    spec = GroupSpec("so_diamond", 3)
    c = check_bound(cross_polytope(3), spec)
    assert c.margin == pytest.approx(0.0, abs=1e-9)
    assert c.passed == (c.margin >= -c.tolerance)


def test_simplex_equality_margin():
    c = check_bound(simplex(3), GroupSpec("so_simplex", 3))
    assert c.margin == pytest.approx(0.0, abs=1e-9)
    assert c.bound == pytest.approx(256 / 36)


def test_verify_bound_small_runs():
    for spec in (GroupSpec("so_diamond", 3), GroupSpec("so_simplex", 3), GroupSpec("so_simplex", 2)):
        checks = verify_bound(spec, 10, seed=3)
        assert len(checks) == 10
        assert all(c.passed and c.margin >= -1e-6 for c in checks)


def test_verify_bound_deterministic_and_worker_independent():
    spec = GroupSpec("so_diamond", 3)
    a = verify_bound(spec, 4, seed=5)
    b = verify_bound(spec, 4, seed=5, workers=2)
    assert [c.product for c in a] == [c.product for c in b]
    assert [c.index for c in b] == [0, 1, 2, 3]


def test_fundamental_domain_cube():
    r = fundamental_domain_product(cube(3), GroupSpec("so_diamond", 3))
    assert r.piece_volume == pytest.approx(1.0, rel=1e-12)
    assert r.piece_polar_volume == pytest.approx(1 / 6, rel=1e-12)
    assert r.factor == pytest.approx(64, rel=1e-9)


def test_fundamental_domain_simplex():
    r = fundamental_domain_product(simplex(3), GroupSpec("so_simplex", 3))
    assert r.expected == 16
    assert r.deviation <= 1e-6


def test_fundamental_domain_ball():
    r = fundamental_domain_product(unit_ball(3), GroupSpec("so_diamond", 3))
    assert r.path == "quadrature"
    assert r.factor == pytest.approx(64, rel=1e-4)


def test_fundamental_domain_autoscale():
    r = fundamental_domain_product(cross_polytope(3, 2.5), GroupSpec("o_diamond", 3))
    assert r.scale == pytest.approx(0.4)
    assert r.deviation <= 1e-9
    with pytest.raises(ScalingRequired):
        fundamental_domain_product(cross_polytope(3, 2.5), GroupSpec("o_diamond", 3), autoscale=False)


def test_fundamental_domain_requires_invariance():
    with pytest.raises(NotInvariant):
        fundamental_domain_product(simplex(3), GroupSpec("so_diamond", 3))


@pytest.mark.parametrize("seed", range(4))
def test_fundamental_domain_random_invariant(seed):
    for family in ("so_diamond", "so_simplex"):
        spec = GroupSpec(family, 3)
        r = fundamental_domain_product(random_invariant_body(spec, seed), spec)
        assert r.deviation <= 1e-6
