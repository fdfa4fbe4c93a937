import math
from itertools import combinations

import numpy as np
import pytest

import pseudocone as pc
from pseudocone.errors import (
    DimensionMismatch,
    DirectionOutsideCone,
    MismatchedOmega,
    NotFullDimensional,
    NotPointed,
    ValidationError,
)

S2 = math.sqrt(0.5)


def test_build_quarter_cone(quarter):
    assert quarter.dim == 2
    assert quarter.ref_dir == pytest.approx([0.0, 1.0])


def test_build_cone_not_pointed():
    with pytest.raises(NotPointed):
        pc.build_cone([[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0]])


def test_build_cone_not_full_dimensional():
    with pytest.raises(NotFullDimensional):
        pc.build_cone(np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]),
                      -np.eye(3))


def test_build_octant(octant):
    assert octant.ref_dir == pytest.approx(np.ones(3) / math.sqrt(3))


def test_non_unit_input_rejected():
    with pytest.raises(ValidationError):
        pc.build_cone([[2.0, 0.0], [0.0, 2.0]])


def test_converter_2d_matches_quarter(quarter):
    w = pc.normals_from_generators_2d([[S2, S2], [-S2, S2]])
    assert sorted(map(tuple, np.round(w, 12))) == sorted(
        map(tuple, np.round(quarter.normals, 12))
    )


def test_cone_contains(quarter):
    assert pc.cone_contains(quarter, [0.0, 2.0])
    assert not pc.cone_contains(quarter, [2.0, 0.0])
    batch = pc.cone_contains(quarter, np.array([[0.0, 2.0], [2.0, 0.0]]))
    assert batch.tolist() == [True, False]
    with pytest.raises(DimensionMismatch):
        pc.cone_contains(quarter, [1.0, 0.0, 0.0])


def test_dual_contains(quarter):
    # oracle: u is in the dual cone iff <u, g> <= 0 for every generator
    gens = quarter.generators
    for u in ([0.0, -1.0], [S2, -S2], [0.0, 1.0], [1.0, 0.0]):
        expected = bool(np.all(np.asarray(u) @ gens.T <= 1e-12))
        assert bool(pc.dual_contains(quarter, u)) == expected
    assert pc.dual_contains(quarter, [0.0, -1.0])


def test_make_wulff_single_halfspace(quarter_single):
    assert quarter_single.effective_h == pytest.approx([1.0])
    assert quarter_single.facet_active.tolist() == [True]


def test_make_wulff_slack_constraint(quarter):
    # second constraint is slack; its effective value is the support over
    # K = {x2 >= 1} inside the cone, attained at the vertex (-1, 1)
    u2 = -np.array([math.sin(0.1), math.cos(0.1)])
    K = pc.make_wulff(quarter, [[0.0, -1.0], u2.tolist()], [1.0, 0.5])
    expected = math.cos(0.1) - math.sin(0.1)  # 0.8951707486311977
    assert K.effective_h[0] == pytest.approx(1.0)
    assert K.effective_h[1] == pytest.approx(expected, rel=1e-9)
    assert K.facet_active.tolist() == [True, False]
    # independent oracle: brute-force vertex enumeration
    verts = pc.wulff_vertices(K)
    oracle = -max(verts @ u2)
    assert K.effective_h[1] == pytest.approx(oracle, rel=1e-9)


def test_make_wulff_octant_membership_grid(octant):
    b = (-np.ones(3) / math.sqrt(3)).tolist()
    K = pc.make_wulff(octant, [b], [1.0])
    # brute-force membership oracle on a grid: in the octant and past the plane
    grid = np.linspace(0.0, 2.0, 9)
    pts = np.array([[x, y, z] for x in grid for y in grid for z in grid])
    expected = pts.sum(axis=1) / math.sqrt(3) >= 1.0 - 1e-12
    got = pc.contains(K, pts)
    assert np.array_equal(got, expected)


def test_effective_support_scaling(quarter):
    u2 = -np.array([math.sin(0.1), math.cos(0.1)])
    K = pc.make_wulff(quarter, [[0.0, -1.0], u2.tolist()], [1.0, 0.5])
    K2 = pc.scale_shape(K, 2.0)
    assert K2.effective_h == pytest.approx(2.0 * K.effective_h)


def test_radial_quarter(quarter_single):
    rho, idx = pc.radial(quarter_single, [0.0, 1.0])
    assert rho == pytest.approx(1.0)
    assert idx == 0
    rho, _ = pc.radial(quarter_single, [S2, S2])
    assert rho == pytest.approx(math.sqrt(2.0))


def test_radial_outside_cone(quarter_single):
    with pytest.raises(DirectionOutsideCone):
        pc.radial(quarter_single, [1.0, 0.0])


def test_radial_two_directions_bisection_oracle(quarter):
    u2 = -np.array([math.sin(0.4), math.cos(0.4)])
    K = pc.make_wulff(quarter, [[0.0, -1.0], u2.tolist()], [1.0, 1.2])
    v = np.array([0.0, 1.0])
    rho, idx = pc.radial(K, v)
    # bisection oracle on the membership predicate along the ray
    lo, hi = 1e-6, 50.0
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if pc.contains(K, mid * v):
            hi = mid
        else:
            lo = mid
    assert rho == pytest.approx(hi, rel=1e-9)
    assert idx == int(np.argmax([1.0 / 1.0, 1.2 / (-(v @ u2))]))


def test_contains_examples(quarter_single):
    assert pc.contains(quarter_single, [0.0, 2.0])
    assert not pc.contains(quarter_single, [0.0, 0.5])
    assert pc.contains(quarter_single, [0.9, 1.0])


def test_combine_support(quarter):
    K = pc.make_wulff(quarter, [[0.0, -1.0]], [1.0])
    L = pc.make_wulff(quarter, [[0.0, -1.0]], [3.0])
    assert pc.combine_support(K, L, 0.0) == pytest.approx([1.0])
    assert pc.combine_support(K, L, 1.0) == pytest.approx([3.0])
    assert pc.combine_support(K, L, 0.5) == pytest.approx([2.0])


def test_combine_support_mismatch(quarter, octant):
    K = pc.make_wulff(quarter, [[0.0, -1.0]], [1.0])
    M = pc.make_wulff(octant, [(-np.ones(3) / math.sqrt(3)).tolist()], [1.0])
    with pytest.raises(MismatchedOmega):
        pc.combine_support(K, M, 0.5)


def test_round_trip_effective_support(quarter):
    rng = np.random.default_rng(5)
    for _ in range(20):
        K = pc.random_wulff(quarter, 3, rng)
        K2 = pc.make_wulff(quarter, K.omega, K.effective_h)
        assert K2.effective_h == pytest.approx(K.effective_h, rel=1e-7)
        assert np.all(K2.facet_active)


def test_radial_support_duality(octant):
    rng = np.random.default_rng(9)
    K = pc.random_wulff(octant, 3, rng)
    for _ in range(50):
        v = rng.dirichlet(np.ones(3)) @ np.eye(3)
        v = v / np.linalg.norm(v)
        if not pc.cone_contains(octant, v):
            continue
        rho, _ = pc.radial(K, v)
        assert pc.contains(K, rho * v * (1.0 + 1e-9))
        assert not pc.contains(K, rho * v * (1.0 - 1e-6))


def test_pseudo_cone_law(octant):
    rng = np.random.default_rng(11)
    K = pc.random_wulff(octant, 2, rng)
    # boundary samples via the radial map
    for _ in range(100):
        v = rng.standard_normal(3)
        v = np.abs(v)
        v /= np.linalg.norm(v)
        rho, _ = pc.radial(K, v)
        x = rho * v
        for lam in (1.5, 2.0, 10.0):
            assert pc.contains(K, lam * x)
        c = np.abs(rng.standard_normal(3))
        assert pc.contains(K, x + c)


def test_positive_homogeneity_radial(quarter):
    rng = np.random.default_rng(3)
    K = pc.random_wulff(quarter, 2, rng)
    K3 = pc.scale_shape(K, 3.0)
    v = np.array([0.1, 1.0])
    v /= np.linalg.norm(v)
    rho1, _ = pc.radial(K, v)
    rho3, _ = pc.radial(K3, v)
    assert rho3 == pytest.approx(3.0 * rho1)


def test_effective_dominates_defining(octant):
    rng = np.random.default_rng(13)
    for _ in range(10):
        dirs = pc.random_direction_set(octant, 3, rng)
        h = rng.uniform(0.5, 2.0, 3)
        K = pc.make_wulff(octant, dirs, h)
        assert np.all(K.effective_h >= K.defining_h - 1e-12)
        active = K.effective_h - K.defining_h <= 1e-7 * np.maximum(1, K.defining_h)
        assert np.array_equal(K.facet_active, active)


def test_wulff_vertices_quarter(quarter_single):
    verts = pc.wulff_vertices(quarter_single)
    expected = {(-1.0, 1.0), (1.0, 1.0)}
    got = {tuple(np.round(v, 9)) for v in verts}
    assert got == expected


def test_facet_arcs_partition(quarter):
    rng = np.random.default_rng(21)
    K = pc.random_wulff(quarter, 3, rng)
    arcs = pc.facet_arcs(K)
    assert len(arcs) == 3
    lo, hi = math.pi / 4, 3 * math.pi / 4
    ends = sorted([a for _, a, _ in arcs] + [b for _, _, b in arcs])
    assert ends[0] == pytest.approx(lo, abs=1e-8)
    assert ends[-1] == pytest.approx(hi, abs=1e-8)
    # arcs tile the interval: interior endpoints appear twice
    for i, j in combinations(range(len(arcs)), 2):
        _, a1, b1 = arcs[i]
        _, a2, b2 = arcs[j]
        assert min(b1, b2) <= max(a1, a2) + 1e-8
