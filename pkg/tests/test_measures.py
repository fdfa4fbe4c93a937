import math

import numpy as np
import pytest

import pseudocone as pc
from pseudocone.errors import MismatchedOmega, ValidationError, ZeroVolume

from conftest import closed_form_surface

INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


def test_discrete_measure_validation(quarter):
    omega = pc.direction_set(quarter, [[0.0, -1.0]])
    with pytest.raises(ValidationError):
        pc.DiscreteMeasure(omega=omega, weights=np.array([-0.1]))
    with pytest.raises(ValidationError):
        pc.DiscreteMeasure(omega=omega, weights=np.array([1.0, 2.0]))
    mu = pc.DiscreteMeasure(omega=omega, weights=np.array([0.0]))
    assert not mu.is_nonzero()


class TestSurfaceMeasure:
    @pytest.mark.parametrize("t", [0.5, 1.0, 2.0])
    def test_single_direction_closed_form(self, quarter, mc_med, t):
        K = pc.make_wulff(quarter, [[0.0, -1.0]], [t])
        s = pc.surface_measure(K, mc_med)
        assert abs(s.weights[0] - closed_form_surface(t)) <= 3 * s.std_errs[0]

    def test_sup_over_t_bounded(self, quarter):
        # the single-facet weight never beats the full boundary integral
        for t in np.geomspace(0.05, 6.0, 40):
            K = pc.make_wulff(quarter, [[0.0, -1.0]], [float(t)])
            w = pc.surface_measure_exact(K).weights[0]
            assert w <= INV_SQRT_2PI + 1e-12

    def test_well_separated_facets_nearly_independent(self, quarter):
        # two active facets always share a vertex and at most one keeps its
        # foot point, so only the foot-keeping facet can match its
        # single-facet value closely; the other is dominated by it
        phi = 0.7
        u1, h1 = [0.0, -1.0], 2.2
        u2 = [-math.sin(phi), -math.cos(phi)]
        h2 = 2.1 * math.sin(phi) + h1 * math.cos(phi)  # foot of facet 1 kept
        K = pc.make_wulff(quarter, [u1, u2], [h1, h2])
        assert K.facet_active.all()
        mc = pc.MCConfig(seed=7, n_samples=20_000)
        s = pc.surface_measure(K, mc)
        singles = []
        for u, h in ((u1, h1), (u2, h2)):
            singles.append(pc.surface_measure(pc.make_wulff(quarter, [u], [h]), mc))
        # shrinking the shape can only shrink every facet
        for i in (0, 1):
            assert s.weights[i] <= singles[i].weights[0] \
                + 3 * math.hypot(s.std_errs[i], singles[i].std_errs[0])
        # the foot-keeping facet is nearly independent of the other one
        sig = math.hypot(s.std_errs[1], singles[1].std_errs[0])
        assert abs(s.weights[1] - singles[1].weights[0]) \
            <= 3 * sig + 0.05 * singles[1].weights[0]


class TestConeMeasure:
    def test_quarter_closed_form(self, quarter, mc_med):
        t = 1.3
        K = pc.make_wulff(quarter, [[0.0, -1.0]], [t])
        c = pc.cone_measure(K, mc_med)
        assert abs(c.weights[0] - t * closed_form_surface(t)) <= 3 * c.std_errs[0]

    def test_vanishes_at_both_ends(self, quarter, mc_fast):
        for t in (1e-3, 9.0):
            K = pc.make_wulff(quarter, [[0.0, -1.0]], [t])
            c = pc.cone_measure(K, mc_fast)
            assert c.weights[0] < 1e-3

    def test_identity_with_surface(self, octant, mc_fast):
        rng = np.random.default_rng(2)
        K = pc.random_wulff(octant, 3, rng)
        s = pc.surface_measure(K, mc_fast)
        c = pc.cone_measure(K, mc_fast)
        assert np.array_equal(c.weights, K.effective_h * s.weights)


class TestMixedVolume:
    def test_self_mixed_is_total_cone_measure(self, quarter, mc_fast):
        rng = np.random.default_rng(3)
        K = pc.random_wulff(quarter, 3, rng)
        mv = pc.mixed_volume(K, K, mc_fast)
        total = pc.cone_measure(K, mc_fast).weights.sum()
        assert mv.value == pytest.approx(total, rel=1e-12)

    def test_strict_covolume_bound(self, quarter, mc_med):
        rng = np.random.default_rng(4)
        K = pc.random_wulff(quarter, 2, rng)
        mv = pc.mixed_volume(K, K, mc_med)
        cov = pc.covolume_radial(K, mc_med)
        margin = cov.value - mv.value / 2.0
        assert margin > 3.0 * math.hypot(mv.std_err / 2.0, cov.std_err)

    def test_linearity_in_second_argument(self, quarter, mc_fast):
        rng = np.random.default_rng(5)
        K = pc.random_wulff(quarter, 2, rng)
        L = pc.make_wulff(quarter, K.omega, K.defining_h * 1.2)
        Lp = pc.make_wulff(quarter, K.omega, K.defining_h * 0.8)
        mid = pc.make_wulff(quarter, K.omega, pc.combine_support(L, Lp, 0.5))
        lhs = pc.mixed_volume(K, mid, mc_fast).value
        rhs = 0.5 * pc.mixed_volume(K, L, mc_fast).value \
            + 0.5 * pc.mixed_volume(K, Lp, mc_fast).value
        assert lhs == pytest.approx(rhs, rel=1e-10)

    def test_mismatched_omega(self, quarter, mc_fast):
        K = pc.make_wulff(quarter, [[0.0, -1.0]], [1.0])
        L = pc.make_wulff(quarter, [[-math.sin(0.3), -math.cos(0.3)]], [1.0])
        with pytest.raises(MismatchedOmega):
            pc.mixed_volume(K, L, mc_fast)


class TestFunctionals:
    def test_wulff_improvement_I(self, quarter, mc_fast):
        rng = np.random.default_rng(6)
        omega = pc.direction_set(
            quarter, pc.random_direction_set(quarter, 3, rng)
        )
        mu = pc.DiscreteMeasure(omega=omega, weights=rng.uniform(0.1, 1.0, 3))
        for _ in range(20):
            h = rng.uniform(0.3, 2.0, 3)
            K = pc.make_wulff(quarter, omega, h)
            base = pc.functional_I(mu, h, quarter, mc_fast)
            improved = pc.functional_I(mu, K.effective_h, quarter, mc_fast)
            assert improved.value >= base.value - 1e-12

    def test_I_decays_at_large_scale(self, quarter, mc_med):
        # Gaussian decay beats the linear growth of the pairing
        omega = pc.direction_set(quarter, [[0.0, -1.0]])
        mu = pc.DiscreteMeasure(omega=omega, weights=np.array([0.5]))
        vals = [
            pc.functional_I(mu, np.array([lam]), quarter, mc_med).value
            for lam in (1.0, 2.5, 4.0)
        ]
        assert vals[2] < vals[1] < vals[0]
        tiny = pc.functional_I(mu, np.array([1e-4]), quarter, mc_med).value
        assert tiny < vals[0]

    def test_wulff_improvement_L(self, quarter, mc_fast):
        rng = np.random.default_rng(7)
        omega = pc.direction_set(
            quarter, pc.random_direction_set(quarter, 2, rng)
        )
        mu = pc.DiscreteMeasure(omega=omega, weights=rng.uniform(0.1, 0.6, 2))
        for _ in range(10):
            h = rng.uniform(0.3, 2.0, 2)
            K = pc.make_wulff(quarter, omega, h)
            base = pc.functional_L(mu, h, quarter, mc_fast)
            improved = pc.functional_L(mu, K.effective_h, quarter, mc_fast)
            assert improved.value >= base.value - 1e-12

    def test_L_unit_function_witness(self, quarter, mc_med):
        rng = np.random.default_rng(8)
        dirs = pc.random_direction_set(quarter, 3, rng)
        omega = pc.direction_set(quarter, dirs)
        mu = pc.DiscreteMeasure(omega=omega, weights=rng.uniform(0.2, 1.0, 3))
        ones = np.ones(3)
        val = pc.functional_L(mu, ones, quarter, mc_med)
        # witness: z = s * ref_dir pushed deep enough that z + C sits inside
        s = 1.0 / min(-(dirs @ quarter.ref_dir))
        z = s * quarter.ref_dir
        rng2 = np.random.default_rng(9)
        pts = rng2.standard_normal((200_000, 2))
        witness = np.mean(pc.cone_contains(quarter, pts - z))
        sig = math.hypot(val.std_err, math.sqrt(witness * (1 - witness) / 2e5))
        assert val.value >= witness - 3.0 * sig

    def test_L_decays_at_large_scale(self, quarter, mc_med):
        omega = pc.direction_set(quarter, [[0.0, -1.0]])
        mu = pc.DiscreteMeasure(omega=omega, weights=np.array([0.5]))
        vals = [
            pc.functional_L(mu, np.array([lam]), quarter, mc_med).value
            for lam in (1.0, 2.5, 4.0)
        ]
        assert vals[2] < vals[1] < vals[0]


class TestNormalization:
    def test_scaling_in_mu(self, quarter, mc_fast):
        K = pc.make_wulff(quarter, [[0.0, -1.0]], [1.0])
        mu = pc.DiscreteMeasure(omega=K.omega, weights=np.array([0.3]))
        mu2 = pc.DiscreteMeasure(omega=K.omega, weights=np.array([0.6]))
        c1 = pc.normalization_c(K, mu, mc_fast)
        c2 = pc.normalization_c(K, mu2, mc_fast)
        assert c2.value == pytest.approx(2.0 * c1.value, rel=1e-12)

    def test_small_mu_large_volume(self, quarter, mc_fast):
        K = pc.make_wulff(quarter, [[0.0, -1.0]], [1e-3])
        mu = pc.DiscreteMeasure(omega=K.omega, weights=np.array([1e-6]))
        c = pc.normalization_c(K, mu, mc_fast)
        assert c.value < 1e-4

    def test_zero_volume_guard(self, quarter, mc_fast):
        K = pc.make_wulff(quarter, [[0.0, -1.0]], [9.0])
        mu = pc.DiscreteMeasure(omega=K.omega, weights=np.array([1.0]))
        with pytest.raises(ZeroVolume):
            pc.normalization_c(K, mu, mc_fast)

    def test_stationarity_self_consistency(self, quarter):
        # at a converged solution, c times the surface measure returns mu
        omega = pc.direction_set(quarter, [[0.0, -1.0]])
        mu = pc.DiscreteMeasure(omega=omega, weights=np.array([0.1]))
        rep = pc.solve_gaussian_minkowski(
            quarter, omega, mu, pc.SolveOptions(seed=4, tol_residual=0.01)
        )
        assert rep.converged
        K = rep.solution
        c = pc.normalization_c(K, mu, pc.MCConfig(seed=5, n_samples=200_000))
        s = pc.surface_measure_exact(K)
        resid = abs(c.value * s.weights[0] - mu.weights[0]) / mu.weights[0]
        assert resid < 0.02
