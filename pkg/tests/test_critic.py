import numpy as np
import pytest

import safeadp as sa
from safeadp.critic import PROJ_LAYER


@pytest.fixture()
def setup(barrier, cost_spec, safeset):
    return {
        "sys": sa.single_integrator(),
        "cfg": sa.StaFConfig(),
        "gains": sa.LearnerGains(),
        "bar": barrier,
        "cost": cost_spec,
        "safeset": safeset,
    }


def _bell(setup, y, x, Wc, Wa):
    return sa.bellman_at(y, x, Wc, Wa, setup["sys"], setup["cost"],
                         setup["bar"], setup["cfg"], setup["gains"])


class TestBellman:
    def test_origin_trivial(self, setup):
        s = _bell(setup, np.zeros(2), np.zeros(2), np.zeros(3), np.zeros(3))
        assert s.delta == 0.0
        assert s.rho == 1.0
        assert np.all(s.omega == 0.0)
        assert np.all(s.Lambda == 0.0)

    def test_affine_in_wc(self, setup):
        rng = np.random.default_rng(20)
        x = np.array([1.5, -0.5])
        Wa = rng.normal(size=3)
        w1, w2 = rng.normal(size=(2, 3))
        s0 = _bell(setup, x, x, np.zeros(3), Wa)
        s1 = _bell(setup, x, x, w1, Wa)
        s2 = _bell(setup, x, x, w2, Wa)
        s12 = _bell(setup, x, x, w1 + w2, Wa)
        assert s12.delta - s0.delta == pytest.approx(
            (s1.delta - s0.delta) + (s2.delta - s0.delta), abs=1e-10)
        assert s1.delta - s0.delta == pytest.approx(float(w1 @ s1.omega), abs=1e-10)

    def test_delta_matches_independent_assembly(self, setup):
        # cross-check: delta = Lf Vhat + Lg Vhat u + r assembled by hand
        sys_, cfg, bar, cost = setup["sys"], setup["cfg"], setup["bar"], setup["cost"]
        rng = np.random.default_rng(21)
        for _ in range(50):
            x = rng.uniform(-2, 2, size=2)
            if setup["safeset"].h(x) < 0.05:
                continue
            Wc, Wa = rng.normal(size=(2, 3))
            s = _bell(setup, x, x, Wc, Wa)
            u = sa.policy_hat(cfg, bar, cost, sys_, Wa, x, x)
            xdot = np.asarray(sys_.drift(x), float) + np.asarray(sys_.input_map(x), float) @ u
            gradV = sa.grad_sigma(cfg, x, x).T @ Wc + sa.grad_Bbar(bar, x)
            ref = float(gradV @ xdot) + sa.instantaneous_cost(cost, bar, x, u)
            assert s.delta == pytest.approx(ref, abs=1e-10)

    def test_rho_and_normalization_bounds(self, setup):
        rng = np.random.default_rng(22)
        nu = setup["gains"].nu
        for _ in range(100):
            x = rng.uniform(-2, 2, size=2)
            if setup["safeset"].h(x) < 0.05:
                continue
            Wc, Wa = rng.normal(scale=5.0, size=(2, 3))
            s = _bell(setup, x, x, Wc, Wa)
            assert s.rho >= 1.0
            assert np.linalg.norm(s.omega) / s.rho <= 1.0 / (2.0 * np.sqrt(nu)) + 1e-12
            assert np.linalg.eigvalsh(s.Lambda)[-1] <= 1.0 / (4.0 * nu) + 1e-12


class TestExtrapolation:
    def test_points_in_box(self, setup):
        rng = np.random.default_rng(23)
        x = np.array([3.0, 3.5])
        half = 0.05 * setup["cfg"].theta(x)
        pts = sa.sample_extrapolation_points(rng, x, 50, setup["cfg"], setup["safeset"])
        assert len(pts) == 50
        for p in pts:
            assert np.all(np.abs(p - x) <= half + 1e-15)
            assert setup["safeset"].h(p) > 0.0

    def test_deterministic_given_seed(self, setup):
        x = np.array([1.0, -1.0])
        a = sa.sample_extrapolation_points(np.random.default_rng(7), x, 5,
                                           setup["cfg"], setup["safeset"])
        b = sa.sample_extrapolation_points(np.random.default_rng(7), x, 5,
                                           setup["cfg"], setup["safeset"])
        np.testing.assert_array_equal(np.asarray(a), np.asarray(b))

    def test_collapse_at_origin(self, setup):
        # theta(0) = 0, so the sampling box degenerates to the anchor
        pts = sa.sample_extrapolation_points(np.random.default_rng(0), np.zeros(2),
                                             3, setup["cfg"], setup["safeset"])
        for p in pts:
            np.testing.assert_array_equal(p, np.zeros(2))


class TestCriticUpdate:
    def test_zero_error_zero_update(self, setup):
        s = _bell(setup, np.zeros(2), np.zeros(2), np.zeros(3), np.zeros(3))
        rhs = sa.critic_rhs(setup["gains"], np.eye(3), s, [s])
        assert np.all(rhs == 0.0)

    def test_matches_squared_error_gradient(self, setup):
        # the update is -Gamma times the gradient of the normalized
        # squared Bellman error in the critic weights
        gains = setup["gains"]
        rng = np.random.default_rng(24)
        for _ in range(20):
            x = rng.uniform(0.5, 2.0, size=2) * np.array([-1.0, 1.0])
            Wc, Wa = rng.normal(size=(2, 3))
            Gamma = np.eye(3) + 0.1 * np.ones((3, 3))
            pts = sa.sample_extrapolation_points(rng, x, gains.N,
                                                 setup["cfg"], setup["safeset"])
            on = _bell(setup, x, x, Wc, Wa)
            ext = [_bell(setup, p, x, Wc, Wa) for p in pts]
            rhs = sa.critic_rhs(gains, Gamma, on, ext)

            def E(w):
                so = _bell(setup, x, x, w, Wa)
                total = gains.kc1 * so.delta ** 2 / (2.0 * so.rho ** 2)
                for p in pts:
                    sk = _bell(setup, p, x, w, Wa)
                    total += gains.kc2 / gains.N * sk.delta ** 2 / (2.0 * sk.rho ** 2)
                return total

            from safeadp.oracles import central_difference
            fd = central_difference(E, Wc)
            ref = -Gamma @ fd
            assert np.linalg.norm(rhs - ref) <= 1e-6 * max(np.linalg.norm(ref), 1.0)


class TestGammaDynamics:
    def test_pure_forgetting(self, setup):
        gains = sa.LearnerGains(kc1=0.0, kc2=0.0)
        s = _bell(setup, np.ones(2), np.ones(2), np.ones(3), np.ones(3))
        G = np.diag([1.0, 2.0, 3.0])
        np.testing.assert_allclose(sa.gamma_rhs(gains, G, s, [s]), gains.beta * G,
                                   atol=1e-15)

    def test_scalar_contraction_sign(self, setup):
        gains = setup["gains"]
        x = np.array([1.5, 1.5 - 2.0])  # keep clear of the obstacle
        s = _bell(setup, x, x, np.ones(3), np.ones(3))
        G = 10.0 * np.eye(3)
        dG = sa.gamma_rhs(gains, G, s, [s])
        S = sa.regressor_sum(gains, s, [s])
        np.testing.assert_allclose(dG, 0.5 * ((gains.beta * G - G @ S @ G)
                                              + (gains.beta * G - G @ S @ G).T), atol=1e-12)
        assert np.all(np.linalg.eigvalsh(dG - gains.beta * G) <= 1e-12)

    def test_symmetric_output(self, setup):
        rng = np.random.default_rng(25)
        x = np.array([-1.0, 2.0])
        s = _bell(setup, x, x, rng.normal(size=3), rng.normal(size=3))
        G = np.eye(3) + rng.normal(scale=0.01, size=(3, 3))
        G = 0.5 * (G + G.T)
        dG = sa.gamma_rhs(setup["gains"], G, s, [s])
        np.testing.assert_allclose(dG, dG.T, atol=1e-15)


class TestActorProjection:
    def test_interior_unchanged(self):
        gains = sa.LearnerGains(wa_bound=10.0)
        Wa = np.array([1.0, 2.0, 3.0])
        Wc = np.array([0.0, 0.0, 0.0])
        np.testing.assert_allclose(sa.actor_rhs(gains, Wa, Wc),
                                   -gains.ka1 * (Wa - Wc))

    def test_inward_update_unchanged_at_boundary(self):
        gains = sa.LearnerGains(wa_bound=1.0)
        Wa = np.array([1.05, 0.0, 0.0])  # outside the nominal bound
        Wc = np.zeros(3)  # update points straight back toward the origin
        np.testing.assert_allclose(sa.actor_rhs(gains, Wa, Wc),
                                   -gains.ka1 * Wa)

    def test_outward_update_projected(self):
        gains = sa.LearnerGains(wa_bound=1.0)
        Wa = np.array([np.sqrt(1.0 + PROJ_LAYER), 0.0, 0.0])  # outer edge
        Wc = 10.0 * Wa  # update points radially outward
        out = sa.actor_rhs(gains, Wa, Wc)
        # full projection: the radial component is removed entirely
        assert float(out @ Wa) == pytest.approx(0.0, abs=1e-12)

    def test_boundary_layer_is_continuous(self):
        gains = sa.LearnerGains(wa_bound=1.0)
        Wc = np.array([5.0, 0.0, 0.0])
        r_in = np.sqrt(1.0 - PROJ_LAYER)
        eps = 1e-7
        below = sa.actor_rhs(gains, np.array([r_in - eps, 0.0, 0.0]), Wc)
        above = sa.actor_rhs(gains, np.array([r_in + eps, 0.0, 0.0]), Wc)
        assert np.linalg.norm(below - above) <= 1e-4

    def test_norm_never_escapes(self):
        # forward-Euler push with an outward critic cannot leave the layer
        gains = sa.LearnerGains(wa_bound=1.0, ka1=1.0)
        Wa = np.array([0.9, 0.0, 0.0])
        Wc = np.array([50.0, 0.0, 0.0])
        dt = 1e-3
        for _ in range(5000):
            Wa = Wa + dt * sa.actor_rhs(gains, Wa, Wc)
        assert np.linalg.norm(Wa) <= gains.wa_bound * np.sqrt(1.0 + PROJ_LAYER) + 1e-6


class TestExcitation:
    def test_zero_history_flags_weak(self):
        Z = np.zeros((5, 3, 3))
        t = np.linspace(0.0, 2.0, 5)
        m = sa.excitation_metrics(t, Z, Z, window=1.0)
        assert m == {"c1_now": 0.0, "c2_window": 0.0, "c3_window": 0.0}
        assert sa.weak_excitation(m)

    def test_constant_scalar_history(self):
        # L = 1, Lambda(t) = 0.5 over a window of length 2
        t = np.linspace(0.0, 2.0, 21)
        lam = np.full((21, 1, 1), 0.5)
        m = sa.excitation_metrics(t, lam, lam, window=2.0)
        assert m["c1_now"] == pytest.approx(0.5)
        assert m["c2_window"] == pytest.approx(1.0)
        assert m["c3_window"] == pytest.approx(1.0)
        assert not sa.weak_excitation(m)

    def test_empty_history_raises(self):
        with pytest.raises(ValueError):
            sa.excitation_metrics([], [], [], window=1.0)


def test_gains_validation():
    with pytest.raises(ValueError):
        sa.LearnerGains(nu=0.0)
    with pytest.raises(ValueError):
        sa.LearnerGains(kc1=-0.1)
    with pytest.raises(ValueError):
        sa.LearnerGains(N=0)
