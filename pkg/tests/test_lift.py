import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import cn, random_channels
from twrelay.lift import (
    LiftedPoint,
    lift_point,
    lifted_ee,
    lifted_feasible,
    lifted_maximin,
    lifted_sinr,
    phi,
    psi,
    unlift,
    upsilon,
)
from twrelay.model import (
    ChannelSet,
    ScenarioParams,
    ee_objective,
    interference_plus_noise,
    link_coeff,
    pair_throughputs,
    relay_rows,
    relay_tx_power,
    sinr_all,
    two_way,
)


def _instance(rng, K=2, M=2, N=3, budget=10.0):
    ch = random_channels(rng, K, M, N)
    sp = ScenarioParams.from_relay_budget(K, M, budget)
    p = rng.uniform(0.1, 1.0, 2 * K) * sp.P_U_max / 2
    W = cn(rng, M, N, N) * 0.2
    return ch, sp, p, W


class TestLiftPoint:
    def test_beta(self, toy):
        ch, sp, _, W = toy
        x = lift_point(np.array([2.0, 2.0]), W, ch, sp)
        np.testing.assert_allclose(x.beta, [0.25, 0.25])

    def test_single_pair_alpha(self, toy):
        ch, sp, p, W = toy
        x = lift_point(p, W, ch, sp)
        # sqrt(alpha) is relay noise plus receiver noise: 1 + 1
        np.testing.assert_allclose(np.sqrt(x.alpha), [2.0, 2.0])

    def test_running_example_sinr(self, toy):
        ch, sp, p, W = toy
        x = lift_point(p, W, ch, sp)
        np.testing.assert_allclose(lifted_sinr(x, ch), sinr_all(p, W, ch, sp), rtol=1e-12)
        np.testing.assert_allclose(lifted_sinr(x, ch), [2.0, 2.0], rtol=1e-12)

    def test_sinr_contract_random(self, rng):
        for _ in range(20):
            ch, sp, p, W = _instance(rng, K=int(rng.integers(1, 4)))
            x = lift_point(p, W, ch, sp)
            np.testing.assert_allclose(lifted_sinr(x, ch), sinr_all(p, W, ch, sp), rtol=1e-12)

    def test_objectives_match(self, rng):
        ch, sp, p, W = _instance(rng)
        x = lift_point(p, W, ch, sp)
        assert lifted_maximin(x, ch, sp) == pytest.approx(np.min(pair_throughputs(p, W, ch, sp)), rel=1e-12)
        assert lifted_ee(x, ch, sp) == pytest.approx(ee_objective(p, W, ch, sp), rel=1e-12)

    def test_rejects_nonpositive_power(self, toy):
        ch, sp, _, W = toy
        with pytest.raises(ValueError):
            lift_point(np.array([0.0, 1.0]), W, ch, sp)

    def test_positivity_floor(self):
        x = LiftedPoint(np.zeros((1, 1, 1)), np.zeros(2), np.zeros(2))
        assert np.all(x.alpha > 0) and np.all(x.beta > 0)


class TestUnlift:
    def test_values(self):
        np.testing.assert_array_equal(unlift([1.0, 1.0]), [1.0, 1.0])
        np.testing.assert_array_equal(unlift([0.25, 0.25]), [2.0, 2.0])

    @given(st.lists(st.floats(1e-6, 1e6), min_size=1, max_size=8))
    @settings(max_examples=200, deadline=None)
    def test_round_trip(self, p):
        p = np.array(p)
        np.testing.assert_allclose(unlift(1.0 / p**2), p, rtol=1e-15)

    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            unlift([0.0])


class TestBuildingBlocks:
    def test_psi_arithmetic(self):
        ch = ChannelSet(h=np.array([1.0, 2.0]).reshape(2, 1, 1), f=np.ones((1, 2, 1)))
        W = np.ones((1, 1, 1))
        # |L_{0,1}|^2 = 4
        assert psi(W, ch, 0, 1, 4.0, 1.0) == pytest.approx(2.0)
        assert psi(0 * W, ch, 0, 1, 4.0, 1.0) == 0.0

    def test_upsilon_arithmetic(self):
        ch = ChannelSet(h=np.ones((2, 1, 3)), f=np.ones((1, 2, 3)))
        W = np.zeros((1, 3, 3))
        W[0, 0, :] = [1.0, 1.0, 2.0]  # f^H W = (1, 1, 2), squared norm 6
        assert upsilon(W, ch, 0, 4.0) == pytest.approx(3.0)
        assert upsilon(0 * W, ch, 0, 4.0) == 0.0

    def test_phi_arithmetic(self):
        assert phi(np.array([[3.0]]), np.array([2.0]), 1.0, 4.0) == pytest.approx(18.0)
        assert phi(np.zeros((2, 2)), np.ones(2), 1.0, 1.0) == 0.0

    def test_phi_reproduces_relay_power(self, rng):
        ch, sp, p, W = _instance(rng)
        for m in range(ch.M):
            total = sum(phi(W[m], ch.h[l, m], 1.0, 1.0 / p[l] ** 2) for l in range(4))
            total += sp.sigma_R2 * np.sum(np.abs(W[m]) ** 2)
            assert total == pytest.approx(relay_tx_power(p, W, ch, sp, m), rel=1e-12)

    @pytest.mark.parametrize("bad", [(0.0, 1.0), (1.0, -1.0)])
    def test_domain(self, toy, bad):
        ch, _, _, W = toy
        with pytest.raises(ValueError):
            psi(W, ch, 0, 1, *bad)

    def test_joint_convexity_midpoint(self, rng):
        ch = random_channels(rng, 2, 2, 2)
        worst = np.inf
        for _ in range(10_000 // 100):
            W1, W2 = cn(rng, 2, 2, 2), cn(rng, 2, 2, 2)
            a1, a2, b1, b2 = np.exp(rng.uniform(-3, 3, 4))
            Wm, am, bm = (W1 + W2) / 2, (a1 + a2) / 2, (b1 + b2) / 2
            for k, l in ((0, 1), (2, 3), (1, 0)):
                lhs = psi(Wm, ch, k, l, am, bm)
                rhs = 0.5 * (psi(W1, ch, k, l, a1, b1) + psi(W2, ch, k, l, a2, b2))
                worst = min(worst, rhs - lhs)
            lhs = upsilon(Wm, ch, 0, am)
            worst = min(worst, 0.5 * (upsilon(W1, ch, 0, a1) + upsilon(W2, ch, 0, a2)) - lhs)
            h = ch.h[0, 1]
            lhs = phi(Wm[1], h, am, bm)
            worst = min(worst, 0.5 * (phi(W1[1], h, a1, b1) + phi(W2[1], h, a2, b2)) - lhs)
        assert worst >= -1e-12


class TestLiftedFeasible:
    def test_lifted_design_is_tight(self, rng):
        ch, sp, p, W = _instance(rng)
        x = lift_point(p, W, ch, sp)
        assert lifted_feasible(x, ch, sp, tol=1e-12).ok
        den = interference_plus_noise(p, W, ch, sp, two_way(2))
        np.testing.assert_allclose(den / np.sqrt(x.alpha), 1.0, rtol=1e-14)

    def test_user_power_floor(self, rng):
        ch, sp, p, W = _instance(rng)
        x = lift_point(p, W, ch, sp)
        beta = x.beta.copy()
        beta[0] = 0.5 / sp.P_U_max**2
        rep = lifted_feasible(LiftedPoint(x.W, x.alpha, beta), ch, sp)
        assert "user_power_floor" in rep.names()

    def test_halved_alpha_flagged(self, rng):
        ch, sp, p, W = _instance(rng)
        x = lift_point(p, W, ch, sp)
        y = LiftedPoint(x.W, 0.5 * x.alpha, x.beta)
        assert "interference" in lifted_feasible(y, ch, sp).names()
        assert np.all(lifted_sinr(y, ch) > lifted_sinr(x, ch))

    def test_reverse_direction(self, rng):
        from twrelay.model import feasible

        ch, sp, p, W = _instance(rng)
        x = lift_point(p, W, ch, sp)
        y = LiftedPoint(x.W, 2.0 * x.alpha, 1.5 * x.beta)
        assert lifted_feasible(y, ch, sp).ok
        assert feasible(y.p, W, ch, sp, check_qos=False).ok
        # slack alpha only lowers the lifted objective below the true one
        assert lifted_maximin(y, ch, sp) <= np.min(pair_throughputs(y.p, W, ch, sp))

    def test_relay_cap(self, rng):
        ch, sp, p, W = _instance(rng)
        x = lift_point(p, 100 * W, ch, sp)
        assert {"relay_power", "relay_sum_power"} <= lifted_feasible(x, ch, sp).names()
