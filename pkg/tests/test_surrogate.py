from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import cn, random_channels
from twrelay.lift import LiftedPoint, lift_point, lifted_consumption
from twrelay.model import ChannelSet, ScenarioParams, link_matrix
from twrelay.surrogate import (
    Expansion,
    F_lower,
    ee_bound_coeffs,
    f_lower,
    log_bound_coeffs,
    log_minorant,
    quad_minorant,
    ratio_minorant,
    reverse_convex_linearize,
    trust_region_margin,
)

pos = st.floats(1e-3, 1e3)


@pytest.fixture
def unit_exp():
    """Scalar expansion with desired link 1 and alpha = beta = 1, so x = 1."""
    ch = ChannelSet(h=np.ones((2, 1, 1)), f=np.ones((1, 2, 1)))
    sp = ScenarioParams(P_U_max=10.0, P_sumU_max=20.0, P_A_max=10.0, P_sumR_max=10.0, r=np.zeros(1))
    x = LiftedPoint(np.ones((1, 1, 1)), np.ones(2), np.ones(2))
    return Expansion.at(x, ch, sp)


@pytest.fixture
def random_exp(rng):
    K, M, N = 2, 2, 2
    ch = random_channels(rng, K, M, N)
    sp = ScenarioParams.from_relay_budget(K, M, 10.0)
    x = lift_point(rng.uniform(0.5, 2.0, 2 * K), cn(rng, M, N, N), ch, sp)
    return Expansion.at(x, ch, sp)


class TestCoefficients:
    def test_zero(self):
        c = log_bound_coeffs(0.0)
        assert c.a == 0 and c.b == 0
        e = ee_bound_coeffs(0.0, 3.0)
        assert e.p == 0 and e.q == 0 and e.r == 0

    @pytest.mark.parametrize("x,a,b", [(1.0, 1.19315, 0.5), (3.0, 2.13629, 2.25)])
    def test_log_values(self, x, a, b):
        c = log_bound_coeffs(x)
        assert c.a == pytest.approx(a, abs=1e-5)
        assert c.b == pytest.approx(b)

    def test_ee_values(self):
        e = ee_bound_coeffs(1.0, 2.0)
        assert e.p == pytest.approx(0.94315, abs=1e-5)
        assert e.q == pytest.approx(0.25)
        assert e.r == pytest.approx(0.17329, abs=1e-5)

    def test_ee_homogeneity(self):
        e1, e2 = ee_bound_coeffs(2.5, 1.5), ee_bound_coeffs(2.5, 3.0)
        assert e2.p == pytest.approx(e1.p / 2)
        assert e2.q == pytest.approx(e1.q / 2)
        assert e2.r == pytest.approx(e1.r / 4)

    def test_negative_rejected(self):
        with pytest.raises(ValueError):
            log_bound_coeffs(-1.0)
        with pytest.raises(ValueError):
            ee_bound_coeffs(1.0, 0.0)


class TestScalarMinorants:
    @given(pos, pos)
    @settings(max_examples=300, deadline=None)
    def test_log(self, x, xb):
        assert np.log1p(x) >= log_minorant(x, xb) - 1e-10 * max(1.0, np.log1p(x))

    @given(pos)
    def test_log_tight(self, xb):
        assert log_minorant(xb, xb) == pytest.approx(np.log1p(xb), rel=1e-12)

    @given(pos, pos, pos, pos)
    @settings(max_examples=300, deadline=None)
    def test_ratio(self, x, xb, t, tb):
        lhs = np.log1p(x) / t
        assert lhs >= ratio_minorant(x, xb, t, tb) - 1e-10 * max(1.0, lhs)

    def test_ratio_hand(self):
        # x = 2, t = 2 around (1, 2)
        v = ratio_minorant(2.0, 1.0, 2.0, 2.0)
        assert v == pytest.approx(0.94315 - 0.25 / 2 - 0.17329 * 2, abs=1e-4)
        assert v <= np.log(3) / 2

    def test_quad(self, rng):
        z, zb = cn(rng, 10_000), cn(rng, 10_000)
        a, ab, b, bb = np.exp(rng.uniform(-4, 4, (4, 10_000)))
        lhs = np.abs(z) ** 2 / np.sqrt(a * b)
        assert np.all(lhs >= quad_minorant(z, zb, a, ab, b, bb) - 1e-10 * np.maximum(1, lhs))
        np.testing.assert_allclose(quad_minorant(zb, zb, ab, ab, bb, bb), np.abs(zb) ** 2 / np.sqrt(ab * bb), rtol=1e-12)


class TestTrustRegion:
    def test_at_expansion(self, random_exp):
        x = random_exp.point
        for k in range(4):
            c = random_exp.chi[k]
            m = trust_region_margin(x.W, x.alpha[k], x.beta[c], random_exp, k)
            assert m == pytest.approx(abs(random_exp.Lbar[k]) ** 2, rel=1e-12)

    def test_zero_beamformer(self, random_exp):
        x = random_exp.point
        m = trust_region_margin(0 * x.W, x.alpha[0], x.beta[random_exp.chi[0]], random_exp, 0)
        assert m == pytest.approx(-abs(random_exp.Lbar[0]) ** 2)

    def test_affine(self, random_exp, rng):
        W1, W2 = cn(rng, *random_exp.point.W.shape), cn(rng, *random_exp.point.W.shape)
        a1, a2, b1, b2 = rng.uniform(0.5, 2, 4)
        mid = trust_region_margin((W1 + W2) / 2, (a1 + a2) / 2, (b1 + b2) / 2, random_exp, 1)
        avg = 0.5 * (trust_region_margin(W1, a1, b1, random_exp, 1) + trust_region_margin(W2, a2, b2, random_exp, 1))
        assert mid == pytest.approx(avg, rel=1e-12)


class TestLogBound:
    def test_hand_example(self, unit_exp):
        W = 1.2 * np.ones((1, 1, 1))
        assert trust_region_margin(W, 1.0, 1.0, unit_exp, 0) == pytest.approx(1.4)
        v = f_lower(W, 1.0, 1.0, unit_exp, 0)
        assert v == pytest.approx(0.83600, abs=1e-5)
        assert v <= np.log(1 + 1.44)

    def test_tight(self, random_exp):
        x = random_exp.point
        for k in range(4):
            c = random_exp.chi[k]
            assert f_lower(x.W, x.alpha[k], x.beta[c], random_exp, k) == pytest.approx(
                np.log1p(random_exp.xbar[k]), rel=1e-12
            )

    def test_outside_region(self, random_exp):
        x = random_exp.point
        with pytest.raises(ValueError):
            f_lower(0 * x.W, x.alpha[0], x.beta[1], random_exp, 0)

    def _samples(self, exp, rng, n):
        x = exp.point
        out = []
        while len(out) < n:
            W = x.W * (1 + 0.5 * cn(rng, *x.W.shape))
            a = x.alpha * np.exp(rng.uniform(-1, 1, 4))
            b = x.beta * np.exp(rng.uniform(-1, 1, 4))
            out.append((W, a, b))
        return out

    def test_minorant_random(self, random_exp, rng):
        exp = random_exp
        L = lambda W: link_matrix(W, exp.ch)[0]
        checked = 0
        for W, a, b in self._samples(exp, rng, 2000):
            for k in range(4):
                c = exp.chi[k]
                if trust_region_margin(W, a[k], b[c], exp, k) <= 0:
                    continue
                true = np.log1p(abs(L(W)[k, c]) ** 2 / np.sqrt(a[k] * b[c]))
                assert f_lower(W, a[k], b[c], exp, k) <= true + 1e-10 * max(1.0, true)
                checked += 1
        assert checked > 1000

    def test_midpoint_concave(self, random_exp, rng):
        exp = random_exp
        pts = self._samples(exp, rng, 400)
        for (W1, a1, b1), (W2, a2, b2) in zip(pts[::2], pts[1::2]):
            k, c = 2, exp.chi[2]
            if min(trust_region_margin(W1, a1[k], b1[c], exp, k), trust_region_margin(W2, a2[k], b2[c], exp, k)) <= 0:
                continue
            mid = f_lower((W1 + W2) / 2, (a1[k] + a2[k]) / 2, (b1[c] + b2[c]) / 2, exp, k)
            avg = 0.5 * (f_lower(W1, a1[k], b1[c], exp, k) + f_lower(W2, a2[k], b2[c], exp, k))
            assert mid >= avg - 1e-12


class TestEeBound:
    def test_tight(self, random_exp):
        x = random_exp.point
        for k in range(4):
            v = F_lower(x.W, x.alpha[k], x.beta, random_exp, k)
            assert v == pytest.approx(np.log1p(random_exp.xbar[k]) / random_exp.tbar, rel=1e-12)

    def test_minorant(self, random_exp, rng):
        exp = random_exp
        x = exp.point
        for _ in range(500):
            W = x.W * (1 + 0.3 * cn(rng, *x.W.shape))
            a = x.alpha * np.exp(rng.uniform(-0.5, 0.5, 4))
            b = x.beta * np.exp(rng.uniform(-0.5, 0.5, 4))
            t = lifted_consumption(LiftedPoint(W, np.ones(4), b), exp.ch, exp.sp, exp.topo)
            for k in range(4):
                c = exp.chi[k]
                if trust_region_margin(W, a[k], b[c], exp, k) <= 0:
                    continue
                L = link_matrix(W, exp.ch)[0, k, c]
                true = np.log1p(abs(L) ** 2 / np.sqrt(a[k] * b[c])) / t
                assert F_lower(W, a[k], b, exp, k) <= true + 1e-10


class TestReverseConvexCut:
    def test_tangent_at_expansion(self, random_exp):
        exp = random_exp
        x = exp.point
        r = 0.5 * np.log1p(exp.xbar[0])
        cut = reverse_convex_linearize(exp, 0, r)
        c = exp.chi[0]
        assert cut.value(exp.Lbar[0], x.alpha[0], x.beta[c]) == pytest.approx(
            cut.exact(exp.Lbar[0], x.alpha[0], x.beta[c]), rel=1e-12
        )

    def test_zero_floor(self, random_exp):
        cut = reverse_convex_linearize(random_exp, 1, 0.0)
        assert cut.gain == 0.0
        assert cut.value(random_exp.Lbar[1], 1.0, 1.0) == pytest.approx(abs(random_exp.Lbar[1]) ** 2)

    def test_minorant(self, random_exp, rng):
        exp = random_exp
        x = exp.point
        cut = reverse_convex_linearize(exp, 3, 0.7)
        c = exp.chi[3]
        L = exp.Lbar[3] + cn(rng, 10_000)
        a = x.alpha[3] * np.exp(rng.uniform(-2, 2, 10_000))
        b = x.beta[c] * np.exp(rng.uniform(-2, 2, 10_000))
        for i in range(10_000):
            assert cut.value(L[i], a[i], b[i]) <= cut.exact(L[i], a[i], b[i]) + 1e-9
