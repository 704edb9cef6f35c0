import numpy as np
import pytest

from conftest import cn, random_channels
from twrelay.cone import Status
from twrelay.lift import lifted_ee, lifted_sinr, lifted_maximin, lifted_pair_throughputs
from twrelay.model import ScenarioParams, one_way, two_way
from twrelay.solve import initial_point
from twrelay.subproblem import build, build_ee, build_maximin, expected_cone_count, extract, inject, solve_subproblem
from twrelay.surrogate import Expansion

DIMS = [(1, 1, 1), (2, 1, 2), (2, 2, 2), (3, 2, 1)]


def _exp(rng, K, M, N, topo=None, r=1.0):
    ch = random_channels(rng, K, M, N)
    sp = ScenarioParams.from_relay_budget(K, M, 10.0, r=r)
    topo = topo or two_way(K)
    return Expansion.at(initial_point(ch, sp, topo), ch, sp, topo)


class TestConeAudit:
    @pytest.mark.parametrize("dims", DIMS)
    @pytest.mark.parametrize("frozen", [False, True])
    def test_two_way(self, rng, dims, frozen):
        cp = build_maximin(_exp(rng, *dims), frozen_beta=frozen)
        for label, n in expected_cone_count(*dims, frozen_beta=frozen).items():
            assert cp.count(label=label) == n, label

    @pytest.mark.parametrize("dims", DIMS)
    def test_one_way(self, rng, dims):
        cp = build_ee(_exp(rng, *dims, topo=one_way(dims[0])))
        for label, n in expected_cone_count(*dims, one_way=True).items():
            assert cp.count(label=label) == n, label

    def test_trust_region_rows(self, rng):
        cp = build_maximin(_exp(rng, 2, 2, 2))
        assert cp.count(label="trust_region") == 4

    def test_unknown_objective(self, rng):
        with pytest.raises(ValueError):
            build(_exp(rng, 1, 1, 1), "bogus")


class TestInject:
    @pytest.mark.parametrize("dims", DIMS)
    def test_expansion_point_feasible(self, rng, dims):
        exp = _exp(rng, *dims)
        for cp in (build_maximin(exp), build_ee(exp, qos=0.5 * lifted_pair_throughputs(exp.point, exp.ch, exp.topo))):
            x = inject(cp, exp.point)
            assert cp.violation(x) <= 1e-9

    def test_maximin_value_is_lifted_objective(self, rng):
        exp = _exp(rng, 2, 2, 2)
        cp = build_maximin(exp)
        x = inject(cp, exp.point)
        assert cp.evaluate(x) == pytest.approx(lifted_maximin(exp.point, exp.ch, exp.sp), rel=1e-10)

    def test_ee_value_is_lifted_objective(self, rng):
        exp = _exp(rng, 2, 1, 2)
        cp = build_ee(exp, qos=np.zeros(2))
        x = inject(cp, exp.point)
        assert cp.evaluate(x) == pytest.approx(lifted_ee(exp.point, exp.ch, exp.sp), rel=1e-10)

    def test_extract_round_trip(self, rng):
        exp = _exp(rng, 2, 2, 2)
        cp = build_maximin(exp)
        x = inject(cp, exp.point)

        class _Sol:
            pass

        sol = _Sol()
        sol.x = x
        back = extract(sol, cp)
        np.testing.assert_allclose(back.W, exp.point.W, atol=1e-14)
        np.testing.assert_allclose(back.alpha, exp.point.alpha, rtol=1e-14)
        np.testing.assert_allclose(back.beta, exp.point.beta, rtol=1e-14)


class TestSolve:
    def test_maximin_improves_on_expansion(self, rng):
        exp = _exp(rng, 2, 2, 2)
        cp = build_maximin(exp)
        sol = solve_subproblem(cp)
        assert sol.status is Status.OPTIMAL
        assert sol.objective >= cp.evaluate(inject(cp, exp.point)) - 1e-8
        nxt = extract(sol, cp)
        assert lifted_maximin(nxt, exp.ch, exp.sp) >= sol.objective * (1 - 1e-6)

    def test_ee_feasible(self, rng):
        exp = _exp(rng, 2, 1, 2)
        q = 0.5 * lifted_pair_throughputs(exp.point, exp.ch, exp.topo)
        sol = solve_subproblem(build_ee(exp, qos=q))
        assert sol.ok

    def test_zero_floor_is_vacuous(self, rng):
        exp = _exp(rng, 2, 1, 2)
        cp = build_ee(exp, qos=np.zeros(2))
        assert cp.count(label="qos") == 0

    def test_frozen_beta_keeps_powers(self, rng):
        exp = _exp(rng, 2, 1, 2)
        cp = build_maximin(exp, frozen_beta=True)
        nxt = extract(solve_subproblem(cp), cp)
        np.testing.assert_array_equal(nxt.beta, exp.point.beta)

    def test_sinr_floor_cut(self, rng):
        exp = _exp(rng, 1, 1, 1)
        floor = 0.5 * np.log1p(exp.xbar.min())
        cp = build_maximin(exp, sinr_floor=floor)
        assert cp.count(label="sinr_floor") == 2
        assert cp.violation(inject(cp, exp.point)) <= 1e-9
        sol = solve_subproblem(cp)
        assert sol.ok
        nxt = extract(sol, cp)
        assert np.all(np.log1p(lifted_sinr(nxt, exp.ch)) >= floor - 1e-7)
