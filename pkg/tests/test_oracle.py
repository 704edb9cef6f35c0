import numpy as np
import pytest

from conftest import cn
from twrelay.model import ChannelSet, ScenarioParams, ee_objective, pair_throughputs
from twrelay.oracle import GridSpec, equivalence_suite, grid_search_tiny, inequality_suite


@pytest.fixture
def tiny(rng):
    ch = ChannelSet(h=cn(rng, 2, 1, 1), f=cn(rng, 1, 2, 1))
    return ch, ScenarioParams.from_relay_budget(1, 1, 10.0)


class TestGridSpec:
    def test_minimum_points(self):
        with pytest.raises(ValueError):
            GridSpec(power_points=4)

    def test_refined_is_nested(self):
        g = GridSpec(16, 16)
        r = g.refined()
        assert (r.power_points, r.w_points) == (31, 31)

    def test_guard(self, tiny):
        ch, sp = tiny
        with pytest.raises(ValueError):
            grid_search_tiny(ch, sp, GridSpec(64, 128), "oneway")

    def test_rejects_large_instances(self, rng):
        ch = ChannelSet(h=cn(rng, 2, 1, 2), f=cn(rng, 1, 2, 2))
        with pytest.raises(ValueError):
            grid_search_tiny(ch, ScenarioParams.from_relay_budget(1, 1, 10.0))


class TestGridSearch:
    def test_zero_budgets(self, tiny):
        ch, _ = tiny
        sp = ScenarioParams(P_U_max=0.0, P_sumU_max=0.0, P_A_max=0.0, P_sumR_max=0.0, r=np.ones(1))
        assert grid_search_tiny(ch, sp, GridSpec(8, 8)).value == 0.0

    @pytest.mark.parametrize("mode", ["maximin", "ee"])
    def test_refinement_monotone(self, tiny, mode):
        ch, sp = tiny
        sp = sp.with_r(0.1)
        g = GridSpec(16, 16)
        assert grid_search_tiny(ch, sp, g.refined(), mode).value >= grid_search_tiny(ch, sp, g, mode).value

    def test_value_matches_model(self, tiny):
        ch, sp = tiny
        res = grid_search_tiny(ch, sp, GridSpec(32, 32))
        R = pair_throughputs(res.p, res.W, ch, sp)
        assert res.value == pytest.approx(R[0], rel=1e-9)

    def test_ee_value_matches_model(self, tiny):
        ch, sp = tiny
        sp = sp.with_r(0.1)
        res = grid_search_tiny(ch, sp, GridSpec(32, 32), "ee")
        assert res.value == pytest.approx(ee_objective(res.p, res.W, ch, sp), rel=1e-9)
        assert pair_throughputs(res.p, res.W, ch, sp)[0] >= 0.1

    def test_deterministic(self, tiny):
        ch, sp = tiny
        a, b = grid_search_tiny(ch, sp, GridSpec(16, 16)), grid_search_tiny(ch, sp, GridSpec(16, 16))
        assert a.value == b.value


class TestSuites:
    def test_inequality_empty(self):
        rep = inequality_suite(0)
        assert rep.ok and rep.violations == 0

    def test_inequality_small(self):
        rep = inequality_suite(2000, seed=5)
        assert rep.ok, rep.summary()
        assert {"log", "quad", "ratio", "log_tight"} <= {r.name for r in rep.rows}

    def test_equivalence_small(self):
        rep = equivalence_suite(10, seed=5)
        assert rep.ok, rep.summary()
        assert rep.row("alpha_halved_flagged").violations == 0

    def test_deterministic(self):
        a, b = inequality_suite(500, seed=3), inequality_suite(500, seed=3)
        assert [r.worst for r in a.rows] == [r.worst for r in b.rows]
