"""Compare both algorithms with brute-force grid search on scalar instances.

With one pair, one single-antenna relay, the design space is three real
numbers (two user powers and the relay gain), small enough to grid.

    python3 demos/toy_oracle.py
"""
import numpy as np

from twrelay import algorithm1, algorithm2, grid_search_tiny
from twrelay.model import ChannelSet, ScenarioParams
from twrelay.oracle import GridSpec

rng = np.random.default_rng(0)


def cn(*shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


print(f"{'budget dBW':>10} {'max-min':>9} {'grid':>9} {'EE':>9} {'grid':>9}")
for budget in (0.0, 10.0, 20.0, 30.0):
    ch = ChannelSet(h=cn(2, 1, 1), f=cn(1, 2, 1))
    sp = ScenarioParams.from_relay_budget(1, 1, budget)
    a1 = algorithm1(ch, sp)
    g1 = grid_search_tiny(ch, sp, GridSpec())
    sp_q = sp.with_r(0.5 * a1.objective)
    a2 = algorithm2(ch, sp_q)
    g2 = grid_search_tiny(ch, sp_q, GridSpec(), "ee")
    print(f"{budget:>10g} {a1.objective:>9.4f} {g1.value:>9.4f} {a2.objective:>9.4f} {g2.value:>9.4f}")
