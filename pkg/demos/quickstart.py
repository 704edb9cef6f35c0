"""Joint power and relay beamforming on one random channel draw.

Runs max-min exchange throughput, then energy efficiency with every pair
held at half of the max-min optimum, and compares both against the
equal-power and one-way baselines.

    python3 demos/quickstart.py
"""
import numpy as np

from twrelay import (
    AlgorithmSettings,
    Dimensions,
    SweepConfig,
    algorithm1,
    algorithm2,
    ee_objective,
    equal_power_solve,
    gen_channels,
    oneway_ee_solve,
    pair_throughputs,
)

cfg = SweepConfig()
K, M, N = 2, 2, 4
ch = gen_channels(cfg.seed, Dimensions(K, M, N), draw=0)
sp = cfg.params(K, M, 10.0)
settings = AlgorithmSettings()

a1 = algorithm1(ch, sp, settings)
print(f"max-min: {a1.iterations} iterations, min pair throughput {a1.objective:.4f} nats")
print("  user powers [W]:", np.round(a1.p, 4))

ow = equal_power_solve(ch, sp, settings, mode="maximin")
print(f"equal-power max-min: {ow.objective:.4f} nats")

sp_q = sp.with_r(0.5 * a1.objective)
ee = algorithm2(ch, sp_q, settings)
R = pair_throughputs(ee.p, ee.W, ch, sp_q)
print(f"energy efficiency: {ee.iterations} iterations, {ee.objective:.4f} nats/J")
print("  pair throughputs:", np.round(R, 4), "floor", round(float(sp_q.r[0]), 4))

ee_ow = equal_power_solve(ch, sp_q, settings, mode="ee")
one = oneway_ee_solve(ch, sp_q, settings)
print(f"equal-power EE: {ee_ow.objective:.4f} nats/J")
print(f"one-way EE:     {one.objective:.4f} nats/J")
assert np.isclose(ee.objective, ee_objective(ee.p, ee.W, ch, sp_q))
