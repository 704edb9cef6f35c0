"""Joint user power allocation and relay beamforming for two-way relay networks.

Path-following (successive convex approximation) algorithms for max-min
exchange throughput and for energy efficiency under per-pair throughput
floors, with baselines, Monte-Carlo sweeps and brute-force oracles.
"""
from .bench import SweepConfig, gen_channels, read_csv, run_sweep, write_csv
from .lift import LiftedPoint, lift_point, unlift
from .model import (
    ChannelSet,
    Dimensions,
    ScenarioParams,
    Topology,
    ee_objective,
    feasible,
    one_way,
    pair_throughputs,
    partner,
    relay_powers,
    sinr_all,
    two_way,
)
from .oracle import GridSpec, equivalence_suite, grid_search_tiny, inequality_suite
from .solve import (
    AlgorithmSettings,
    QoSUnreachable,
    RunTrace,
    algorithm1,
    algorithm2,
    ee_init_via_qos,
    equal_power_solve,
    initial_point,
    oneway_ee_solve,
    sum_throughput,
)

__version__ = "0.1.0"

__all__ = [
    "AlgorithmSettings", "ChannelSet", "Dimensions", "GridSpec", "LiftedPoint",
    "QoSUnreachable", "RunTrace", "ScenarioParams", "SweepConfig", "Topology",
    "algorithm1", "algorithm2", "ee_init_via_qos", "ee_objective",
    "equal_power_solve", "equivalence_suite", "feasible", "gen_channels",
    "grid_search_tiny", "inequality_suite", "initial_point", "lift_point",
    "one_way", "oneway_ee_solve", "pair_throughputs", "partner", "read_csv",
    "relay_powers", "run_sweep", "sinr_all", "sum_throughput", "two_way",
    "unlift", "write_csv",
]
