"""Path-following loops for max-min exchange throughput and energy efficiency.

Each outer iteration builds the convex subproblem at the current lifted point,
solves it, and re-lifts the solution with tight ``alpha`` so that the next
expansion point reproduces the true SINRs exactly.
"""
from __future__ import annotations

import csv
import logging
import time
from dataclasses import dataclass, field

import numpy as np

from .cone import SolverSettings, solve
from .lift import LiftedPoint, lift_point, lifted_pair_throughputs
from .model import (
    ChannelSet,
    ScenarioParams,
    Topology,
    ee_objective,
    one_way,
    pair_throughputs,
    relay_powers,
    two_way,
)
from .subproblem import DELTA_TR, build, extract
from .surrogate import Expansion

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class AlgorithmSettings:
    epsilon: float = 1e-4
    max_outer_iter: int = 200
    solver: SolverSettings = SolverSettings()
    delta_tr: float = DELTA_TR

    def __post_init__(self):
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if self.max_outer_iter < 1:
            raise ValueError("max_outer_iter must be >= 1")


class QoSUnreachable(RuntimeError):
    """The max-min phase stopped before every pair met its throughput floor."""

    def __init__(self, best_ratio: float, iterations: int):
        super().__init__(
            f"QoS floors not reached after {iterations} iterations "
            f"(best min R_k/r_k = {best_ratio:.6g})"
        )
        self.best_ratio = best_ratio
        self.iterations = iterations


@dataclass
class IterRecord:
    iteration: int
    objective: float
    min_pair: float
    status: str
    wall_time: float
    accepted: bool


@dataclass
class RunTrace:
    mode: str
    topology: Topology
    point: LiftedPoint
    initial_objective: float
    records: list = field(default_factory=list)
    status: str = "max_iter"

    @property
    def iterations(self) -> int:
        return len(self.records)

    @property
    def objective(self) -> float:
        vals = [r.objective for r in self.records if r.accepted]
        return max([self.initial_objective, *vals])

    @property
    def objectives(self) -> np.ndarray:
        return np.array([r.objective for r in self.records])

    @property
    def p(self) -> np.ndarray:
        return self.point.p

    @property
    def W(self) -> np.ndarray:
        return self.point.beamformers

    def to_csv(self, path) -> None:
        """One row per outer iteration."""
        with open(path, "w", newline="", encoding="utf-8") as fh:
            wr = csv.writer(fh)
            wr.writerow(["mode", "iteration", "objective", "min_pair", "status", "wall_time", "accepted"])
            wr.writerow([self.mode, 0, f"{self.initial_objective:.12g}", "", "start", 0.0, True])
            for r in self.records:
                wr.writerow(
                    [self.mode, r.iteration, f"{r.objective:.12g}", f"{r.min_pair:.12g}",
                     r.status, f"{r.wall_time:.6f}", r.accepted]
                )


def true_objective(mode: str, point: LiftedPoint, ch, sp, topo) -> float:
    p = point.p
    if mode == "maximin":
        R = pair_throughputs(p, point.W, ch, sp, topo)
        r = sp.r
        if not np.any(r > 0):
            return float(np.min(R))
        return float(np.min(R[r > 0] / r[r > 0]))
    if mode == "sum":
        return float(topo.prelog * np.sum(pair_throughputs(p, point.W, ch, sp, topo)))
    if mode == "ee":
        return ee_objective(p, point.W, ch, sp, topo)
    raise ValueError(f"unknown mode {mode!r}")


def project(point: LiftedPoint, ch, sp, topo, p_fixed=None) -> LiftedPoint:
    """Pull a solver point back inside the power budgets and re-lift it tightly.

    Solver output can overshoot a budget by the feasibility tolerance; this
    rescales the offending powers, which moves the point by the same order.
    """
    p = np.array(point.p if p_fixed is None else p_fixed, dtype=float)
    p = np.minimum(p, sp.P_U_max)
    if p.sum() > sp.P_sumU_max:
        p *= sp.P_sumU_max / p.sum()
    W = np.array(point.W)
    P = relay_powers(p, W, ch, sp, topo)
    scale = np.ones_like(P)
    over = P > sp.P_A_max
    scale[over] = sp.P_A_max / P[over]
    total = np.sum(P * scale)
    if total > sp.P_sumR_max:
        scale *= sp.P_sumR_max / total
    W *= np.sqrt(scale)[None, :, None, None]
    return lift_point(p, W, ch, sp, topo)


def initial_point(ch: ChannelSet, sp: ScenarioParams, topo: Topology | None = None) -> LiftedPoint:
    """Equal user powers and scaled-identity relays at 90% of their budget share."""
    topo = topo or two_way(ch.K)
    p = np.full(topo.n_users, min(sp.P_U_max, sp.P_sumU_max / topo.n_users))
    W = np.broadcast_to(np.eye(ch.N_R, dtype=complex), (topo.n_sets, ch.M, ch.N_R, ch.N_R)).copy()
    unit = relay_powers(p, W, ch, sp, topo)
    target = 0.9 * min(sp.P_A_max, sp.P_sumR_max / ch.M)
    W *= np.sqrt(target / unit)[None, :, None, None]
    return lift_point(p, W, ch, sp, topo)


def path_follow(
    ch: ChannelSet,
    sp: ScenarioParams,
    mode: str,
    start: LiftedPoint,
    settings: AlgorithmSettings = AlgorithmSettings(),
    topo: Topology | None = None,
    qos=None,
    frozen_beta: bool = False,
    stop=None,
    callback=None,
) -> RunTrace:
    """Generic successive convex approximation loop.

    Args:
        mode: ``"maximin"``, ``"ee"`` or ``"sum"``.
        start: feasible lifted starting point.
        qos: per-pair throughput floors kept at every iterate.
        frozen_beta: hold user powers at their starting values.
        stop: optional predicate on the current point that ends the run early.
        callback: optional ``callback(record, candidate)`` called after every
            solved subproblem, accepted or not.
    """
    topo = topo or two_way(ch.K)
    p_fixed = start.p if frozen_beta else None
    x = project(start, ch, sp, topo, p_fixed)
    val = true_objective(mode, x, ch, sp, topo)
    trace = RunTrace(mode=mode, topology=topo, point=x, initial_objective=val)
    if qos is not None:
        qos = np.broadcast_to(np.asarray(qos, dtype=float), (topo.K,))
        R0 = pair_throughputs(x.p, x.W, ch, sp, topo)
        if np.any(R0 < qos - 1e-6):
            raise ValueError("starting point violates the QoS floors")
    if stop is not None and stop(x):
        trace.status = "stop_rule"
        return trace
    for it in range(1, settings.max_outer_iter + 1):
        t0 = time.perf_counter()
        exp = Expansion.at(x, ch, sp, topo)
        q = None
        if qos is not None:
            # floors capped at the current value absorb round-off in the re-lift
            q = np.minimum(qos, lifted_pair_throughputs(x, ch, topo))
        cp = build(exp, mode, qos=q, frozen_beta=frozen_beta, delta_tr=settings.delta_tr)
        sol = solve(cp, settings.solver)
        if not sol.ok:
            log.warning("%s iteration %d: solver returned %s", mode, it, sol.status.value)
            trace.records.append(
                IterRecord(it, float("nan"), float("nan"), sol.status.value, time.perf_counter() - t0, False)
            )
            trace.status = sol.status.value
            break
        cand = project(extract(sol, cp), ch, sp, topo, p_fixed)
        new = true_objective(mode, cand, ch, sp, topo)
        accepted = new >= val
        R = pair_throughputs(cand.p, cand.W, ch, sp, topo)
        trace.records.append(
            IterRecord(it, new, float(np.min(R)), sol.status.value, time.perf_counter() - t0, accepted)
        )
        if callback is not None:
            callback(trace.records[-1], cand)
        gain = (new - val) / max(abs(val), 1e-12)
        if accepted:
            x, val = cand, new
            trace.point = x
        if stop is not None and stop(x):
            trace.status = "stop_rule"
            break
        if gain <= settings.epsilon:
            trace.status = "converged"
            break
    return trace


def algorithm1(ch, sp, settings=AlgorithmSettings(), start=None, topo=None, callback=None) -> RunTrace:
    """Maximize ``min_k R_k / r_k`` over powers and beamformers."""
    topo = topo or two_way(ch.K)
    start = start if start is not None else initial_point(ch, sp, topo)
    return path_follow(ch, sp, "maximin", start, settings, topo, callback=callback)


def qos_ratio(point: LiftedPoint, ch, sp, topo) -> float:
    R = pair_throughputs(point.p, point.W, ch, sp, topo)
    r = sp.r
    if not np.any(r > 0):
        return float("inf")
    return float(np.min(R[r > 0] / r[r > 0]))


def ee_init_via_qos(ch, sp, settings=AlgorithmSettings(), topo=None, frozen_beta=False, start=None) -> LiftedPoint:
    """Run the max-min iteration until every pair meets its floor ``r_k``.

    Raises:
        QoSUnreachable: the iteration converged or hit its cap first.
    """
    topo = topo or two_way(ch.K)
    start = start if start is not None else initial_point(ch, sp, topo)
    if not np.any(sp.r > 0):
        return project(start, ch, sp, topo, start.p if frozen_beta else None)

    def met(x):
        return qos_ratio(x, ch, sp, topo) >= 1.0

    trace = path_follow(ch, sp, "maximin", start, settings, topo, frozen_beta=frozen_beta, stop=met)
    if trace.status != "stop_rule":
        raise QoSUnreachable(qos_ratio(trace.point, ch, sp, topo), trace.iterations)
    return trace.point


def algorithm2(
    ch, sp, settings=AlgorithmSettings(), start=None, topo=None, frozen_beta=False, callback=None
) -> RunTrace:
    """Maximize energy efficiency subject to the pair floors ``sp.r``."""
    topo = topo or two_way(ch.K)
    if start is None:
        start = ee_init_via_qos(ch, sp, settings, topo, frozen_beta)
    return path_follow(
        ch, sp, "ee", start, settings, topo, qos=sp.r, frozen_beta=frozen_beta, callback=callback
    )


def sum_throughput(ch, sp, settings=AlgorithmSettings(), start=None, topo=None) -> RunTrace:
    """Maximize total exchange throughput subject to the pair floors ``sp.r``."""
    topo = topo or two_way(ch.K)
    if start is None:
        start = ee_init_via_qos(ch, sp, settings, topo)
    return path_follow(ch, sp, "sum", start, settings, topo, qos=sp.r)


def oneway_ee_solve(ch, sp, settings=AlgorithmSettings(), start=None) -> RunTrace:
    """Energy efficiency of two-stage one-way relaying with the same floors."""
    return algorithm2(ch, sp, settings, start=start, topo=one_way(ch.K))


def equal_power_solve(ch, sp, settings=AlgorithmSettings(), mode="maximin", start=None) -> RunTrace:
    """Optimize beamformers only, with all users at the equal-power level."""
    topo = two_way(ch.K)
    if start is None:
        start = initial_point(ch, sp, topo)
    if mode == "maximin":
        return path_follow(ch, sp, "maximin", start, settings, topo, frozen_beta=True)
    if mode == "ee":
        start = ee_init_via_qos(ch, sp, settings, topo, frozen_beta=True, start=start)
        return path_follow(ch, sp, "ee", start, settings, topo, qos=sp.r, frozen_beta=True)
    raise ValueError(f"unknown mode {mode!r}")
