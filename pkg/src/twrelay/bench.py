"""Monte-Carlo sweeps over layouts and relay budgets.

A sweep draws Rayleigh channels per (layout, realization), reuses them across
the budget grid, runs the configured algorithms and aggregates per-cell
statistics into a flat table that :func:`write_csv` serializes.

Mode names:

* ``maximin``: joint power and beamforming max-min throughput (OP-OW);
* ``maximin_ow``: beamforming only at equal user power (OW);
* ``ee``: joint energy-efficiency design under pair floors;
* ``ee_ow``: energy efficiency with equal user power;
* ``oneway``: energy efficiency of two-stage one-way relaying;
* ``sum``: total exchange throughput under pair floors.

Every EE-type mode uses the floor ``r = r_fraction * (maximin optimum)`` of
the same channel draw, so ``maximin`` is always run when any of them is.
"""
from __future__ import annotations

import csv
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from .model import (
    ChannelSet,
    Dimensions,
    ScenarioParams,
    dbw_to_watts,
    ee_objective,
    pair_throughputs,
    relay_powers,
)
from .solve import (
    AlgorithmSettings,
    QoSUnreachable,
    RunTrace,
    algorithm1,
    algorithm2,
    equal_power_solve,
    oneway_ee_solve,
    sum_throughput,
)

log = logging.getLogger(__name__)

MODES = ("maximin", "maximin_ow", "ee", "ee_ow", "oneway", "sum")
METRICS = ("min_pair", "ee", "sum_rate", "tx_power")
CSV_HEADER = (
    "K", "M", "N_R", "budget_dBW", "mode", "metric",
    "mean", "stddev", "n_success", "mean_iterations",
)
REQUIRED_FIELDS = ("scenarios", "budgets_dbw", "realizations", "seed")
_FAILED = ("PrimalInfeasible", "DualInfeasible", "MaxIterations", "NumericalFailure")


class ConfigError(ValueError):
    """Invalid sweep configuration; ``field`` names the offending entry."""

    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


@dataclass(frozen=True)
class SweepConfig:
    """Monte-Carlo sweep description.

    Defaults reproduce the desk-scale version of the reference simulation:
    two pairs, three relay layouts, relay budgets from 0 to 30 dBW.
    """

    scenarios: tuple = ((2, 1, 8), (2, 2, 4), (2, 4, 2))
    budgets_dbw: tuple = (0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0)
    realizations: int = 50
    seed: int = 20160101
    modes: tuple = ("maximin", "maximin_ow", "ee", "ee_ow", "oneway")
    P_U_dbw: float = 10.0
    zeta: float = 1.0 / 0.4
    P_r_dbw: float = 0.97
    P_Ucirc_dbw: float = -13.0
    sigma_R2: float = 1.0
    sigma2: float = 1.0
    r_fraction: float = 0.5
    epsilon: float = 1e-4
    max_outer_iter: int = 200

    def __post_init__(self):
        scen = tuple(tuple(int(v) for v in s) for s in self.scenarios)
        if not scen:
            raise ConfigError("scenarios", "grid must be nonempty")
        for s in scen:
            if len(s) != 3 or min(s) < 1:
                raise ConfigError("scenarios", f"entries must be positive (K, M, N_R) triples, got {s}")
        budgets = tuple(float(b) for b in self.budgets_dbw)
        if not budgets:
            raise ConfigError("budgets_dbw", "grid must be nonempty")
        if int(self.realizations) < 1:
            raise ConfigError("realizations", "must be >= 1")
        if not 0 <= int(self.seed) < 2**64:
            raise ConfigError("seed", "must be an unsigned 64-bit integer")
        modes = tuple(self.modes)
        if not modes:
            raise ConfigError("modes", "must name at least one mode")
        for m in modes:
            if m not in MODES:
                raise ConfigError("modes", f"unknown mode {m!r}; choose from {', '.join(MODES)}")
        if self.zeta < 1:
            raise ConfigError("zeta", "must be >= 1")
        if self.sigma_R2 <= 0 or self.sigma2 <= 0:
            raise ConfigError("sigma_R2" if self.sigma_R2 <= 0 else "sigma2", "must be positive")
        if not 0 < self.r_fraction <= 1:
            raise ConfigError("r_fraction", "must lie in (0, 1]")
        if self.epsilon <= 0:
            raise ConfigError("epsilon", "must be positive")
        if int(self.max_outer_iter) < 1:
            raise ConfigError("max_outer_iter", "must be >= 1")
        object.__setattr__(self, "scenarios", scen)
        object.__setattr__(self, "budgets_dbw", budgets)
        object.__setattr__(self, "modes", modes)
        object.__setattr__(self, "realizations", int(self.realizations))
        object.__setattr__(self, "seed", int(self.seed))
        object.__setattr__(self, "max_outer_iter", int(self.max_outer_iter))

    @property
    def settings(self) -> AlgorithmSettings:
        return AlgorithmSettings(epsilon=self.epsilon, max_outer_iter=self.max_outer_iter)

    def params(self, K: int, M: int, budget_dbw: float) -> ScenarioParams:
        return ScenarioParams.from_relay_budget(
            K, M, budget_dbw,
            P_U_dbw=self.P_U_dbw,
            sigma_R2=self.sigma_R2,
            sigma2=self.sigma2,
            zeta=self.zeta,
            P_r=float(dbw_to_watts(self.P_r_dbw)),
            P_Ucirc=float(dbw_to_watts(self.P_Ucirc_dbw)),
        )

    def to_dict(self) -> dict:
        d = asdict(self)
        d["scenarios"] = [list(s) for s in self.scenarios]
        d["budgets_dbw"] = list(self.budgets_dbw)
        d["modes"] = list(self.modes)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SweepConfig":
        """Build from a mapping; the grid fields are required, the rest default."""
        known = {f.name for f in fields(cls)}
        for key in d:
            if key not in known:
                raise ConfigError(key, "unknown field")
        for key in REQUIRED_FIELDS:
            if key not in d:
                raise ConfigError(key, "required field is missing")
        kw = {}
        for key, val in d.items():
            if key in ("scenarios", "budgets_dbw", "modes"):
                if not isinstance(val, list):
                    raise ConfigError(key, "must be a list")
                kw[key] = tuple(tuple(v) if isinstance(v, list) else v for v in val)
            elif key == "realizations" or key == "seed" or key == "max_outer_iter":
                if isinstance(val, bool) or not isinstance(val, int):
                    raise ConfigError(key, "must be an integer")
                kw[key] = val
            else:
                if isinstance(val, bool) or not isinstance(val, (int, float)):
                    raise ConfigError(key, "must be a number")
                kw[key] = val
        try:
            return cls(**kw)
        except ConfigError:
            raise
        except (TypeError, ValueError) as err:
            raise ConfigError("config", str(err)) from err

    @classmethod
    def load(cls, path) -> "SweepConfig":
        """Read a JSON config; ``"default"`` returns the built-in defaults."""
        if str(path) == "default":
            return cls()
        try:
            with open(path, encoding="utf-8") as fh:
                doc = json.load(fh)
        except FileNotFoundError as err:
            raise ConfigError("config", f"file not found: {path}") from err
        except json.JSONDecodeError as err:
            raise ConfigError("config", f"not valid JSON ({err})") from err
        if not isinstance(doc, dict):
            raise ConfigError("config", "top level must be an object")
        return cls.from_dict(doc)

    def dump(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=2)
            fh.write("\n")


def _cn(rng: np.random.Generator, shape) -> np.ndarray:
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / math.sqrt(2.0)


def gen_channels(seed: int, dims: Dimensions, draw: int = 0) -> ChannelSet:
    """Independent CN(0, 1) uplink and downlink vectors.

    The stream is keyed by ``(seed, K, M, N_R, draw)`` so any realization can
    be regenerated on its own, in any order.
    """
    ss = np.random.SeedSequence([int(seed), dims.K, dims.M, dims.N_R, int(draw)])
    rng = np.random.default_rng(ss)
    h = _cn(rng, (2 * dims.K, dims.M, dims.N_R))
    g = _cn(rng, (dims.M, 2 * dims.K, dims.N_R))
    return ChannelSet.from_downlink(h, g)


@dataclass
class RunRecord:
    """Outcome of one mode on one channel draw at one budget."""

    draw: int
    ok: bool
    iterations: int
    status: str
    metrics: dict = field(default_factory=dict)


def _metrics(trace: RunTrace, ch, sp) -> dict:
    topo = trace.topology
    p, W = trace.point.p, trace.point.W
    R = pair_throughputs(p, W, ch, sp, topo)
    return {
        "min_pair": float(topo.prelog * np.min(R)),
        "ee": ee_objective(p, W, ch, sp, topo),
        "sum_rate": float(topo.prelog * np.sum(R)),
        "tx_power": float(np.sum(p) + np.sum(relay_powers(p, W, ch, sp, topo))),
    }


def _record(draw, trace: RunTrace, ch, sp) -> RunRecord:
    ok = trace.status not in _FAILED or trace.iterations > 1
    return RunRecord(draw, ok, trace.iterations, trace.status, _metrics(trace, ch, sp))


def _needs_maximin(modes) -> tuple:
    if any(m in modes for m in ("ee", "ee_ow", "oneway", "sum")) and "maximin" not in modes:
        return ("maximin", *modes)
    return tuple(modes)


def run_draw(cfg: SweepConfig, scenario, draw: int) -> dict:
    """All budgets and modes of one channel draw.

    Returns ``{(budget, mode): RunRecord}``. Failures are recorded, not raised.
    """
    K, M, N = scenario
    ch = gen_channels(cfg.seed, Dimensions(K, M, N), draw)
    settings = cfg.settings
    out = {}
    modes = _needs_maximin(cfg.modes)
    for b in cfg.budgets_dbw:
        sp = cfg.params(K, M, b)
        qos_sp = None
        for mode in modes:
            try:
                if mode == "maximin":
                    tr = algorithm1(ch, sp, settings)
                    qos_sp = sp.with_r(cfg.r_fraction * tr.objective)
                elif mode == "maximin_ow":
                    tr = equal_power_solve(ch, sp, settings, mode="maximin")
                elif mode == "ee":
                    tr = algorithm2(ch, qos_sp, settings)
                elif mode == "ee_ow":
                    tr = equal_power_solve(ch, qos_sp, settings, mode="ee")
                elif mode == "oneway":
                    tr = oneway_ee_solve(ch, qos_sp, settings)
                else:
                    tr = sum_throughput(ch, qos_sp, settings)
                rec = _record(draw, tr, ch, qos_sp if mode in ("ee", "ee_ow", "oneway", "sum") else sp)
            except QoSUnreachable as err:
                rec = RunRecord(draw, False, err.iterations, "qos_unreachable")
            except (ValueError, FloatingPointError, np.linalg.LinAlgError) as err:
                log.warning("draw %d, %s dBW, %s failed: %s", draw, b, mode, err)
                rec = RunRecord(draw, False, 0, "error")
            if mode in cfg.modes:
                out[(b, mode)] = rec
    return out


@dataclass(frozen=True)
class Row:
    K: int
    M: int
    N_R: int
    budget_dbw: float
    mode: str
    metric: str
    mean: float
    stddev: float
    n_success: int
    mean_iterations: float


@dataclass
class SweepResult:
    """Aggregated rows plus the per-draw records they came from."""

    config: SweepConfig
    rows: list
    records: dict  # (K, M, N_R, budget, mode) -> list[RunRecord]

    def value(self, scenario, budget, mode, metric="ee") -> float:
        for r in self.rows:
            if (r.K, r.M, r.N_R) == tuple(scenario) and r.budget_dbw == budget and r.mode == mode and r.metric == metric:
                return r.mean
        raise KeyError((scenario, budget, mode, metric))

    def iterations(self, scenario, budget, mode) -> np.ndarray:
        recs = self.records[(*scenario, budget, mode)]
        return np.array([r.iterations for r in recs if r.ok], dtype=float)


def _stats(values):
    if not values:
        return float("nan"), float("nan")
    a = np.asarray(values, dtype=float)
    mean = float(np.mean(a))
    std = float(np.sqrt(np.sum((a - mean) ** 2) / (a.size - 1))) if a.size > 1 else 0.0
    return mean, std


def aggregate(cfg: SweepConfig, records: dict) -> list:
    rows = []
    for (K, M, N) in cfg.scenarios:
        for b in cfg.budgets_dbw:
            for mode in cfg.modes:
                recs = sorted(records[(K, M, N, b, mode)], key=lambda r: r.draw)
                good = [r for r in recs if r.ok]
                it_mean, _ = _stats([r.iterations for r in good])
                for metric in METRICS:
                    mean, std = _stats([r.metrics[metric] for r in good])
                    rows.append(Row(K, M, N, b, mode, metric, mean, std, len(good), it_mean))
    return rows


def _draw_job(args):
    cfg, scenario, draw = args
    return scenario, draw, run_draw(cfg, scenario, draw)


def run_sweep(cfg: SweepConfig, workers: int = 1, progress=None) -> SweepResult:
    """Run every (layout, draw) job and aggregate.

    Args:
        workers: process count; results do not depend on it.
        progress: optional callable ``(done, total)`` invoked after each job.
    """
    jobs = [(cfg, s, d) for s in cfg.scenarios for d in range(cfg.realizations)]
    records = {
        (*s, b, m): [] for s in cfg.scenarios for b in cfg.budgets_dbw for m in cfg.modes
    }

    def collect(results):
        for i, (s, _, out) in enumerate(results, 1):
            for (b, mode), rec in out.items():
                records[(*s, b, mode)].append(rec)
            if progress is not None:
                progress(i, len(jobs))

    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            collect(ex.map(_draw_job, jobs))
    else:
        collect(map(_draw_job, jobs))
    return SweepResult(cfg, aggregate(cfg, records), records)


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    v = float(v)
    if math.isnan(v):
        return "nan"
    return f"{v:.6g}"


def write_csv(rows, path) -> None:
    """Write rows with six significant digits in their given (grid) order."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(CSV_HEADER)
        for r in rows:
            wr.writerow([
                r.K, r.M, r.N_R, _fmt(r.budget_dbw), r.mode, r.metric,
                _fmt(r.mean), _fmt(r.stddev), r.n_success, _fmt(r.mean_iterations),
            ])


def read_csv(path) -> list:
    with open(path, newline="", encoding="utf-8") as fh:
        rd = csv.reader(fh)
        header = next(rd, None)
        if tuple(header or ()) != CSV_HEADER:
            raise ValueError(f"unexpected header {header}")
        return [
            Row(int(K), int(M), int(N), float(b), mode, metric, float(mean), float(std), int(n), float(it))
            for K, M, N, b, mode, metric, mean, std, n, it in rd
        ]
