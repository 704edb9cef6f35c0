"""Brute-force and property validators.

The grid search re-derives the toy-scale objectives from scratch (scalar
channels, no shared model code) so that the path-following algorithms can be
checked against an independent reference.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .lift import (
    LiftedPoint,
    lift_point,
    lifted_ee,
    lifted_feasible,
    lifted_maximin,
    lifted_sinr,
)
from .model import (
    ChannelSet,
    ScenarioParams,
    ee_objective,
    feasible,
    interference_plus_noise,
    pair_throughputs,
    relay_powers,
    sinr_all,
    two_way,
)
from .surrogate import ee_bound_coeffs, log_bound_coeffs, log_minorant, quad_minorant, ratio_minorant

MAX_GRID = 10**7


@dataclass(frozen=True)
class GridSpec:
    """Resolution of the toy-scale grid search.

    Powers use ``power_points`` log-spaced values spanning ``decades`` below
    each user's cap; relay gains use ``w_points`` linear magnitudes from 0 to
    the relay-budget boundary of the current powers. Phases are irrelevant.
    """

    power_points: int = 64
    w_points: int = 128
    decades: float = 4.0

    def __post_init__(self):
        if self.power_points < 8 or self.w_points < 8:
            raise ValueError("grids need at least 8 points per dimension")
        if self.decades <= 0:
            raise ValueError("decades must be positive")

    def size(self, n_gains: int = 1) -> int:
        return self.power_points**2 * self.w_points**n_gains

    def refined(self) -> "GridSpec":
        """Nested refinement: every old grid point stays on the new grid."""
        return GridSpec(2 * self.power_points - 1, 2 * self.w_points - 1, self.decades)


@dataclass
class OracleResult:
    value: float
    p: np.ndarray
    W: np.ndarray
    evaluated: int


def _power_grid(cap: float, spec: GridSpec) -> np.ndarray:
    if cap <= 0:
        return np.zeros(1)
    return cap * np.logspace(-spec.decades, 0.0, spec.power_points)


def _scalar_channels(ch: ChannelSet):
    if (ch.K, ch.M, ch.N_R) != (1, 1, 1):
        raise ValueError("grid search is limited to K = M = N_R = 1")
    h = ch.h[:, 0, 0]
    f = ch.f[0, :, 0]
    return np.abs(h) ** 2, np.abs(f) ** 2


def grid_search_tiny(ch: ChannelSet, sp: ScenarioParams, spec: GridSpec = GridSpec(), mode: str = "maximin") -> OracleResult:
    """Exhaustive search over ``(p_1, p_2, |w|)`` (two gains for one-way).

    Args:
        mode: ``"maximin"`` (exchange throughput over ``r``), ``"ee"``
            (energy efficiency with the pair floor) or ``"oneway"``.

    Raises:
        ValueError: grid larger than ``MAX_GRID`` points, or not a toy instance.
    """
    if mode not in ("maximin", "ee", "oneway"):
        raise ValueError(f"unknown mode {mode!r}")
    n_gains = 2 if mode == "oneway" else 1
    if spec.size(n_gains) > MAX_GRID:
        raise ValueError(f"grid of {spec.size(n_gains)} points exceeds the {MAX_GRID} guard")
    H, F = _scalar_channels(ch)
    s2 = np.asarray(sp.sigma2, dtype=float)
    sR = sp.sigma_R2
    cap = min(sp.P_A_max, sp.P_sumR_max)
    r = float(sp.r[0])
    circuit = (2 if mode == "oneway" else 1) * sp.P_r + 2 * sp.P_Ucirc

    pg = _power_grid(sp.P_U_max, spec)
    p1, p2 = np.meshgrid(pg, pg, indexing="ij")
    ok = p1 + p2 <= sp.P_sumU_max * (1 + 1e-12)
    p1, p2 = p1[ok], p2[ok]
    u = np.linspace(0.0, 1.0, spec.w_points)

    if mode == "oneway":
        # gain 0 forwards user 0 to user 1 and gain 1 the reverse; both share
        # the relay budget, so the second magnitude grid spans what is left
        best = (-np.inf, None)
        for i in range(p1.size):
            a, b = p1[i], p2[i]
            d0, d1 = a * H[0] + sR, b * H[1] + sR
            w0sq = (u[:, None] ** 2) * (cap / d0) * np.ones((1, u.size))
            w1sq = (u[None, :] ** 2) * np.maximum(cap - w0sq * d0, 0.0) / d1
            g1 = a * w0sq * F[1] * H[0] / (sR * w0sq * F[1] + s2[1])
            g0 = b * w1sq * F[0] * H[1] / (sR * w1sq * F[0] + s2[0])
            R = np.log1p(g0) + np.log1p(g1)
            tx = a + b + w0sq * d0 + w1sq * d1
            ee = 0.5 * R / (sp.zeta * tx + circuit)
            ee = np.where(R >= r * (1 - 1e-12), ee, -np.inf)
            j = np.unravel_index(np.argmax(ee), ee.shape)
            if ee[j] > best[0]:
                best = (float(ee[j]), (a, b, w0sq[j], w1sq[j]))
        if best[1] is None:
            return OracleResult(0.0, np.zeros(2), np.zeros((2, 1, 1, 1)), spec.size(2))
        a, b, w0, w1 = best[1]
        W = np.sqrt(np.array([w0, w1])).reshape(2, 1, 1, 1).astype(complex)
        return OracleResult(best[0], np.array([a, b]), W, spec.size(2))

    den = p1 * H[0] + p2 * H[1] + sR
    wsq = (u[None, :] ** 2) * (cap / den)[:, None]  # linear |w| grid
    g0 = p2[:, None] * wsq * F[0] * H[1] / (sR * wsq * F[0] + s2[0])
    g1 = p1[:, None] * wsq * F[1] * H[0] / (sR * wsq * F[1] + s2[1])
    R = np.log1p(g0) + np.log1p(g1)
    if mode == "maximin":
        val = R / r if r > 0 else R
    else:
        tx = p1[:, None] + p2[:, None] + wsq * den[:, None]
        val = R / (sp.zeta * tx + circuit)
        val = np.where(R >= r * (1 - 1e-12), val, -np.inf)
    i, j = np.unravel_index(np.argmax(val), val.shape)
    if not np.isfinite(val[i, j]):
        return OracleResult(0.0, np.zeros(2), np.zeros((1, 1, 1)), spec.size())
    W = np.array([[[np.sqrt(wsq[i, j])]]], dtype=complex)
    return OracleResult(float(val[i, j]), np.array([p1[i], p2[i]]), W, spec.size())


# property suites -------------------------------------------------------------


@dataclass
class CheckRow:
    name: str
    samples: int = 0
    violations: int = 0
    worst: float = 0.0  # most negative slack, or largest mismatch for equality rows

    @property
    def ok(self) -> bool:
        return self.violations == 0


@dataclass
class SuiteReport:
    rows: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(r.ok for r in self.rows)

    @property
    def violations(self) -> int:
        return sum(r.violations for r in self.rows)

    def row(self, name: str) -> CheckRow:
        for r in self.rows:
            if r.name == name:
                return r
        raise KeyError(name)

    def summary(self) -> str:
        lines = []
        for r in self.rows:
            tag = "ok" if r.ok else "FAIL"
            lines.append(f"{r.name:<28} {r.samples:>8} samples  {r.violations:>4} violations  worst {r.worst:.3g}  {tag}")
        return "\n".join(lines)


def _ineq(name, lhs, rhs, rtol):
    """Row for ``lhs >= rhs`` with relative tolerance."""
    lhs, rhs = np.asarray(lhs), np.asarray(rhs)
    slack = lhs - rhs
    bad = slack < -rtol * np.maximum(1.0, np.abs(lhs))
    worst = float(np.min(slack)) if slack.size else 0.0
    return CheckRow(name, int(slack.size), int(np.count_nonzero(bad)), worst)


def _eq(name, lhs, rhs, rtol):
    lhs, rhs = np.asarray(lhs), np.asarray(rhs)
    err = np.abs(lhs - rhs) / np.maximum(1.0, np.abs(lhs))
    return CheckRow(name, int(err.size), int(np.count_nonzero(err > rtol)), float(err.max()) if err.size else 0.0)


def _log_uniform(rng, lo, hi, n):
    return np.exp(rng.uniform(np.log(lo), np.log(hi), n))


def inequality_suite(n_samples: int, seed: int = 0, rtol: float = 1e-10, eq_tol: float = 1e-12) -> SuiteReport:
    """Sample the three minorant inequalities and their tightness.

    Rows: ``log``, ``quad``, ``ratio`` (the bounds), the matching ``*_tight``
    rows (equality at the expansion point) and ``coeffs`` (closed-form
    coefficient identities).
    """
    rng = np.random.default_rng(seed)
    n = int(n_samples)
    rep = SuiteReport()

    x = _log_uniform(rng, 1e-3, 1e3, n)
    xb = _log_uniform(rng, 1e-3, 1e3, n)
    rep.rows.append(_ineq("log", np.log1p(x), log_minorant(x, xb), rtol))
    rep.rows.append(_eq("log_tight", np.log1p(xb), log_minorant(xb, xb), eq_tol))

    z = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    zb = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    al, alb, be, beb = (_log_uniform(rng, 1e-3, 1e3, n) for _ in range(4))
    lhs = np.abs(z) ** 2 / np.sqrt(al * be)
    rep.rows.append(_ineq("quad", lhs, quad_minorant(z, zb, al, alb, be, beb), rtol))
    rep.rows.append(
        _eq("quad_tight", np.abs(zb) ** 2 / np.sqrt(alb * beb), quad_minorant(zb, zb, alb, alb, beb, beb), eq_tol)
    )

    t = _log_uniform(rng, 1e-3, 1e3, n)
    tb = _log_uniform(rng, 1e-3, 1e3, n)
    rep.rows.append(_ineq("ratio", np.log1p(x) / t, ratio_minorant(x, xb, t, tb), rtol))
    rep.rows.append(_eq("ratio_tight", np.log1p(xb) / tb, ratio_minorant(xb, xb, tb, tb), eq_tol))

    c = log_bound_coeffs(xb)
    e = ee_bound_coeffs(xb, tb)
    err = np.concatenate([
        np.abs(c.a - (np.log1p(xb) + xb / (xb + 1))),
        np.abs(c.b - xb**2 / (xb + 1)),
        np.abs(e.p * tb - (2 * np.log1p(xb) + xb / (xb + 1))),
        np.abs(e.q * tb - c.b),
        np.abs(e.r * tb**2 - np.log1p(xb)),
    ]) if n else np.zeros(0)
    rep.rows.append(CheckRow("coeffs", int(err.size), int(np.count_nonzero(err > 1e-9)), float(err.max()) if err.size else 0.0))
    return rep


def _random_instance(rng):
    K = int(rng.integers(1, 4))
    M = int(rng.integers(1, 5))
    N = int(rng.integers(1, 5))
    cn = lambda *s: (rng.standard_normal(s) + 1j * rng.standard_normal(s)) / np.sqrt(2)
    ch = ChannelSet(h=cn(2 * K, M, N), f=cn(M, 2 * K, N))
    budget = float(rng.uniform(-5.0, 25.0))
    sp = ScenarioParams.from_relay_budget(K, M, budget)
    p = rng.uniform(0.05, 1.0, 2 * K) * min(sp.P_U_max, sp.P_sumU_max / (2 * K))
    W = cn(M, N, N)
    P = relay_powers(p, W, ch, sp)
    scale = rng.uniform(0.1, 1.0) * min(sp.P_A_max / P.max(), sp.P_sumR_max / P.sum())
    return ch, sp, p, W * np.sqrt(scale)


def _rel(a, b):
    return abs(a - b) / max(abs(a), abs(b), 1e-300)


def equivalence_suite(n_instances: int, seed: int = 0, tol: float = 1e-10, feas_tol: float = 1e-8) -> SuiteReport:
    """Check the change of variables on random feasible instances.

    Rows: ``sinr_match`` and ``maximin_match``/``ee_match`` (lifted versus
    true objectives), ``lift_feasible`` and ``unlift_feasible`` (both
    directions), ``alpha_enlarged`` (a larger alpha never helps) and
    ``alpha_halved_flagged`` (a corrupted alpha inflates the lifted objective
    and is reported infeasible).
    """
    rng = np.random.default_rng(seed)
    names = (
        "sinr_match", "maximin_match", "ee_match", "lift_feasible",
        "unlift_feasible", "alpha_enlarged", "alpha_halved_flagged",
    )
    rows = {k: CheckRow(k) for k in names}

    def tick(name, good, worst=0.0):
        r = rows[name]
        r.samples += 1
        r.violations += 0 if good else 1
        r.worst = max(r.worst, worst)

    for _ in range(int(n_instances)):
        ch, sp, p, W = _random_instance(rng)
        topo = two_way(ch.K)
        x = lift_point(p, W, ch, sp)
        g_true = interference_plus_noise(p, W, ch, sp, topo)
        g = sinr_all(p, W, ch, sp)
        e = float(np.max(np.abs(lifted_sinr(x, ch) - g) / np.maximum(g, 1e-300)))
        tick("sinr_match", e <= tol, e)
        e = _rel(lifted_maximin(x, ch, sp), float(np.min(pair_throughputs(p, W, ch, sp) / sp.r)))
        tick("maximin_match", e <= tol, e)
        e = _rel(lifted_ee(x, ch, sp), ee_objective(p, W, ch, sp))
        tick("ee_match", e <= tol, e)
        tick("lift_feasible", lifted_feasible(x, ch, sp, tol=feas_tol).ok)

        # a lifted point with slack alpha and beta maps back to a feasible design
        grow = rng.uniform(1.0, 3.0, 2 * ch.K)
        beta = x.beta * rng.uniform(1.0, 2.0, 2 * ch.K)
        y = LiftedPoint(x.W, g_true**2 * grow, beta)
        ok_l = lifted_feasible(y, ch, sp, tol=feas_tol).ok
        ok_o = feasible(y.p, W, ch, sp, check_qos=False, tol=feas_tol).ok
        tick("unlift_feasible", ok_l and ok_o)
        z = LiftedPoint(x.W, x.alpha * grow, x.beta)
        tick("alpha_enlarged", bool(np.all(lifted_sinr(z, ch) <= lifted_sinr(x, ch) * (1 + tol))))

        bad = LiftedPoint(x.W, x.alpha * 0.5, x.beta)
        inflated = bool(np.all(lifted_sinr(bad, ch) > lifted_sinr(x, ch)))
        flagged = "interference" in lifted_feasible(bad, ch, sp).names()
        tick("alpha_halved_flagged", inflated and flagged)

    return SuiteReport([rows[k] for k in names])
