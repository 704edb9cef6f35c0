"""Change of variables that makes every power constraint convex.

A power allocation ``p`` is replaced by ``beta = 1/p**2`` and every receiver
gets an auxiliary ``alpha`` whose square root upper-bounds its
interference-plus-noise. In the lifted variables ``(W, alpha, beta)`` the
SINR of receiver ``k`` reads ``|L_{k,chi(k)}|^2 / sqrt(alpha_k beta_chi(k))``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import (
    ChannelSet,
    FeasibilityReport,
    ScenarioParams,
    Topology,
    Violation,
    as_sets,
    interference_plus_noise,
    link_matrix,
    partner,
    relay_powers,
    relay_rows,
    two_way,
)

FLOOR = 1e-12


@dataclass(frozen=True)
class LiftedPoint:
    """Iterate of the path-following algorithms.

    ``W`` is always stored as a set stack ``(S, M, N_R, N_R)``.
    """

    W: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray

    def __post_init__(self):
        W = as_sets(self.W).copy()
        alpha = np.maximum(np.asarray(self.alpha, dtype=float), FLOOR)
        beta = np.maximum(np.asarray(self.beta, dtype=float), FLOOR)
        if alpha.shape != beta.shape or alpha.ndim != 1:
            raise ValueError("alpha and beta must be 1-d arrays of equal length")
        for a in (W, alpha, beta):
            a.setflags(write=False)
        object.__setattr__(self, "W", W)
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "beta", beta)

    @property
    def p(self) -> np.ndarray:
        return unlift(self.beta)

    @property
    def beamformers(self) -> np.ndarray:
        """``(M, N, N)`` beamformers for single-set points, the full stack otherwise."""
        return self.W[0] if self.W.shape[0] == 1 else self.W


def lift_point(p, W, ch: ChannelSet, sp: ScenarioParams, topo: Topology | None = None) -> LiftedPoint:
    """Map ``(p, W)`` to the lifted point on which every SINR is reproduced exactly.

    ``alpha_k`` is the squared interference-plus-noise of receiver ``k``, which
    makes the lifted interference constraint hold with equality.
    """
    topo = topo or two_way(ch.K)
    p = np.asarray(p, dtype=float)
    if np.any(p <= 0):
        raise ValueError("lifting needs strictly positive user powers")
    den = interference_plus_noise(p, W, ch, sp, topo)
    return LiftedPoint(W=as_sets(W), alpha=den**2, beta=1.0 / p**2)


def unlift(beta) -> np.ndarray:
    beta = np.asarray(beta, dtype=float)
    if np.any(beta <= 0):
        raise ValueError("beta must be positive")
    return 1.0 / np.sqrt(beta)


def _check_ab(alpha, beta=1.0):
    if np.any(np.asarray(alpha) <= 0) or np.any(np.asarray(beta) <= 0):
        raise ValueError("alpha and beta must be positive")


def psi(W, ch: ChannelSet, k: int, l: int, alpha: float, beta: float) -> float:
    """``|L_{k,l}(W)|^2 / sqrt(alpha * beta)``."""
    _check_ab(alpha, beta)
    L = link_matrix(W, ch)[0, k, l]
    return float(abs(L) ** 2 / np.sqrt(alpha * beta))


def upsilon(W, ch: ChannelSet, k: int, alpha: float) -> float:
    """``||L_k(W)||^2 / sqrt(alpha)``."""
    _check_ab(alpha)
    return float(np.sum(np.abs(relay_rows(W, ch, k)) ** 2) / np.sqrt(alpha))


def phi(W_m, h_lm, alpha: float, beta: float) -> float:
    """Amplified power ``||W_m h_{l,m}||^2 / sqrt(alpha * beta)``.

    Uses the column form ``W h`` so that ``phi(W_m, h, 1, 1/p**2)`` is exactly
    ``p * ||W_m h||^2``, the term appearing in the relay power.
    """
    _check_ab(alpha, beta)
    v = np.asarray(W_m) @ np.asarray(h_lm)
    return float(np.sum(np.abs(v) ** 2) / np.sqrt(alpha * beta))


def quad_over_geomean(z, alpha, beta):
    """``||z||^2 / sqrt(alpha beta)`` on raw arrays; jointly convex."""
    z = np.asarray(z)
    return np.sum(np.abs(z) ** 2, axis=-1) / np.sqrt(np.asarray(alpha) * np.asarray(beta))


def lifted_sinr(x: LiftedPoint, ch: ChannelSet, topo: Topology | None = None) -> np.ndarray:
    """The lifted SINR surrogate ``|L_{k,chi}|^2 / sqrt(alpha_k beta_chi)`` per receiver."""
    topo = topo or two_way(ch.K)
    K = topo.K
    L = link_matrix(x.W, ch)
    chi = np.array([partner(k, K) for k in range(2 * K)])
    Lkc = L[np.asarray(topo.recv_set), np.arange(2 * K), chi]
    return np.abs(Lkc) ** 2 / np.sqrt(x.alpha * x.beta[chi])


def lifted_pair_throughputs(x: LiftedPoint, ch, topo=None) -> np.ndarray:
    g = lifted_sinr(x, ch, topo)
    K = g.size // 2
    return np.log1p(g[:K]) + np.log1p(g[K:])


def lifted_maximin(x: LiftedPoint, ch, sp: ScenarioParams, topo=None) -> float:
    R = lifted_pair_throughputs(x, ch, topo)
    return float(np.min(R / sp.r))


def lifted_consumption(x: LiftedPoint, ch, sp, topo=None) -> float:
    topo = topo or two_way(ch.K)
    p = x.p
    radiated = p.sum() + relay_powers(p, x.W, ch, sp, topo).sum()
    circuit = topo.relay_circuit_mult * ch.M * ch.N_R * sp.P_r + 2 * ch.K * sp.P_Ucirc
    return float(sp.zeta * radiated + circuit)


def lifted_ee(x: LiftedPoint, ch, sp, topo=None) -> float:
    topo = topo or two_way(ch.K)
    num = topo.prelog * np.sum(np.log1p(lifted_sinr(x, ch, topo)))
    return float(num / lifted_consumption(x, ch, sp, topo))


def lifted_feasible(x: LiftedPoint, ch, sp: ScenarioParams, topo=None, tol=0.0) -> FeasibilityReport:
    """Check the convex constraints of the lifted problem.

    Constraint names: ``interference`` (normalized interference budget per
    receiver), ``user_power_floor`` (beta lower bound), ``user_sum_power``,
    ``relay_power`` and ``relay_sum_power``.
    """
    topo = topo or two_way(ch.K)
    out = []

    def check(name, index, slack):
        if slack < -tol:
            out.append(Violation(name, index, float(slack)))

    p = x.p
    den = interference_plus_noise(p, x.W, ch, sp, topo)
    lhs = den / np.sqrt(x.alpha)
    for k, v in enumerate(lhs):
        check("interference", k, 1.0 - v)
    for k, b in enumerate(x.beta):
        # compare on the power scale to keep slacks in watts
        check("user_power_floor", k, sp.P_U_max - 1.0 / np.sqrt(b))
    check("user_sum_power", None, sp.P_sumU_max - p.sum())
    P = relay_powers(p, x.W, ch, sp, topo)
    for m, Pm in enumerate(P):
        check("relay_power", m, sp.P_A_max - Pm)
    check("relay_sum_power", None, sp.P_sumR_max - P.sum())
    return FeasibilityReport(tuple(out))
