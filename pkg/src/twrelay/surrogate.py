"""Concave minorants used by the path-following iterations.

Three bounds, all tight at the expansion point:

* ``ln(1 + x)`` for the lifted SINR ``x = |L|^2 / sqrt(alpha beta)``, valid on
  the half-space where the linearized denominator is positive;
* ``ln(1 + x) / t`` for the energy-efficiency ratio with ``t`` the consumed
  power;
* a tangent cut for an individual SINR floor, which is a reverse convex
  constraint.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .lift import LiftedPoint, lifted_consumption
from .model import ChannelSet, ScenarioParams, Topology, link_matrix, partner, two_way


def log_minorant(x, xbar):
    """Lower bound of ``ln(1+x)`` from convexity of ``ln(1 + 1/z)``."""
    x = np.asarray(x, dtype=float)
    xbar = np.asarray(xbar, dtype=float)
    return np.log1p(xbar) + xbar / (xbar + 1) - xbar**2 / ((xbar + 1) * x)


def quad_minorant(x, xbar, alpha, alphabar, beta, betabar):
    """Linearization of ``|x|^2 / sqrt(alpha beta)`` at ``(xbar, alphabar, betabar)``."""
    g = np.sqrt(alphabar * betabar)
    return 2 * np.real(x * np.conj(xbar)) / g - 0.5 * np.abs(xbar) ** 2 / g * (
        alpha / alphabar + beta / betabar
    )


def ratio_minorant(x, xbar, t, tbar):
    """Lower bound of ``ln(1+x)/t``; concave in ``(x, t)`` on the positive orthant."""
    lx = np.log1p(xbar)
    return (
        2 * lx / tbar
        + xbar / (tbar * (xbar + 1))
        - xbar**2 / ((xbar + 1) * tbar) / x
        - lx / tbar**2 * t
    )


@dataclass(frozen=True)
class LogBoundCoeffs:
    a: np.ndarray
    b: np.ndarray


@dataclass(frozen=True)
class EeBoundCoeffs:
    p: np.ndarray
    q: np.ndarray
    r: np.ndarray


def log_bound_coeffs(xbar) -> LogBoundCoeffs:
    xbar = np.asarray(xbar, dtype=float)
    if np.any(xbar < 0):
        raise ValueError("expansion SINR must be nonnegative")
    return LogBoundCoeffs(a=np.log1p(xbar) + xbar / (xbar + 1), b=xbar**2 / (xbar + 1))


def ee_bound_coeffs(xbar, tbar) -> EeBoundCoeffs:
    xbar = np.asarray(xbar, dtype=float)
    if np.any(xbar < 0):
        raise ValueError("expansion SINR must be nonnegative")
    if np.any(np.asarray(tbar) <= 0):
        raise ValueError("expansion consumed power must be positive")
    lx = np.log1p(xbar)
    return EeBoundCoeffs(
        p=2 * lx / tbar + xbar / (tbar * (xbar + 1)),
        q=xbar**2 / ((xbar + 1) * tbar),
        r=lx / tbar**2,
    )


@dataclass(frozen=True)
class Expansion:
    """A lifted iterate plus the per-receiver quantities the bounds need.

    Attributes:
        point: the expansion point.
        Lbar: desired-link gain ``L_{k,chi(k)}`` of each receiver at the point.
        xbar: lifted SINR of each receiver at the point.
        tbar: consumed power at the point.
    """

    point: LiftedPoint
    ch: ChannelSet
    sp: ScenarioParams
    topo: Topology
    Lbar: np.ndarray
    xbar: np.ndarray
    tbar: float

    @classmethod
    def at(cls, point: LiftedPoint, ch, sp, topo=None) -> "Expansion":
        topo = topo or two_way(ch.K)
        K = topo.K
        chi = np.array([partner(k, K) for k in range(2 * K)])
        L = link_matrix(point.W, ch)
        Lbar = L[np.asarray(topo.recv_set), np.arange(2 * K), chi]
        xbar = np.abs(Lbar) ** 2 / np.sqrt(point.alpha * point.beta[chi])
        tbar = lifted_consumption(point, ch, sp, topo)
        return cls(point, ch, sp, topo, Lbar, xbar, tbar)

    @property
    def chi(self) -> np.ndarray:
        K = self.topo.K
        return np.array([partner(k, K) for k in range(2 * K)])

    def link(self, W, k: int) -> complex:
        return complex(link_matrix(W, self.ch)[self.topo.recv_set[k], k, partner(k, self.topo.K)])


def trust_region_margin(W, alpha_k, beta_chi, exp: Expansion, k: int) -> float:
    """Linearized denominator of the log bound; the bound is valid where it is positive."""
    Lb = exp.Lbar[k]
    x = exp.point
    c = exp.chi[k]
    L = exp.link(W, k)
    return float(
        2 * np.real(L * np.conj(Lb))
        - 0.5 * abs(Lb) ** 2 * (alpha_k / x.alpha[k] + beta_chi / x.beta[c])
    )


def _reciprocal_term(W, alpha_k, beta_chi, exp, k, coeff):
    margin = trust_region_margin(W, alpha_k, beta_chi, exp, k)
    if margin <= 0:
        raise ValueError(f"point lies outside the trust region of receiver {k} (margin {margin:g})")
    x = exp.point
    return coeff * np.sqrt(x.alpha[k] * x.beta[exp.chi[k]]) / margin


def f_lower(W, alpha_k, beta_chi, exp: Expansion, k: int) -> float:
    """Concave lower bound of ``ln(1 + |L_{k,chi}|^2 / sqrt(alpha_k beta_chi))``."""
    c = log_bound_coeffs(exp.xbar[k])
    return float(c.a - _reciprocal_term(W, alpha_k, beta_chi, exp, k, c.b))


def F_lower(W, alpha_k, beta, exp: Expansion, k: int) -> float:
    """Concave lower bound of ``ln(1 + x_k) / pi(beta, W)``.

    ``beta`` is the full vector since the consumed power depends on all users.
    """
    beta = np.asarray(beta, dtype=float)
    c = ee_bound_coeffs(exp.xbar[k], exp.tbar)
    t = lifted_consumption(LiftedPoint(W, np.ones_like(beta), beta), exp.ch, exp.sp, exp.topo)
    return float(c.p - _reciprocal_term(W, alpha_k, beta[exp.chi[k]], exp, k, c.q) - c.r * t)


@dataclass(frozen=True)
class TangentCut:
    """Affine inner approximation of ``|L|^2 - g sqrt(alpha beta) >= 0``.

    ``value = 2 Re{L conj(Lbar)} - |Lbar|^2 - alpha_coef*alpha - beta_coef*beta``.
    """

    k: int
    Lbar: complex
    alpha_coef: float
    beta_coef: float
    gain: float

    def value(self, L, alpha, beta) -> float:
        return float(
            2 * np.real(L * np.conj(self.Lbar))
            - abs(self.Lbar) ** 2
            - self.alpha_coef * alpha
            - self.beta_coef * beta
        )

    def exact(self, L, alpha, beta) -> float:
        return float(abs(L) ** 2 - self.gain * np.sqrt(alpha * beta))


def reverse_convex_linearize(exp: Expansion, k: int, r_min: float) -> TangentCut:
    """Tangent of the convex SINR-floor function at the expansion point.

    The floor ``ln(1 + SINR_k) >= r_min`` is ``|L|^2 - (e^r_min - 1) sqrt(alpha beta) >= 0``;
    its left side is convex, so the tangent is a global minorant and the
    cut ``value >= 0`` is an inner approximation.
    """
    gain = float(np.expm1(r_min))
    ab = exp.point.alpha[k]
    bb = exp.point.beta[exp.chi[k]]
    return TangentCut(
        k=k,
        Lbar=complex(exp.Lbar[k]),
        alpha_coef=0.5 * gain * np.sqrt(bb / ab),
        beta_coef=0.5 * gain * np.sqrt(ab / bb),
        gain=gain,
    )
