"""Physical model of a two-way multi-relay network.

``K`` pairs of single-antenna users exchange data through ``M`` amplify-and-
forward relays with ``N_R`` antennas each. Users are indexed ``0 .. 2K-1``
and user ``k`` talks to ``partner(k)``. All powers are in watts, all
throughputs in nats.

Beamformers are complex arrays of shape ``(M, N_R, N_R)``. Internally every
routine works on a stack of beamformer *sets* of shape ``(S, M, N_R, N_R)``
together with a :class:`Topology` that says which set serves which receiver;
two-way relaying uses one set, one-way relaying uses two.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


def dbw_to_watts(dbw):
    return 10.0 ** (np.asarray(dbw, dtype=float) / 10.0)


def watts_to_dbw(watts):
    return 10.0 * np.log10(np.asarray(watts, dtype=float))


@dataclass(frozen=True)
class Dimensions:
    K: int
    M: int
    N_R: int

    def __post_init__(self):
        for name in ("K", "M", "N_R"):
            if int(getattr(self, name)) < 1:
                raise ValueError(f"{name} must be >= 1, got {getattr(self, name)}")

    @property
    def n_users(self) -> int:
        return 2 * self.K


@dataclass(frozen=True)
class ChannelSet:
    """Channel vectors of one network realization.

    Attributes:
        h: uplink channels, shape ``(2K, M, N_R)``; ``h[l, m]`` is user ``l``
            to relay ``m``.
        f: conjugated downlink channels, shape ``(M, 2K, N_R)``;
            ``f[m, k] = conj(g[m, k])`` with ``g`` relay ``m`` to user ``k``.
    """

    h: np.ndarray
    f: np.ndarray

    def __post_init__(self):
        h = np.asarray(self.h, dtype=complex)
        f = np.asarray(self.f, dtype=complex)
        if h.ndim != 3 or f.ndim != 3:
            raise ValueError("h and f must be 3-d arrays")
        n_users, M, N = h.shape
        if n_users % 2 or n_users == 0:
            raise ValueError(f"number of users must be even and positive, got {n_users}")
        if f.shape != (M, n_users, N):
            raise ValueError(f"f has shape {f.shape}, expected {(M, n_users, N)}")
        h.setflags(write=False)
        f.setflags(write=False)
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "f", f)

    @classmethod
    def from_downlink(cls, h, g) -> "ChannelSet":
        """Build from downlink channels ``g`` (relay to user), conjugating once."""
        return cls(h=h, f=np.conj(np.asarray(g, dtype=complex)))

    @property
    def K(self) -> int:
        return self.h.shape[0] // 2

    @property
    def M(self) -> int:
        return self.h.shape[1]

    @property
    def N_R(self) -> int:
        return self.h.shape[2]

    @property
    def dims(self) -> Dimensions:
        return Dimensions(self.K, self.M, self.N_R)


@dataclass(frozen=True)
class ScenarioParams:
    """Power budgets, noise levels, circuit constants and QoS thresholds.

    ``P_r`` is the circuit power per relay antenna, so a relay draws
    ``N_R * P_r`` watts of circuit power. ``r`` holds the per-pair exchange
    throughput floors in nats.
    """

    P_U_max: float
    P_sumU_max: float
    P_A_max: float
    P_sumR_max: float
    r: np.ndarray
    sigma_R2: float = 1.0
    sigma2: np.ndarray | float = 1.0
    zeta: float = 1.0 / 0.4
    P_r: float = float(dbw_to_watts(0.97))
    P_Ucirc: float = float(dbw_to_watts(-13.0))

    def __post_init__(self):
        r = np.atleast_1d(np.asarray(self.r, dtype=float)).copy()
        sigma2 = np.asarray(self.sigma2, dtype=float)
        if sigma2.ndim == 0:
            sigma2 = np.full(2 * r.size, float(sigma2))
        sigma2 = sigma2.copy()
        if sigma2.shape != (2 * r.size,):
            raise ValueError(f"sigma2 must have length {2 * r.size}, got {sigma2.shape}")
        if self.sigma_R2 <= 0 or np.any(sigma2 <= 0):
            raise ValueError("noise powers must be positive")
        for name in ("P_U_max", "P_sumU_max", "P_A_max", "P_sumR_max", "P_r", "P_Ucirc"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")
        if self.zeta < 1:
            raise ValueError(f"zeta must be >= 1, got {self.zeta}")
        if np.any(r < 0):
            raise ValueError("QoS thresholds must be nonnegative")
        r.setflags(write=False)
        sigma2.setflags(write=False)
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "sigma2", sigma2)

    @property
    def K(self) -> int:
        return self.r.size

    @classmethod
    def from_relay_budget(
        cls,
        K: int,
        M: int,
        P_sumR_dbw: float,
        P_U_dbw: float = 10.0,
        r=1.0,
        **kwargs,
    ) -> "ScenarioParams":
        """Standard simulation scenario for a given total relay budget in dBW.

        Per-user cap ``P_U``, user budget ``K * P_U`` and per-relay cap
        ``2 * P_sumR / M``.
        """
        P_U = float(dbw_to_watts(P_U_dbw))
        P_sumR = float(dbw_to_watts(P_sumR_dbw))
        return cls(
            P_U_max=P_U,
            P_sumU_max=K * P_U,
            P_A_max=2.0 * P_sumR / M,
            P_sumR_max=P_sumR,
            r=np.broadcast_to(np.asarray(r, dtype=float), (K,)),
            **kwargs,
        )

    def with_r(self, r) -> "ScenarioParams":
        from dataclasses import replace

        return replace(self, r=np.broadcast_to(np.asarray(r, dtype=float), (self.K,)))


@dataclass(frozen=True)
class Topology:
    """Who hears whom, through which beamformer set.

    Attributes:
        K: number of user pairs.
        recv_set: beamformer set index used to reach each receiver.
        interferers: users whose signals interfere at each receiver.
        set_sources: users whose signals each beamformer set amplifies.
        prelog: throughput scaling (``0.5`` when an exchange takes two rounds).
        relay_circuit_mult: how many times relay circuit power is paid.
    """

    K: int
    recv_set: tuple
    interferers: tuple
    set_sources: tuple
    prelog: float = 1.0
    relay_circuit_mult: int = 1
    name: str = field(default="custom", compare=False)

    @property
    def n_sets(self) -> int:
        return len(self.set_sources)

    @property
    def n_users(self) -> int:
        return 2 * self.K


def partner(k: int, K: int) -> int:
    """Index of the user exchanging data with user ``k`` (0-based)."""
    if not 0 <= k < 2 * K:
        raise IndexError(f"user index {k} out of range for K={K}")
    return k + K if k < K else k - K


def two_way(K: int) -> Topology:
    users = range(2 * K)
    return Topology(
        K=K,
        recv_set=(0,) * (2 * K),
        interferers=tuple(
            tuple(l for l in users if l not in (k, partner(k, K))) for k in users
        ),
        set_sources=(tuple(users),),
        name="two-way",
    )


def one_way(K: int) -> Topology:
    """Two-stage one-way relaying.

    Stage one (set 0) carries users ``0..K-1`` to their partners, stage two
    (set 1) carries users ``K..2K-1`` back. Only same-stage users interfere.
    """
    first = tuple(range(K))
    second = tuple(range(K, 2 * K))
    recv_set = tuple([1] * K + [0] * K)
    interferers = tuple(
        tuple(l for l in (second if k < K else first) if l != partner(k, K))
        for k in range(2 * K)
    )
    return Topology(
        K=K,
        recv_set=recv_set,
        interferers=interferers,
        set_sources=(first, second),
        prelog=0.5,
        relay_circuit_mult=2,
        name="one-way",
    )


def as_sets(W) -> np.ndarray:
    """Promote ``(M, N, N)`` beamformers to a one-element set stack."""
    W = np.asarray(W, dtype=complex)
    if W.ndim == 3:
        return W[None]
    if W.ndim != 4 or W.shape[-1] != W.shape[-2]:
        raise ValueError(f"beamformers must have shape (M, N, N) or (S, M, N, N), got {W.shape}")
    return W


def _check_beamformers(Ws: np.ndarray, ch: ChannelSet) -> None:
    if Ws.shape[1:] != (ch.M, ch.N_R, ch.N_R):
        raise ValueError(
            f"beamformers of shape {Ws.shape[1:]} do not match M={ch.M}, N_R={ch.N_R}"
        )


def link_matrix(W, ch: ChannelSet) -> np.ndarray:
    """All effective gains ``L[s, k, l] = sum_m f_{m,k}^H W^s_m h_{l,m}``."""
    Ws = as_sets(W)
    _check_beamformers(Ws, ch)
    return np.einsum("mki,smij,lmj->skl", ch.f.conj(), Ws, ch.h)


def link_coeff(W, ch: ChannelSet, k: int, l: int) -> complex:
    """Effective end-to-end gain from user ``l`` to user ``k``."""
    Ws = as_sets(W)
    _check_beamformers(Ws, ch)
    return complex(np.einsum("mi,mij,mj->", ch.f[:, k].conj(), Ws[0], ch.h[l]))


def relay_rows(W, ch: ChannelSet, k: int) -> np.ndarray:
    """Concatenation ``[f_{1,k}^H W_1, ..., f_{M,k}^H W_M]`` of length ``M*N_R``."""
    Ws = as_sets(W)
    _check_beamformers(Ws, ch)
    return np.einsum("mi,mij->mj", ch.f[:, k].conj(), Ws[0]).reshape(-1)


def _row_norms2(Ws: np.ndarray, ch: ChannelSet) -> np.ndarray:
    # ||L_k(W^s)||^2 for every set and receiver, shape (S, 2K)
    rows = np.einsum("mki,smij->skmj", ch.f.conj(), Ws)
    return np.sum(np.abs(rows) ** 2, axis=(2, 3))


def interference_plus_noise(p, W, ch: ChannelSet, sp: ScenarioParams, topo: Topology) -> np.ndarray:
    """Denominator of every receiver's SINR."""
    Ws = as_sets(W)
    p = np.asarray(p, dtype=float)
    L2 = np.abs(link_matrix(Ws, ch)) ** 2
    rn2 = _row_norms2(Ws, ch)
    out = np.empty(topo.n_users)
    for k in range(topo.n_users):
        s = topo.recv_set[k]
        idx = list(topo.interferers[k])
        out[k] = p[idx] @ L2[s, k, idx] + sp.sigma_R2 * rn2[s, k] + sp.sigma2[k]
    return out


def sinr_all(p, W, ch: ChannelSet, sp: ScenarioParams, topo: Topology | None = None) -> np.ndarray:
    """SINR at every receiver after self-interference cancellation."""
    topo = topo or two_way(ch.K)
    Ws = as_sets(W)
    p = np.asarray(p, dtype=float)
    if p.shape != (topo.n_users,):
        raise ValueError(f"p must have length {topo.n_users}")
    L2 = np.abs(link_matrix(Ws, ch)) ** 2
    den = interference_plus_noise(p, Ws, ch, sp, topo)
    K = topo.K
    chi = np.array([partner(k, K) for k in range(2 * K)])
    sets = np.asarray(topo.recv_set)
    num = p[chi] * L2[sets, np.arange(2 * K), chi]
    return num / den


def sinr(p, W, ch: ChannelSet, sp: ScenarioParams, k: int) -> float:
    if not 0 <= k < 2 * ch.K:
        raise IndexError(f"user index {k} out of range")
    return float(sinr_all(p, W, ch, sp)[k])


def pair_throughputs(p, W, ch, sp, topo: Topology | None = None) -> np.ndarray:
    """Exchange throughput of every pair in nats (without any prelog factor)."""
    g = sinr_all(p, W, ch, sp, topo)
    K = ch.K
    return np.log1p(g[:K]) + np.log1p(g[K:])


def pair_throughput(p, W, ch, sp, k: int) -> float:
    if not 0 <= k < ch.K:
        raise IndexError(f"pair index {k} out of range")
    return float(pair_throughputs(p, W, ch, sp)[k])


def relay_powers(p, W, ch: ChannelSet, sp: ScenarioParams, topo: Topology | None = None) -> np.ndarray:
    """Transmit power of each relay, summed over all beamformer sets."""
    Ws = as_sets(W)
    _check_beamformers(Ws, ch)
    topo = topo or two_way(ch.K)
    p = np.asarray(p, dtype=float)
    Wh = np.einsum("smij,lmj->smli", Ws, ch.h)
    amp = np.sum(np.abs(Wh) ** 2, axis=-1)  # (S, M, 2K)
    out = sp.sigma_R2 * np.sum(np.abs(Ws) ** 2, axis=(0, 2, 3))
    for s, src in enumerate(topo.set_sources):
        src = list(src)
        out = out + amp[s][:, src] @ p[src]
    return out


def relay_tx_power(p, W, ch: ChannelSet, sp: ScenarioParams, m: int) -> float:
    return float(relay_powers(p, W, ch, sp)[m])


def consumption_power(p, W, ch: ChannelSet, sp: ScenarioParams, topo: Topology | None = None) -> float:
    """Total consumed power: amplifier-scaled radiated power plus circuit power."""
    topo = topo or two_way(ch.K)
    p = np.asarray(p, dtype=float)
    if np.any(p <= 0):
        raise ValueError("consumption power needs strictly positive user powers")
    radiated = p.sum() + relay_powers(p, W, ch, sp, topo).sum()
    circuit = topo.relay_circuit_mult * ch.M * ch.N_R * sp.P_r + 2 * ch.K * sp.P_Ucirc
    return float(sp.zeta * radiated + circuit)


def ee_objective(p, W, ch, sp, topo: Topology | None = None) -> float:
    """Energy efficiency in nats per joule."""
    topo = topo or two_way(ch.K)
    rates = topo.prelog * np.sum(np.log1p(sinr_all(p, W, ch, sp, topo)))
    return float(rates / consumption_power(p, W, ch, sp, topo))


def oneway_sinr(p, W1, W2, ch, sp, k: int) -> float:
    """SINR of receiver ``k`` under one-way relaying with stage sets ``W1``, ``W2``."""
    if not 0 <= k < 2 * ch.K:
        raise IndexError(f"user index {k} out of range")
    return float(sinr_all(p, np.stack([W1, W2]), ch, sp, one_way(ch.K))[k])


def oneway_ee(p, W1, W2, ch, sp) -> float:
    return ee_objective(p, np.stack([W1, W2]), ch, sp, one_way(ch.K))


@dataclass(frozen=True)
class Violation:
    constraint: str
    index: int | None
    slack: float


@dataclass(frozen=True)
class FeasibilityReport:
    violations: tuple = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok

    def names(self) -> set:
        return {v.constraint for v in self.violations}


def feasible(p, W, ch, sp, topo=None, check_qos=True, tol=0.0) -> FeasibilityReport:
    """Check the power budgets and (optionally) the pair QoS floors.

    Slack is ``limit - value``; a constraint is reported when its slack is
    below ``-tol``.
    """
    topo = topo or two_way(ch.K)
    p = np.asarray(p, dtype=float)
    out = []

    def check(name, index, slack):
        if slack < -tol:
            out.append(Violation(name, index, float(slack)))

    for k in range(p.size):
        check("user_power", k, sp.P_U_max - p[k])
        if p[k] < 0:
            check("user_power_nonneg", k, p[k])
    check("user_sum_power", None, sp.P_sumU_max - p.sum())
    P = relay_powers(p, W, ch, sp, topo)
    for m, Pm in enumerate(P):
        check("relay_power", m, sp.P_A_max - Pm)
    check("relay_sum_power", None, sp.P_sumR_max - P.sum())
    if check_qos:
        R = pair_throughputs(np.maximum(p, 0.0), W, ch, sp, topo)
        for k in range(ch.K):
            check("qos", k, R[k] - sp.r[k])
    return FeasibilityReport(tuple(out))
