"""Per-iteration convex programs of the path-following algorithms.

Every program is expressed around the current expansion point with scaled
variables ``alpha = alphabar * a`` and ``beta = betabar * b`` so that all
quantities are of order one at the expansion point. The cone encoding:

* receiver interference budget
  ``sum_l p_l |L_kl|^2 + sigma_R^2 ||L_k||^2 + sigma_k^2 <= sqrt(alpha_k)``
  with ``p_l = 1/sqrt(beta_l)``; one rotated cone per interferer
  (``t * v_l >= |.|^2`` where ``v_l^2 <= beta_l``), one for the relay noise
  term and one for ``y_k^2 <= alpha_k``;
* user powers ``s_l * v_l >= 1``;
* relay powers: one rotated cone per amplified signal and one per Frobenius
  norm;
* bound reciprocal ``w_k * margin_k >= c_k`` with the margin floored at
  ``delta_tr``.
"""
from __future__ import annotations

import numpy as np

from .cone import Affine, ConeProgram, Solution, SolverSettings, solve
from .lift import LiftedPoint
from .surrogate import Expansion, log_bound_coeffs

DELTA_TR = 1e-9


class _Layout:
    """Index bookkeeping shared by the builder and :func:`inject`."""

    def __init__(self, exp: Expansion):
        topo, ch = exp.topo, exp.ch
        self.S, self.M, self.N = topo.n_sets, ch.M, ch.N_R
        self.U = topo.n_users
        self.K = topo.K
        self.nW = self.S * self.M * self.N * self.N
        self.int_pairs = [(j, l) for j in range(self.U) for l in topo.interferers[j]]
        self.amp = [
            (s, l, m)
            for s, src in enumerate(topo.set_sources)
            for l in src
            for m in range(self.M)
        ]
        self.active = np.flatnonzero((exp.xbar > 0) & (np.abs(exp.Lbar) > 0))


def _wrows(cp: ConeProgram, C) -> Affine:
    """Real and imaginary parts of complex linear functionals of the beamformers.

    ``C`` has shape ``(r, S, M, N, N)``; output has ``2r`` rows (real parts first).
    """
    C = np.asarray(C).reshape(C.shape[0], -1)
    nW = C.shape[1]
    A = np.zeros((2 * C.shape[0], cp.n))
    sl = cp.blocks["W"]
    A[: C.shape[0], sl.start : sl.start + nW] = C.real
    A[: C.shape[0], sl.start + nW : sl.stop] = -C.imag
    A[C.shape[0] :, sl.start : sl.start + nW] = C.imag
    A[C.shape[0] :, sl.start + nW : sl.stop] = C.real
    return Affine(A, np.zeros(2 * C.shape[0]))


def _real_row(cp: ConeProgram, C) -> Affine:
    return _wrows(cp, np.asarray(C)[None])[0]


def _link_functional(exp, lay, j, l):
    C = np.zeros((lay.S, lay.M, lay.N, lay.N), dtype=complex)
    s = exp.topo.recv_set[j]
    C[s] = np.einsum("mi,mj->mij", exp.ch.f[:, j].conj(), exp.ch.h[l])
    return C


def _row_functionals(exp, lay, j):
    # entries (m, col) of f_{m,j}^H W^s_m
    s = exp.topo.recv_set[j]
    C = np.zeros((lay.M, lay.N, lay.S, lay.M, lay.N, lay.N), dtype=complex)
    for m in range(lay.M):
        for col in range(lay.N):
            C[m, col, s, m, :, col] = exp.ch.f[m, j].conj()
    return C.reshape(lay.M * lay.N, lay.S, lay.M, lay.N, lay.N)


def _amp_functionals(exp, lay, s, l, m):
    # entries i of W^s_m h_{l,m}
    C = np.zeros((lay.N, lay.S, lay.M, lay.N, lay.N), dtype=complex)
    for i in range(lay.N):
        C[i, s, m, i, :] = exp.ch.h[l, m]
    return C


def _frob_functionals(lay, s, m):
    C = np.zeros((lay.N * lay.N, lay.S, lay.M, lay.N, lay.N), dtype=complex)
    for i in range(lay.N):
        for c in range(lay.N):
            C[i * lay.N + c, s, m, i, c] = 1.0
    return C


def build(
    exp: Expansion,
    objective: str,
    qos=None,
    frozen_beta: bool = False,
    sinr_floor: float | None = None,
    delta_tr: float = DELTA_TR,
) -> ConeProgram:
    """Compile the convex subproblem at ``exp``.

    Args:
        exp: expansion point (feasible for the lifted constraints).
        objective: ``"maximin"`` (weighted min pair bound), ``"ee"`` (sum of
            ratio bounds) or ``"sum"`` (sum of pair bounds).
        qos: per-pair floors on the pair bound, or None.
        frozen_beta: keep user powers at the expansion values.
        sinr_floor: optional per-receiver floor in nats, imposed through the
            tangent cut of the reverse convex SINR constraint.
        delta_tr: closure floor of the normalized trust-region margin.
    """
    if objective not in ("maximin", "ee", "sum"):
        raise ValueError(f"unknown objective {objective!r}")
    topo, ch, sp, pt = exp.topo, exp.ch, exp.sp, exp.point
    lay = _Layout(exp)
    U, K, S, M, N = lay.U, lay.K, lay.S, lay.M, lay.N
    chi = exp.chi
    abar, bbar = pt.alpha, pt.beta
    pbar = 1.0 / np.sqrt(bbar)
    root_a = np.sqrt(abar)
    P_norm = sp.P_A_max if sp.P_A_max > 0 else 1.0

    cp = ConeProgram()
    cp.var("W", 2 * lay.nW)
    cp.var("alpha", U)
    if not frozen_beta:
        cp.var("beta", U)
        cp.var("v", U)
        cp.var("s", U)
    cp.var("y", U)
    cp.var("t_int", len(lay.int_pairs))
    cp.var("u_noise", U)
    cp.var("e_amp", len(lay.amp))
    cp.var("g_frob", S * M)
    cp.var("w", lay.active.size)
    if objective == "maximin":
        cp.var("tau", 1)
    if objective == "ee":
        cp.var("pi", 1)

    one = cp.const(1.0)
    a = cp.x("alpha")
    if frozen_beta:
        b = cp.const(np.ones(U))
        v = cp.const(np.ones(U))
        s_pow = cp.const(np.ones(U))
    else:
        b, v, s_pow = cp.x("beta"), cp.x("v"), cp.x("s")
    y = cp.x("y")
    t = cp.x("t_int")
    u = cp.x("u_noise")
    e = cp.x("e_amp")
    g = cp.x("g_frob")

    # interference budget of every receiver
    for j in range(U):
        cp.add_rsoc(a[j], one, y[j], label="sqrt_alpha")
        cp.add_rsoc(u[j], one, np.sqrt(sp.sigma_R2 / root_a[j]) * _wrows(cp, _row_functionals(exp, lay, j)), label="relay_noise")
    for idx, (j, l) in enumerate(lay.int_pairs):
        C = _link_functional(exp, lay, j, l)[None]
        cp.add_rsoc(t[idx], v[l], np.sqrt(pbar[l] / root_a[j]) * _wrows(cp, C), label="interference")
    for j in range(U):
        terms = [i for i, (jj, _) in enumerate(lay.int_pairs) if jj == j]
        budget = y[j] - u[j] - sp.sigma2[j] / root_a[j]
        if terms:
            budget = budget - t[terms].sum()
        cp.add_nonneg(budget, label="interference_budget")

    # user powers
    if not frozen_beta:
        cp.add_nonneg(b - (pbar / sp.P_U_max) ** 2 if sp.P_U_max > 0 else b, label="user_power_floor")
        for l in range(U):
            cp.add_rsoc(b[l], one, v[l], label="sqrt_beta")
            cp.add_rsoc(s_pow[l], v[l], one, label="user_power")
        cp.add_nonneg(sp.P_sumU_max - s_pow.dot(pbar), label="user_sum_power")

    # relay powers (normalized by the per-relay cap)
    rho = [g[[s_ * M + m for s_ in range(S)]].sum() for m in range(M)]
    for idx, (s_, l, m) in enumerate(lay.amp):
        z = np.sqrt(pbar[l] / P_norm) * _wrows(cp, _amp_functionals(exp, lay, s_, l, m))
        cp.add_rsoc(e[idx], v[l], z, label="relay_amp")
        rho[m] = rho[m] + e[idx]
    for s_ in range(S):
        for m in range(M):
            z = np.sqrt(sp.sigma_R2 / P_norm) * _wrows(cp, _frob_functionals(lay, s_, m))
            cp.add_rsoc(g[s_ * M + m], one, z, label="relay_frob")
    for m in range(M):
        cp.add_nonneg(sp.P_A_max / P_norm - rho[m], label="relay_power")
    rho_sum = Affine.stack(rho).sum()
    cp.add_nonneg(sp.P_sumR_max - P_norm * rho_sum, label="relay_sum_power")

    # log bounds on the trust region
    coeffs = log_bound_coeffs(exp.xbar)
    w = cp.x("w") if lay.active.size else None
    bound = [cp.const(coeffs.a[j]) for j in range(U)]
    for i, j in enumerate(lay.active):
        Lb = exp.Lbar[j]
        C = _link_functional(exp, lay, j, chi[j]) * np.conj(Lb) / abs(Lb) ** 2
        margin = 2.0 * _real_row(cp, C) - 0.5 * (a[j] + b[chi[j]])
        cp.add_nonneg(margin - delta_tr, label="trust_region")
        ctil = exp.xbar[j] / (exp.xbar[j] + 1.0)
        cp.add_rsoc(w[i], margin, cp.const(np.sqrt(ctil)), label="bound_reciprocal")
        bound[j] = bound[j] - w[i]
        if sinr_floor is not None:
            gain = np.expm1(sinr_floor)
            cut = 2.0 * _real_row(cp, C) - 1.0 - gain / (2.0 * exp.xbar[j]) * (a[j] + b[chi[j]])
            cp.add_nonneg(cut, label="sinr_floor")
    pair = [bound[k] + bound[K + k] for k in range(K)]

    if qos is not None:
        qos = np.broadcast_to(np.asarray(qos, dtype=float), (K,))
        for k in range(K):
            if qos[k] > 0:
                cp.add_nonneg(pair[k] - qos[k], label="qos")

    if objective == "maximin":
        tau = cp.x("tau")
        for k in range(K):
            if sp.r[k] > 0:
                cp.add_nonneg(pair[k] * (1.0 / sp.r[k]) - tau, label="maximin")
        cp.maximize(tau)
    elif objective == "sum":
        cp.maximize(topo.prelog * Affine.stack(pair).sum())
    else:
        lx = np.log1p(exp.xbar)
        circuit = topo.relay_circuit_mult * M * N * sp.P_r + 2 * K * sp.P_Ucirc
        consumed = sp.zeta * s_pow.dot(pbar) + sp.zeta * P_norm * rho_sum + circuit
        pi = cp.x("pi")
        cp.add_nonneg(pi - consumed * (1.0 / exp.tbar), label="consumption")
        num = Affine.stack(bound).sum() + float(lx.sum()) - float(lx.sum()) * pi
        cp.maximize(num * (topo.prelog / exp.tbar))

    cp.meta.update(
        exp=exp,
        objective=objective,
        frozen_beta=frozen_beta,
        layout=lay,
        P_norm=P_norm,
    )
    return cp


def build_maximin(exp: Expansion, **kw) -> ConeProgram:
    return build(exp, "maximin", **kw)


def build_ee(exp: Expansion, qos=None, **kw) -> ConeProgram:
    """EE subproblem; ``qos`` defaults to the scenario floors ``sp.r``."""
    return build(exp, "ee", qos=exp.sp.r if qos is None else qos, **kw)


def build_sum(exp: Expansion, qos=None, **kw) -> ConeProgram:
    return build(exp, "sum", qos=exp.sp.r if qos is None else qos, **kw)


def expected_cone_count(K: int, M: int, N_R: int, frozen_beta=False, one_way=False) -> dict:
    """Closed-form count of cone blocks by label for a program from :func:`build`.

    Assumes every receiver has a nonzero desired link at the expansion point.
    """
    U = 2 * K
    n_int = U * (K - 1) if one_way else U * (U - 2)
    S = 2 if one_way else 1
    out = {
        "sqrt_alpha": U,
        "relay_noise": U,
        "interference": n_int,
        # every user is amplified by exactly one set at every relay
        "relay_amp": M * U,
        "relay_frob": S * M,
        "bound_reciprocal": U,
    }
    if not frozen_beta:
        out["sqrt_beta"] = U
        out["user_power"] = U
    return out


def inject(cp: ConeProgram, point: LiftedPoint) -> np.ndarray:
    """Decision vector representing ``point`` with every epigraph tight.

    Computed directly from the model formulas, independently of the cone rows,
    so it can be used to audit the builder.
    """
    exp: Expansion = cp.meta["exp"]
    lay: _Layout = cp.meta["layout"]
    ch, sp, topo = exp.ch, exp.sp, exp.topo
    pt = exp.point
    x = np.zeros(cp.n)
    flat = point.W.reshape(-1)
    sl = cp.blocks["W"]
    x[sl] = np.concatenate([flat.real, flat.imag])
    a = point.alpha / pt.alpha
    x[cp.blocks["alpha"]] = a
    x[cp.blocks["y"]] = np.sqrt(a)
    if cp.meta["frozen_beta"]:
        b = np.ones(lay.U)
    else:
        b = point.beta / pt.beta
        x[cp.blocks["beta"]] = b
        x[cp.blocks["v"]] = np.sqrt(b)
        x[cp.blocks["s"]] = 1.0 / np.sqrt(b)
    v = np.sqrt(b)
    pbar = 1.0 / np.sqrt(pt.beta)
    root_a = np.sqrt(pt.alpha)
    L = np.einsum("mki,smij,lmj->skl", ch.f.conj(), point.W, ch.h)
    rows = np.einsum("mki,smij->skmj", ch.f.conj(), point.W)
    rn2 = np.sum(np.abs(rows) ** 2, axis=(2, 3))
    t = [pbar[l] * abs(L[topo.recv_set[j], j, l]) ** 2 / (root_a[j] * v[l]) for j, l in lay.int_pairs]
    x[cp.blocks["t_int"]] = t
    x[cp.blocks["u_noise"]] = [sp.sigma_R2 * rn2[topo.recv_set[j], j] / root_a[j] for j in range(lay.U)]
    P_norm = cp.meta["P_norm"]
    x[cp.blocks["e_amp"]] = [
        pbar[l] * np.sum(np.abs(point.W[s, m] @ ch.h[l, m]) ** 2) / (P_norm * v[l])
        for s, l, m in lay.amp
    ]
    x[cp.blocks["g_frob"]] = [
        sp.sigma_R2 * np.sum(np.abs(point.W[s, m]) ** 2) / P_norm
        for s in range(lay.S)
        for m in range(lay.M)
    ]
    chi = exp.chi
    coeffs = log_bound_coeffs(exp.xbar)
    f = coeffs.a.copy()
    w = []
    for j in lay.active:
        Lb = exp.Lbar[j]
        Lj = L[topo.recv_set[j], j, chi[j]]
        margin = 2 * np.real(Lj * np.conj(Lb)) / abs(Lb) ** 2 - 0.5 * (a[j] + b[chi[j]])
        wj = exp.xbar[j] / (exp.xbar[j] + 1) / margin
        w.append(wj)
        f[j] -= wj
    x[cp.blocks["w"]] = w
    if "tau" in cp.blocks:
        K = lay.K
        pair = f[:K] + f[K:]
        r = sp.r
        x[cp.blocks["tau"]] = np.min(pair[r > 0] / r[r > 0]) if np.any(r > 0) else 0.0
    if "pi" in cp.blocks:
        from .lift import lifted_consumption

        x[cp.blocks["pi"]] = lifted_consumption(
            LiftedPoint(point.W, np.ones(lay.U), pt.beta * b), ch, sp, topo
        ) / exp.tbar
    return x


def extract(sol: Solution, cp: ConeProgram) -> LiftedPoint:
    """Reassemble the lifted point from a solved program."""
    if sol.x is None:
        raise ValueError("solution carries no primal values")
    exp: Expansion = cp.meta["exp"]
    lay: _Layout = cp.meta["layout"]
    xW = sol.x[cp.blocks["W"]]
    W = (xW[: lay.nW] + 1j * xW[lay.nW :]).reshape(lay.S, lay.M, lay.N, lay.N)
    alpha = exp.point.alpha * sol.x[cp.blocks["alpha"]]
    if cp.meta["frozen_beta"]:
        beta = exp.point.beta.copy()
    else:
        beta = exp.point.beta * sol.x[cp.blocks["beta"]]
    return LiftedPoint(W, alpha, beta)


def solve_subproblem(cp: ConeProgram, settings: SolverSettings = SolverSettings()) -> Solution:
    return solve(cp, settings)
