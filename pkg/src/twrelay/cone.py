"""Real linear-objective programs over second-order cones.

Constraints are written with :class:`Affine` row blocks over a fixed decision
vector. Rotated cones ``||z||^2 <= u v`` are stored as standard cones
``||(2z, u - v)|| <= u + v`` but keep their tag for auditing. Solving is
delegated to Clarabel (primal-dual interior point, Nesterov-Todd scaling).
"""
from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field

import clarabel
import numpy as np
from scipy import sparse


ALMOST_TOL = 1e-6


class Status(str, enum.Enum):
    OPTIMAL = "Optimal"
    PRIMAL_INFEASIBLE = "PrimalInfeasible"
    DUAL_INFEASIBLE = "DualInfeasible"
    MAX_ITERATIONS = "MaxIterations"
    ALMOST_OPTIMAL = "AlmostOptimal"
    NUMERICAL_FAILURE = "NumericalFailure"


_STATUS_MAP = {
    "Solved": Status.OPTIMAL,
    "PrimalInfeasible": Status.PRIMAL_INFEASIBLE,
    "AlmostPrimalInfeasible": Status.PRIMAL_INFEASIBLE,
    "DualInfeasible": Status.DUAL_INFEASIBLE,
    "AlmostDualInfeasible": Status.DUAL_INFEASIBLE,
    "AlmostSolved": Status.ALMOST_OPTIMAL,
    "MaxIterations": Status.MAX_ITERATIONS,
    "MaxTime": Status.MAX_ITERATIONS,
}


class Affine:
    """Stack of affine rows ``A @ x + b``."""

    __slots__ = ("A", "b")

    def __init__(self, A, b):
        self.A = np.atleast_2d(np.asarray(A, dtype=float))
        self.b = np.atleast_1d(np.asarray(b, dtype=float))
        if self.A.shape[0] != self.b.shape[0]:
            raise ValueError("row count mismatch")

    @property
    def rows(self) -> int:
        return self.b.shape[0]

    @property
    def n(self) -> int:
        return self.A.shape[1]

    @classmethod
    def const(cls, values, n: int) -> "Affine":
        b = np.atleast_1d(np.asarray(values, dtype=float))
        return cls(np.zeros((b.size, n)), b)

    def __getitem__(self, idx) -> "Affine":
        if isinstance(idx, (int, np.integer)):
            idx = [idx]
        return Affine(self.A[idx], self.b[idx])

    def __add__(self, other):
        if isinstance(other, Affine):
            return Affine(self.A + other.A, self.b + other.b)
        return Affine(self.A, self.b + other)

    __radd__ = __add__

    def __neg__(self):
        return Affine(-self.A, -self.b)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, c):
        c = np.asarray(c, dtype=float)
        if c.ndim == 0:
            return Affine(self.A * c, self.b * c)
        return Affine(self.A * c[:, None], self.b * c)

    __rmul__ = __mul__

    def sum(self) -> "Affine":
        return Affine(self.A.sum(axis=0, keepdims=True), [self.b.sum()])

    def dot(self, w) -> "Affine":
        w = np.asarray(w, dtype=float)
        return Affine((w @ self.A)[None], [w @ self.b])

    def value(self, x) -> np.ndarray:
        return self.A @ x + self.b

    @staticmethod
    def stack(parts) -> "Affine":
        parts = list(parts)
        return Affine(np.vstack([p.A for p in parts]), np.concatenate([p.b for p in parts]))


@dataclass
class Cone:
    kind: str  # "soc", "rsoc", "nonneg" or "zero"
    expr: Affine
    label: str = ""


@dataclass
class Solution:
    status: Status
    x: np.ndarray | None
    objective: float
    gap: float
    iterations: int
    values: dict = field(default_factory=dict)
    message: str = ""

    @property
    def ok(self) -> bool:
        return self.status in (Status.OPTIMAL, Status.ALMOST_OPTIMAL)


class ConeProgram:
    """``maximize c @ x + c0`` subject to affine cone memberships.

    Declare every variable block with :meth:`var` before building
    expressions; expressions span the full decision vector.
    """

    def __init__(self):
        self.blocks: dict[str, slice] = {}
        self.n = 0
        self._sealed = False
        self.objective: Affine | None = None
        self.cones: list[Cone] = []
        self.meta: dict = {}

    def var(self, name: str, size: int) -> slice:
        if self._sealed:
            raise RuntimeError("cannot declare variables after building expressions")
        if name in self.blocks:
            raise KeyError(f"duplicate block {name!r}")
        sl = slice(self.n, self.n + int(size))
        self.blocks[name] = sl
        self.n += int(size)
        return sl

    def x(self, name: str, idx=None) -> Affine:
        """Expression selecting (part of) a variable block."""
        self._sealed = True
        sl = self.blocks[name]
        cols = np.arange(sl.start, sl.stop)
        if idx is not None:
            cols = np.atleast_1d(cols[idx])
        A = np.zeros((cols.size, self.n))
        A[np.arange(cols.size), cols] = 1.0
        return Affine(A, np.zeros(cols.size))

    def const(self, values) -> Affine:
        self._sealed = True
        return Affine.const(values, self.n)

    def zeros(self, rows: int) -> Affine:
        return Affine(np.zeros((rows, self.n)), np.zeros(rows))

    # constraint helpers -------------------------------------------------
    def maximize(self, expr: Affine):
        if expr.rows != 1:
            raise ValueError("objective must be a single row")
        self.objective = expr

    def add_nonneg(self, expr: Affine, label=""):
        """``expr >= 0`` row-wise."""
        self.cones.append(Cone("nonneg", expr, label))

    def add_eq(self, expr: Affine, label=""):
        self.cones.append(Cone("zero", expr, label))

    def add_soc(self, t: Affine, u: Affine, label=""):
        """``||u|| <= t``."""
        self.cones.append(Cone("soc", Affine.stack([t, u]), label))

    def add_rsoc(self, u: Affine, v: Affine, z: Affine, label=""):
        """``||z||^2 <= u * v`` with ``u, v >= 0``."""
        expr = Affine.stack([u + v, 2.0 * z, u - v])
        self.cones.append(Cone("rsoc", expr, label))

    # inspection ---------------------------------------------------------
    def count(self, kind=None, label=None) -> int:
        return sum(
            1
            for c in self.cones
            if (kind is None or c.kind == kind) and (label is None or c.label == label)
        )

    def violation(self, x) -> float:
        """Largest cone violation of a candidate ``x`` (0 when feasible)."""
        worst = 0.0
        for c in self.cones:
            v = c.expr.value(x)
            if c.kind == "zero":
                worst = max(worst, float(np.max(np.abs(v))))
            elif c.kind == "nonneg":
                worst = max(worst, float(-np.min(v)))
            else:
                worst = max(worst, float(np.linalg.norm(v[1:]) - v[0]))
        return worst

    def evaluate(self, x) -> float:
        return float(self.objective.value(x)[0])

    def block_values(self, x) -> dict:
        return {name: np.asarray(x[sl]) for name, sl in self.blocks.items()}

    def dump(self, path) -> None:
        """Write the program as JSON: variables, objective, equalities, cones."""

        def rows(expr):
            A = sparse.coo_matrix(expr.A)
            return {
                "A": [[int(i), int(j), float(v)] for i, j, v in zip(A.row, A.col, A.data)],
                "b": expr.b.tolist(),
            }

        doc = {
            "variables": [
                {"name": k, "offset": s.start, "size": s.stop - s.start} for k, s in self.blocks.items()
            ],
            "objective": rows(self.objective),
            "equalities": [rows(c.expr) | {"label": c.label} for c in self.cones if c.kind == "zero"],
            "cones": [
                rows(c.expr) | {"kind": c.kind, "label": c.label}
                for c in self.cones
                if c.kind != "zero"
            ],
        }
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=1)


@dataclass(frozen=True)
class SolverSettings:
    gap_tol: float = 1e-8
    feas_tol: float = 1e-8
    max_iter: int = 200


_RETRY = ("NumericalError", "InsufficientProgress", "AlmostSolved")


def _run(P, q, A, b, spec, settings, **extra):
    s = clarabel.DefaultSettings()
    s.verbose = False
    s.tol_gap_abs = settings.gap_tol
    s.tol_gap_rel = settings.gap_tol
    s.tol_feas = settings.feas_tol
    s.max_iter = settings.max_iter
    for k, v in extra.items():
        setattr(s, k, v)
    return clarabel.DefaultSolver(P, q, A, b, spec, s).solve()


def solve(cp: ConeProgram, settings: SolverSettings = SolverSettings()) -> Solution:
    """Solve ``cp`` to the requested accuracy."""
    if cp.objective is None:
        raise ValueError("program has no objective")
    order = {"zero": 0, "nonneg": 1, "soc": 2, "rsoc": 2}
    cones = sorted(cp.cones, key=lambda c: order[c.kind])  # stable
    blocks_A, blocks_b, spec = [], [], []
    for kind in ("zero", "nonneg"):
        group = [c.expr for c in cones if c.kind == kind]
        if group:
            e = Affine.stack(group)
            blocks_A.append(e.A)
            blocks_b.append(e.b)
            spec.append(clarabel.ZeroConeT(e.rows) if kind == "zero" else clarabel.NonnegativeConeT(e.rows))
    for c in cones:
        if c.kind in ("soc", "rsoc"):
            blocks_A.append(c.expr.A)
            blocks_b.append(c.expr.b)
            spec.append(clarabel.SecondOrderConeT(c.expr.rows))
    A = sparse.csc_matrix(-np.vstack(blocks_A))
    b = np.concatenate(blocks_b)
    P = sparse.csc_matrix((cp.n, cp.n))
    q = -cp.objective.A[0]

    res = _run(P, q, A, b, spec, settings)
    if str(res.status).split(".")[-1] in _RETRY:
        # a shorter interior step usually clears end-game KKT trouble
        res = _run(P, q, A, b, spec, settings, max_step_fraction=0.9)
    name = str(res.status).split(".")[-1]
    status = _STATUS_MAP.get(name, Status.NUMERICAL_FAILURE)
    x = np.asarray(res.x, dtype=float)
    if name in _RETRY:
        status = Status.ALMOST_OPTIMAL
    pobj = -float(res.obj_val) + float(cp.objective.b[0])
    dobj = -float(getattr(res, "obj_val_dual", res.obj_val)) + float(cp.objective.b[0])
    sol = Solution(
        status=status,
        x=x,
        objective=pobj,
        gap=abs(pobj - dobj),
        iterations=int(res.iterations),
        message=name,
    )
    if status is Status.ALMOST_OPTIMAL and not (np.all(np.isfinite(x)) and cp.violation(x) <= ALMOST_TOL):
        # reduced accuracy is only usable when the point is verifiably feasible
        sol.status = status = Status.NUMERICAL_FAILURE
    if sol.ok:
        sol.values = cp.block_values(x)
    return sol
