"""Dense two-phase simplex producing optimal basic feasible solutions.

Models are maximization problems over bounded-below variables. Upper bounds
become explicit rows, so a basic solution of the standard form is a vertex of
the original polytope.
"""

import logging
import math
from enum import StrEnum
from typing import Literal

import numpy as np
from pydantic import BaseModel, Field

from .errors import LpModelError, SolverError

logger = logging.getLogger(__name__)

FEASIBILITY_TOLERANCE = 1e-7
OPTIMALITY_TOLERANCE = 1e-9
PIVOT_TOLERANCE = 1e-11
MAX_ITERATIONS = 100_000

Sense = Literal["<=", ">=", "=="]


class LpConstraint(BaseModel):
    """A sparse linear row ``sum(coefficients[j] * x_j) <sense> rhs``."""

    coefficients: dict[int, float]
    sense: Sense
    rhs: float
    name: str = ""


class LpModel(BaseModel):
    """A linear program ``max c.x`` subject to sparse rows and variable bounds."""

    objective: list[float] = Field(default_factory=list)
    lower: list[float] = Field(default_factory=list)
    upper: list[float | None] = Field(default_factory=list)
    names: list[str] = Field(default_factory=list)
    constraints: list[LpConstraint] = Field(default_factory=list)

    @property
    def num_variables(self) -> int:
        return len(self.objective)

    def add_variable(
        self,
        objective: float = 0.0,
        lower: float = 0.0,
        upper: float | None = None,
        name: str = "",
    ) -> int:
        """Append a variable and return its column index."""
        self.objective.append(objective)
        self.lower.append(lower)
        self.upper.append(upper)
        self.names.append(name or f"x{len(self.objective) - 1}")
        return len(self.objective) - 1

    def add_constraint(
        self, coefficients: dict[int, float], sense: Sense, rhs: float, name: str = ""
    ) -> int:
        """Append a row and return its index."""
        self.constraints.append(
            LpConstraint(coefficients=coefficients, sense=sense, rhs=rhs, name=name)
        )
        return len(self.constraints) - 1

    def check(self) -> None:
        """Validate dimensions and coefficients.

        Raises:
            LpModelError: On mismatched lengths, bad indices or non-finite data
        """
        n = self.num_variables
        if len(self.lower) != n or len(self.upper) != n:
            raise LpModelError(
                f"Bounds have lengths {len(self.lower)}/{len(self.upper)} for {n} variables"
            )
        for j in range(n):
            lo, up = self.lower[j], self.upper[j]
            if not math.isfinite(self.objective[j]) or not math.isfinite(lo):
                raise LpModelError(f"Variable {j} has a non-finite cost or lower bound")
            if up is not None and (not math.isfinite(up) or up < lo):
                raise LpModelError(f"Variable {j} has an invalid upper bound {up}")
        for r, row in enumerate(self.constraints):
            if not math.isfinite(row.rhs):
                raise LpModelError(f"Constraint {r} has a non-finite right-hand side")
            for j, a in row.coefficients.items():
                if not 0 <= j < n:
                    raise LpModelError(f"Constraint {r} references unknown variable {j}")
                if not math.isfinite(a):
                    raise LpModelError(f"Constraint {r} has a non-finite coefficient")

    def evaluate(self, x: list[float]) -> float:
        return math.fsum(c * v for c, v in zip(self.objective, x))

    def max_violation(self, x: list[float]) -> float:
        """Largest violation of any row or bound at ``x``."""
        worst = 0.0
        for j, v in enumerate(x):
            worst = max(worst, self.lower[j] - v)
            if self.upper[j] is not None:
                worst = max(worst, v - self.upper[j])
        for row in self.constraints:
            lhs = math.fsum(a * x[j] for j, a in row.coefficients.items())
            if row.sense == "<=":
                worst = max(worst, lhs - row.rhs)
            elif row.sense == ">=":
                worst = max(worst, row.rhs - lhs)
            else:
                worst = max(worst, abs(lhs - row.rhs))
        return worst


class LpStatus(StrEnum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


class LpSolution(BaseModel):
    """Result of :func:`solve_lp`.

    ``basis`` lists the basic columns of the standard form: indices below
    ``num_variables`` are model variables, the rest are slacks. ``dual_bound``
    is the objective of the dual solution read off the final basis; it is an
    upper bound on every feasible value when ``dual_feasible`` holds.
    """

    status: LpStatus
    value: float = math.nan
    x: list[float] = Field(default_factory=list)
    basis: list[int] = Field(default_factory=list)
    dual_bound: float | None = None
    dual_feasible: bool = False
    iterations: int = 0

    @property
    def is_optimal(self) -> bool:
        return self.status is LpStatus.OPTIMAL


class _StandardForm:
    """Equality form ``A y = b, y >= 0`` with shifted variables y = x - lower."""

    def __init__(self, model: LpModel):
        n = model.num_variables
        lower = np.array(model.lower, dtype=float)
        rows: list[tuple[np.ndarray, str, float]] = []
        for con in model.constraints:
            a = np.zeros(n)
            for j, coef in con.coefficients.items():
                a[j] += coef
            rows.append((a, con.sense, con.rhs - float(a @ lower)))
        for j, up in enumerate(model.upper):
            if up is not None:
                a = np.zeros(n)
                a[j] = 1.0
                rows.append((a, "<=", up - model.lower[j]))

        num_slacks = sum(1 for _, sense, _ in rows if sense != "==")
        m = len(rows)
        self.n = n
        self.m = m
        self.num_columns = n + num_slacks
        self.A = np.zeros((m, self.num_columns))
        self.b = np.zeros(m)
        self.needs_artificial: list[bool] = []
        slack = n
        for r, (a, sense, rhs) in enumerate(rows):
            self.A[r, :n] = a
            slack_sign = 0.0
            if sense != "==":
                slack_sign = 1.0 if sense == "<=" else -1.0
                self.A[r, slack] = slack_sign
                slack += 1
            self.b[r] = rhs
            if rhs < 0:
                self.A[r] *= -1.0
                self.b[r] *= -1.0
                slack_sign *= -1.0
            self.needs_artificial.append(slack_sign <= 0.0)
        self.c = np.zeros(self.num_columns)
        self.c[:n] = model.objective
        self.shift = float(np.dot(model.objective, lower)) if n else 0.0
        self.lower = lower


def _pivot(tableau: np.ndarray, row: int, col: int) -> None:
    tableau[row] /= tableau[row, col]
    for r in range(tableau.shape[0]):
        if r != row and tableau[r, col] != 0.0:
            tableau[r] -= tableau[r, col] * tableau[row]


def _price_out(tableau: np.ndarray, basis: list[int], cost: np.ndarray) -> None:
    """Write the reduced-cost row ``c_B B^-1 A - c`` into the last tableau row."""
    m = len(basis)
    z = -np.append(cost, 0.0)
    for r, j in enumerate(basis):
        if cost[j] != 0.0:
            z += cost[j] * tableau[r]
    tableau[m] = z


def _simplex(tableau: np.ndarray, basis: list[int], active: int) -> tuple[str, int]:
    """Maximize with Bland's rule over the first ``active`` columns."""
    m = len(basis)
    for iteration in range(MAX_ITERATIONS):
        z = tableau[m, :active]
        entering = next((j for j in range(active) if z[j] < -OPTIMALITY_TOLERANCE), -1)
        if entering < 0:
            return "optimal", iteration
        column = tableau[:m, entering]
        leaving = -1
        best_ratio = math.inf
        for r in range(m):
            if column[r] > PIVOT_TOLERANCE:
                ratio = tableau[r, -1] / column[r]
                if ratio < best_ratio - 1e-12 or (
                    abs(ratio - best_ratio) <= 1e-12 and basis[r] < basis[leaving]
                ):
                    best_ratio = ratio
                    leaving = r
        if leaving < 0:
            return "unbounded", iteration
        _pivot(tableau, leaving, entering)
        basis[leaving] = entering
    raise SolverError(f"Simplex did not terminate within {MAX_ITERATIONS} pivots")


def solve_lp(model: LpModel) -> LpSolution:
    """Solve a linear program with the two-phase simplex method.

    Phase one minimizes the sum of artificial variables; artificials left in
    the basis at zero are pivoted out or their redundant rows dropped. Phase two
    optimizes the model objective. Bland's rule is used in both phases.

    Returns:
        An optimal basic feasible solution, or an infeasible/unbounded status

    Raises:
        LpModelError: If the model is malformed
    """
    model.check()
    form = _StandardForm(model)
    m, total = form.m, form.num_columns
    artificial_rows = [r for r in range(m) if form.needs_artificial[r]]
    num_artificial = len(artificial_rows)
    width = total + num_artificial

    tableau = np.zeros((m + 1, width + 1))
    tableau[:m, :total] = form.A
    tableau[:m, -1] = form.b
    basis: list[int] = [-1] * m
    for r in range(m):
        if not form.needs_artificial[r]:
            # the slack column of a <= row with b >= 0
            basis[r] = next(j for j in range(form.n, total) if form.A[r, j] == 1.0)
    for k, r in enumerate(artificial_rows):
        tableau[r, total + k] = 1.0
        basis[r] = total + k

    iterations = 0
    if num_artificial:
        phase_one_cost = np.zeros(width)
        phase_one_cost[total:] = -1.0
        _price_out(tableau, basis, phase_one_cost)
        _, used = _simplex(tableau, basis, width)
        iterations += used
        if tableau[m, -1] < -FEASIBILITY_TOLERANCE:
            logger.debug(f"LP infeasible (phase one residual {-tableau[m, -1]:.3g})")
            return LpSolution(status=LpStatus.INFEASIBLE, iterations=iterations)

        keep = []
        for r in range(m):
            if basis[r] >= total:
                column = next(
                    (j for j in range(total) if abs(tableau[r, j]) > PIVOT_TOLERANCE), -1
                )
                if column < 0:
                    continue
                _pivot(tableau, r, column)
                basis[r] = column
            keep.append(r)
        tableau = np.vstack([tableau[keep], np.zeros((1, width + 1))])
        tableau = np.delete(tableau, np.s_[total:width], axis=1)
        basis = [basis[r] for r in keep]
    else:
        keep = list(range(m))

    _price_out(tableau, basis, form.c)
    status, used = _simplex(tableau, basis, total)
    iterations += used
    if status == "unbounded":
        return LpSolution(status=LpStatus.UNBOUNDED, iterations=iterations)

    y = np.zeros(total)
    for r, j in enumerate(basis):
        y[j] = tableau[r, -1]
    x = (y[: form.n] + form.lower).tolist()
    value = model.evaluate(x)

    dual_bound, dual_feasible = _dual_certificate(form, keep, basis)
    logger.debug(f"LP optimal value {value:.9g} after {iterations} pivots")
    return LpSolution(
        status=LpStatus.OPTIMAL,
        value=value,
        x=x,
        basis=list(basis),
        dual_bound=dual_bound,
        dual_feasible=dual_feasible,
        iterations=iterations,
    )


def _dual_certificate(
    form: _StandardForm, rows: list[int], basis: list[int]
) -> tuple[float | None, bool]:
    """Dual values ``y = c_B B^-1`` on the kept rows and the bound ``y.b``."""
    if not rows:
        return form.shift, bool(np.all(form.c <= OPTIMALITY_TOLERANCE))
    a = form.A[rows]
    try:
        duals = np.linalg.solve(a[:, basis].T, form.c[basis])
    except np.linalg.LinAlgError:
        return None, False
    reduced = form.c - duals @ a
    feasible = bool(np.all(reduced <= 1e-7))
    return float(duals @ form.b[rows]) + form.shift, feasible
