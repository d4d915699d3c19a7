"""Compact linear program for visibility-constrained planning and plan extraction."""

import logging

from pydantic import BaseModel, ConfigDict

from .errors import ExtractionError, PreconditionError
from .lp_engine import LpModel, LpSolution
from .mnl_core import Instance, Plan, build_plan

logger = logging.getLogger(__name__)

# Membership threshold, matched to the simplex feasibility tolerance.
ZERO_THRESHOLD = 1e-7
OBJECTIVE_TOLERANCE = 1e-6


class ApvLpVars(BaseModel):
    """Column layout of the purchase-probability variables.

    Variable ``alpha[i][t]`` is the probability that customer t buys product i;
    ``i = 0`` is the no-purchase option and product j of the instance is row
    ``j + 1``.
    """

    model_config = ConfigDict(frozen=True)

    num_products: int
    horizon: int

    def column(self, option: int, customer: int) -> int:
        return customer * (self.num_products + 1) + option

    def decode(self, column: int) -> tuple[int, int]:
        """Inverse of :meth:`column`: ``(option, customer)``."""
        customer, option = divmod(column, self.num_products + 1)
        return option, customer

    @property
    def size(self) -> int:
        return (self.num_products + 1) * self.horizon


def build_apv_lp(instance: Instance) -> LpModel:
    """Build the purchase-probability LP.

    For every customer t the probabilities sum to one; products required at
    least t times are bought with probability ``v_i * alpha_0``; every other
    product with probability between 0 and ``v_i * alpha_0``.
    """
    layout = ApvLpVars(num_products=instance.n, horizon=instance.horizon)
    model = LpModel()
    for t in range(instance.horizon):
        model.add_variable(objective=0.0, name=f"alpha[none,{t}]")
        for i in range(instance.n):
            model.add_variable(objective=instance.prices[i], name=f"alpha[{i},{t}]")

    for t in range(instance.horizon):
        total = {layout.column(o, t): 1.0 for o in range(instance.n + 1)}
        model.add_constraint(total, "==", 1.0, name=f"sum[{t}]")
    for t in range(instance.horizon):
        no_purchase = layout.column(0, t)
        for i in range(instance.n):
            row = {layout.column(i + 1, t): 1.0, no_purchase: -instance.weights[i]}
            if t < instance.visibility[i]:
                model.add_constraint(row, "==", 0.0, name=f"show[{i},{t}]")
            else:
                model.add_constraint(row, "<=", 0.0, name=f"cap[{i},{t}]")
    logger.debug(
        f"APV LP with {model.num_variables} variables and {len(model.constraints)} rows"
    )
    return model


def extract_plan(instance: Instance, solution: LpSolution) -> Plan:
    """Read the plan off an optimal basic solution of :func:`build_apv_lp`.

    Customer t is offered every product with a positive purchase probability.

    Raises:
        PreconditionError: If the solution is not optimal or has the wrong size
        ExtractionError: If a free probability sits strictly inside its range, or
            the plan objective differs from the LP value by more than 1e-6
    """
    layout = ApvLpVars(num_products=instance.n, horizon=instance.horizon)
    if not solution.is_optimal:
        raise PreconditionError(f"Cannot extract a plan from a {solution.status} LP")
    if len(solution.x) != layout.size:
        raise PreconditionError(
            f"Expected {layout.size} LP values, got {len(solution.x)}"
        )

    sets: list[set[int]] = []
    for t in range(instance.horizon):
        alpha_0 = solution.x[layout.column(0, t)]
        offered: set[int] = set()
        for i in range(instance.n):
            alpha = solution.x[layout.column(i + 1, t)]
            ceiling = instance.weights[i] * alpha_0
            if alpha <= ZERO_THRESHOLD:
                continue
            if t >= instance.visibility[i] and alpha < ceiling - ZERO_THRESHOLD:
                raise ExtractionError(
                    f"alpha[{i},{t}]={alpha:.9g} lies strictly between 0 and {ceiling:.9g}"
                )
            offered.add(i)
        sets.append(offered)

    plan = build_plan(instance, sets)
    if abs(plan.objective - solution.value) > OBJECTIVE_TOLERANCE:
        raise ExtractionError(
            f"Extracted plan objective {plan.objective:.9g} differs from LP value "
            f"{solution.value:.9g}"
        )
    return plan
