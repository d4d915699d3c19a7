"""Price of visibility and its allocation to vendors as per-product fees.

The loss is shared in proportion to the negative part of each product's
collective contribution ``C_i = sum_t 1(i in S_t) (p_i - R(S_t)) v_i``.
"""

import logging
import math
from collections.abc import Sequence

from pydantic import BaseModel, ConfigDict, Field

from .apv_exact import solve_apv
from .errors import CannotIncreaseVisibilityError
from .mnl_core import (
    Assortment,
    Instance,
    Plan,
    build_plan,
    expanded,
    revenue,
    revenues_equal,
    unconstrained_optimum,
)

logger = logging.getLogger(__name__)


class FeeReport(BaseModel):
    """Revenue loss from visibility requirements and the fee charged per product."""

    model_config = ConfigDict(frozen=True)

    delta: float = Field(..., description="T * R(S*) minus the constrained optimum, >= 0")
    contributions: tuple[float, ...] = Field(..., description="Collective contribution C_i")
    fees: tuple[float, ...] = Field(..., description="Fee per product, summing to delta")
    unconstrained_value: float = Field(..., description="T * R(S*)")
    constrained_value: float = Field(..., description="Optimal visibility-constrained revenue")
    price_of_visibility: float | None = Field(
        default=None, description="Unconstrained over constrained value; None if undefined"
    )
    naive_fees: tuple[float, ...] = Field(
        ..., description="Loss split in proportion to the visibility requirements"
    )
    unconstrained_set: tuple[int, ...] = Field(..., description="Members of S*")
    plan: tuple[tuple[int, ...], ...] = Field(..., description="Constrained optimal plan")


def contributions(instance: Instance, plan: Plan) -> list[float]:
    """Collective contribution of every product across the plan."""
    terms: list[list[float]] = [[] for _ in range(instance.n)]
    for s in plan.assortments:
        r = revenue(instance, s)
        for i in s.members:
            terms[i].append((instance.prices[i] - r) * instance.weights[i])
    return [math.fsum(t) for t in terms]


def _report(instance: Instance, star: Assortment, plan: Plan) -> FeeReport:
    unconstrained = instance.horizon * revenue(instance, star)
    constrained = plan.objective
    contrib = contributions(instance, plan)
    n = instance.n

    if revenues_equal(unconstrained, constrained):
        delta = 0.0
    else:
        delta = max(0.0, unconstrained - constrained)

    negative = [max(0.0, -c) for c in contrib]
    total_negative = math.fsum(negative)
    if delta == 0.0:
        fees = [0.0] * n
    elif total_negative <= 0.0:
        logger.warning(
            f"Loss {delta:.3g} with no negative contribution; reporting zero fees"
        )
        fees = [0.0] * n
    else:
        fees = [neg / total_negative * delta for neg in negative]

    required = sum(instance.visibility)
    if delta == 0.0 or required == 0:
        naive = [0.0] * n
    else:
        naive = [ell / required * delta for ell in instance.visibility]

    ratio = unconstrained / constrained if constrained > 0.0 else None
    return FeeReport(
        delta=delta,
        contributions=tuple(contrib),
        fees=tuple(fees),
        unconstrained_value=unconstrained,
        constrained_value=constrained,
        price_of_visibility=ratio,
        naive_fees=tuple(naive),
        unconstrained_set=tuple(star.ordered),
        plan=tuple(tuple(m) for m in plan.members()),
    )


def fee_report(instance: Instance) -> FeeReport:
    """Price of visibility of an instance and the fee each vendor pays.

    When there is no loss, every fee is 0 whatever the contributions.
    """
    star = unconstrained_optimum(instance).expanded_set
    plan = solve_apv(instance)
    report = _report(instance, star, plan)
    logger.info(
        f"Price of visibility {report.delta:.6g} "
        f"({report.unconstrained_value:.6g} unconstrained vs {report.constrained_value:.6g})"
    )
    return report


def _customer_set(instance: Instance, position: int) -> Assortment:
    """Optimal assortment of the customer at 0-based ``position``.

    It is the expanded set of every product required more than ``position``
    times.
    """
    required = [i for i, ell in enumerate(instance.visibility) if ell > position]
    return expanded(instance, required).expanded_set


def _raise_visibility(
    instance: Instance, sets: Sequence[Assortment], product: int
) -> tuple[Instance, list[Assortment]]:
    ell = instance.visibility[product]
    if ell >= instance.horizon:
        raise CannotIncreaseVisibilityError(
            f"Product {product} already has visibility {ell} = T"
        )
    raised = instance.with_visibility(product, ell + 1)
    # only the customer at position ell sees a different required set
    updated = list(sets)
    updated[ell] = _customer_set(raised, ell)
    return raised, updated


def fee_increment(instance: Instance, product: int) -> float:
    """Fee of ``product`` after raising its visibility requirement by one.

    Raises:
        PreconditionError: If ``product`` is not an index of the instance
        CannotIncreaseVisibilityError: If the requirement already equals T
    """
    instance.require_product(product)
    star = unconstrained_optimum(instance).expanded_set
    plan = solve_apv(instance)
    raised, sets = _raise_visibility(instance, plan.assortments, product)
    report = _report(raised, star, build_plan(raised, sets))
    return report.fees[product]


def fee_schedule(instance: Instance, product: int) -> list[float]:
    """Fee of ``product`` for every visibility requirement 0..T, others fixed."""
    current = instance.with_visibility(product, 0)
    star = unconstrained_optimum(current).expanded_set
    plan = solve_apv(current)
    sets = list(plan.assortments)
    schedule = [_report(current, star, plan).fees[product]]
    for _ in range(instance.horizon):
        current, sets = _raise_visibility(current, sets, product)
        schedule.append(_report(current, star, build_plan(current, sets)).fees[product])
    return schedule
