"""Exact solver for visibility-constrained planning via nested expanded sets."""

import itertools
import logging
import math
from collections.abc import Iterator

from pydantic import BaseModel, ConfigDict

from .errors import InstanceTooLargeError
from .mnl_core import (
    NO_PURCHASE_WEIGHT,
    Instance,
    Plan,
    at_least,
    build_plan,
    revenue,
)

logger = logging.getLogger(__name__)

DEFAULT_MAX_CELLS = 16


class VisibilityPartition(BaseModel):
    """Products grouped by visibility requirement: ``levels[t]`` holds every i with l_i = t."""

    model_config = ConfigDict(frozen=True)

    levels: tuple[frozenset[int], ...]


def visibility_partition(instance: Instance) -> VisibilityPartition:
    """Partition the products by their visibility requirement, for t = 0..T."""
    levels: list[set[int]] = [set() for _ in range(instance.horizon + 1)]
    for i, ell in enumerate(instance.visibility):
        levels[ell].add(i)
    return VisibilityPartition(levels=tuple(frozenset(level) for level in levels))


def solve_apv_with_stats(instance: Instance) -> tuple[Plan, int]:
    """Solve the planning problem and count candidate inspections.

    Customers are processed from the last to the first. The assortment of
    customer t contains the one of customer t+1 and the products required
    exactly t times; remaining products are appended in price order until the
    first one priced below the current revenue. A cursor into the price order
    never moves back, so the number of inspections stays within n + 2T.

    Returns:
        The optimal plan and the number of candidate inspections
    """
    partition = visibility_partition(instance)
    order = instance.price_order
    members: set[int] = set(partition.levels[instance.horizon])
    numerator = math.fsum(instance.prices[i] * instance.weights[i] for i in members)
    denominator = NO_PURCHASE_WEIGHT + math.fsum(instance.weights[i] for i in members)
    cursor = 0
    inspections = 0
    sets: list[frozenset[int]] = [frozenset()] * instance.horizon

    for t in range(instance.horizon, 0, -1):
        if t < instance.horizon:
            for i in partition.levels[t]:
                if i not in members:
                    members.add(i)
                    numerator += instance.prices[i] * instance.weights[i]
                    denominator += instance.weights[i]
        while cursor < len(order):
            i = order[cursor]
            inspections += 1
            if i in members:
                cursor += 1
                continue
            if not at_least(instance.prices[i], numerator / denominator):
                break
            members.add(i)
            numerator += instance.prices[i] * instance.weights[i]
            denominator += instance.weights[i]
            cursor += 1
        sets[t - 1] = frozenset(members)
        logger.debug(f"Customer {t - 1}: {sorted(members)}")

    plan = build_plan(instance, sets)
    logger.info(f"Nested plan objective {plan.objective:.6g} ({inspections} inspections)")
    return plan, inspections


def solve_apv(instance: Instance) -> Plan:
    """Optimal visibility-constrained plan; assortments are nested S_T <= ... <= S_1."""
    return solve_apv_with_stats(instance)[0]


def check_oracle_size(instance: Instance, max_cells: int) -> None:
    """Raise if n*T exceeds the brute-force guard."""
    cells = instance.n * instance.horizon
    if cells > max_cells:
        raise InstanceTooLargeError(
            f"Brute force needs n*T <= {max_cells}, got {instance.n}*{instance.horizon}={cells}"
        )


def subsets(n: int, max_size: int | None = None) -> Iterator[frozenset[int]]:
    """All subsets of range(n), smallest first, optionally capped in size."""
    top = n if max_size is None else min(n, max_size)
    for size in range(top + 1):
        for combo in itertools.combinations(range(n), size):
            yield frozenset(combo)


def enumerate_best_plan(instance: Instance, max_size: int | None) -> Plan | None:
    """Best plan over all multisets of allowed assortments, or None if none is feasible.

    Customers are interchangeable, so enumerating multisets of T assortments
    covers every sequence up to a permutation of the customers.
    """
    candidates = list(subsets(instance.n, max_size))
    values = [revenue(instance, s) for s in candidates]
    best_value = -math.inf
    best: tuple[int, ...] | None = None
    for combo in itertools.combinations_with_replacement(range(len(candidates)), instance.horizon):
        counts = [0] * instance.n
        for c in combo:
            for i in candidates[c]:
                counts[i] += 1
        if any(cnt < ell for cnt, ell in zip(counts, instance.visibility)):
            continue
        value = math.fsum(values[c] for c in combo)
        if value > best_value:
            best_value = value
            best = combo
    if best is None:
        return None
    return build_plan(instance, [candidates[c] for c in best])


def brute_force_apv(instance: Instance, max_cells: int = DEFAULT_MAX_CELLS) -> Plan:
    """Exact optimum by exhaustive enumeration, for small instances.

    Raises:
        InstanceTooLargeError: If n*T exceeds ``max_cells``
    """
    check_oracle_size(instance, max_cells)
    plan = enumerate_best_plan(instance, None)
    # showing every product to every customer is always feasible
    assert plan is not None
    return plan
