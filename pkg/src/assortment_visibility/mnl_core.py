"""Core MNL data model: instances, assortments, plans and expanded revenue.

Products are indexed from 0 in the order the caller supplied them. The
no-purchase option has weight 1 and is addressed as ``None``.
"""

import logging
import math
import operator
from collections.abc import Iterable, Sequence

from pydantic import BaseModel, ConfigDict, Field, PrivateAttr, model_validator

from .errors import InvalidAssortmentError, PreconditionError

logger = logging.getLogger(__name__)

# Relative tolerance under which two revenues count as equal.
REVENUE_TOLERANCE = 1e-9
NO_PURCHASE_WEIGHT = 1.0


def revenues_equal(a: float, b: float) -> bool:
    """Check whether two revenues are equal up to the relative tie tolerance."""
    return abs(a - b) <= REVENUE_TOLERANCE * max(1.0, abs(a), abs(b))


def at_least(a: float, b: float) -> bool:
    """Tolerant ``a >= b`` using the revenue tie tolerance."""
    return a >= b or revenues_equal(a, b)


class Instance(BaseModel):
    """An assortment planning instance with visibility requirements.

    The JSON form uses the keys ``prices``, ``weights``, ``visibility``, ``T``
    and ``k``.
    """

    model_config = ConfigDict(frozen=True, populate_by_name=True)

    prices: tuple[float, ...] = Field(..., description="Product prices p_i >= 0")
    weights: tuple[float, ...] = Field(..., description="MNL preference weights v_i > 0")
    visibility: tuple[int, ...] = Field(..., description="Minimum exposures l_i per product")
    horizon: int = Field(..., alias="T", gt=0, description="Number of customers T")
    cardinality_cap: int | None = Field(
        default=None, alias="k", gt=0, description="Optional per-customer cap k"
    )

    _price_order: tuple[int, ...] = PrivateAttr(default=())

    @model_validator(mode="after")
    def _check_invariants(self) -> "Instance":
        n = len(self.prices)
        if n == 0:
            raise ValueError("An instance needs at least one product")
        if len(self.weights) != n or len(self.visibility) != n:
            raise ValueError(
                f"prices, weights and visibility must have equal length "
                f"(got {n}, {len(self.weights)}, {len(self.visibility)})"
            )
        for i, (p, v, ell) in enumerate(zip(self.prices, self.weights, self.visibility)):
            if not math.isfinite(p) or p < 0:
                raise ValueError(f"Price of product {i} must be finite and non-negative: {p}")
            if not math.isfinite(v) or v <= 0:
                raise ValueError(f"Weight of product {i} must be finite and positive: {v}")
            if ell < 0 or ell > self.horizon:
                raise ValueError(
                    f"Visibility of product {i} must lie in [0, {self.horizon}]: {ell}"
                )
        return self

    def model_post_init(self, context: object, /) -> None:
        # sorted() is stable, so equal prices keep input order
        self._price_order = tuple(sorted(range(len(self.prices)), key=lambda i: -self.prices[i]))

    @property
    def n(self) -> int:
        """Number of products."""
        return len(self.prices)

    @property
    def price_order(self) -> tuple[int, ...]:
        """Product indices by non-increasing price, ties by input index."""
        return self._price_order

    @property
    def equal_prices(self) -> bool:
        """Whether every product has the same price."""
        return all(p == self.prices[0] for p in self.prices)

    def assortment(self, members: Iterable[int]) -> "Assortment":
        """Build a validated assortment of this instance.

        Raises:
            InvalidAssortmentError: If an index is out of range
        """
        try:
            chosen = frozenset(operator.index(i) for i in members)
        except TypeError as e:
            raise InvalidAssortmentError(f"Product indices must be integers: {e}") from e
        for i in chosen:
            if not 0 <= i < self.n:
                raise InvalidAssortmentError(
                    f"Product index {i!r} out of range for an instance with {self.n} products"
                )
        total = math.fsum(self.weights[i] for i in chosen)
        return Assortment(members=chosen, total_weight=total)

    def require_product(self, product: int) -> int:
        """Return ``product`` if it indexes a product of this instance.

        Raises:
            PreconditionError: If the index is outside [0, n)
        """
        if not 0 <= product < self.n:
            raise PreconditionError(
                f"Product index {product} out of range for an instance with {self.n} products"
            )
        return product

    def with_visibility(self, product: int, value: int) -> "Instance":
        """Return a copy with the visibility requirement of one product replaced."""
        self.require_product(product)
        visibility = list(self.visibility)
        visibility[product] = value
        return self._replace(visibility=tuple(visibility))

    def with_weights(self, weights: Sequence[float]) -> "Instance":
        """Return a copy with new preference weights."""
        return self._replace(weights=tuple(weights))

    def with_cap(self, cap: int | None) -> "Instance":
        """Return a copy with a different cardinality cap."""
        return self._replace(cardinality_cap=cap)

    def _replace(self, **changes: object) -> "Instance":
        data = self.model_dump()
        data.update(changes)
        return Instance(**data)


class Assortment(BaseModel):
    """A set of products offered to one customer, with its cached total weight."""

    model_config = ConfigDict(frozen=True)

    members: frozenset[int]
    total_weight: float

    def __contains__(self, product: object) -> bool:
        return product in self.members

    def __len__(self) -> int:
        return len(self.members)

    @property
    def ordered(self) -> list[int]:
        """Members in increasing index order."""
        return sorted(self.members)


class Plan(BaseModel):
    """A sequence of assortments, one per customer, and its total expected revenue."""

    model_config = ConfigDict(frozen=True)

    assortments: tuple[Assortment, ...]
    objective: float

    @property
    def horizon(self) -> int:
        return len(self.assortments)

    def members(self) -> list[list[int]]:
        """The plan as sorted index lists, one per customer."""
        return [s.ordered for s in self.assortments]


class ExpandedResult(BaseModel):
    """Expanded set of a seed assortment and its expanded revenue."""

    model_config = ConfigDict(frozen=True)

    expanded_set: Assortment
    expanded_revenue: float


AssortmentLike = Assortment | Iterable[int]


def as_assortment(instance: Instance, s: AssortmentLike) -> Assortment:
    """Coerce an index collection into a validated assortment."""
    if isinstance(s, Assortment):
        return instance.assortment(s.members)
    return instance.assortment(s)


def revenue(instance: Instance, s: AssortmentLike) -> float:
    """Expected revenue of offering ``s`` to one customer.

    Raises:
        InvalidAssortmentError: If ``s`` references an unknown product
    """
    chosen = as_assortment(instance, s)
    if not chosen.members:
        return 0.0
    numerator = math.fsum(instance.prices[i] * instance.weights[i] for i in chosen.members)
    return numerator / (NO_PURCHASE_WEIGHT + chosen.total_weight)


def choice_prob(instance: Instance, product: int | None, s: AssortmentLike) -> float:
    """Probability that a customer offered ``s`` picks ``product``.

    Args:
        instance: The instance
        product: Product index, or None for the no-purchase option
        s: The offered assortment

    Returns:
        The MNL choice probability; 0 for products not offered
    """
    chosen = as_assortment(instance, s)
    denominator = NO_PURCHASE_WEIGHT + chosen.total_weight
    if product is None:
        return NO_PURCHASE_WEIGHT / denominator
    if not 0 <= product < instance.n:
        raise InvalidAssortmentError(f"Product index {product} out of range")
    if product not in chosen:
        return 0.0
    return instance.weights[product] / denominator


def expanded(instance: Instance, a: AssortmentLike) -> ExpandedResult:
    """Revenue-maximizing superset of ``a``, ties broken toward largest cardinality.

    Products outside ``a`` are appended in price order while the prefix
    revenues are tracked incrementally; the longest prefix whose revenue ties
    the peak wins.
    """
    base = as_assortment(instance, a)
    numerator = math.fsum(instance.prices[i] * instance.weights[i] for i in base.members)
    denominator = NO_PURCHASE_WEIGHT + base.total_weight
    prefix_revenues = [numerator / denominator]
    added: list[int] = []
    for i in instance.price_order:
        if i in base.members:
            continue
        numerator += instance.prices[i] * instance.weights[i]
        denominator += instance.weights[i]
        prefix_revenues.append(numerator / denominator)
        added.append(i)

    peak = max(prefix_revenues)
    best = max(k for k, r in enumerate(prefix_revenues) if revenues_equal(r, peak))
    chosen = instance.assortment(base.members | set(added[:best]))
    logger.debug(f"Expanded {base.ordered} -> {chosen.ordered} (revenue {peak:.6g})")
    return ExpandedResult(expanded_set=chosen, expanded_revenue=revenue(instance, chosen))


def unconstrained_optimum(instance: Instance) -> ExpandedResult:
    """Maximum-cardinality optimal assortment without visibility requirements."""
    return expanded(instance, ())


def add_product_conditions(
    instance: Instance, s: AssortmentLike, j: int
) -> tuple[bool, bool, bool]:
    """The three equivalent tests for adding ``j`` to ``s``.

    Returns:
        ``(R(S+j) >= R(S), p_j >= R(S), p_j >= R(S+j))``

    Raises:
        PreconditionError: If ``j`` is already in ``s``
    """
    chosen = as_assortment(instance, s)
    if j in chosen:
        raise PreconditionError(f"Product {j} is already in the assortment")
    before = revenue(instance, chosen)
    after = revenue(instance, chosen.members | {j})
    price = instance.prices[j]
    return at_least(after, before), at_least(price, before), at_least(price, after)


def add_product_effect(instance: Instance, s: AssortmentLike, j: int) -> bool:
    """Whether adding ``j`` to ``s`` weakly increases revenue, decided by ``p_j >= R(S)``."""
    return add_product_conditions(instance, s, j)[1]


def convex_combination_weight(instance: Instance, s: AssortmentLike, j: int) -> float:
    """Weight alpha with R(S+j) = alpha * R(S) + (1 - alpha) * p_j."""
    chosen = as_assortment(instance, s)
    if j in chosen:
        raise PreconditionError(f"Product {j} is already in the assortment")
    return (NO_PURCHASE_WEIGHT + chosen.total_weight) / (
        NO_PURCHASE_WEIGHT + chosen.total_weight + instance.weights[j]
    )


def revenue_gap(instance: Instance, smaller: AssortmentLike, larger: AssortmentLike) -> float:
    """R(S1) - R(S2) for S1 a subset of S2, through the weighted price-gap sum."""
    s1 = as_assortment(instance, smaller)
    s2 = as_assortment(instance, larger)
    if not s1.members <= s2.members:
        raise PreconditionError("The first assortment must be a subset of the second")
    base = revenue(instance, s1)
    gap = math.fsum(
        (base - instance.prices[j]) * instance.weights[j] for j in s2.members - s1.members
    )
    return gap / (NO_PURCHASE_WEIGHT + s2.total_weight)


def revenue_decomposition(instance: Instance, s: AssortmentLike) -> dict[int, float]:
    """Per-product terms (p_i - R(S)) * v_i; they sum to R(S)."""
    chosen = as_assortment(instance, s)
    r = revenue(instance, chosen)
    return {i: (instance.prices[i] - r) * instance.weights[i] for i in chosen.ordered}


def build_plan(instance: Instance, sets: Sequence[AssortmentLike]) -> Plan:
    """Build a plan of exactly ``T`` assortments and evaluate its revenue.

    Raises:
        PreconditionError: If the number of assortments differs from the horizon
    """
    if len(sets) != instance.horizon:
        raise PreconditionError(
            f"A plan needs {instance.horizon} assortments, got {len(sets)}"
        )
    assortments = tuple(as_assortment(instance, s) for s in sets)
    objective = math.fsum(revenue(instance, s) for s in assortments)
    return Plan(assortments=assortments, objective=objective)


def exposure_counts(instance: Instance, plan: Plan) -> list[int]:
    """Number of customers each product is shown to."""
    counts = [0] * instance.n
    for s in plan.assortments:
        for i in s.members:
            counts[i] += 1
    return counts


def plan_is_feasible(instance: Instance, plan: Plan, enforce_cap: bool = True) -> bool:
    """Check visibility requirements and, when present, the cardinality cap."""
    if plan.horizon != instance.horizon:
        return False
    counts = exposure_counts(instance, plan)
    if any(c < ell for c, ell in zip(counts, instance.visibility)):
        return False
    cap = instance.cardinality_cap
    if enforce_cap and cap is not None:
        return all(len(s) <= cap for s in plan.assortments)
    return True
