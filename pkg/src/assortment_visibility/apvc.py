"""Cardinality-constrained planning.

Feasibility is decided by max-flow, small instances are solved exhaustively,
and equal-price instances are approximated by the scheme

    discretize weights -> enumerate guesses -> solve each LP relaxation
    -> dependent rounding -> evaluate with true weights -> keep the best.

A guess fixes, for every customer, a weight tier (light, medium 1..L, heavy)
and a packing pattern: how many products of each weight class the customer
is offered, with ``STAR`` meaning "more than C*".
"""

import itertools
import logging
import math
from collections import Counter
from collections.abc import Iterator, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import cached_property

import networkx as nx
import numpy as np

from . import dep_rounding
from .apv_exact import DEFAULT_MAX_CELLS, check_oracle_size, enumerate_best_plan
from .dep_rounding import FractionalBipartite
from .errors import (
    GuessBudgetExceededError,
    InfeasibleInstanceError,
    PreconditionError,
    SandwichViolationError,
    UnsupportedInstanceError,
)
from .lp_engine import LpModel, solve_lp
from .mnl_core import Instance, Plan, build_plan, plan_is_feasible

logger = logging.getLogger(__name__)

STAR = -1
LIGHT = 0
DEFAULT_GUESS_BUDGET = 1_000_000
DEFAULT_REPS = 20
_SLACK = 1e-12


def check_feasibility(instance: Instance) -> bool:
    """Whether some plan meets every visibility requirement under the cap.

    Products (capacity l_i from the source) are matched to customers (capacity
    k to the sink) through unit edges; the instance is feasible iff the
    maximum flow saturates every product.
    """
    cap = instance.cardinality_cap if instance.cardinality_cap is not None else instance.n
    demand = sum(instance.visibility)
    if demand == 0:
        return True
    network = nx.DiGraph()
    for i, ell in enumerate(instance.visibility):
        network.add_edge("source", ("product", i), capacity=ell)
        for t in range(instance.horizon):
            network.add_edge(("product", i), ("customer", t), capacity=1)
    for t in range(instance.horizon):
        network.add_edge(("customer", t), "sink", capacity=cap)
    flow = nx.maximum_flow_value(network, "source", "sink")
    logger.debug(f"Feasibility flow {flow} of {demand}")
    return flow == demand


def _require_cap(instance: Instance) -> int:
    if instance.cardinality_cap is None:
        raise PreconditionError("This operation needs an instance with a cardinality cap k")
    return instance.cardinality_cap


def brute_force_apvc(instance: Instance, max_cells: int = DEFAULT_MAX_CELLS) -> Plan:
    """Exact cardinality-constrained optimum by exhaustive enumeration.

    Raises:
        PreconditionError: If the instance has no cardinality cap
        InstanceTooLargeError: If n*T exceeds ``max_cells``
        InfeasibleInstanceError: If no plan satisfies the constraints
    """
    cap = _require_cap(instance)
    check_oracle_size(instance, max_cells)
    if not check_feasibility(instance):
        raise InfeasibleInstanceError("No plan meets the visibility requirements under the cap")
    plan = enumerate_best_plan(instance, cap)
    if plan is None:
        raise InfeasibleInstanceError("No plan meets the visibility requirements under the cap")
    return plan


def _sales(weight: float) -> float:
    return weight / (1.0 + weight)


def objective(instance: Instance, plan: Plan) -> float:
    """Sales objective: expected number of purchases, with the true weights."""
    return math.fsum(
        _sales(math.fsum(instance.weights[i] for i in s.members)) for s in plan.assortments
    )


sales_objective = objective


@dataclass(frozen=True)
class DiscretizedInstance:
    """Rounded weights and weight classes of an equal-price instance.

    Class 0 holds products lighter than eps^5 (kept as is), classes
    ``1..Q-1`` hold geometrically rounded weights and class ``Q`` holds the
    products capped at 1/eps.
    """

    instance: Instance
    epsilon: float
    rounded_weights: tuple[float, ...]
    classes: tuple[int, ...]
    num_classes: int

    @property
    def c_star(self) -> int:
        """Pattern count above which a class is recorded as ``STAR``."""
        return math.ceil(1.0 / self.epsilon**6 - 1e-9)

    @property
    def num_tiers(self) -> int:
        """Number L of medium tiers: smallest L with eps*(1+eps)^L >= 1/eps."""
        eps = self.epsilon
        tiers = 1
        while eps * (1.0 + eps) ** tiers < 1.0 / eps:
            tiers += 1
        return tiers

    @property
    def heavy_tier(self) -> int:
        return self.num_tiers + 1

    @cached_property
    def class_members(self) -> tuple[tuple[int, ...], ...]:
        members: list[list[int]] = [[] for _ in range(self.num_classes + 1)]
        for i, q in enumerate(self.classes):
            members[q].append(i)
        return tuple(tuple(m) for m in members)

    def tier_bounds(self, tier: int) -> tuple[float, float]:
        """Lower bound V_t and exclusive upper bound of a customer tier."""
        eps = self.epsilon
        if tier == LIGHT:
            return 0.0, eps
        if tier == self.heavy_tier:
            return 1.0 / eps, math.inf
        return eps * (1.0 + eps) ** (tier - 1), min(eps * (1.0 + eps) ** tier, 1.0 / eps)

    def tier_of(self, weight: float) -> int:
        """Tier of a customer whose assortment has rounded weight ``weight``."""
        if weight < self.epsilon:
            return LIGHT
        if weight >= 1.0 / self.epsilon:
            return self.heavy_tier
        return next(
            tier
            for tier in range(1, self.heavy_tier)
            if weight < self.tier_bounds(tier)[1]
        )

    def rounded_instance(self) -> Instance:
        """The instance with every weight replaced by its rounded value."""
        return self.instance.with_weights(self.rounded_weights)

    def rounded_objective(self, plan: Plan) -> float:
        return math.fsum(
            _sales(math.fsum(self.rounded_weights[i] for i in s.members))
            for s in plan.assortments
        )


def discretize(instance: Instance, epsilon: float) -> DiscretizedInstance:
    """Round weights down to a geometric grid.

    Weights of at least 1/eps become 1/eps, weights below eps^5 are kept, and
    every other weight is rounded down to ``eps^5 * (1+eps)^(q-1)`` for the
    unique q with ``eps^5 (1+eps)^(q-1) <= v < eps^5 (1+eps)^q``.

    Raises:
        UnsupportedInstanceError: If prices are not all equal
        PreconditionError: If epsilon is outside (0, 1)
    """
    if not instance.equal_prices:
        raise UnsupportedInstanceError("Weight discretization needs equal prices")
    if not 0.0 < epsilon < 1.0:
        raise PreconditionError(f"epsilon must lie in (0, 1), got {epsilon}")

    small = epsilon**5
    cap = 1.0 / epsilon
    num_classes = 1
    while small * (1.0 + epsilon) ** (num_classes - 1) < cap:
        num_classes += 1

    rounded: list[float] = []
    classes: list[int] = []
    for v in instance.weights:
        if v >= cap:
            rounded.append(cap)
            classes.append(num_classes)
        elif v < small:
            rounded.append(v)
            classes.append(0)
        else:
            q = 1
            while small * (1.0 + epsilon) ** q <= v:
                q += 1
            rounded.append(small * (1.0 + epsilon) ** (q - 1))
            classes.append(q)
    logger.debug(f"Discretized with eps={epsilon}: Q={num_classes}, classes={classes}")
    return DiscretizedInstance(
        instance=instance,
        epsilon=epsilon,
        rounded_weights=tuple(rounded),
        classes=tuple(classes),
        num_classes=num_classes,
    )


def sandwich_check(
    plan: Plan, instance: Instance, disc: DiscretizedInstance
) -> tuple[float, float]:
    """Evaluate a plan with rounded and true weights and check they sandwich.

    Returns:
        ``(rounded objective, true objective)``

    Raises:
        SandwichViolationError: If rounded <= true <= (1+eps) * rounded fails
    """
    rounded = disc.rounded_objective(plan)
    true = objective(instance, plan)
    if rounded > true + 1e-9 or true > (1.0 + disc.epsilon) * rounded + 1e-9:
        raise SandwichViolationError(
            f"Objective {true:.9g} not within [{rounded:.9g}, (1+eps)*{rounded:.9g}]"
        )
    return rounded, true


@dataclass(frozen=True)
class PackingPattern:
    """Products per weight class offered to one customer; ``STAR`` means more than C*."""

    counts: tuple[int, ...]

    def is_bounded(self) -> bool:
        """No ``STAR`` among classes 1..Q (class 0 may be starred)."""
        return all(c != STAR for c in self.counts[1:])

    def min_size(self, c_star: int) -> int:
        return sum(c_star + 1 if c == STAR else c for c in self.counts)


@dataclass(frozen=True)
class CustomerSlot:
    """Tier, packing pattern and weight lower bound guessed for one customer."""

    tier: int
    pattern: PackingPattern
    lower_bound: float


@dataclass(frozen=True)
class Guess:
    """Per-customer tiers and patterns; customers are interchangeable."""

    slots: tuple[CustomerSlot, ...]

    @property
    def counts(self) -> Counter[tuple[int, PackingPattern]]:
        """Number of customers per (tier, pattern) pair."""
        return Counter((slot.tier, slot.pattern) for slot in self.slots)


@dataclass(frozen=True)
class RelaxationSolution:
    """Fractional solution x[i][t] of a guess's LP relaxation."""

    x: tuple[tuple[float, ...], ...]
    value: float


def _pattern_weight_range(
    disc: DiscretizedInstance, pattern: PackingPattern
) -> tuple[float, float]:
    lo = hi = 0.0
    for q, count in enumerate(pattern.counts):
        members = disc.class_members[q]
        if not members:
            continue
        weights = sorted(disc.rounded_weights[i] for i in members)
        take_lo = disc.c_star + 1 if count == STAR else count
        take_hi = len(weights) if count == STAR else count
        lo += math.fsum(weights[:take_lo])
        hi += math.fsum(weights[len(weights) - take_hi :])
    return lo, hi


def candidate_pairs(disc: DiscretizedInstance) -> list[tuple[int, PackingPattern]]:
    """Every (tier, pattern) pair some feasible assortment could realize.

    Patterns respect class sizes and the cardinality cap; a tier is paired
    with a pattern only when the pattern's attainable weight range meets the
    tier's weight interval.
    """
    cap = _require_cap(disc.instance)
    options = []
    for members in disc.class_members:
        size = len(members)
        choices = list(range(min(size, disc.c_star) + 1))
        if size > disc.c_star:
            choices.append(STAR)
        options.append(choices)

    pairs = []
    for counts in itertools.product(*options):
        pattern = PackingPattern(counts=tuple(counts))
        if pattern.min_size(disc.c_star) > cap:
            continue
        lo, hi = _pattern_weight_range(disc, pattern)
        for tier in range(disc.heavy_tier + 1):
            bottom, top = disc.tier_bounds(tier)
            if hi >= bottom - _SLACK * max(1.0, bottom) and lo < top + _SLACK * max(1.0, top):
                pairs.append((tier, pattern))
    return pairs


def guess_count(disc: DiscretizedInstance, horizon: int | None = None) -> int:
    """Number of guesses: multisets of T (tier, pattern) pairs."""
    t = disc.instance.horizon if horizon is None else horizon
    return math.comb(len(candidate_pairs(disc)) + t - 1, t)


def _slot(disc: DiscretizedInstance, tier: int, pattern: PackingPattern) -> CustomerSlot:
    return CustomerSlot(tier=tier, pattern=pattern, lower_bound=disc.tier_bounds(tier)[0])


def _meets_class_demand(disc: DiscretizedInstance, slots: Sequence[CustomerSlot]) -> bool:
    """Each class offers at least as many exposures as its products require."""
    for q, members in enumerate(disc.class_members):
        if not members:
            continue
        supply = sum(
            len(members) if slot.pattern.counts[q] == STAR else slot.pattern.counts[q]
            for slot in slots
        )
        if supply < sum(disc.instance.visibility[i] for i in members):
            return False
    return True


def enumerate_guesses(
    disc: DiscretizedInstance,
    horizon: int | None = None,
    budget: int = DEFAULT_GUESS_BUDGET,
) -> Iterator[Guess]:
    """Yield every guess, customers assigned to pairs in enumeration order.

    Raises:
        GuessBudgetExceededError: Before yielding anything, if the count exceeds ``budget``
    """
    t = disc.instance.horizon if horizon is None else horizon
    pairs = candidate_pairs(disc)
    total = math.comb(len(pairs) + t - 1, t)
    if total > budget:
        raise GuessBudgetExceededError(total, budget)
    logger.info(f"Enumerating {total} guesses over {len(pairs)} tier/pattern pairs")
    slots = [_slot(disc, tier, pattern) for tier, pattern in pairs]
    skipped = 0
    for combo in itertools.combinations_with_replacement(range(len(pairs)), t):
        chosen = tuple(slots[c] for c in combo)
        if not _meets_class_demand(disc, chosen):
            skipped += 1
            continue
        yield Guess(slots=chosen)
    if skipped:
        logger.debug(f"Skipped {skipped} guesses that cannot cover class demand")


def guess_from_plan(disc: DiscretizedInstance, plan: Plan) -> Guess:
    """The guess an integral plan induces, customers kept in plan order."""
    slots = []
    for s in plan.assortments:
        weight = math.fsum(disc.rounded_weights[i] for i in s.members)
        counts = [0] * (disc.num_classes + 1)
        for i in s.members:
            counts[disc.classes[i]] += 1
        pattern = PackingPattern(
            counts=tuple(STAR if c > disc.c_star else c for c in counts)
        )
        slots.append(_slot(disc, disc.tier_of(weight), pattern))
    return Guess(slots=tuple(slots))


def _column(disc: DiscretizedInstance, i: int, t: int) -> int:
    return t * disc.instance.n + i


def build_relaxation(disc: DiscretizedInstance, guess: Guess) -> LpModel:
    """LP relaxation of the guess's integer program, x[i][t] in [0, 1].

    The objective counts rounded weight offered to light customers. Rows:
    visibility per product, cardinality per customer, pattern counts per
    customer and non-empty class (equality, or at least C*+1 for ``STAR``),
    the tier lower bound per customer and the light ceiling eps.
    """
    instance = disc.instance
    cap = _require_cap(instance)
    n, horizon = instance.n, len(guess.slots)
    model = LpModel()
    for t, slot in enumerate(guess.slots):
        for i in range(n):
            gain = disc.rounded_weights[i] if slot.tier == LIGHT else 0.0
            model.add_variable(objective=gain, lower=0.0, upper=1.0, name=f"x[{i},{t}]")

    for i in range(n):
        row = {_column(disc, i, t): 1.0 for t in range(horizon)}
        model.add_constraint(row, ">=", float(instance.visibility[i]), name=f"visibility[{i}]")
    for t in range(horizon):
        row = {_column(disc, i, t): 1.0 for i in range(n)}
        model.add_constraint(row, "<=", float(cap), name=f"cardinality[{t}]")
    for t, slot in enumerate(guess.slots):
        for q, members in enumerate(disc.class_members):
            if not members:
                continue
            row = {_column(disc, i, t): 1.0 for i in members}
            count = slot.pattern.counts[q]
            if count == STAR:
                model.add_constraint(row, ">=", float(disc.c_star + 1), name=f"star[{q},{t}]")
            else:
                model.add_constraint(row, "==", float(count), name=f"pattern[{q},{t}]")
    for t, slot in enumerate(guess.slots):
        row = {_column(disc, i, t): disc.rounded_weights[i] for i in range(n)}
        model.add_constraint(row, ">=", slot.lower_bound, name=f"tier[{t}]")
    for t, slot in enumerate(guess.slots):
        if slot.tier == LIGHT:
            row = {_column(disc, i, t): disc.rounded_weights[i] for i in range(n)}
            model.add_constraint(row, "<=", disc.epsilon, name=f"light[{t}]")
    return model


def solve_relaxation(disc: DiscretizedInstance, guess: Guess) -> RelaxationSolution | None:
    """Solve a guess's relaxation; None when the guess is infeasible."""
    solution = solve_lp(build_relaxation(disc, guess))
    if not solution.is_optimal:
        return None
    n = disc.instance.n
    x = tuple(
        tuple(min(1.0, max(0.0, solution.x[_column(disc, i, t)])) for t in range(len(guess.slots)))
        for i in range(n)
    )
    return RelaxationSolution(x=x, value=solution.value)


def build_bipartite(
    disc: DiscretizedInstance, guess: Guess, x: Sequence[Sequence[float]]
) -> FractionalBipartite:
    """Bipartite graph of products against customer vertices.

    An unbounded customer t is the single vertex ``(t,)`` joined to every
    product; a bounded customer is split into vertices ``(t, q)`` for
    q = 0..Q and product i is joined to ``(t, q_i)``. Edge (i, .) of customer t
    carries ``x[i][t]``.
    """
    products = tuple(range(disc.instance.n))
    right: list[tuple[int, ...]] = []
    values: dict[tuple[int, tuple[int, ...]], float] = {}
    for t, slot in enumerate(guess.slots):
        if slot.pattern.is_bounded():
            right.extend((t, q) for q in range(disc.num_classes + 1))
            for i in products:
                values[(i, (t, disc.classes[i]))] = x[i][t]
        else:
            right.append((t,))
            for i in products:
                values[(i, (t,))] = x[i][t]
    return FractionalBipartite(left=products, right=tuple(right), values=values)


def round_relaxation(
    disc: DiscretizedInstance,
    guess: Guess,
    x: Sequence[Sequence[float]],
    rng: np.random.Generator,
) -> list[frozenset[int]]:
    """Round a fractional solution into one assortment per customer."""
    graph = build_bipartite(disc, guess, x)
    rounded = dep_rounding.round(graph, rng)
    sets: list[set[int]] = [set() for _ in guess.slots]
    for (i, vertex), value in rounded.items():
        if value:
            sets[vertex[0]].add(i)
    return [frozenset(s) for s in sets]


class PtasRunner:
    """Approximation scheme for equal-price instances with a cardinality cap.

    :meth:`prepare` enumerates the guesses and solves each relaxation once;
    :meth:`run` rounds every feasible relaxation ``reps`` times for a seed and
    returns the best plan. Relaxations are reused across seeds.
    """

    def __init__(
        self,
        instance: Instance,
        epsilon: float,
        reps: int = DEFAULT_REPS,
        guess_budget: int = DEFAULT_GUESS_BUDGET,
        workers: int = 1,
    ):
        _require_cap(instance)
        self.disc = discretize(instance, epsilon)
        if not check_feasibility(instance):
            raise InfeasibleInstanceError("No plan meets the visibility requirements under the cap")
        self.instance = instance
        self.reps = reps
        self.guess_budget = guess_budget
        self.workers = workers
        self.relaxations: list[tuple[int, Guess, RelaxationSolution]] | None = None

    def prepare(self) -> int:
        """Solve all guess relaxations; returns the number of feasible guesses."""
        guesses = list(enumerate_guesses(self.disc, budget=self.guess_budget))
        with ThreadPoolExecutor(max_workers=self.workers) as pool:
            solved = list(pool.map(lambda g: solve_relaxation(self.disc, g), guesses))
        self.relaxations = [
            (index, guess, sol)
            for index, (guess, sol) in enumerate(zip(guesses, solved))
            if sol is not None
        ]
        discarded = len(guesses) - len(self.relaxations)
        logger.info(f"{len(self.relaxations)} feasible guesses, {discarded} discarded")
        return len(self.relaxations)

    def _best_for_guess(
        self, index: int, guess: Guess, sol: RelaxationSolution, seed: int
    ) -> tuple[float, int, Plan | None]:
        rng = np.random.default_rng([seed, index])
        best: Plan | None = None
        for _ in range(self.reps):
            sets = round_relaxation(self.disc, guess, sol.x, rng)
            plan = build_plan(self.instance, sets)
            if not plan_is_feasible(self.instance, plan):
                logger.warning(f"Rounded plan of guess {index} violates a constraint; skipped")
                continue
            if best is None or plan.objective > best.objective:
                best = plan
        return (best.objective if best else -math.inf), index, best

    def run(self, seed: int) -> Plan:
        """Best rounded plan over all feasible guesses for one seed.

        Raises:
            InfeasibleInstanceError: If no guess produced a feasible plan
        """
        if self.relaxations is None:
            self.prepare()
        assert self.relaxations is not None
        with ThreadPoolExecutor(max_workers=self.workers) as pool:
            results = list(
                pool.map(lambda r: self._best_for_guess(r[0], r[1], r[2], seed), self.relaxations)
            )
        candidates = [r for r in results if r[2] is not None]
        if not candidates:
            raise InfeasibleInstanceError("No guess produced a feasible plan")
        value, index, plan = max(candidates, key=lambda r: (r[0], -r[1]))
        assert plan is not None
        logger.info(f"Best plan from guess {index} with objective {value:.6g}")
        return plan


def solve_apvc_ptas(
    instance: Instance,
    epsilon: float,
    seed: int,
    reps: int = DEFAULT_REPS,
    guess_budget: int = DEFAULT_GUESS_BUDGET,
    workers: int = 1,
) -> Plan:
    """Approximately optimal plan for an equal-price instance with a cap.

    Raises:
        UnsupportedInstanceError: If prices differ
        InfeasibleInstanceError: If no feasible plan exists
        GuessBudgetExceededError: If the guess count exceeds ``guess_budget``
    """
    runner = PtasRunner(instance, epsilon, reps=reps, guess_budget=guess_budget, workers=workers)
    return runner.run(seed)
