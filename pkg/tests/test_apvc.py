"""Tests for cardinality-constrained planning and the approximation scheme."""

import itertools
import math

import numpy as np
import pytest

from assortment_visibility.apv_exact import subsets
from assortment_visibility.apvc import (
    LIGHT,
    STAR,
    PackingPattern,
    PtasRunner,
    brute_force_apvc,
    build_bipartite,
    build_relaxation,
    candidate_pairs,
    check_feasibility,
    discretize,
    enumerate_guesses,
    guess_count,
    guess_from_plan,
    objective,
    round_relaxation,
    sales_objective,
    sandwich_check,
    solve_apvc_ptas,
    solve_relaxation,
)
from assortment_visibility.errors import (
    GuessBudgetExceededError,
    InfeasibleInstanceError,
    PreconditionError,
    UnsupportedInstanceError,
)
from assortment_visibility.instgen import gen_3partition, gen_random
from assortment_visibility.mnl_core import Instance, build_plan, plan_is_feasible


def equal_price_instances(count: int, n: int, horizon: int, k: int):
    """Feasible equal-price instances from consecutive seeds."""
    found = []
    seed = 0
    while len(found) < count:
        instance = gen_random(n, horizon, seed=seed, price_mode="equal", k=k)
        if check_feasibility(instance):
            found.append(instance)
        seed += 1
    return found


def plan_vector(disc, plan):
    """The 0/1 relaxation point of an integral plan, columns ``t * n + i``."""
    n = disc.instance.n
    x = [0.0] * (n * plan.horizon)
    for t, s in enumerate(plan.assortments):
        for i in s.members:
            x[t * n + i] = 1.0
    return x


class TestFeasibility:
    """Test the max-flow feasibility check."""

    def test_capped_pair(self, capped_pair):
        """Test two single-product customers can show both products."""
        assert check_feasibility(capped_pair)

    def test_too_many_requirements(self):
        """Test two required products with one slot."""
        instance = Instance(prices=[1.0, 1.0], weights=[1.0, 1.0], visibility=[1, 1], T=1, k=1)

        assert not check_feasibility(instance)

    def test_no_cap_always_feasible(self):
        """Test instances without a cap are feasible."""
        assert check_feasibility(gen_random(5, 3, seed=1))

    @pytest.mark.parametrize("seed", range(20))
    def test_matches_enumeration(self, seed):
        """Test against the existence of a feasible plan by enumeration."""
        instance = gen_random(3, 2, seed=seed, price_mode="equal", k=1 + seed % 2)
        allowed = list(subsets(instance.n, instance.cardinality_cap))
        exists = any(
            plan_is_feasible(instance, build_plan(instance, combo))
            for combo in itertools.product(allowed, repeat=instance.horizon)
        )

        assert check_feasibility(instance) == exists


class TestBruteForceApvc:
    """Test the exhaustive capped oracle."""

    def test_capped_pair(self, capped_pair):
        """Test one product per customer gives 1/2 + 2/3."""
        plan = brute_force_apvc(capped_pair)

        assert plan.objective == pytest.approx(7 / 6)
        assert sorted(plan.members()) == [[0], [1]]

    def test_gadget_single_triplet(self):
        """Test a=(1,1,1) shows all three products for 3/4."""
        assert brute_force_apvc(gen_3partition([1, 1, 1])).objective == pytest.approx(3 / 4)

    def test_gadget_yes_instance(self):
        """Test a=(1,2,3,1,2,3) reaches T*B/(1+B) = 12/7."""
        plan = brute_force_apvc(gen_3partition([1, 2, 3, 1, 2, 3]))

        assert plan.objective == pytest.approx(12 / 7)

    def test_gadget_no_instance(self):
        """Test a=(1,1,1,1,1,7) stays at least 1/168 below 12/7."""
        plan = brute_force_apvc(gen_3partition([1, 1, 1, 1, 1, 7]))

        assert plan.objective <= 12 / 7 - 1 / 168 + 1e-9

    def test_infeasible(self):
        """Test an infeasible instance is reported."""
        instance = Instance(prices=[1.0, 1.0], weights=[1.0, 1.0], visibility=[1, 1], T=1, k=1)

        with pytest.raises(InfeasibleInstanceError):
            brute_force_apvc(instance)

    def test_needs_cap(self, three_products):
        """Test the cap precondition."""
        with pytest.raises(PreconditionError, match="cardinality cap"):
            brute_force_apvc(three_products)

    def test_sales_objective(self, capped_pair):
        """Test the sales objective counts expected purchases."""
        plan = build_plan(capped_pair, [{0}, {1}])

        assert objective(capped_pair, plan) == pytest.approx(1 / 2 + 2 / 3)
        assert sales_objective is objective


class TestDiscretize:
    """Test weight discretization."""

    def test_small_medium_and_heavy(self):
        """Test each weight range at epsilon 0.5."""
        instance = Instance(
            prices=[1.0] * 4, weights=[0.01, 0.05, 1.0, 5.0], visibility=[0] * 4, T=1, k=2
        )

        disc = discretize(instance, 0.5)

        assert disc.num_classes == 12
        assert disc.classes == (0, 2, 9, 12)
        assert disc.rounded_weights[0] == 0.01
        assert disc.rounded_weights[1] == pytest.approx(0.046875)
        assert disc.rounded_weights[2] == pytest.approx(0.5**5 * 1.5**8)
        assert disc.rounded_weights[3] == 2.0
        assert disc.class_members[9] == (2,)

    def test_constants(self):
        """Test C*, L and the tier bounds at two accuracies."""
        instance = Instance(prices=[1.0], weights=[1.0], visibility=[0], T=1, k=1)
        half = discretize(instance, 0.5)
        three_quarters = discretize(instance, 0.75)

        assert half.c_star == 64
        assert half.num_tiers == 4
        assert three_quarters.c_star == 6
        assert three_quarters.num_tiers == 2
        assert three_quarters.num_classes == 5
        assert half.tier_bounds(LIGHT) == (0.0, 0.5)
        assert half.tier_bounds(1) == pytest.approx((0.5, 0.75))
        assert half.tier_bounds(4) == pytest.approx((0.5 * 1.5**3, 2.0))
        assert half.tier_bounds(half.heavy_tier) == (2.0, math.inf)

    def test_tier_of(self):
        """Test tier assignment at the interval boundaries."""
        instance = Instance(prices=[1.0], weights=[1.0], visibility=[0], T=1, k=1)
        disc = discretize(instance, 0.5)

        assert disc.tier_of(0.0) == LIGHT
        assert disc.tier_of(0.4999) == LIGHT
        assert disc.tier_of(0.5) == 1
        assert disc.tier_of(0.8) == 2
        assert disc.tier_of(1.99) == 4
        assert disc.tier_of(2.0) == disc.heavy_tier

    @pytest.mark.parametrize("epsilon", [0.3, 0.5, 0.75])
    def test_rounding_bounds(self, epsilon):
        """Test rounded weights stay within a (1+eps) factor below the true weights."""
        instance = gen_random(12, 1, seed=7, price_mode="equal")
        disc = discretize(instance, epsilon)

        for v, rounded, q in zip(instance.weights, disc.rounded_weights, disc.classes):
            if q == disc.num_classes:
                assert rounded == pytest.approx(1 / epsilon)
            else:
                assert rounded <= v <= (1 + epsilon) * rounded * (1 + 1e-12)
        assert disc.rounded_instance().weights == disc.rounded_weights

    def test_rejects_unequal_prices(self):
        """Test unequal prices are unsupported."""
        with pytest.raises(UnsupportedInstanceError, match="equal prices"):
            discretize(gen_random(3, 1, seed=0), 0.5)

    @pytest.mark.parametrize("epsilon", [0.0, 1.0, -0.1])
    def test_rejects_bad_epsilon(self, capped_pair, epsilon):
        """Test epsilon outside (0, 1)."""
        with pytest.raises(PreconditionError, match="epsilon"):
            discretize(capped_pair, epsilon)

    @pytest.mark.parametrize("seed", range(20))
    def test_sandwich(self, seed):
        """Test rounded <= true <= (1+eps) * rounded for arbitrary plans."""
        instance = gen_random(4, 3, seed=seed, price_mode="equal", k=2)
        disc = discretize(instance, 0.5)
        rng = np.random.default_rng(seed)
        sets = [{i for i in range(instance.n) if rng.random() < 0.5} for _ in range(3)]

        rounded, true = sandwich_check(build_plan(instance, sets), instance, disc)

        assert rounded <= true + 1e-9


class TestGuesses:
    """Test packing patterns and guess enumeration."""

    def test_pattern_helpers(self):
        """Test boundedness and minimum size."""
        assert PackingPattern(counts=(STAR, 1, 0)).is_bounded()
        assert not PackingPattern(counts=(0, STAR, 1)).is_bounded()
        assert PackingPattern(counts=(STAR, 2)).min_size(6) == 9

    def test_candidate_pairs_respect_cap(self, capped_pair):
        """Test patterns never exceed the cap or the class sizes."""
        disc = discretize(capped_pair, 0.75)

        pairs = candidate_pairs(disc)

        assert pairs
        for _, pattern in pairs:
            assert pattern.min_size(disc.c_star) <= 1
            for q, count in enumerate(pattern.counts):
                assert count <= len(disc.class_members[q])

    def test_guess_count(self, capped_pair):
        """Test multisets of T pairs."""
        disc = discretize(capped_pair, 0.75)
        pairs = candidate_pairs(disc)

        assert guess_count(disc) == math.comb(len(pairs) + 1, 2)
        assert len(list(enumerate_guesses(disc))) <= guess_count(disc)

    def test_budget(self, capped_pair):
        """Test the guess budget is enforced before enumeration."""
        disc = discretize(capped_pair, 0.75)

        with pytest.raises(GuessBudgetExceededError) as info:
            next(enumerate_guesses(disc, budget=1))

        assert info.value.budget == 1
        assert info.value.guess_count == guess_count(disc)

    def test_guess_from_plan(self, capped_pair):
        """Test tiers and patterns induced by ({0}, {1})."""
        disc = discretize(capped_pair, 0.75)

        guess = guess_from_plan(disc, build_plan(capped_pair, [{0}, {1}]))

        assert [slot.tier for slot in guess.slots] == [LIGHT, disc.heavy_tier]
        assert guess.slots[0].pattern.counts == (0, 0, 0, 1, 0, 0)
        assert guess.slots[1].pattern.counts == (0, 0, 0, 0, 0, 1)
        assert guess.slots[1].lower_bound == pytest.approx(4 / 3)
        assert sum(guess.counts.values()) == 2

    @pytest.mark.parametrize("epsilon", [0.5, 0.75])
    def test_truth_guess_is_enumerated_and_feasible(self, epsilon):
        """Test the guess of an optimal rounded plan survives pruning and fits its relaxation."""
        for instance in equal_price_instances(4, n=3, horizon=2, k=2):
            disc = discretize(instance, epsilon)
            best = brute_force_apvc(disc.rounded_instance())
            guess = guess_from_plan(disc, best)
            pairs = candidate_pairs(disc)

            assert all((slot.tier, slot.pattern) in pairs for slot in guess.slots)
            model = build_relaxation(disc, guess)
            x = plan_vector(disc, best)
            assert model.max_violation(x) <= 1e-9
            solution = solve_relaxation(disc, guess)
            assert solution is not None
            assert solution.value >= model.evaluate(x) - 1e-7


class TestRelaxation:
    """Test relaxation rows and rounding of its solutions."""

    def test_row_count(self, capped_pair):
        """Test visibility, cardinality, pattern, tier and light rows."""
        disc = discretize(capped_pair, 0.75)
        guess = guess_from_plan(disc, build_plan(capped_pair, [{0}, {1}]))
        nonempty = sum(1 for members in disc.class_members if members)
        light = sum(1 for slot in guess.slots if slot.tier == LIGHT)

        model = build_relaxation(disc, guess)

        n, horizon = capped_pair.n, capped_pair.horizon
        assert model.num_variables == n * horizon
        assert len(model.constraints) == n + 2 * horizon + horizon * nonempty + light

    def test_integral_solution_rounds_to_itself(self, capped_pair):
        """Test an integral point is returned unchanged."""
        disc = discretize(capped_pair, 0.75)
        guess = guess_from_plan(disc, build_plan(capped_pair, [{0}, {1}]))
        x = [[1.0, 0.0], [0.0, 1.0]]

        sets = round_relaxation(disc, guess, x, np.random.default_rng(0))

        assert sets == [frozenset({0}), frozenset({1})]

    def test_bipartite_layout(self, capped_pair):
        """Test bounded customers split by class, unbounded ones stay whole."""
        disc = discretize(capped_pair, 0.75)
        guess = guess_from_plan(disc, build_plan(capped_pair, [{0}, {1}]))
        x = [[1.0, 0.0], [0.0, 1.0]]

        graph = build_bipartite(disc, guess, x)

        assert graph.left == (0, 1)
        assert len(graph.right) == 2 * (disc.num_classes + 1)
        assert graph.values[(0, (0, 3))] == 1.0
        assert graph.values[(1, (1, 5))] == 1.0
        graph.validate()


class TestPtas:
    """Test the approximation scheme end to end."""

    def test_capped_pair_is_optimal(self, capped_pair):
        """Test the scheme finds 7/6."""
        plan = solve_apvc_ptas(capped_pair, 0.75, seed=0, reps=5)

        assert plan.objective == pytest.approx(7 / 6)
        assert plan_is_feasible(capped_pair, plan)

    def test_gadget(self):
        """Test the single-triplet gadget shows all products."""
        instance = gen_3partition([1, 1, 1])

        plan = solve_apvc_ptas(instance, 0.75, seed=3, reps=2)

        assert plan.members() == [[0, 1, 2]]
        assert plan.objective == pytest.approx(3 / 4)

    def test_runner_reuses_relaxations(self, capped_pair):
        """Test prepare once, run for several seeds, same result as a fresh run."""
        runner = PtasRunner(capped_pair, 0.75, reps=3)

        feasible = runner.prepare()
        first = runner.run(11)
        again = runner.run(11)

        assert feasible >= 1
        assert first == again
        assert first == solve_apvc_ptas(capped_pair, 0.75, seed=11, reps=3)

    def test_workers_do_not_change_result(self):
        """Test threaded guess loops merge deterministically."""
        instance = equal_price_instances(1, n=3, horizon=2, k=2)[0]

        single = solve_apvc_ptas(instance, 0.75, seed=5, reps=4, workers=1)
        threaded = solve_apvc_ptas(instance, 0.75, seed=5, reps=4, workers=3)

        assert single == threaded

    def test_errors(self, capped_pair):
        """Test unsupported, infeasible and over-budget instances."""
        with pytest.raises(UnsupportedInstanceError):
            solve_apvc_ptas(gen_random(2, 1, seed=0, k=1), 0.75, seed=0)
        infeasible = Instance(prices=[1.0, 1.0], weights=[1.0, 1.0], visibility=[1, 1], T=1, k=1)
        with pytest.raises(InfeasibleInstanceError):
            solve_apvc_ptas(infeasible, 0.75, seed=0)
        with pytest.raises(GuessBudgetExceededError):
            solve_apvc_ptas(capped_pair, 0.75, seed=0, guess_budget=2)
        with pytest.raises(PreconditionError, match="cardinality cap"):
            solve_apvc_ptas(capped_pair.with_cap(None), 0.75, seed=0)

    @pytest.mark.parametrize("seed", range(6))
    def test_feasible_and_bounded_by_optimum(self, seed):
        """Test returned plans are feasible, sandwiched and never beat the optimum."""
        instance = equal_price_instances(seed + 1, n=3, horizon=2, k=2)[seed]
        runner = PtasRunner(instance, 0.5, reps=3)

        plan = runner.run(seed)
        optimum = brute_force_apvc(instance)

        assert plan_is_feasible(instance, plan)
        assert plan.objective <= optimum.objective + 1e-9
        sandwich_check(plan, instance, runner.disc)
