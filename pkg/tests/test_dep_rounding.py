"""Tests for dependent rounding on bipartite graphs."""

import itertools
import math

import numpy as np
import pytest

from assortment_visibility import dep_rounding
from assortment_visibility.dep_rounding import FractionalBipartite
from assortment_visibility.errors import BipartiteStructureError


def random_graph(seed: int) -> FractionalBipartite:
    """Random bipartite graph with mostly fractional edge values."""
    rng = np.random.default_rng(seed)
    left = tuple(f"u{i}" for i in range(int(rng.integers(2, 5))))
    right = tuple(f"w{j}" for j in range(int(rng.integers(2, 5))))
    values = {}
    for u in left:
        for w in right:
            draw = rng.random()
            if draw < 0.2:
                continue
            if draw < 0.3:
                values[(u, w)] = float(rng.integers(0, 2))
            else:
                values[(u, w)] = float(rng.uniform(0.05, 0.95))
    return FractionalBipartite(left=left, right=right, values=values)


def star_graph(seed: int, spokes: int, low: float, high: float) -> FractionalBipartite:
    """One hub joined to ``spokes`` leaves, edge values uniform in [low, high]."""
    rng = np.random.default_rng(seed)
    right = tuple(f"w{j}" for j in range(spokes))
    values = {("hub", w): float(rng.uniform(low, high)) for w in right}
    return FractionalBipartite(left=("hub",), right=right, values=values)


def degree_window(degree: float) -> tuple[int, int]:
    return math.floor(degree + 1e-9), math.ceil(degree - 1e-9)


class TestFractionalBipartite:
    """Test graph validation."""

    def test_valid_graph(self):
        """Test a well-formed graph and its degrees."""
        values = {(0, "a"): 0.5, (1, "a"): 0.25}
        graph = FractionalBipartite(left=(0, 1), right=("a",), values=values)

        graph.validate()

        assert graph.degree("a") == pytest.approx(0.75)
        assert graph.degree(0) == pytest.approx(0.5)

    @pytest.mark.parametrize(
        "graph, message",
        [
            (FractionalBipartite(left=(0, 0), right=("a",)), "Duplicate"),
            (FractionalBipartite(left=(0,), right=(0,)), "both sides"),
            (FractionalBipartite(left=(0,), right=("a",), values={("a", 0): 0.5}), "does not join"),
            (FractionalBipartite(left=(0,), right=("a",), values={(0, "a"): 1.5}), "outside"),
        ],
    )
    def test_invalid_graphs(self, graph, message):
        """Test every structural violation is reported."""
        with pytest.raises(BipartiteStructureError, match=message):
            dep_rounding.round(graph, np.random.default_rng(0))


class TestRound:
    """Test the rounding procedure."""

    def test_integral_input_unchanged(self):
        """Test integral values pass through."""
        values = {(0, "a"): 1.0, (1, "a"): 0.0, (1, "b"): 1.0}
        graph = FractionalBipartite(left=(0, 1), right=("a", "b"), values=values)

        assert dep_rounding.round(graph, np.random.default_rng(1)) == {
            (0, "a"): 1,
            (1, "a"): 0,
            (1, "b"): 1,
        }

    def test_deterministic_per_seed(self):
        """Test the same generator state gives the same rounding."""
        graph = random_graph(5)

        first = dep_rounding.round(graph, np.random.default_rng(42))
        second = dep_rounding.round(graph, np.random.default_rng(42))

        assert first == second

    def test_cycle_keeps_degrees(self):
        """Test a 4-cycle with halves rounds to a perfect matching."""
        values = {(0, "a"): 0.5, (0, "b"): 0.5, (1, "a"): 0.5, (1, "b"): 0.5}
        graph = FractionalBipartite(left=(0, 1), right=("a", "b"), values=values)

        for seed in range(20):
            rounded = dep_rounding.round(graph, np.random.default_rng(seed))
            assert rounded[(0, "a")] == rounded[(1, "b")]
            assert rounded[(0, "b")] == rounded[(1, "a")]
            assert rounded[(0, "a")] + rounded[(0, "b")] == 1

    @pytest.mark.parametrize("seed", range(15))
    def test_degree_preservation(self, seed):
        """Test every vertex degree lands on the floor or ceiling of its fractional degree."""
        graph = random_graph(seed)
        rng = np.random.default_rng(seed)

        for _ in range(50):
            rounded = dep_rounding.round(graph, rng)
            assert set(rounded) == set(graph.values)
            for vertex in graph.left + graph.right:
                low, high = degree_window(graph.degree(vertex))
                assert low <= graph.degree(vertex, rounded) <= high

    @pytest.mark.parametrize("seed", range(5))
    def test_marginals(self, seed):
        """Test each edge is 1 with probability equal to its value."""
        graph = random_graph(100 + seed)
        rng = np.random.default_rng(seed)
        trials = 1000

        totals = dict.fromkeys(graph.values, 0)
        for _ in range(trials):
            for edge, value in dep_rounding.round(graph, rng).items():
                totals[edge] += value

        for edge, x in graph.values.items():
            error = math.sqrt(max(x * (1 - x), 1e-12) / trials)
            assert abs(totals[edge] / trials - x) <= 4 * error + 1e-12

    @pytest.mark.parametrize("seed", range(5))
    def test_negative_correlation_at_vertices(self, seed):
        """Test edges at a vertex are jointly 1 (or jointly 0) no more often than independently."""
        graph = random_graph(200 + seed)
        rng = np.random.default_rng(seed)
        trials = 1000
        samples = [dep_rounding.round(graph, rng) for _ in range(trials)]

        for vertex in graph.left + graph.right:
            edges = [e for e in graph.values if vertex in e]
            if len(edges) < 2:
                continue
            pair = edges[:2]
            ones = sum(all(s[e] == 1 for e in pair) for s in samples) / trials
            zeros = sum(all(s[e] == 0 for e in pair) for s in samples) / trials
            bound_ones = math.prod(graph.values[e] for e in pair)
            bound_zeros = math.prod(1 - graph.values[e] for e in pair)
            assert ones <= bound_ones + 3 * math.sqrt(max(bound_ones, 1e-4) / trials)
            assert zeros <= bound_zeros + 3 * math.sqrt(max(bound_zeros, 1e-4) / trials)


class TestStar:
    """Concentration and cylinder bounds at a single high-degree vertex."""

    @pytest.mark.parametrize("epsilon", [0.1, 0.3, 0.5])
    def test_lower_tail(self, epsilon):
        """Test P[a(X) <= (1-eps)E] stays below exp(-eps^2 E / 2) for weights in [0, 1]."""
        graph = star_graph(7, spokes=40, low=0.4, high=0.8)
        rng = np.random.default_rng(11)
        weights = {e: float(rng.uniform(0.7, 1.0)) for e in graph.values}
        mean = math.fsum(weights[e] * x for e, x in graph.values.items())
        trials = 4000

        hits = 0
        for _ in range(trials):
            rounded = dep_rounding.round(graph, rng)
            total = math.fsum(weights[e] * rounded[e] for e in graph.values)
            hits += total <= (1 - epsilon) * mean

        assert mean >= 10.0
        bound = math.exp(-(epsilon**2) * mean / 2)
        error = math.sqrt(max(bound * (1 - bound), 1e-4) / trials)
        assert hits / trials <= bound + 3 * error

    @pytest.mark.parametrize("seed", range(2))
    def test_cylinders_up_to_three_edges(self, seed):
        """Test every 2 or 3 spokes are jointly 1, or jointly 0, no more than independently."""
        graph = star_graph(300 + seed, spokes=6, low=0.1, high=0.9)
        rng = np.random.default_rng(seed)
        trials = 4000
        samples = [dep_rounding.round(graph, rng) for _ in range(trials)]

        for size in (2, 3):
            for edges in itertools.combinations(graph.values, size):
                ones = sum(all(s[e] == 1 for e in edges) for s in samples) / trials
                zeros = sum(all(s[e] == 0 for e in edges) for s in samples) / trials
                bound_ones = math.prod(graph.values[e] for e in edges)
                bound_zeros = math.prod(1 - graph.values[e] for e in edges)
                assert ones <= bound_ones + 3 * math.sqrt(max(bound_ones, 1e-4) / trials)
                assert zeros <= bound_zeros + 3 * math.sqrt(max(bound_zeros, 1e-4) / trials)
