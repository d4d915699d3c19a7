"""Dependent rounding of fractional values on the edges of a bipartite graph.

Each step takes a cycle, or a maximal path when the fractional edges form a
forest, splits its edges into two alternating groups and moves mass between
them. The direction is drawn so that every edge keeps its expected value,
which gives:

- marginals: ``E[X_e] = x_e``;
- degree preservation: every vertex degree ends in ``{floor(d), ceil(d)}``;
- negative correlation among the edges incident to a vertex.
"""

import logging
from collections.abc import Hashable, Mapping
from dataclasses import dataclass, field

import networkx as nx
import numpy as np

from .errors import BipartiteStructureError

logger = logging.getLogger(__name__)

# Values within this distance of 0 or 1 are treated as integral.
FRACTIONALITY_THRESHOLD = 1e-9

Edge = tuple[Hashable, Hashable]


@dataclass(frozen=True)
class FractionalBipartite:
    """Bipartite graph with a value in [0, 1] on each left-right edge."""

    left: tuple[Hashable, ...]
    right: tuple[Hashable, ...]
    values: Mapping[Edge, float] = field(default_factory=dict)

    def validate(self) -> None:
        """Check the graph is simple, bipartite and valued in [0, 1].

        Raises:
            BipartiteStructureError: On any violation
        """
        left, right = set(self.left), set(self.right)
        if len(left) != len(self.left) or len(right) != len(self.right):
            raise BipartiteStructureError("Duplicate vertex on one side of the graph")
        if left & right:
            raise BipartiteStructureError("A vertex appears on both sides of the graph")
        for (u, w), x in self.values.items():
            if u not in left or w not in right:
                raise BipartiteStructureError(f"Edge ({u!r}, {w!r}) does not join left to right")
            if not 0.0 <= x <= 1.0:
                raise BipartiteStructureError(f"Edge ({u!r}, {w!r}) has value {x} outside [0, 1]")

    def degree(self, vertex: Hashable, values: Mapping[Edge, float] | None = None) -> float:
        """Sum of edge values at a vertex (of ``values`` if given)."""
        source = self.values if values is None else values
        return sum(x for (u, w), x in source.items() if vertex in (u, w))


def _snap(x: float) -> float:
    if x <= FRACTIONALITY_THRESHOLD:
        return 0.0
    if x >= 1.0 - FRACTIONALITY_THRESHOLD:
        return 1.0
    return x


def _is_fractional(x: float) -> bool:
    return 0.0 < x < 1.0


def _maximal_path(forest: nx.Graph) -> list[tuple[Hashable, Hashable]]:
    """Walk from a leaf to another leaf of a forest."""
    start = next(v for v in forest.nodes if forest.degree(v) == 1)
    path = []
    previous, current = None, start
    while True:
        step = next((w for w in forest.neighbors(current) if w != previous), None)
        if step is None:
            return path
        path.append((current, step))
        previous, current = current, step


def round(graph: FractionalBipartite, rng: np.random.Generator) -> dict[Edge, int]:
    """Round every edge value to 0 or 1.

    Args:
        graph: The fractional bipartite graph
        rng: Source of randomness; the result is deterministic given its state

    Returns:
        Mapping from each edge to its rounded value

    Raises:
        BipartiteStructureError: If the graph is not a valid bipartite graph
    """
    graph.validate()
    x = {e: _snap(v) for e, v in graph.values.items()}
    # tag vertices by side so equal labels on both sides stay distinct
    fractional = nx.Graph()
    for (u, w), value in x.items():
        if _is_fractional(value):
            fractional.add_edge(("L", u), ("R", w))

    def edge_key(a: tuple[str, Hashable], b: tuple[str, Hashable]) -> Edge:
        return (a[1], b[1]) if a[0] == "L" else (b[1], a[1])

    steps = 0
    while fractional.number_of_edges():
        try:
            walk = [(a, b) for a, b, *_ in nx.find_cycle(fractional)]
        except nx.NetworkXNoCycle:
            walk = _maximal_path(fractional)
        keys = [edge_key(a, b) for a, b in walk]
        rising, falling = keys[0::2], keys[1::2]
        up = min([1.0 - x[e] for e in rising] + [x[e] for e in falling])
        down = min([x[e] for e in rising] + [1.0 - x[e] for e in falling])
        if rng.random() < down / (up + down):
            shift = up
        else:
            shift = -down
        for e in rising:
            x[e] = _snap(x[e] + shift)
        for e in falling:
            x[e] = _snap(x[e] - shift)
        for (a, b), e in zip(walk, keys):
            if not _is_fractional(x[e]) and fractional.has_edge(a, b):
                fractional.remove_edge(a, b)
        steps += 1

    logger.debug(f"Dependent rounding finished after {steps} steps on {len(x)} edges")
    return {e: int(v) for e, v in x.items()}
