"""Instance generators: seeded random instances and the 3-PARTITION gadget."""

import logging
from collections.abc import Sequence
from typing import Literal

import numpy as np

from .errors import InstanceTooLargeError, MalformedInputError
from .mnl_core import Instance

logger = logging.getLogger(__name__)

PriceMode = Literal["general", "equal"]

MAX_PRICE = 10.0
MIN_WEIGHT = 1e-3
MAX_WEIGHT = 10.0
# Backtracking decider guard: at most four triplets.
MAX_PARTITION_INTEGERS = 12


def gen_random(
    n: int,
    horizon: int,
    seed: int,
    price_mode: PriceMode = "general",
    k: int | None = None,
) -> Instance:
    """Generate a random instance, deterministic per seed.

    Args:
        n: Number of products
        horizon: Number of customers T
        seed: Seed for ``numpy.random.default_rng``
        price_mode: ``"general"`` draws prices from [0, 10], ``"equal"`` sets all to 1
        k: Optional cardinality cap

    Returns:
        An instance with log-uniform weights in [1e-3, 10] and visibility
        requirements uniform in {0..T}
    """
    if n < 1 or horizon < 1:
        raise MalformedInputError(f"Need n >= 1 and T >= 1, got n={n}, T={horizon}")
    rng = np.random.default_rng(seed)
    if price_mode == "equal":
        prices = [1.0] * n
    else:
        prices = rng.uniform(0.0, MAX_PRICE, size=n).tolist()
    weights = np.exp(rng.uniform(np.log(MIN_WEIGHT), np.log(MAX_WEIGHT), size=n)).tolist()
    visibility = rng.integers(0, horizon, size=n, endpoint=True).tolist()
    return Instance(prices=prices, weights=weights, visibility=visibility, T=horizon, k=k)


def partition_target(a: Sequence[int]) -> int:
    """Target sum B of every triplet.

    Raises:
        MalformedInputError: If the list cannot describe a 3-PARTITION input
    """
    if not a or len(a) % 3:
        raise MalformedInputError(f"Need a non-empty multiple of 3 integers, got {len(a)}")
    if any(int(x) != x or x <= 0 for x in a):
        raise MalformedInputError("All integers must be positive")
    triplets = len(a) // 3
    total = sum(a)
    if total % triplets:
        raise MalformedInputError(f"Sum {total} is not divisible by T={triplets}")
    return total // triplets


def gen_3partition(a: Sequence[int]) -> Instance:
    """Hardness gadget: one unit-price product of weight a_i per integer.

    Every product must be shown once, each of the T = len(a)/3 customers sees
    at most three products.
    """
    partition_target(a)
    n = len(a)
    return Instance(
        prices=[1.0] * n,
        weights=[float(x) for x in a],
        visibility=[1] * n,
        T=n // 3,
        k=3,
    )


def is_three_partition(a: Sequence[int]) -> bool:
    """Decide whether ``a`` splits into triplets that all sum to B.

    Backtracking over triplets containing the largest unused element.

    Raises:
        MalformedInputError: If ``a`` is not a valid 3-PARTITION input
        InstanceTooLargeError: If ``a`` has more than 12 integers
    """
    target = partition_target(a)
    if len(a) > MAX_PARTITION_INTEGERS:
        raise InstanceTooLargeError(
            f"The decider accepts at most {MAX_PARTITION_INTEGERS} integers, got {len(a)}"
        )
    values = sorted(a, reverse=True)
    used = [False] * len(values)

    def solve(remaining: int) -> bool:
        if remaining == 0:
            return True
        first = used.index(False)
        used[first] = True
        for j in range(first + 1, len(values)):
            if used[j]:
                continue
            used[j] = True
            for m in range(j + 1, len(values)):
                if not used[m] and values[first] + values[j] + values[m] == target:
                    used[m] = True
                    if solve(remaining - 1):
                        return True
                    used[m] = False
            used[j] = False
        used[first] = False
        return False

    found = solve(len(values) // 3)
    logger.debug(f"3-PARTITION of {list(a)} with B={target}: {found}")
    return found


def example_instance(m: float, horizon: int) -> Instance:
    """Two-product instance whose price of visibility is M/2 + 1.

    A unit-price product of weight 1 and a free product of weight M that
    every customer must see.
    """
    return Instance(prices=[1.0, 0.0], weights=[1.0, m], visibility=[0, horizon], T=horizon)
