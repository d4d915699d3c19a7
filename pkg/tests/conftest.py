"""Pytest configuration and fixtures."""

import sys
from pathlib import Path

import pytest

# Add src to path
sys.path.insert(0, str(Path(__file__).parent.parent / "src"))

from assortment_visibility.mnl_core import Instance  # noqa: E402


@pytest.fixture
def three_products():
    """Three products with distinct prices and no requirements."""
    return Instance(prices=[4.0, 2.0, 1.0], weights=[1.0, 2.0, 1.5], visibility=[0, 0, 0], T=2)


@pytest.fixture
def two_product_example():
    """High-price product without requirement, a free heavy product shown to everyone."""
    return Instance(prices=[1.0, 0.0], weights=[1.0, 3.0], visibility=[0, 2], T=2)


@pytest.fixture
def capped_pair():
    """Equal prices, one exposure each, at most one product per customer."""
    return Instance(prices=[1.0, 1.0], weights=[1.0, 2.0], visibility=[1, 1], T=2, k=1)


@pytest.fixture
def instance_file(tmp_path):
    """Write an instance to a JSON file and return its path."""

    def write(instance: Instance, name: str = "instance.json") -> Path:
        path = tmp_path / name
        path.write_text(instance.model_dump_json(by_alias=True))
        return path

    return write
