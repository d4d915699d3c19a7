"""Test suite for assortment-visibility."""
