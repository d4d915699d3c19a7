"""Assortment optimization with visibility constraints under the MNL choice model."""

__version__ = "0.1.0"
