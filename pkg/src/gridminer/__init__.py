"""Deterministic data-grid simulator for distributed mining and path-query jobs."""

__version__ = "0.1.0"
