"""Deterministic data-centric benchmark harness and leaderboard arena."""

__version__ = "0.1.0"
