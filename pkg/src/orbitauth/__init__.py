"""Trajectory-based challenge-response authentication of LEO satellites."""

__version__ = "0.1.0"
