"""Equilibria of coordination games where agents privately observe noisy
signals of the fundamental and of each other's aggregate action."""

__version__ = "0.1.0"
