"""Incidences between dot_k- and dot_h-subspaces of (F_q^n, dot_n)."""

__version__ = "0.1.0"
