"""Extremal skew-t dependence: skew-t processes, their max-stable limits and fitting tools."""

__version__ = "0.1.0"
