"""Motion planning that maximizes asynchronous temporal robustness of STL formulas."""

__version__ = "0.1.0"
