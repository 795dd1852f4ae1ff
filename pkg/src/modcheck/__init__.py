"""Model checking and quantifier elimination for modulo-counting first-order logic."""

__version__ = "0.1.0"
