"""Safety-constrained topology control for AC power grids."""

__version__ = "0.1.0"
