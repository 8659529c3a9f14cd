"""Path-complete p-dominance analysis for constrained switching linear systems."""

__version__ = "0.1.0"
