"""Congestion pricing design under multiclass multimodal stochastic user equilibrium."""

__version__ = "0.1.0"
