"""Ising/QUBO formulations of collider pattern recognition and quantum-inspired solvers."""

__version__ = "0.1.0"
