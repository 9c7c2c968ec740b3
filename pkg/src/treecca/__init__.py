"""Cyclic cellular automata and Greenberg-Hastings dynamics on tree truncations."""

from ._kernels import ACTIVE_BACKEND

__version__ = "0.1.0"

__all__ = ["ACTIVE_BACKEND", "__version__"]
