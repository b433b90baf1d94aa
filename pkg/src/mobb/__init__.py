"""Exact multi-objective (p = 2 or 3) integer programming by branch and bound."""
from .engine import SearchConfig, SearchResult, solve
from .instances import GeneratorSpec, generate, load, save
from .model import MoilpInstance, SolutionPoint, Subproblem, from_gap, from_knapsack
from .oracle import brute_force_front, hypervolume

__all__ = [
    "GeneratorSpec", "MoilpInstance", "SearchConfig", "SearchResult", "SolutionPoint", "Subproblem",
    "brute_force_front", "from_gap", "from_knapsack", "generate", "hypervolume", "load", "save", "solve",
]
