"""Ant colony, greedy crossover, and smart-ant hybrid solvers for the symmetric TSP."""

from .aco import ENGINES, SolverParams, run_engine
from .instance import Instance, fig4_fixture, load_tsplib, parse_tsplib
from .report import RunReport
from .tour import Tour, double_bridge, tour_length, two_opt

__all__ = [
    "ENGINES", "Instance", "RunReport", "SolverParams", "Tour", "double_bridge",
    "fig4_fixture", "load_tsplib", "parse_tsplib", "run_engine", "tour_length", "two_opt",
]
__version__ = "0.1.0"
