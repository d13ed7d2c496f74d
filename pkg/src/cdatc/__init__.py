"""Censoring diffusion adaptation over energy-harvesting sensor networks."""

from .network import Topology, build_topology, default_topology, neighbors
from .simulator import SCHEMES, MonteCarloResult, SimConfig, SimTrace, compare, monte_carlo, run, transmit_rate

__all__ = [
    "SCHEMES", "MonteCarloResult", "SimConfig", "SimTrace", "Topology", "build_topology",
    "compare", "default_topology", "monte_carlo", "neighbors", "run", "transmit_rate",
]
__version__ = "0.1.0"
