"""Diffusion simulation, influence maximization, influence blocking and source localization on graphs."""

from .diffusion import (
    DiffusionConfig,
    ExactSpreadOracle,
    SpreadEstimate,
    Trace,
    exact_expected_spread,
    expected_spread,
    ic,
    lt,
    si,
    simulate,
    sir,
)
from .exceptions import (
    CapacityError,
    ConfigurationError,
    DegenerateError,
    GraphflowError,
    ParseError,
    UnsupportedModelError,
)
from .graph import Graph, GraphGenSpec, from_edge_list, generate, read_graph, write_graph
from .ibm import BlockSet, GreedyBlocker, ProxyBlocker, apply_block, blocking_effect, greedy_block, proxy_block
from .im import CELFIM, RISIM, GreedyIM, ImResult, ProxyIM, celf_im, greedy_im, proxy_im, ris_im
from .runner import ExperimentSpec, ResultRecord, expand_spec, run_experiments, write_csv, write_trace_json
from .seeding import SeedSet, eigen_centrality, select_seeds
from .sl import JordanCenter, NetSleuth, Observation, SlResult, jordan_center, netsleuth, plant_cascade, source_distance

__version__ = "0.1.0"

__all__ = [
    "apply_block",
    "blocking_effect",
    "BlockSet",
    "CapacityError",
    "celf_im",
    "CELFIM",
    "ConfigurationError",
    "DegenerateError",
    "DiffusionConfig",
    "eigen_centrality",
    "exact_expected_spread",
    "ExactSpreadOracle",
    "expand_spec",
    "expected_spread",
    "ExperimentSpec",
    "from_edge_list",
    "generate",
    "Graph",
    "GraphflowError",
    "GraphGenSpec",
    "greedy_block",
    "greedy_im",
    "GreedyBlocker",
    "GreedyIM",
    "ic",
    "ImResult",
    "jordan_center",
    "JordanCenter",
    "lt",
    "NetSleuth",
    "netsleuth",
    "Observation",
    "ParseError",
    "plant_cascade",
    "proxy_block",
    "proxy_im",
    "ProxyBlocker",
    "ProxyIM",
    "read_graph",
    "ResultRecord",
    "ris_im",
    "RISIM",
    "run_experiments",
    "SeedSet",
    "select_seeds",
    "si",
    "simulate",
    "sir",
    "SlResult",
    "source_distance",
    "SpreadEstimate",
    "Trace",
    "UnsupportedModelError",
    "write_csv",
    "write_graph",
    "write_trace_json",
]
