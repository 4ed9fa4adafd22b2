"""Local adjustment-set search that stays valid for cyclic linear and tanh SCMs."""

from .adjustment import enumerate_valid_adjustment_sets, intervention_node_check, is_backdoor_adjustment_set
from .ci import CIError, FisherZ, GraphOracle
from .graph import DirectedGraph, GraphError, load_graph, save_graph
from .lsas import LocalAdjustmentSearch, LsasOutcome, Status, estimate_effect, run_lsas
from .mb import MarkovBlanketSelector, MbAlgorithm, discover_mb
from .scm import ConfigError, GenConfig, Scm, SimulationError, generate_scm, sample, true_causal_effect
from .separation import acyclify, acyclify_preserving, is_separated, markov_blanket

__all__ = [
    "CIError", "ConfigError", "DirectedGraph", "FisherZ", "GenConfig", "GraphError", "GraphOracle",
    "LocalAdjustmentSearch", "LsasOutcome", "MarkovBlanketSelector", "MbAlgorithm", "Scm", "SimulationError",
    "Status", "acyclify", "acyclify_preserving", "discover_mb", "enumerate_valid_adjustment_sets",
    "estimate_effect", "generate_scm", "intervention_node_check", "is_backdoor_adjustment_set", "is_separated",
    "load_graph", "markov_blanket", "run_lsas", "sample", "save_graph", "true_causal_effect",
]
