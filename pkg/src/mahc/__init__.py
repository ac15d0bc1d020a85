"""Discrete Bayesian network structure learning with aggressive pruning and
model-averaging hill-climbing."""

from mahc.dataset import DiscreteDataset, Variable, count_configurations, load_dataset, write_dataset
from mahc.graph import Dag, MixedGraph, Move, apply_move, is_acyclic, to_cpdag, valid_neighbors
from mahc.metrics import MetricsReport, compute_metrics, confusion, evaluate, pair_penalty, shd_relative
from mahc.pruning import PruneResult, enumerate_cps_count, preprocess_and_prune, surviving_arcs
from mahc.scoring import ScoreCache, graph_bic, local_bic, local_free_parameters
from mahc.search import SearchConfig, SearchResult, hill_climb, mahc, run_algorithm, tabu_search
from mahc.synth import BayesNet, NoiseSpec, forward_sample, inject_noise

__version__ = "0.1.0"

__all__ = [
    "BayesNet",
    "Dag",
    "DiscreteDataset",
    "MetricsReport",
    "MixedGraph",
    "Move",
    "NoiseSpec",
    "PruneResult",
    "ScoreCache",
    "SearchConfig",
    "SearchResult",
    "Variable",
    "apply_move",
    "compute_metrics",
    "confusion",
    "count_configurations",
    "enumerate_cps_count",
    "evaluate",
    "forward_sample",
    "graph_bic",
    "hill_climb",
    "inject_noise",
    "is_acyclic",
    "load_dataset",
    "local_bic",
    "local_free_parameters",
    "mahc",
    "pair_penalty",
    "preprocess_and_prune",
    "run_algorithm",
    "shd_relative",
    "surviving_arcs",
    "tabu_search",
    "to_cpdag",
    "valid_neighbors",
    "write_dataset",
]
