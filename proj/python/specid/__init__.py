"""Spectral identification of networked linear systems from measured outputs."""

from ._core import (
    Graph,
    NumericalError,
    ParameterError,
    ParseError,
    cluster_by_ratios,
    degree_targeted,
    erdos_renyi,
    fit_dmdc,
    hub_graph,
    identify_laplacian,
    mu_to_lambda,
    planted_partition,
    run_scenario,
    simulate,
    summarize,
)

__all__ = [
    "Graph",
    "NumericalError",
    "ParameterError",
    "ParseError",
    "cluster_by_ratios",
    "degree_targeted",
    "erdos_renyi",
    "fit_dmdc",
    "hub_graph",
    "identify_laplacian",
    "mu_to_lambda",
    "planted_partition",
    "run_scenario",
    "simulate",
    "summarize",
]
