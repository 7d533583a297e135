"""Fused sparse attention GNN kernels with scheduling and traffic models."""

from graphfuse._core import (
    Graph,
    backward,
    degree_stats,
    forward,
    from_coo,
    gen_random,
    gen_super_node,
    gradcheck,
    load_graph,
    run_benchmark_json,
    save_graph,
    select_strategy,
    super_node_threshold,
)

__all__ = [
    "Graph",
    "backward",
    "degree_stats",
    "forward",
    "from_coo",
    "gen_random",
    "gen_super_node",
    "gradcheck",
    "load_graph",
    "run_benchmark_json",
    "save_graph",
    "select_strategy",
    "super_node_threshold",
]
