"""Python surface for the DAMPE core: entropic-OT alignment, discrete
diffusion kernels, hierarchy-aware function-prediction metrics, and the
synthetic benchmark generator."""

from dampe._core import (
    RELATIONS,
    aupr,
    barycentric_project,
    build_cost,
    concat_intrinsic,
    cosine_schedule,
    cumulative_transition,
    fmax,
    generate_dataset,
    posterior_distribution,
    sinkhorn,
    transition_matrix,
    true_path_propagate,
)

__all__ = [
    "RELATIONS",
    "aupr",
    "barycentric_project",
    "build_cost",
    "concat_intrinsic",
    "cosine_schedule",
    "cumulative_transition",
    "fmax",
    "generate_dataset",
    "posterior_distribution",
    "sinkhorn",
    "transition_matrix",
    "true_path_propagate",
]
