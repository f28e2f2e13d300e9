"""Tail bounds for dependent conditional expectations, explicit expanders, and
walk-based hardness amplification, with exhaustively checkable desk-scale instances."""

__version__ = "0.1.0"

from .errors import (
    BudgetError,
    MarginalMismatchError,
    ParameterError,
    StructuralError,
    WalkboundError,
)
from .prob import (
    BoundReport,
    FiniteSpace,
    IndependenceReport,
    RandomObject,
    RandomVariable,
    check_independence,
    conditional_expectation,
    cube_instance,
    expectation,
    percoord_bound,
    pooled_bound,
    random_product_instance,
    subset_sums,
    tail_probability,
)
from .expander import (
    ALPHA_FAMILY_BOUND,
    ColoredRotation,
    ContractionReport,
    Projection,
    SpectralReport,
    TransitionMatrix,
    adjacency_text,
    check_projection_contraction,
    compose_permutation,
    edge_coloring,
    k4_rotation,
    mgg_rotation,
    projection_apply,
    second_eigenvalue_magnitude,
    transition_matrix,
)
from .walks import (
    ExtensionReport,
    HybridGraph,
    TerminalVector,
    Walk,
    WalkIndependenceReport,
    check_extension_identity,
    enumerate_walk_vertices,
    family_event_probs,
    family_event_probs_matrix,
    projection_objects,
    sample_walk,
    single_set_event_probs,
    terminal_vector,
    validate_walk,
    verify_walk_independence,
    walk_count,
    walk_from_index,
    walk_index,
)
from .owf import (
    AdversaryOracle,
    BlockwiseInverter,
    EnvelopeReport,
    ExperimentConfig,
    InversionReport,
    Inverter,
    ReducedDirectInverter,
    ReducedWalkInverter,
    RepeatedInverter,
    SecurityEstimate,
    ToyFunction,
    WalkChainInverter,
    WalkRepr,
    conditioned_reverse_repr,
    direct_power,
    envelope_check,
    forward_inv,
    forward_repr,
    identity_function,
    image_distribution,
    measure_inversion,
    pad_extend,
    planted_profile,
    random_permutation,
    reduce_direct,
    reduce_walk,
    repeat_amplify,
    reverse_repr,
    vertex_function,
    walk_permutation,
)

__all__ = [name for name in dir() if not name.startswith("_")]
