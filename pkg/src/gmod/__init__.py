"""Exact engine for finite generative models, updating and active inference."""

from .category import (
    EPS_CHANNEL,
    EPS_ZERO,
    ChannelFlag,
    GmodError,
    Morphism,
    Shape,
    ShapeMismatchError,
    UnknownWireError,
    WireType,
    UNIT,
    cap,
    channel_tol,
    compose,
    copy,
    discard,
    effect,
    expectation,
    identity,
    is_channel,
    is_sharp,
    marginal,
    normalize,
    point,
    scalar,
    set_tolerances,
    sharp_effect,
    state,
    state_to_effect,
    swap,
    tensor,
    uniform,
    zero_state,
    zero_tol,
)
from .diagram import (
    ActinfStructure,
    BoundaryMismatchError,
    Box,
    Interpretation,
    InvalidDAGError,
    InvalidDiagramError,
    InvalidModelError,
    NetworkDiagram,
    OpenDAG,
    OpenModel,
    ValidationReport,
    Violation,
    actinf_structure,
    build_actinf_model,
    build_discrete_time,
    build_open_simple,
    build_policy_model,
    build_simple,
    dag_to_diagram,
    diagram_to_dag,
    diagrams_match,
    output_channel,
    par_compose,
    seq_compose,
    total_channel,
    validate_diagram,
)
from .dsl import Diagnostic, ModelFormatError, parse, serialize, validate_text
from .free_energy import (
    FreeEnergyReport,
    LogEffect,
    approx_active_inference,
    cross_surprise,
    efe,
    entropy,
    free_energy,
    induced_observation,
    kl,
    neg_log,
    open_vfe,
    softmax,
    vfe,
    vfe_update,
)
from .updating import (
    AllMinusInfinityError,
    EmptyResultError,
    Observation,
    PlanReport,
    Posterior,
    bayesian_inverse,
    exact_active_inference,
    jeffrey_update,
    minimal_conditional,
    pearl_update,
    sharp_update,
)

__version__ = "0.1.0"
