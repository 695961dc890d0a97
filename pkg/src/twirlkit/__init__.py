"""Randomized-measurement entanglement detection via unitary-invariant moments."""

from .criteria import (
    CriterionReport,
    bell_diagonal_reports,
    purity_criterion,
    third_order_criterion,
    werner_poly_2,
    werner_poly_3,
    werner_threshold_2,
    werner_threshold_3,
)
from .haar import DEFAULT_SEED, RngStream, sample_haar, sample_haar_batch
from .reconstruct import (
    ReconstructionError,
    XVector2,
    XVector3,
    YVector2,
    YVector3,
    exact_x2,
    exact_x3,
    forward_2,
    forward_3,
    forward_model_3,
    invert_2,
    invert_3,
    invert_3_numeric,
    purity_marginal,
    purity_marginal_hamming,
)
from .states import (
    BellDiagonalSpectrum,
    DensityMatrix,
    DimsProfile,
    StateError,
    bell_diagonal,
    make_state,
    maximally_mixed,
    max_entangled_projector,
    partial_trace,
    partial_transpose,
    random_density,
    trace_power,
    werner_state,
)
from .stateio import StateFileError, load_state, save_state
from .twirl import (
    EstimationError,
    EstimatorConfig,
    OutcomeDistribution,
    YEstimate,
    estimate_y2,
    estimate_y3,
    outcome_distribution,
)
from .weingarten import (
    Permutation,
    SingularDimensionError,
    diagram_contract,
    gram,
    s_matrix,
    w_matrix,
    wg,
)

__version__ = "0.1.0"
