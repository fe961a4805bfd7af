"""Dynamic quantum state tomography for phase-damping channels."""
from .channel import (
    BasisDecomposition,
    DampingModel,
    ExponentialSum,
    TabulatedSignal,
    ValidationReport,
    apply_channel,
    basis_closure,
    dephasing,
    evaluate,
    extract_basis,
    random_damping_model,
    validate_channel,
)
from .decoherence import (
    CoefficientMatrix,
    PureDecoherenceModel,
    apply_kraus_map,
    coefficient_matrix,
    dressed_operators,
    to_channel,
)
from .exceptions import *  # noqa: F401,F403
from .operators import (
    DensityMatrix,
    HermitianBasis,
    Observable,
    hadamard,
    hadamard_trace_transport,
    hermitian_basis,
    nearest_density,
    numerical_rank,
    trace_pair,
)
from .tomography import (
    FrameOperators,
    MeasurementRecord,
    ReconstructionReport,
    TimeGrid,
    check_completeness,
    check_solvability,
    dephasing_closed_form,
    frame_operators,
    lambda_matrix,
    minimal_observables,
    reconstruct,
    reconstruct_state,
    select_time_grid,
    simulate_measurements,
    solve_projections,
)

__version__ = "0.1.0"
