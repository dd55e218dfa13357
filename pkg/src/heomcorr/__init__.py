"""Two-qubit correlation dynamics in independent non-Markovian baths.

The package propagates two coupled qubits through a truncated hierarchy of
auxiliary density operators, then tracks mutual information, classical
correlation and quantum discord along the trajectory, flagging crossings
and sudden changes of the correlation curves.
"""

from .bath import BathExpansion, BathParameters, bath_correlation, matsubara_expansion, spectral_density
from .correlations import (
    CorrelationPoint,
    MeasurementAngles,
    OptimizerSettings,
    classical_correlation,
    conditional_states,
    correlation_trajectory,
    measurement_projectors,
    mutual_information,
    quantum_discord,
)
from .errors import (
    CapacityError,
    ConfigError,
    DimensionError,
    HeomcorrError,
    OracleError,
    ParameterError,
    PositivityError,
    PropagationError,
    StiffnessError,
)
from .events import Event, find_crossings, find_sudden_changes, find_transitions
from .oracles import (
    OracleReport,
    closed_system_propagate,
    exhaustive_rhs,
    grid_classical_correlation,
)
from .hierarchy import (
    Hierarchy,
    HierarchyRHS,
    HierarchyState,
    SolverSettings,
    SystemModel,
    Trajectory,
    build_hierarchy,
    converge,
    heom_rhs,
    propagate,
    system_hamiltonian,
)
from .qmatrix import (
    bell_even_state,
    bell_odd_state,
    hermitian_eigenvalues,
    partial_trace,
    tensor_product,
    trace_distance,
    von_neumann_entropy,
)

__version__ = "0.1.0"
