"""Schmidt rank of finite bipartite states, six ways, with supporting tools."""
from .cpmaps import CPMap, StinespringDilation, gns_of_state, minimal_stinespring
from .exceptions import ConvergenceError, SchmidtKitError, ValidationError
from .fcs import FCSSpec, conditioned_space_dim, evaluate, minimize_representation
from .itpfi import SchmidtSpectrumSequence, TypeVerdict, classify
from .linalg import DEFAULT_TOL, Tolerance
from .nonlocality import CorrelationTable, DichotomicObservables, chsh_value, correlations_from_model
from .schmidt import (FiniteBipartiteState, bob_joins_alice, factor_through, minimal_compression,
                      schmidt_rank, schmidt_rank_all_ways)
from .states import BipartiteVector, DensityOperator, schmidt_decompose

__version__ = "0.1.0"

__all__ = [
    "BipartiteVector", "CPMap", "ConvergenceError", "CorrelationTable", "DEFAULT_TOL",
    "DensityOperator", "DichotomicObservables", "FCSSpec", "FiniteBipartiteState",
    "SchmidtKitError", "SchmidtSpectrumSequence", "StinespringDilation", "Tolerance",
    "TypeVerdict", "ValidationError", "bob_joins_alice", "chsh_value", "classify", "conditioned_space_dim",
    "correlations_from_model", "evaluate", "factor_through", "gns_of_state", "minimal_compression", "minimal_stinespring",
    "minimize_representation", "schmidt_decompose", "schmidt_rank", "schmidt_rank_all_ways",
]
