"""Wavelet multiresolution solver for Wigner functions under polynomial Hamiltonians with Lindblad terms."""

from .config import ConfigError, RunConfig, format_config, load_config, parse_config
from .ensemble import EnsembleMember, NormalizationError, WignerEnsemble, evolve_ensemble, fock_norm, mix
from .moyal_rhs import (
    EvolutionOperator,
    LindbladParams,
    PolynomialPotential,
    apply_rhs,
    build_evolution_operator,
    moyal_series,
    stable_dt,
)
from .mra_operator import (
    MraCoefficients,
    NonstandardOperator,
    apply_nonstandard,
    build_nonstandard,
    forward_fwt,
    inverse_fwt,
    threshold_stats,
)
from .oracle import MomentOdeSystem, dense_reference_evolve, moment_ode_solve
from .phase_space import (
    DomainCoverageError,
    PhaseSpaceGrid,
    Wavefunction,
    WignerState,
    cat_wavefunction,
    coherent_wavefunction,
    eigenstate_wavefunction,
    marginals,
    moments,
    negativity_volume,
    normalization,
    purity,
    weyl_transform,
)
from .serialization import read_snapshot, write_snapshot
from .time_evolution import (
    CutoffNotReachedError,
    EvolutionConfig,
    StabilityError,
    Trajectory,
    evolve,
    level_refinement_run,
    step_rk4,
)
from .wavelet_basis import FilterPair, connection_coefficients, daubechies_filters

__version__ = "0.1.0"
