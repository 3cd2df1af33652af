"""Mean-field phase structure of a lossy Jaynes-Cummings-Hubbard lattice."""
from ._kernels import USING_NUMBA
from .meanfield import (
    OrderParameterSolution,
    SingleSiteBasis,
    SolverOptions,
    build_basis,
    build_mf_hamiltonian,
    ground_state,
    order_parameter_fixed_point,
    site_observables,
)
from .model import (
    ComplexFrequency,
    DressedLevel,
    ModelParams,
    complex_frequency,
    dressed_energy,
    quality_check,
    total_decay,
)
from .perturbation import (
    Outcome,
    ResonantCoefficients,
    critical_coupling,
    crossing_time,
    psi_analytic,
    pt_coefficients_numeric,
    resonant_coefficients,
)
from .scan import (
    PhaseBoundaryPoint,
    RampSpec,
    TimeEvolutionSample,
    lobe_tip,
    phase_boundary,
    ramp_trajectory,
    time_evolution,
)

__version__ = "0.1.0"
