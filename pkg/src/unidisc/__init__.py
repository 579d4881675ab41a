"""Universal sampling discretization and sparse recovery for bounded dictionaries."""

__version__ = "0.1.0"

from .dictionary import (
    Domain,
    FrequencyGrid,
    Quadrature,
    SparseCoefficients,
    TrigDictionary,
    SineDictionary,
    FunctionDictionary,
    build_sine_system,
    build_trig_contiguous,
    build_trig_dictionary,
    continuous_norm,
    hyperbolic_cross,
    reference_quadrature,
    riesz_bounds,
)
from .discretization import (
    empirical_min_m,
    one_sided_check,
    rip_delta,
    success_probability,
    universal_check,
)
from .entropy import entropy_numbers, generate_cloud
from .lowerbound import dirichlet_search, min_m_threshold, sine_failure_certificate
from .recovery import block_greedy, lebesgue_report, ls_fit, ls_universal, womp_run
from .sampling import discrete_norm, draw_points, mixed_norm, normalized_system, sample_matrix

__all__ = [name for name in dir() if not name.startswith("_")]
