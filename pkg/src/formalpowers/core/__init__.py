from formalpowers.core.geometry import (
    Domain,
    PathBatch,
    PathSpec,
    as_complex,
    as_complex_array,
    domain_from_dict,
    log_polar_batch,
    log_polar_path,
)
from formalpowers.core.profile import RadialProfile, eval_profile, profile_from_dict
from formalpowers.core.quadrature import (
    QuadratureResult,
    cumulative_integral,
    discretize,
    line_integral,
    panel_rule,
)

__all__ = [
    "Domain",
    "PathBatch",
    "PathSpec",
    "QuadratureResult",
    "RadialProfile",
    "as_complex",
    "as_complex_array",
    "cumulative_integral",
    "discretize",
    "domain_from_dict",
    "eval_profile",
    "line_integral",
    "log_polar_batch",
    "log_polar_path",
    "panel_rule",
    "profile_from_dict",
]
