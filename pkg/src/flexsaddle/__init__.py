"""Constrained saddle search for singular and flexible bar frameworks."""
__version__ = "0.1.0"

from .framework import (  # noqa: E402
    Configuration,
    Framework,
    Pin,
    PinningScheme,
    Topology,
    edge_gradient,
    edge_hessian,
    edge_residual,
    free_edge_energy,
    nontrivial_flex_basis,
    rigid_body_basis,
    rigidity_matrix,
)
from .manifold import (  # noqa: E402
    ConstraintSet,
    FreeEdgeEnergy,
    LICQError,
    ProjectionError,
    lagrange_multipliers,
    licq_check,
    newton_project,
    projected_hessian,
    tangent_projector,
)
from .search import SearchConfig, SearchResult, multi_start, run_search, saddle_search  # noqa: E402
from .analysis import SingularityCertificate, certify, self_stresses, stress_test  # noqa: E402
from .continuation import FlexPath, follow_branch, reparameterize_free_edge  # noqa: E402
from .kernels import BACKEND  # noqa: E402

__all__ = [
    "BACKEND",
    "Configuration",
    "ConstraintSet",
    "FlexPath",
    "Framework",
    "FreeEdgeEnergy",
    "LICQError",
    "Pin",
    "PinningScheme",
    "ProjectionError",
    "SearchConfig",
    "SearchResult",
    "SingularityCertificate",
    "Topology",
    "certify",
    "edge_gradient",
    "edge_hessian",
    "edge_residual",
    "follow_branch",
    "free_edge_energy",
    "lagrange_multipliers",
    "licq_check",
    "multi_start",
    "newton_project",
    "nontrivial_flex_basis",
    "projected_hessian",
    "reparameterize_free_edge",
    "rigid_body_basis",
    "rigidity_matrix",
    "run_search",
    "saddle_search",
    "self_stresses",
    "stress_test",
    "tangent_projector",
]
