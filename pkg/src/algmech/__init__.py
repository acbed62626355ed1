"""algmech: mechanics on general algebroids and special affgebroids.

Structures are described by expression-valued structure functions; the
package generates the implicit Euler-Lagrange dynamics, performs
Legendre transforms to the Hamiltonian side, integrates trajectories
with per-step diagnostics, and numerically verifies the structural
conditions (skewness, Jacobi identity, bracket-tensor correspondences).
"""

from .backend import active_backend, available_backends
from .errors import (
    AlgmechError, ConfigError, DomainError, NewtonDivergence, ParseError,
    ShapeError, SingularHessian, UnboundVariable, UnknownFunction,
    UnknownModel,
)
from .expr import (
    Binary, Constant, Expression, Jet2, Unary, Variable, evaluate,
    evaluate_jet2, format_expression, parse, substitute, variables,
)
from .algebroid import (
    AlgebroidStructure, ClassifyReport, SectionExpr, bracket, classify,
    epsilon_map, lambda_components, poisson_bracket,
)
from .affgebroid import (
    AffgebroidStructure, aff_bracket, cal_e_map, classify_aff, embed_trivial,
    gamma_components, sa_pairing, vector_hull,
)
from .lagrangian import (
    Lagrangian, Trajectory, dynamics_lift, integrate, lagrangian_for,
    legendre, solve_ydot,
)
from .hamiltonian import (
    HamiltonianSection, equivalence_check, ham_vector_field, integrate_ham,
    legendre_transform,
)
from .models import BUILTIN_MODELS, ModelSpec, builtin

__version__ = "0.1.0"

__all__ = [
    "AlgmechError", "ConfigError", "DomainError", "NewtonDivergence",
    "ParseError", "ShapeError", "SingularHessian", "UnboundVariable",
    "UnknownFunction", "UnknownModel",
    "Binary", "Constant", "Expression", "Jet2", "Unary", "Variable",
    "evaluate", "evaluate_jet2", "format_expression", "parse",
    "substitute", "variables",
    "AlgebroidStructure", "ClassifyReport", "SectionExpr", "bracket",
    "classify", "epsilon_map", "lambda_components", "poisson_bracket",
    "AffgebroidStructure", "aff_bracket", "cal_e_map", "classify_aff",
    "embed_trivial", "gamma_components", "sa_pairing", "vector_hull",
    "Lagrangian", "Trajectory", "dynamics_lift", "integrate",
    "lagrangian_for", "legendre", "solve_ydot",
    "HamiltonianSection", "equivalence_check", "ham_vector_field",
    "integrate_ham", "legendre_transform",
    "BUILTIN_MODELS", "ModelSpec", "builtin",
    "active_backend", "available_backends",
    "__version__",
]
