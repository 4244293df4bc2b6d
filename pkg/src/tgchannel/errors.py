"""Exception and warning types shared across the package."""


class DomainError(ValueError):
    """Input outside the mathematical domain of an operation."""


class BranchError(ValueError):
    """Evaluation on the branch cut without an explicit branch choice."""


class RegimeError(ValueError):
    """Operation invoked in the wrong buoyancy regime."""


class ConvergenceError(RuntimeError):
    """An iterative search (bracketing, bisection, refinement) failed."""


class QuadratureError(RuntimeError):
    """Panel refinement failed to reach the requested accuracy."""


class NotAnEigenvalueError(ValueError):
    """Boundary system has no nontrivial kernel within tolerance."""


class SingularBumpSystemError(RuntimeError):
    """The 2x2 system for the endpoint-orthogonality bumps is near-singular."""


class StabilityError(RuntimeError):
    """Time integration exceeded the blow-up guard."""


class PreparationError(ValueError):
    """Initial data diagnostics exceed the tolerance required by a solver."""


class DegenerateFitError(ValueError):
    """Not enough (or invalid) samples to fit a decay rate."""


class ConfigError(ValueError):
    """Run configuration failed validation."""


class NearSingularWarning(RuntimeWarning):
    """Wronskian is close to zero (spectral parameter near an eigenvalue)."""


class GridResolutionWarning(RuntimeWarning):
    """Grid too coarse for the finite differences requested."""
