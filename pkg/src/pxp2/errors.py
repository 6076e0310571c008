"""Exception types shared across the package."""


class ConvergenceError(RuntimeError):
    """Iterative solver failed to reach the requested tolerance."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class ResourceLimitError(RuntimeError):
    """A problem size exceeded a guard.  Carries the guard name and limit."""

    def __init__(self, guard, size, limit):
        super().__init__(
            f"guard '{guard}' refused size {size} (limit {limit}); "
            f"set PXP2_MAX_DIM to override at your own risk"
        )
        self.guard = guard
        self.size = size
        self.limit = limit


class SymmetryViolationError(RuntimeError):
    """Operator does not commute with the symmetry used for blocking."""


class UnsupportedBoundaryError(ValueError):
    """Operation requires a boundary condition it was not given."""


class StiffnessError(RuntimeError):
    """Adaptive propagator step size underflowed."""


class SoftSpinDomainError(RuntimeError):
    """Dispersion left the real domain (omega^2 <= 0) during the solve."""

    def __init__(self, message, chi=None, lam=None):
        super().__init__(message)
        self.chi = chi
        self.lam = lam
