"""Exception types raised across the package."""


class ContactMFGError(Exception):
    """Base class for all package errors."""


class AssumptionViolation(ContactMFGError):
    """A structural assumption on the Hamiltonian or coupling does not hold.

    Carries the name of the violated assumption (``"H1"`` ... ``"F2"`` or a
    descriptive key) and a witnessing sample.
    """

    def __init__(self, assumption, message, witness=None):
        self.assumption = assumption
        self.witness = witness
        super().__init__(f"{assumption}: {message}" + (f" (witness: {witness})" if witness is not None else ""))


class SchemeError(ContactMFGError):
    """A numerical scheme was misconfigured or an internal cross-check failed."""


class DivergenceError(ContactMFGError):
    """An ODE trajectory left the a-priori bounded region."""

    def __init__(self, message, time=None, state=None):
        self.time = time
        self.state = state
        super().__init__(message)


class EmptyKSetError(ContactMFGError):
    """No grid node satisfied the K-set tolerances."""

    def __init__(self, min_h_residual, min_g_residual, tol_h, tol_g):
        self.min_h_residual = min_h_residual
        self.min_g_residual = min_g_residual
        super().__init__(
            f"empty K-set: smallest H-residual {min_h_residual:.3e} (tol {tol_h:.3e}), "
            f"smallest gradient residual {min_g_residual:.3e} (tol {tol_g:.3e})"
        )


class ConfigError(ContactMFGError):
    """Malformed run configuration; ``path`` locates the offending field."""

    def __init__(self, path, message):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)
