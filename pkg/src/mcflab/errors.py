"""Shared exception types."""


class ConfigurationError(ValueError):
    """Invalid scenario/domain configuration; carries a list of violations."""

    def __init__(self, violations):
        if isinstance(violations, str):
            violations = [violations]
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class BlowUpError(RuntimeError):
    """NaN/Inf appeared during time stepping; carries a diagnostic dump."""

    def __init__(self, message, dump=None):
        super().__init__(message)
        self.dump = dump or {}


class SolverError(RuntimeError):
    """Nonlinear solver failed to converge; carries the last residual norm."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class EstimationError(RuntimeError):
    """A diagnostic estimate could not be formed (e.g. trajectory too short)."""


class OracleError(RuntimeError):
    """Reference (oracle) computation failed; a test-infrastructure problem."""
