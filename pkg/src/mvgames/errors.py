"""Exception hierarchy shared by the solvers."""


class SolverError(Exception):
    """Base class for numerical failures. ``agent`` is set when the failure is per-agent."""

    def __init__(self, message, agent=None, **info):
        self.agent = agent
        self.info = info
        if agent is not None:
            message = f"agent {agent}: {message}"
        super().__init__(message)


class NoAdmissibleRoot(SolverError):
    pass


class PoleAtDenominator(SolverError):
    pass


class SingularQ(SolverError):
    pass


class DegenerateQ(SolverError):
    pass


class DegenerateN(SolverError):
    pass


class NotUnique(SolverError):
    pass


class SingularSystem(SolverError):
    pass


class PreconditionError(ValueError):
    pass


class ConfigError(ValueError):
    """Raised with the full list of violations rather than the first one found."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(str(v) for v in self.violations))
