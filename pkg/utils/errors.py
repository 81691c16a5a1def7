"""
Planner Exceptions

Every error carries a stable ``code`` so the CLI and reports can name it.
"""

from dataclasses import dataclass


class FedQciError(Exception):
    """Base class for all planning errors."""

    code = 'ERROR'

    def __init__(self, message, subject=None):
        super().__init__(message)
        self.message = message
        self.subject = subject

    def __str__(self):
        if self.subject is not None:
            return f"{self.code} [{self.subject}]: {self.message}"
        return f"{self.code}: {self.message}"


class UnknownEndpointError(FedQciError):
    code = 'UNKNOWN_ENDPOINT'


class InfeasibleInputError(FedQciError):
    """A use-case endpoint cannot be reached even with every candidate built."""

    code = 'INFEASIBLE_INPUT'


class InfeasibleDesignError(FedQciError):
    """No build set satisfies all demands and availability policies."""

    code = 'INFEASIBLE'


class UnboundedModelError(FedQciError):
    """The objective is unbounded; the model is malformed."""

    code = 'UNBOUNDED'


class SolverInputError(FedQciError):
    code = 'DIMENSION_MISMATCH'


class IterationLimitError(FedQciError):
    code = 'ITERATION_LIMIT'


class OvercommittedError(FedQciError):
    """External flow plus custom reserve exceeds a link's capacity."""

    code = 'OVERCOMMITTED'


class WrongLinkKindError(FedQciError):
    code = 'WRONG_LINK_KIND'


class InvalidSatelliteInputError(FedQciError):
    code = 'INVALID_SATELLITE_INPUT'


@dataclass(frozen=True)
class ScenarioIssue:
    """One problem found while reading a scenario file."""

    code: str
    message: str
    line: int = None

    def __str__(self):
        where = f"line {self.line}: " if self.line is not None else ''
        return f"{where}{self.code}: {self.message}"


class ScenarioError(FedQciError):
    """Scenario text could not be turned into a valid DesignProblem."""

    code = 'SCENARIO_INVALID'

    def __init__(self, issues):
        self.issues = list(issues)
        message = '; '.join(str(issue) for issue in self.issues)
        super().__init__(message)
        if self.issues:
            self.code = self.issues[0].code
