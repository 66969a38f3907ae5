"""Exception hierarchy shared by every module."""

from __future__ import annotations


class ExpertOracleError(Exception):
    """Base class for all library errors."""


class ParameterError(ExpertOracleError, ValueError):
    """An argument is outside its documented domain."""


class DegenerateBeliefError(ParameterError):
    """A belief would have zero variance (q = 1 or t = 0)."""


class DomainError(ParameterError):
    """A closed form is evaluated outside the region where it is defined."""


class PeriodIndexError(ExpertOracleError, IndexError):
    """A period index is outside [0, t_max]."""


class StateError(ExpertOracleError):
    """A belief state is inconsistent with the current period."""


class ConfigurationError(ExpertOracleError, ValueError):
    """A strategy or experiment is configured inconsistently."""


class ProtocolError(ExpertOracleError):
    """A strategy emitted an action the simulator does not allow."""


class SimulationResourceError(ExpertOracleError, RuntimeError):
    """The Monte Carlo engine ran out of resources part way through."""

    def __init__(self, message: str, completed: int):
        super().__init__(f"{message} (completed {completed} episodes)")
        self.completed = completed
