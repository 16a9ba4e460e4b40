"""
Exception hierarchy for the simulator.

Every error raised on purpose by a pipeline stage derives from SimulationError
so the CLI can map it onto an exit code. Value-shaped errors also derive from
ValueError so plain callers can catch them the usual way.
"""


class SimulationError(Exception):
    """Root of all simulator errors (runtime failure, exit code 3)."""

    exit_code = 3


class ConfigError(SimulationError, ValueError):
    """Invalid experiment or component configuration (exit code 2)."""

    exit_code = 2


class DefenseConfigError(ConfigError):
    """Defense parameters produced an unusable state (e.g. betas summing to zero)."""


class DimensionError(SimulationError, ValueError):
    """Parameter vectors or weight lists of mismatched length."""


class InsufficientPopulationError(SimulationError, ValueError):
    """Too few vectors for the requested statistic or rule."""


class NonFiniteValueError(SimulationError, ValueError):
    """A NaN or infinite value reached an operation boundary."""


class IdxFormatError(SimulationError, ValueError):
    """IDX file with an unexpected magic number or header."""


class ConsistencyError(SimulationError, ValueError):
    """Inputs that disagree with each other (label range, record counts)."""


class EmptyClientDataError(SimulationError):
    """A client holds no local samples and cannot train this round."""

    def __init__(self, client_id: int):
        super().__init__(f"client {client_id} has an empty local dataset")
        self.client_id = client_id


class IdxTruncatedError(OSError):
    """IDX payload shorter than its header announces."""


class RoundError(SimulationError):
    """A component failed inside a round; names the round and the stage."""

    def __init__(self, round_number: int, stage: str, cause: BaseException):
        super().__init__(f"round {round_number} failed during '{stage}': {cause}")
        self.round_number = round_number
        self.stage = stage
        self.cause = cause
        if isinstance(cause, SimulationError):
            self.exit_code = cause.exit_code
