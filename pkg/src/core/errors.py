"""
DLA-1D error types

Every failure carries the module that raised it and the exit code the
command line reports for it. Outcomes that are expected in normal use
(starvation, too few regeneration cycles, no drift samples) are plain
result objects instead.
"""

from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional


class ExitCode:
    """Process exit codes of the command line"""
    SUCCESS = 0
    CONFIG = 2
    INVARIANT = 3
    VALIDATION = 4
    RESOURCE = 5


class DLAError(Exception):
    """Base class for all simulator errors"""

    exit_code = ExitCode.CONFIG

    def __init__(self, message: str, module: str = "core", **details: Any):
        super().__init__(message)
        self.message = message
        self.module = module
        self.details: Dict[str, Any] = details

    def __str__(self) -> str:
        return f"[{self.module}] {self.message}"


class ParameterError(DLAError, ValueError):
    """A sampler or estimator was called outside its domain"""
    exit_code = ExitCode.CONFIG


class ConfigError(DLAError, ValueError):
    """Invalid configuration; `key` names the offending setting"""
    exit_code = ExitCode.CONFIG

    def __init__(self, message: str, key: Optional[str] = None, module: str = "cli", **details: Any):
        super().__init__(message, module=module, **details)
        self.key = key

    def __str__(self) -> str:
        if self.key:
            return f"[{self.module}] {self.key}: {self.message}"
        return super().__str__()


class InvariantViolation(DLAError):
    """A model invariant failed to hold"""
    exit_code = ExitCode.INVARIANT


class ValidationFailure(DLAError):
    """A statistical oracle rejected the simulation output"""
    exit_code = ExitCode.VALIDATION


class FitDomainError(DLAError):
    """Log-log fit requested over a window containing a zero mean"""
    exit_code = ExitCode.VALIDATION


class WindowExhausted(DLAError):
    """The front reached half of the instantiated window"""
    exit_code = ExitCode.RESOURCE


class RedExhausted(DLAError):
    """Caricature I ran out of red particles inside the window"""
    exit_code = ExitCode.RESOURCE


class EnsembleError(DLAError):
    """Every run of an ensemble aborted"""
    exit_code = ExitCode.RESOURCE

    def __init__(self, message: str, causes: Optional[Dict[int, str]] = None, module: str = "stats"):
        super().__init__(message, module=module)
        self.causes: Dict[int, str] = causes or {}


@dataclass(frozen=True)
class Starvation:
    """No white particle is left; the run ends early"""
    t: float
    R: int


@dataclass(frozen=True)
class InsufficientCycles:
    """Fewer regeneration cycles than an estimator needs"""
    n_regenerations: int
    needed: int
    alpha: float
    reason: str = "insufficient-cycles"


@dataclass(frozen=True)
class EmptyDrift:
    """No event qualified for the drift average"""
    alpha: float
    q: int
    reason: str = "no-qualifying-events"


@dataclass
class AbortRecord:
    """Why a single run of an ensemble stopped short"""
    run_id: int
    cause: str
    module: str
    exit_code: int
    details: Dict[str, Any] = field(default_factory=dict)

    @classmethod
    def from_error(cls, run_id: int, error: DLAError) -> "AbortRecord":
        return cls(
            run_id=run_id,
            cause=error.message,
            module=error.module,
            exit_code=error.exit_code,
            details=dict(error.details),
        )


def describe_causes(records: List[AbortRecord]) -> Dict[int, str]:
    return {record.run_id: str(record.cause) for record in records}
