"""Exception types shared across the workbench modules."""


class WorkbenchError(Exception):
    """Base class for all workbench-specific failures."""


class ConfigurationError(WorkbenchError, ValueError):
    """A physical configuration violates its invariants."""


class ConfigFileError(WorkbenchError, ValueError):
    """Config-file parse failure; carries a 1-based line number (0 = file-level)."""

    def __init__(self, line: int, message: str):
        self.line = line
        self.message = message
        super().__init__(f"line {line}: {message}" if line else message)


class NumericInstabilityError(WorkbenchError, ArithmeticError):
    """Integration produced a non-finite or negative state; names the step."""

    def __init__(self, step: int, message: str = ""):
        self.step = step
        super().__init__(message or f"numeric instability at step {step}")


class NoPulseError(WorkbenchError, ValueError):
    """A trace holds no pulse (flat-zero output)."""


class AboveBarrierError(WorkbenchError, ValueError):
    """Particle energy at or above the barrier top; not a tunnelling regime."""


class NoAdmissibleGapError(WorkbenchError, ValueError):
    """No gap candidate survives the transition-time/stability thresholds."""


class ScheduleError(WorkbenchError, ValueError):
    """An annealing schedule fails the tau*g^2 >= E admissibility condition."""


class CausalityError(WorkbenchError, ValueError):
    """Im G >= 0 on the upper half plane; names the offending frequency."""

    def __init__(self, frequency: float, message: str = ""):
        self.frequency = frequency
        super().__init__(message or f"causality violation at Matsubara frequency {frequency!r}")


class GridTooSmallError(WorkbenchError, ValueError):
    """Matsubara grid too short to resolve the 1/(i*omega) tail."""


class CsvSchemaError(WorkbenchError, ValueError):
    """Row data does not conform to the declared CSV schema."""
