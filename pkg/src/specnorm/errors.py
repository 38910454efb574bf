"""Exception hierarchy shared by every stage of the pipeline."""

from __future__ import annotations


class SpecnormError(Exception):
    """Base class for all library errors."""


class DimensionError(SpecnormError, ValueError):
    """Ambient dimensions disagree or exceed the supported range."""


class StageError(SpecnormError):
    """A pipeline stage failed its own exact verification.

    ``stage`` names the failing stage and ``trace`` carries whatever
    diagnostic records the stage had accumulated.
    """

    def __init__(self, stage: str, message: str, trace=None):
        super().__init__(f"[{stage}] {message}")
        self.stage = stage
        self.trace = trace


class BudgetExhausted(StageError):
    """A randomized or iterative search ran out of its configured budget."""


class WitnessFound(StageError):
    """The arithmetic-connectivity precondition failed: a witness tuple exists."""
