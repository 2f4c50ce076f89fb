"""Typed errors used across the toolkit.

Every failure mode the pipeline distinguishes gets its own class so callers
can branch on type instead of string-matching messages. Nothing here ever
silently defaults a value.
"""


class FlamewardError(Exception):
    """Base class for all toolkit errors."""


class ParseError(FlamewardError):
    """A document field was malformed. Carries the offending field name."""

    def __init__(self, message: str, field: str | None = None):
        super().__init__(message)
        self.field = field


class StructuralError(FlamewardError):
    """A thread document violated tree structure (dangling parent, dup id)."""


class ConfigurationError(FlamewardError):
    """Bad or missing configuration (unknown provider, conflicting rules)."""


class TransportError(FlamewardError):
    """Provider call failed after exhausting retries."""


class ContentError(FlamewardError):
    """Provider returned a refusal or an empty body."""


class ScoringError(FlamewardError):
    """Flame scoring produced no usable 0-10 value after a reprompt."""


class IdentificationError(FlamewardError):
    """Target-user identification failed validation twice."""


class GenerationError(FlamewardError):
    """Mediation generation produced empty or unusable output."""


class ElicitationError(FlamewardError):
    """Principle elicitation could not produce enough valid principles."""


class MergeError(FlamewardError):
    """Principle merging produced no usable merged list."""


class ValidationError(FlamewardError):
    """A verification decision failed domain validation."""

    def __init__(self, message: str, decision_index: int | None = None):
        super().__init__(message)
        self.decision_index = decision_index


class StateError(FlamewardError):
    """A verification decision targeted a principle in an incompatible state."""

    def __init__(self, message: str, decision_index: int | None = None):
        super().__init__(message)
        self.decision_index = decision_index


class JudgingError(FlamewardError):
    """Judge output was unparseable or out of [1, 10] after a reprompt."""


class SimulationError(FlamewardError):
    """User simulation produced no continuation."""


class StageError(FlamewardError):
    """A pipeline stage failed. Carries the stage name for exit reporting."""

    def __init__(self, stage: str, message: str):
        super().__init__(f"stage {stage}: {message}")
        self.stage = stage
