"""Exception hierarchy shared by all watermod modules."""

from __future__ import annotations


class WatermodError(Exception):
    """Base class for all watermod errors."""


class ConfigError(WatermodError):
    """A configuration value is out of range or inconsistent."""


class InvalidInputError(WatermodError):
    """Input data violates a precondition (non-finite logits, empty prompt, ...)."""


class InsufficientDataError(WatermodError):
    """Not enough inspected positions to run a statistical test."""


class RecoveryIncompleteError(InsufficientDataError):
    """Payload recovery saw zero observations for one or more digit positions."""

    def __init__(self, uncovered: list[int]):
        self.uncovered = list(uncovered)
        super().__init__(
            f"no observations for digit position(s) {self.uncovered}; "
            "sequence too short to recover the payload"
        )
