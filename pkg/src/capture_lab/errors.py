"""Exception hierarchy shared by every capture-lab module."""

from __future__ import annotations


class CaptureLabError(Exception):
    """Base class for domain errors surfaced by the library and the CLI."""


class TypeViolation(CaptureLabError):
    def __init__(self, clause: str, k: int):
        super().__init__(f"type violation: {clause} fails at k={k}")
        self.clause = clause
        self.k = k


class ConstructionFailure(CaptureLabError):
    """The canonical builder produced a family that fails its own axioms."""


class NotAMember(CaptureLabError):
    def __init__(self, F):
        super().__init__(f"{tuple(F)} is not a member of the scheme")
        self.F = tuple(F)


class SizeMismatch(CaptureLabError):
    pass


class PreconditionFailed(CaptureLabError):
    pass


class NotADeltaSystem(CaptureLabError):
    def __init__(self, pair: tuple[int, int], reason: str):
        super().__init__(f"not a delta-system: members {pair} ({reason})")
        self.pair = pair
        self.reason = reason


class TooSmall(CaptureLabError):
    pass


class ArityTooLarge(CaptureLabError):
    pass


class InsufficientWidth(CaptureLabError):
    pass


class BadScenario(CaptureLabError):
    pass


class ConditionViolation(CaptureLabError):
    def __init__(self, clause: str, detail: str = ""):
        msg = f"condition violation: {clause}"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)
        self.clause = clause


class NotStandardizable(CaptureLabError):
    def __init__(self, clause: int, detail: str = ""):
        msg = f"family not standardizable: clause ({clause})"
        if detail:
            msg += f" {detail}"
        super().__init__(msg)
        self.clause = clause


class DepthExhausted(CaptureLabError):
    """The base scheme is too shallow for the requested extension."""


class WidthExhausted(CaptureLabError):
    pass


class CapExceeded(CaptureLabError):
    """An ordinal lies beyond the configured simulated omega_1."""


class FuelExhausted(CaptureLabError):
    def __init__(self, goal_index: int):
        super().__init__(f"fuel exhausted while working on goal {goal_index}")
        self.goal_index = goal_index
