"""Solver outcomes."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Optional


class Status(Enum):
    SAT = "SAT"
    UNSAT = "UNSAT"
    UNKNOWN = "Unknown"
    TIMEOUT = "Timeout"


class SolverError(Exception):
    """The solver produced output we cannot interpret, or could not run."""


@dataclass(frozen=True)
class ReachabilityVerdict:
    status: Status
    model: Optional[dict[str, str]] = None
    sequence: tuple[str, ...] = ()
    reason: str = ""

    def __post_init__(self) -> None:
        if self.model is not None and self.status is not Status.SAT:
            raise ValueError("a model accompanies SAT verdicts only")
