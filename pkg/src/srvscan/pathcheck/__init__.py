"""Path reachability of warnings under the signature replay model."""

from __future__ import annotations

from . import builtin, smtlib
from .builder import (
    ATTACKER,
    SIGNER,
    PathNotFound,
    build_path_constraints,
    enumerate_path_constraints,
    resolve_sequence,
    transactions,
)
from .terms import PathConstraintSet, Sort
from .verdict import ReachabilityVerdict, SolverError, Status

BACKENDS = ("builtin", "external")


def check_reachability(constraints: PathConstraintSet, backend: str = "builtin", timeout_ms: int = 5000,
                       solver_path: str = "z3") -> ReachabilityVerdict:
    constraints.validate()
    if backend == "builtin":
        return builtin.solve(constraints, timeout_ms)
    if backend == "external":
        return smtlib.solve(constraints, solver_path, timeout_ms)
    raise ValueError(f"unknown solver backend {backend!r}")


__all__ = [
    "ATTACKER",
    "BACKENDS",
    "PathConstraintSet",
    "PathNotFound",
    "ReachabilityVerdict",
    "SIGNER",
    "SolverError",
    "Sort",
    "Status",
    "build_path_constraints",
    "check_reachability",
    "enumerate_path_constraints",
    "resolve_sequence",
    "transactions",
]
