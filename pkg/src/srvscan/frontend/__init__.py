from .ast import ENV_ATOMS, AstUnit, NodeId, Span
from .inheritance import CycleError, resolve_inheritance
from .parser import ParseError, parse_source
from .sinks import ExprRef, SinkKind, SinkSite, locate_sinks


def load(source_text: str, path: str = "") -> AstUnit:
    """Parse and resolve inheritance in one step."""
    return resolve_inheritance(parse_source(source_text, path))


__all__ = [
    "ENV_ATOMS",
    "AstUnit",
    "CycleError",
    "ExprRef",
    "NodeId",
    "ParseError",
    "SinkKind",
    "SinkSite",
    "Span",
    "load",
    "locate_sinks",
    "parse_source",
    "resolve_inheritance",
]
