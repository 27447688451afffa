from .client import ChatClient, MalformedResponse, OracleUnavailable
from .core import (
    DEFAULT_INPUT_BUDGET,
    Oracle,
    OracleMode,
    OracleRequest,
    OracleResponse,
    PromptTooLarge,
    WarningRef,
    parse_payload,
    transcript_io,
)
from .jsontail import last_json_object
from .prompts import OracleKind
from .transcript import OracleTranscript, ReplayMiss, TranscriptEntry

__all__ = [
    "DEFAULT_INPUT_BUDGET",
    "ChatClient",
    "MalformedResponse",
    "Oracle",
    "OracleKind",
    "OracleMode",
    "OracleRequest",
    "OracleResponse",
    "OracleTranscript",
    "OracleUnavailable",
    "PromptTooLarge",
    "ReplayMiss",
    "TranscriptEntry",
    "WarningRef",
    "last_json_object",
    "parse_payload",
    "transcript_io",
]
