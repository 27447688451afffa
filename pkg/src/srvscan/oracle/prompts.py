"""Prompt templates and their rendering."""

from __future__ import annotations

import hashlib
import json
import re
from enum import Enum
from functools import lru_cache
from importlib import resources

TEMPLATE_VERSION = "v1"


class OracleKind(Enum):
    KEY_VARIABLES = "KeyVariables"
    SANITIZED_VARIABLES = "SanitizedVariables"
    FUNCTION_SEQUENCE = "FunctionSequence"


_TEMPLATE_FILES = {
    OracleKind.KEY_VARIABLES: "prompt_a",
    OracleKind.SANITIZED_VARIABLES: "prompt_b",
    OracleKind.FUNCTION_SEQUENCE: "prompt_c",
}

IDENTIFICATION_RULES = {
    "X-CRA": "X-CRA: a variable is sanitized if it is compared for equality with block.chainid or hashed together with it.",
    "X-PRA": "X-PRA: a variable is sanitized if it is compared for equality with address(this) or hashed together with it.",
    "CASR": "CASR: a variable is sanitized if it is compared with, or hashed together with, the account or identity address the signature is checked for.",
    "SSMI": "SSMI: a state mapping is sanitized if it is read in a guard and written afterwards, keyed by the hash, the signature, or the signer.",
    "SMA": "SMA: v is sanitized if it is restricted to 27 or 28; s is sanitized if it is bounded by half the secp256k1 order.",
}

SANITIZATION_METHODS = {
    "X-CRA": "X-CRA: block.chainid inside the signed hash, directly or through an EIP-712 domain separator.",
    "X-PRA": "X-PRA: address(this) inside the signed hash, directly or through an EIP-712 domain separator.",
    "CASR": "CASR: the verifying account's address inside the signed hash.",
    "SSMI": "SSMI: a used-hash mapping checked then set, or a per-signer nonce checked then incremented.",
    "SMA": "SMA: require(v == 27 || v == 28) and require(uint256(s) <= HALF_ORDER), or a maintained ECDSA library.",
}

_PLACEHOLDER = re.compile(r"%([a-z_]+)%")


@lru_cache(maxsize=None)
def template(kind: OracleKind, version: str = TEMPLATE_VERSION) -> str:
    name = f"{_TEMPLATE_FILES[kind]}.{version}.txt"
    return resources.files("srvscan.oracle").joinpath("templates", name).read_text(encoding="utf-8")


def placeholders(kind: OracleKind) -> list[str]:
    return _PLACEHOLDER.findall(template(kind))


def render(kind: OracleKind, values: dict[str, str]) -> str:
    """Substitute every ``%name%`` placeholder verbatim, in one pass."""
    text = template(kind)
    missing = [p for p in placeholders(kind) if p not in values]
    if missing:
        raise KeyError(f"missing prompt values: {missing}")
    return _PLACEHOLDER.sub(lambda m: values[m.group(1)], text)


def overhead(kind: OracleKind) -> int:
    """Template length without its placeholders."""
    return len(_PLACEHOLDER.sub("", template(kind)))


def context_digest(kind: OracleKind, values: dict[str, str]) -> str:
    blob = json.dumps({"kind": kind.value, "version": TEMPLATE_VERSION, "values": values}, sort_keys=True)
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def rules_for(srv_types: list[str]) -> tuple[str, str]:
    rules = "\n".join(f"- {IDENTIFICATION_RULES[t]}" for t in srv_types)
    methods = "\n".join(f"- {SANITIZATION_METHODS[t]}" for t in srv_types)
    return rules, methods
