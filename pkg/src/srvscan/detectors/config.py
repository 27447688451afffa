"""Detector settings."""

from __future__ import annotations

from dataclasses import dataclass, field

from ..guards import SECP256K1_HALF_ORDER
from ..taint import SrvType

DEFAULT_SAFE_LIBRARIES = ("ECDSA", "ECDSAUpgradeable", "SignatureChecker")
# first OpenZeppelin release whose ECDSA rejects malleable signatures everywhere
SAFE_LIBRARY_MIN_VERSION = (4, 7, 3)


@dataclass(frozen=True)
class DetectorConfig:
    enabled: frozenset[SrvType] = frozenset(SrvType)
    secp256k1_half_order: int = SECP256K1_HALF_ORDER
    safe_library_names: tuple[str, ...] = DEFAULT_SAFE_LIBRARIES
    treat_eip712_domain_as_binding: bool = True
    max_guard_paths: int = 64
    domain_helpers: tuple[str, ...] = field(default=(
        "DOMAIN_SEPARATOR", "domainSeparator", "getDomainSeparator", "_domainSeparatorV4",
        "_domainSeparator", "domainSeparatorV4", "_hashTypedDataV4", "hashTypedDataV4",
    ))

    def __post_init__(self) -> None:
        if not 0 < self.secp256k1_half_order < 1 << 256:
            raise ValueError("secp256k1_half_order must be a positive 256-bit value")
