"""Per-type vulnerability detectors over one sink's slice."""

from __future__ import annotations

from typing import Callable

from ..taint import SrvType, Warning
from .binding import detect_casr, detect_xcra, detect_xpra
from .common import AnalysisContext
from .config import DetectorConfig
from .library import exempt_library, is_safe_library_contract, library_version
from .sma import detect_sma
from .ssmi import detect_ssmi

DETECTORS: dict[SrvType, Callable[[AnalysisContext], list[Warning]]] = {
    SrvType.XCRA: detect_xcra,
    SrvType.XPRA: detect_xpra,
    SrvType.CASR: detect_casr,
    SrvType.SSMI: detect_ssmi,
    SrvType.SMA: detect_sma,
}


def detect_all(ctx: AnalysisContext) -> list[Warning]:
    out: list[Warning] = []
    for t, detector in DETECTORS.items():
        if t in ctx.config.enabled:
            out.extend(detector(ctx))
    return out


__all__ = [
    "AnalysisContext",
    "DETECTORS",
    "DetectorConfig",
    "detect_all",
    "detect_casr",
    "detect_sma",
    "detect_ssmi",
    "detect_xcra",
    "detect_xpra",
    "exempt_library",
    "is_safe_library_contract",
    "library_version",
]
