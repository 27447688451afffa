"""Verified-source download from an Etherscan-style block explorer, with a file cache."""

from __future__ import annotations

import json
import logging
import os
import re
import tempfile
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Optional

import requests

from .ratelimit import RateLimiter

log = logging.getLogger(__name__)

EXPLORER_URL_ENV = "SRVSCAN_EXPLORER_URL"
EXPLORER_KEY_ENV = "SRVSCAN_EXPLORER_KEY"
MAX_ATTEMPTS = 3

_ADDRESS = re.compile(r"^0x[0-9a-fA-F]{40}$")
_CHAIN = re.compile(r"^[A-Za-z0-9_-]+$")


class FetchError(Exception):
    pass


class HttpError(FetchError):
    pass


class NotVerified(FetchError):
    """The explorer has no published source for the address."""


class RateLimited(FetchError):
    pass


@dataclass(frozen=True)
class FetchOutcome:
    address: str
    status: str  # cached, fetched, not_verified or error
    path: Optional[Path] = None
    note: str = ""


def flatten_source(source: str) -> str:
    """Single-file text for a verified source, which may be a standard-JSON bundle."""
    text = source.strip()
    if not text.startswith("{"):
        return source
    if text.startswith("{{") and text.endswith("}}"):
        text = text[1:-1]
    try:
        doc = json.loads(text)
    except json.JSONDecodeError:
        return source
    files = doc.get("sources", doc) if isinstance(doc, dict) else {}
    parts = []
    for name in sorted(files):
        entry = files[name]
        content = entry.get("content") if isinstance(entry, dict) else None
        if isinstance(content, str):
            parts.append(f"// file: {name}\n{content.rstrip()}\n")
    return "\n".join(parts) if parts else source


class ExplorerClient:
    def __init__(self, base_url: str, api_key: Optional[str] = None, rate: Optional[float] = 5.0,
                 session: Optional[requests.Session] = None, timeout: float = 30.0,
                 backoff: float = 1.0, sleep: Callable[[float], None] = time.sleep):
        self.base_url = base_url
        self.api_key = api_key
        self.session = session or requests.Session()
        self.timeout = timeout
        self.backoff = backoff
        self.sleep = sleep
        self.limiter = RateLimiter(rate)

    @classmethod
    def from_env(cls, **kwargs) -> "ExplorerClient":
        url = os.environ.get(EXPLORER_URL_ENV)
        if not url:
            raise FetchError(f"{EXPLORER_URL_ENV} is not set")
        return cls(url, os.environ.get(EXPLORER_KEY_ENV), **kwargs)

    def _request(self, address: str) -> dict:
        params = {"module": "contract", "action": "getsourcecode", "address": address}
        if self.api_key:
            params["apikey"] = self.api_key
        self.limiter.acquire()
        try:
            resp = self.session.get(self.base_url, params=params, timeout=self.timeout)
        except requests.RequestException as exc:
            raise HttpError(str(exc)) from exc
        if resp.status_code == 429:
            raise RateLimited("explorer answered 429")
        if resp.status_code != 200:
            raise HttpError(f"explorer answered {resp.status_code}")
        try:
            doc = resp.json()
        except ValueError as exc:
            raise HttpError(f"explorer answer is not JSON: {exc}") from exc
        if not isinstance(doc, dict):
            raise HttpError("explorer answer is not an object")
        result = doc.get("result")
        if isinstance(result, str) and "rate limit" in result.lower():
            raise RateLimited(result)
        return doc

    def source(self, address: str) -> str:
        """Flattened verified source; retries rate-limit answers with backoff."""
        for attempt in range(1, MAX_ATTEMPTS + 1):
            try:
                doc = self._request(address)
                break
            except RateLimited:
                if attempt == MAX_ATTEMPTS:
                    raise
                self.sleep(self.backoff * 2 ** (attempt - 1))
        result = doc.get("result")
        if not isinstance(result, list) or not result or not isinstance(result[0], dict):
            raise HttpError(f"unexpected explorer result for {address}")
        code = result[0].get("SourceCode") or ""
        if not code.strip():
            raise NotVerified(f"{address} has no verified source")
        return flatten_source(code)


def cache_path(cache_dir: Path, chain: str, address: str) -> Path:
    return Path(cache_dir) / chain / f"{address.lower()}.sol"


def atomic_write(target: Path, text: str) -> None:
    target.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{target.name}.", dir=target.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, target)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def corpus_fetch(addresses: Iterable[str], cache_dir: Path, chain: str = "ethereum",
                 client: Optional[ExplorerClient] = None, rate: Optional[float] = 5.0) -> list[FetchOutcome]:
    """Fetch each address once; cached sources never touch the network."""
    if not _CHAIN.match(chain):
        raise ValueError(f"bad chain name {chain!r}")
    out: list[FetchOutcome] = []
    for address in addresses:
        address = address.strip()
        if not _ADDRESS.match(address):
            out.append(FetchOutcome(address, "error", note="not a 20-byte hex address"))
            continue
        target = cache_path(cache_dir, chain, address)
        if target.exists():
            out.append(FetchOutcome(address, "cached", target))
            continue
        try:
            if client is None:
                client = ExplorerClient.from_env(rate=rate)
            text = client.source(address)
        except NotVerified as exc:
            out.append(FetchOutcome(address, "not_verified", note=str(exc)))
            continue
        except FetchError as exc:
            log.warning("fetch of %s failed: %s", address, exc)
            out.append(FetchOutcome(address, "error", note=f"{type(exc).__name__}: {exc}"))
            continue
        atomic_write(target, text)
        out.append(FetchOutcome(address, "fetched", target))
    return out
