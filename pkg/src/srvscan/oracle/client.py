"""Chat-completion HTTP client for live oracle mode."""

from __future__ import annotations

import logging
import threading
from typing import Callable, Optional

import requests

from ..ratelimit import RateLimiter

log = logging.getLogger(__name__)

MAX_ATTEMPTS = 3


class OracleUnavailable(RuntimeError):
    pass


class MalformedResponse(ValueError):
    pass


class ChatClient:
    """Posts OpenAI-style chat requests at temperature 0."""

    def __init__(
        self,
        endpoint: str,
        model: str = "gpt-4o",
        api_key: Optional[str] = None,
        timeout: float = 120.0,
        rate_limit: Optional[float] = None,
        max_concurrent: int = 4,
        session: Optional[requests.Session] = None,
    ):
        self.endpoint = endpoint
        self.model = model
        self.api_key = api_key
        self.timeout = timeout
        self.session = session or requests.Session()
        self.limiter = RateLimiter(rate_limit)
        self._slots = threading.BoundedSemaphore(max(1, max_concurrent))

    def _post(self, prompt: str) -> str:
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        body = {"model": self.model, "temperature": 0, "messages": [{"role": "user", "content": prompt}]}
        with self._slots:
            self.limiter.acquire()
            resp = self.session.post(self.endpoint, json=body, headers=headers, timeout=self.timeout)
        resp.raise_for_status()
        doc = resp.json()
        return doc["choices"][0]["message"]["content"]

    def complete(self, prompt: str, accept: Callable[[str], bool]) -> tuple[str, int]:
        """Ask up to three times; return the first answer ``accept`` likes."""
        last_text: Optional[str] = None
        errors: list[str] = []
        for attempt in range(1, MAX_ATTEMPTS + 1):
            try:
                text = self._post(prompt)
            except (requests.RequestException, KeyError, IndexError, TypeError, ValueError) as exc:
                errors.append(f"attempt {attempt}: {exc}")
                log.warning("oracle request failed: %s", exc)
                continue
            last_text = text
            if accept(text):
                return text, attempt
        if last_text is None:
            raise OracleUnavailable("; ".join(errors) or "no response")
        raise MalformedResponse("no JSON object in the final oracle answer")
