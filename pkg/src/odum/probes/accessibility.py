"""Pluggable accessibility scoring for the c4 criterion."""

from __future__ import annotations

import os
from typing import Protocol

import requests

from ..schema import FrameworkSchema, load_schema
from ..scoring import Measured, binarize
from .http import ProbeResult

CHECKER_ENV = "ODUM_CHECKER_URL"


class CheckerUnavailable(Exception):
    pass


class CheckerResponseError(Exception):
    pass


class AccessibilityChecker(Protocol):
    def score(self, url: str) -> float:
        """Return a 0-100 accessibility score for ``url``."""


class StubChecker:
    """Returns a fixed score, or raises the configured exception."""

    def __init__(self, score: float | None = None, error: Exception | None = None):
        self._score = score
        self._error = error

    def score(self, url: str) -> float:
        if self._error is not None:
            raise self._error
        if self._score is None:
            raise CheckerUnavailable("stub has no score configured")
        return self._score


class HttpChecker:
    """Checker service speaking ``POST {"url": ...}`` -> ``{"score": n}``."""

    def __init__(self, service_url: str, timeout: float = 30.0):
        self.service_url = service_url
        self.timeout = timeout

    def score(self, url: str) -> float:
        try:
            resp = requests.post(self.service_url, json={"url": url}, timeout=self.timeout)
        except requests.RequestException as exc:
            raise CheckerUnavailable(str(exc)) from exc
        if resp.status_code >= 500:
            raise CheckerUnavailable(f"checker answered {resp.status_code}")
        try:
            value = float(resp.json()["score"])
        except (ValueError, KeyError, TypeError) as exc:
            raise CheckerResponseError(f"unexpected checker payload: {resp.text[:200]!r}") from exc
        if not 0 <= value <= 100:
            raise CheckerResponseError(f"score {value} outside 0-100")
        return value


def checker_from_env() -> HttpChecker | None:
    url = os.environ.get(CHECKER_ENV)
    return HttpChecker(url) if url else None


def accessibility_score(checker: AccessibilityChecker, url: str, schema: FrameworkSchema | None = None) -> ProbeResult:
    schema = schema or load_schema()
    try:
        value = float(checker.score(url))
    except CheckerUnavailable as exc:
        return ProbeResult(url, "c4", "error", evidence=f"checker-unavailable: {exc}")
    except TimeoutError as exc:
        return ProbeResult(url, "c4", "error", evidence=f"checker-unavailable: timeout {exc}")
    except (CheckerResponseError, ValueError, TypeError) as exc:
        return ProbeResult(url, "c4", "error", evidence=f"checker-malformed: {exc}")
    bit = binarize(schema["c4"], Measured(value, "score"))
    return ProbeResult(url, "c4", "pass" if bit else "fail", value, "score", f"checker score {value:g}")
