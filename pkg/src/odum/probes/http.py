"""HTTP probing with per-host politeness."""

from __future__ import annotations

import datetime as dt
import socket
import statistics
import threading
import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Optional
from urllib.parse import urlsplit

import requests

from ..schema import FrameworkSchema, load_schema
from ..scoring import Measured, binarize

USER_AGENT = "odum-probe/0.1 (+usability assessment)"
DEFAULT_TIMEOUT = 15.0
MAX_REDIRECTS = 5


class ProbeError(Exception):
    """Network-level failure; ``reason`` is a short machine tag such as ``dns``."""

    def __init__(self, reason: str, detail: str = ""):
        super().__init__(f"{reason}: {detail}" if detail else reason)
        self.reason = reason
        self.detail = detail


@dataclass
class ProbeResult:
    target: str
    check: str
    outcome: str
    measured: Optional[float] = None
    unit: str = ""
    evidence: str = ""
    timestamp: str = field(default_factory=lambda: dt.datetime.now(dt.timezone.utc).isoformat(timespec="seconds"))

    def __post_init__(self):
        if self.outcome not in ("pass", "fail", "error"):
            raise ValueError(f"bad outcome {self.outcome!r}")
        if self.outcome == "error" and not self.evidence:
            raise ValueError("error results need a reason in evidence")

    @property
    def reason(self) -> str:
        return self.evidence.split(":", 1)[0] if self.outcome == "error" else ""

    def to_dict(self) -> dict:
        return {
            "target": self.target,
            "check": self.check,
            "outcome": self.outcome,
            "measured": self.measured,
            "unit": self.unit,
            "evidence": self.evidence,
            "timestamp": self.timestamp,
        }


class HostPolicy:
    """At most ``max_concurrent`` in-flight requests and ``min_interval`` seconds between starts, per host."""

    def __init__(self, max_concurrent: int = 2, min_interval: float = 0.5):
        self.max_concurrent = max_concurrent
        self.min_interval = min_interval
        self._guard = threading.Lock()
        self._slots: dict[str, threading.Semaphore] = {}
        self._locks: dict[str, threading.Lock] = {}
        self._last: dict[str, float] = {}

    def _for(self, host: str):
        with self._guard:
            if host not in self._slots:
                self._slots[host] = threading.Semaphore(self.max_concurrent)
                self._locks[host] = threading.Lock()
            return self._slots[host], self._locks[host]

    @contextmanager
    def slot(self, host: str):
        sem, lock = self._for(host)
        with sem:
            with lock:
                last = self._last.get(host)
                if last is not None:
                    wait = last + self.min_interval - time.monotonic()
                    if wait > 0:
                        time.sleep(wait)
                self._last[host] = time.monotonic()
            yield


@dataclass
class Fetched:
    url: str
    status: int
    body: bytes
    elapsed: float
    headers: dict


def _classify(exc: Exception) -> ProbeError:
    chain = []
    e: BaseException | None = exc
    while e is not None and len(chain) < 10:
        chain.append(e)
        e = e.__cause__ or e.__context__
    text = " ".join(f"{type(x).__name__} {x}" for x in chain)
    if any(isinstance(x, socket.gaierror) for x in chain) or "NameResolutionError" in text or "Name or service not known" in text:
        return ProbeError("dns", str(exc))
    if isinstance(exc, requests.exceptions.SSLError):
        return ProbeError("tls", str(exc))
    if isinstance(exc, requests.exceptions.Timeout):
        return ProbeError("timeout", str(exc))
    if isinstance(exc, requests.exceptions.TooManyRedirects):
        return ProbeError("redirects", str(exc))
    if isinstance(exc, requests.exceptions.ConnectionError):
        return ProbeError("connection", str(exc))
    return ProbeError("network", str(exc))


class ProbeClient:
    """Thin ``requests`` wrapper that times requests and honours a HostPolicy."""

    def __init__(
        self,
        timeout: float = DEFAULT_TIMEOUT,
        max_redirects: int = MAX_REDIRECTS,
        user_agent: str = USER_AGENT,
        policy: HostPolicy | None = None,
        token: str | None = None,
    ):
        self.timeout = timeout
        self.policy = policy or HostPolicy()
        self.session = requests.Session()
        self.session.max_redirects = max_redirects
        self.session.headers["User-Agent"] = user_agent
        if token:
            self.session.headers["Authorization"] = token

    def fetch(self, url: str, method: str = "GET", headers: dict | None = None, **kwargs) -> Fetched:
        host = urlsplit(url).netloc
        with self.policy.slot(host):
            start = time.perf_counter()
            try:
                with self.session.request(
                    method, url, headers=headers, timeout=self.timeout, stream=True, allow_redirects=True, **kwargs
                ) as resp:
                    chunks = []
                    for chunk in resp.iter_content(65536):
                        chunks.append(chunk)
                        if time.perf_counter() - start > self.timeout:
                            raise ProbeError("timeout", f"body not complete after {self.timeout}s")
                    elapsed = time.perf_counter() - start
                    return Fetched(resp.url, resp.status_code, b"".join(chunks), elapsed, dict(resp.headers))
            except ProbeError:
                raise
            except requests.RequestException as exc:
                raise _classify(exc) from exc

    def get(self, url: str, params: dict | None = None) -> Fetched:
        if params:
            url = requests.Request("GET", url, params=params).prepare().url
        return self.fetch(url)


def probe_load_time(
    url: str,
    trials: int = 3,
    client: ProbeClient | None = None,
    schema: FrameworkSchema | None = None,
) -> ProbeResult:
    """Median time-to-last-byte of the main document, judged by the c1 criterion."""
    if trials < 1:
        raise ValueError("trials must be at least 1")
    client = client or ProbeClient()
    schema = schema or load_schema()
    times = []
    for _ in range(trials):
        try:
            got = client.fetch(url)
        except ProbeError as exc:
            return ProbeResult(url, "c1", "error", evidence=f"{exc.reason}: {exc.detail}")
        if not 200 <= got.status < 300:
            return ProbeResult(url, "c1", "error", evidence=f"http-{got.status}: final status {got.status}")
        times.append(got.elapsed)
    median = statistics.median(times)
    bit = binarize(schema["c1"], Measured(median, "s"))
    evidence = "trials=" + ",".join(f"{t:.3f}" for t in times) + "s"
    return ProbeResult(url, "c1", "pass" if bit else "fail", round(median, 4), "s", evidence)


ENDPOINT_CHECKS = {"api": "f12", "sparql": "f13", "download": "f11"}


def probe_endpoint(url: str, kind: str = "api", client: ProbeClient | None = None) -> ProbeResult:
    """Is the endpoint openly reachable and non-empty?

    Auth walls count as failures, not errors: they close the data off.
    """
    if not url:
        raise ValueError("url must not be empty")
    if kind not in ENDPOINT_CHECKS:
        raise ValueError(f"unknown endpoint kind {kind!r}")
    client = client or ProbeClient()
    check = ENDPOINT_CHECKS[kind]
    try:
        head = client.fetch(url, "HEAD")
        if head.status in (401, 403):
            return ProbeResult(url, check, "fail", evidence=f"auth-required: HEAD {head.status}")
        length = head.headers.get("Content-Length")
        if kind == "download" and 200 <= head.status < 300 and length and int(length) > 0:
            return ProbeResult(url, check, "pass", evidence=f"HEAD {head.status}, {length} bytes")
        got = client.fetch(url, "GET", headers={"Range": "bytes=0-1023"})
    except ProbeError as exc:
        return ProbeResult(url, check, "error", evidence=f"{exc.reason}: {exc.detail}")
    if got.status in (401, 403):
        return ProbeResult(url, check, "fail", evidence=f"auth-required: GET {got.status}")
    if got.status == 416:
        return ProbeResult(url, check, "fail", evidence="no-content: range not satisfiable")
    if not 200 <= got.status < 300:
        return ProbeResult(url, check, "fail", evidence=f"http-{got.status}")
    if not got.body:
        return ProbeResult(url, check, "fail", evidence=f"no-content: GET {got.status} with empty body")
    return ProbeResult(url, check, "pass", evidence=f"GET {got.status}, {len(got.body)} bytes")
