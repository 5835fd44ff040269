"""Chat-completion client with retries, rate limiting and a bounded in-flight window."""

from __future__ import annotations

import logging
import os
import threading
import time
from collections.abc import Callable, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import httpx

from .prompting import PromptBundle

logger = logging.getLogger(__name__)

RETRY_STATUSES = frozenset({429, 500, 502, 503, 504})


class InferenceError(Exception):
    pass


class TransportError(InferenceError):
    """Endpoint unreachable or kept failing transiently until attempts ran out."""

    def __init__(self, message: str, attempts: int = 0):
        super().__init__(message)
        self.attempts = attempts


class ProtocolError(InferenceError):
    """Response body did not follow the chat-completion schema, or request was refused."""

    def __init__(self, message: str, attempts: int = 0):
        super().__init__(message)
        self.attempts = attempts


class AuthError(InferenceError):
    def __init__(self, message: str, attempts: int = 1):
        super().__init__(message)
        self.attempts = attempts


@dataclass(frozen=True)
class EndpointConfig:
    base_url: str
    model_name: str
    temperature: float = 0.0
    max_tokens: int = 16
    timeout: float = 60.0
    max_attempts: int = 3
    max_in_flight: int = 8
    requests_per_second: float | None = None
    backoff_base: float = 1.0
    single_message: bool = False
    api_key_env: str = "WEIBOSENT_API_KEY"

    def __post_init__(self):
        if self.max_attempts < 1:
            raise ValueError("max_attempts must be >= 1")
        if self.max_in_flight < 1:
            raise ValueError("max_in_flight must be >= 1")
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if self.requests_per_second is not None and self.requests_per_second <= 0:
            raise ValueError("requests_per_second must be positive")

    @property
    def url(self) -> str:
        return self.base_url.rstrip("/") + "/chat/completions"


@dataclass(frozen=True)
class CompletionResult:
    text: str
    latency: float
    attempts: int
    endpoint_model: str


class TokenBucket:
    """Thread-safe token bucket; ``acquire`` blocks until a token is available."""

    def __init__(self, rate: float, capacity: float | None = None, clock=time.monotonic, sleep=time.sleep):
        self.rate = rate
        self.capacity = capacity if capacity is not None else max(1.0, rate)
        self._tokens = self.capacity
        self._clock = clock
        self._sleep = sleep
        self._last = clock()
        self._lock = threading.Lock()

    def acquire(self) -> None:
        while True:
            with self._lock:
                now = self._clock()
                self._tokens = min(self.capacity, self._tokens + (now - self._last) * self.rate)
                self._last = now
                if self._tokens >= 1:
                    self._tokens -= 1
                    return
                wait = (1 - self._tokens) / self.rate
            self._sleep(wait)


def encode_request(bundle: PromptBundle, cfg: EndpointConfig) -> dict:
    return {
        "model": cfg.model_name,
        "messages": bundle.messages(single_message=cfg.single_message),
        "temperature": cfg.temperature,
        "max_tokens": cfg.max_tokens,
    }


def decode_response(body: object) -> tuple[str, str | None]:
    """Pull ``choices[0].message.content`` (and the served model name) out of a reply body."""
    try:
        text = body["choices"][0]["message"]["content"]  # type: ignore[index]
    except (KeyError, IndexError, TypeError):
        raise ProtocolError("response lacks choices[0].message.content") from None
    if not isinstance(text, str):
        raise ProtocolError("message content is not text")
    model = body.get("model") if isinstance(body, dict) else None
    return text, model if isinstance(model, str) else None


class InferenceClient:
    """Blocking client for a ``/chat/completions`` endpoint.

    One instance may be shared across threads: httpx.Client is thread-safe and
    the rate limiter is locked.
    """

    def __init__(
        self,
        cfg: EndpointConfig,
        http: httpx.Client | None = None,
        sleep: Callable[[float], None] = time.sleep,
    ):
        self.cfg = cfg
        headers = {"Content-Type": "application/json"}
        token = os.environ.get(cfg.api_key_env)
        if token:
            headers["Authorization"] = f"Bearer {token}"
        limits = httpx.Limits(max_connections=cfg.max_in_flight, max_keepalive_connections=cfg.max_in_flight)
        self._http = http or httpx.Client(timeout=cfg.timeout, headers=headers, limits=limits)
        self._owns_http = http is None
        self._sleep = sleep
        self._bucket = TokenBucket(cfg.requests_per_second) if cfg.requests_per_second else None

    def close(self) -> None:
        if self._owns_http:
            self._http.close()

    def __enter__(self) -> InferenceClient:
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    def complete(self, bundle: PromptBundle) -> CompletionResult:
        cfg = self.cfg
        payload = encode_request(bundle, cfg)
        started = time.perf_counter()
        last_problem = ""
        for attempt in range(1, cfg.max_attempts + 1):
            if self._bucket is not None:
                self._bucket.acquire()
            try:
                response = self._http.post(cfg.url, json=payload)
            except (httpx.TimeoutException, httpx.NetworkError, httpx.RemoteProtocolError) as exc:
                last_problem = f"{type(exc).__name__}: {exc}"
            else:
                status = response.status_code
                if status in (401, 403):
                    raise AuthError(f"HTTP {status} from {cfg.url}", attempt)
                if status in RETRY_STATUSES:
                    last_problem = f"HTTP {status}"
                elif status >= 400:
                    raise ProtocolError(f"HTTP {status} from {cfg.url}", attempt)
                else:
                    try:
                        body = response.json()
                    except ValueError:
                        raise ProtocolError("response body is not JSON", attempt) from None
                    try:
                        text, model = decode_response(body)
                    except ProtocolError as exc:
                        exc.attempts = attempt
                        raise
                    return CompletionResult(
                        text=text,
                        latency=time.perf_counter() - started,
                        attempts=attempt,
                        endpoint_model=model or cfg.model_name,
                    )
            if attempt < cfg.max_attempts:
                delay = cfg.backoff_base * 2 ** (attempt - 1)
                logger.debug("attempt %d failed (%s); retrying in %.2fs", attempt, last_problem, delay)
                self._sleep(delay)
        raise TransportError(f"gave up after {cfg.max_attempts} attempts: {last_problem}", cfg.max_attempts)

    def complete_many(
        self, bundles: Sequence[PromptBundle]
    ) -> list[tuple[int, CompletionResult | InferenceError]]:
        """Complete every bundle with at most ``max_in_flight`` requests outstanding.

        Results come back in input order, each paired with its index; a failed
        item carries its exception instead of a result.
        """
        if not bundles:
            return []

        def run(i: int) -> tuple[int, CompletionResult | InferenceError]:
            try:
                return i, self.complete(bundles[i])
            except InferenceError as exc:
                return i, exc

        workers = min(self.cfg.max_in_flight, len(bundles))
        with ThreadPoolExecutor(max_workers=workers, thread_name_prefix="infer") as pool:
            return list(pool.map(run, range(len(bundles))))


def complete(bundle: PromptBundle, cfg: EndpointConfig) -> CompletionResult:
    with InferenceClient(cfg) as client:
        return client.complete(bundle)


def complete_many(
    bundles: Sequence[PromptBundle], cfg: EndpointConfig
) -> list[tuple[int, CompletionResult | InferenceError]]:
    with InferenceClient(cfg) as client:
        return client.complete_many(bundles)
