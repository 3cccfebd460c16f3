"""Chat-completion HTTP client with retries, caching, and an audit log.

Talks to any OpenAI-compatible endpoint: POST {base_url}/chat/completions
with a single user message.  Every successful completion can be cached
on disk keyed by (model, temperature, prompt hash, sample index), so a
rerun against a warm cache issues zero network calls and reproduces the
exact texts.  An append-only JSONL audit log records one line per
completion.

The API key is read from the environment (IGDA_API_KEY by default) at
request time.  It is never written to config files, caches, or logs.
"""
from __future__ import annotations

import hashlib
import json
import logging
import os
import random
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import requests

from .errors import GatewayConfigError, TransportError
from .predictor import RequestMeta, TextBackend

logger = logging.getLogger(__name__)

RETRYABLE_STATUS = {429, 500, 502, 503, 504}


@dataclass
class GatewayConfig:
    base_url: str
    model: str
    temperature: float = 0.7
    max_tokens: int = 1024
    timeout_s: float = 120.0
    max_retries: int = 4
    backoff_base_ms: int = 250
    max_in_flight: int = 4
    cache_dir: Path | None = None
    audit_path: Path | None = None
    api_key_env: str = "IGDA_API_KEY"

    def __post_init__(self):
        if not self.base_url:
            raise GatewayConfigError("base_url is required")
        if self.max_retries < 0 or self.max_in_flight < 1:
            raise GatewayConfigError("bad retry/concurrency settings")
        if self.cache_dir is not None:
            self.cache_dir = Path(self.cache_dir)
        if self.audit_path is not None:
            self.audit_path = Path(self.audit_path)


@dataclass
class CompletionRecord:
    """Audit row for one completion request."""

    prompt_sha256: str
    sample_index: int
    text: str
    latency_ms: float
    attempts: int
    timestamp: float
    cached: bool = False

    def to_dict(self) -> dict:
        return {
            "prompt_sha256": self.prompt_sha256,
            "sample_index": self.sample_index,
            "text": self.text,
            "latency_ms": self.latency_ms,
            "attempts": self.attempts,
            "timestamp": self.timestamp,
            "cached": self.cached,
        }


def _sha256(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


class LlmGateway:
    """Synchronous client; batch sampling runs on a bounded thread pool."""

    def __init__(self, config: GatewayConfig):
        self.config = config
        self._audit_lock = threading.Lock()
        if config.cache_dir is not None:
            config.cache_dir.mkdir(parents=True, exist_ok=True)
        if config.audit_path is not None:
            config.audit_path.parent.mkdir(parents=True, exist_ok=True)

    # ---- cache ----

    def _cache_key(self, prompt_hash: str, sample_index: int) -> str:
        raw = f"{self.config.model}\x1f{self.config.temperature!r}\x1f{prompt_hash}\x1f{sample_index}"
        return _sha256(raw)

    def _cache_path(self, key: str) -> Path:
        assert self.config.cache_dir is not None
        return self.config.cache_dir / f"{key}.json"

    def _cache_get(self, prompt_hash: str, sample_index: int) -> str | None:
        if self.config.cache_dir is None:
            return None
        path = self._cache_path(self._cache_key(prompt_hash, sample_index))
        if not path.exists():
            return None
        try:
            return json.loads(path.read_text())["text"]
        except (OSError, json.JSONDecodeError, KeyError):
            logger.warning("unreadable cache entry %s, refetching", path.name)
            return None

    def _cache_put(self, prompt_hash: str, sample_index: int, text: str):
        if self.config.cache_dir is None:
            return
        path = self._cache_path(self._cache_key(prompt_hash, sample_index))
        payload = {
            "model": self.config.model,
            "temperature": self.config.temperature,
            "prompt_sha256": prompt_hash,
            "sample_index": sample_index,
            "text": text,
        }
        tmp = path.with_suffix(".tmp")
        tmp.write_text(json.dumps(payload, sort_keys=True))
        tmp.replace(path)

    # ---- audit ----

    def _audit(self, record: CompletionRecord):
        if self.config.audit_path is None:
            return
        line = json.dumps(record.to_dict(), sort_keys=True)
        with self._audit_lock:
            with self.config.audit_path.open("a") as fh:
                fh.write(line + "\n")

    # ---- HTTP ----

    def _headers(self) -> dict[str, str]:
        headers = {"Content-Type": "application/json"}
        key = os.environ.get(self.config.api_key_env, "")
        if key:
            headers["Authorization"] = f"Bearer {key}"
        return headers

    def _post_once(self, prompt: str) -> str:
        url = self.config.base_url.rstrip("/") + "/chat/completions"
        payload = {
            "model": self.config.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": self.config.temperature,
            "max_tokens": self.config.max_tokens,
        }
        response = requests.post(
            url, json=payload, headers=self._headers(), timeout=self.config.timeout_s
        )
        if response.status_code in RETRYABLE_STATUS:
            raise TransportError(f"retryable status {response.status_code}")
        if 400 <= response.status_code < 500:
            raise GatewayConfigError(
                f"endpoint rejected request: {response.status_code} {response.text[:200]}"
            )
        try:
            body = response.json()
            return body["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise TransportError(f"malformed completion body: {exc}") from exc

    def _backoff_s(self, attempt: int) -> float:
        base = self.config.backoff_base_ms / 1000.0
        # Doubling plus jitter bounded by the base keeps delays nondecreasing.
        return base * (2 ** attempt) + random.uniform(0.0, base)

    def complete(self, prompt: str, sample_index: int) -> str:
        """One completion, cache-first, with retry on transient failures."""
        prompt_hash = _sha256(prompt)
        started = time.monotonic()
        cached = self._cache_get(prompt_hash, sample_index)
        if cached is not None:
            self._audit(CompletionRecord(
                prompt_sha256=prompt_hash,
                sample_index=sample_index,
                text=cached,
                latency_ms=(time.monotonic() - started) * 1000.0,
                attempts=0,
                timestamp=time.time(),
                cached=True,
            ))
            return cached

        attempts = 0
        last_error: Exception | None = None
        while attempts <= self.config.max_retries:
            attempts += 1
            try:
                text = self._post_once(prompt)
                self._cache_put(prompt_hash, sample_index, text)
                self._audit(CompletionRecord(
                    prompt_sha256=prompt_hash,
                    sample_index=sample_index,
                    text=text,
                    latency_ms=(time.monotonic() - started) * 1000.0,
                    attempts=attempts,
                    timestamp=time.time(),
                ))
                return text
            except GatewayConfigError:
                raise
            except (TransportError, requests.RequestException) as exc:
                last_error = exc
                if attempts > self.config.max_retries:
                    break
                delay = self._backoff_s(attempts - 1)
                logger.warning(
                    "completion attempt %d failed (%s); retrying in %.2fs",
                    attempts, exc, delay,
                )
                time.sleep(delay)
        raise TransportError(
            f"completion failed after {attempts} attempts: {last_error}",
            attempts=attempts,
        )

    def complete_batch(self, prompt: str, count: int) -> list[str | TransportError]:
        """Sample indices 0..count-1 concurrently, bounded by max_in_flight.

        The result list is ordered by sample index; failed samples carry
        their TransportError instead of aborting the batch.
        """
        results: list[str | TransportError] = [TransportError("not attempted")] * count

        def run(index: int):
            try:
                results[index] = self.complete(prompt, index)
            except TransportError as exc:
                results[index] = exc

        workers = min(self.config.max_in_flight, max(count, 1))
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(run, range(count)))
        return results


class GatewayBackend(TextBackend):
    """Adapts LlmGateway to the predictor's TextBackend interface."""

    def __init__(self, gateway: LlmGateway):
        self.gateway = gateway

    def complete(self, prompt: str, sample_index: int, meta: RequestMeta | None = None) -> str:
        return self.gateway.complete(prompt, sample_index)

    def complete_many(
        self, prompt: str, count: int, meta: RequestMeta | None = None
    ) -> list[str | TransportError]:
        return self.gateway.complete_batch(prompt, count)
