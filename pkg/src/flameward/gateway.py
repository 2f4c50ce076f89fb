"""Provider-agnostic chat-model access.

One gateway fronts every model call in the pipeline: it retries transient
faults with capped exponential backoff, rate-limits per provider, caches by
request digest, optionally records exchanges to an append-only transcript
store, and scrubs configured secrets before anything touches disk.

The deterministic mock provider is a first-class backend so the whole
pipeline can run byte-reproducibly in tests and CI.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import random
import threading
import time
from dataclasses import dataclass
from pathlib import Path

import httpx

from .errors import ConfigurationError, ContentError, TransportError

logger = logging.getLogger(__name__)

ROLES = ("system", "user", "assistant")

DEFAULT_SCRUB_KEYS = ("api_key", "authorization", "token", "secret")

# Conventional API hygiene; callers override for tests.
BACKOFF_BASE_S = 1.0
BACKOFF_FACTOR = 2.0
MAX_ATTEMPTS = 5


@dataclass(frozen=True)
class ModelSpec:
    """One model endpoint plus its decoding parameters."""

    provider_id: str
    model_name: str
    temperature: float = 0.0
    max_output_tokens: int = 1024
    request_timeout: float = 60.0

    def __post_init__(self):
        if not 0.0 <= self.temperature <= 2.0:
            raise ConfigurationError(f"temperature {self.temperature} outside [0, 2]")
        if self.max_output_tokens <= 0:
            raise ConfigurationError("max_output_tokens must be positive")


@dataclass
class ChatExchange:
    request: list[dict[str, str]]
    response_text: str
    usage: dict[str, int]
    latency_ms: float
    cache_hit: bool = False
    truncated: bool = False


class TransientProviderError(Exception):
    """Raised by providers for faults worth retrying (timeouts, 429, 5xx)."""


def _canonical(obj) -> str:
    return json.dumps(obj, sort_keys=True, ensure_ascii=False, separators=(",", ":"))


def request_digest(spec: ModelSpec, messages: list[dict[str, str]]) -> str:
    """Content address of a request. Decoding params are included so a
    temperature change busts the cache."""
    payload = {
        "provider_id": spec.provider_id,
        "model_name": spec.model_name,
        "temperature": spec.temperature,
        "max_output_tokens": spec.max_output_tokens,
        "messages": messages,
    }
    return hashlib.sha256(_canonical(payload).encode("utf-8")).hexdigest()


def validate_messages(messages: list[dict[str, str]]) -> None:
    if not messages:
        raise ValueError("messages must be non-empty")
    for m in messages:
        if m.get("role") not in ROLES:
            raise ValueError(f"bad message role {m.get('role')!r}")
        if not isinstance(m.get("content"), str):
            raise ValueError("message content must be a string")


def scrub(value, scrub_keys: tuple[str, ...], secret_values: tuple[str, ...]):
    """Redact configured key names in mappings and known secret values in text."""
    if isinstance(value, dict):
        return {
            k: "[REDACTED]"
            if k.lower() in scrub_keys
            else scrub(v, scrub_keys, secret_values)
            for k, v in value.items()
        }
    if isinstance(value, list):
        return [scrub(v, scrub_keys, secret_values) for v in value]
    if isinstance(value, str):
        for secret in secret_values:
            if secret:
                value = value.replace(secret, "[REDACTED]")
        return value
    return value


class TranscriptStore:
    """Append-only, content-addressed directory: one JSON file per digest.

    Writes are atomic (tmp + rename) and write-once: replaying a stored
    digest always returns the originally recorded exchange.
    """

    def __init__(self, directory: str | Path):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()

    def _path(self, digest: str) -> Path:
        return self.directory / f"{digest}.json"

    def get(self, digest: str) -> ChatExchange | None:
        path = self._path(digest)
        if not path.exists():
            return None
        data = json.loads(path.read_text(encoding="utf-8"))
        return ChatExchange(
            request=data["request"],
            response_text=data["response_text"],
            usage=data["usage"],
            latency_ms=data["latency_ms"],
            cache_hit=False,
            truncated=data.get("truncated", False),
        )

    def put(self, digest: str, exchange: ChatExchange) -> None:
        path = self._path(digest)
        with self._lock:
            if path.exists():
                return
            record = {
                "request": exchange.request,
                "response_text": exchange.response_text,
                "usage": exchange.usage,
                "latency_ms": exchange.latency_ms,
                "truncated": exchange.truncated,
            }
            tmp = path.with_suffix(".tmp")
            tmp.write_text(
                json.dumps(record, sort_keys=True, ensure_ascii=False, indent=2) + "\n",
                encoding="utf-8",
            )
            os.replace(tmp, path)


class MockProvider:
    """Deterministic canned backend.

    Responses are a pure function of (rules, seed, request digest): the
    first rule whose pattern occurs as a substring of the joined prompt
    wins; unmatched requests fall through to a seeded word generator.
    """

    _FALLBACK_WORDS = (
        "okay", "sure", "well", "point", "taken", "maybe", "perhaps",
        "consider", "that", "view", "fair", "enough", "still", "disagree",
        "though", "understand", "your", "side", "here",
    )

    def __init__(self, rules: list[tuple[str, str]], seed: int):
        if not rules:
            raise ConfigurationError("mock provider needs at least one rule")
        seen: dict[str, str] = {}
        for pattern, response in rules:
            if pattern in seen and seen[pattern] != response:
                raise ConfigurationError(f"conflicting responses for pattern {pattern!r}")
            seen[pattern] = response
        self.rules = [(p, r) for p, r in rules]
        self.seed = seed

    def generate(self, spec: ModelSpec, messages: list[dict[str, str]]) -> str:
        prompt = "\n".join(m["content"] for m in messages)
        for pattern, response in self.rules:
            if pattern in prompt:
                return response
        rng = random.Random(f"{self.seed}:{request_digest(spec, messages)}")
        n = rng.randrange(4, 9)
        words = [rng.choice(self._FALLBACK_WORDS) for _ in range(n)]
        return " ".join(words) + "."


def mock_program(rules: list[tuple[str, str]], seed: int) -> MockProvider:
    """Build a deterministic mock provider from an ordered rule table."""
    return MockProvider(rules, seed)


class FlakyProvider:
    """Test helper: fail with a transient fault N times, then delegate."""

    def __init__(self, inner, failures: int):
        self.inner = inner
        self.remaining = failures

    def generate(self, spec: ModelSpec, messages: list[dict[str, str]]) -> str:
        if self.remaining > 0:
            self.remaining -= 1
            raise TransientProviderError("injected fault")
        return self.inner.generate(spec, messages)


class HttpChatProvider:
    """OpenAI-compatible chat-completions backend.

    The credential lives in the environment variable named by
    ``api_key_env``; only the variable name ever appears in config files.
    """

    def __init__(self, base_url: str, api_key_env: str, path: str = "/v1/chat/completions"):
        self.base_url = base_url.rstrip("/")
        self.api_key_env = api_key_env
        self.path = path

    def credential(self) -> str:
        key = os.environ.get(self.api_key_env, "")
        if not key:
            raise ConfigurationError(f"environment variable {self.api_key_env} is not set")
        return key

    def generate(self, spec: ModelSpec, messages: list[dict[str, str]]) -> str:
        body = {
            "model": spec.model_name,
            "messages": messages,
            "temperature": spec.temperature,
            "max_tokens": spec.max_output_tokens,
        }
        try:
            resp = httpx.post(
                self.base_url + self.path,
                json=body,
                headers={"Authorization": f"Bearer {self.credential()}"},
                timeout=spec.request_timeout,
            )
        except httpx.TimeoutException as exc:
            raise TransientProviderError(f"timeout: {exc}") from exc
        except httpx.TransportError as exc:
            raise TransientProviderError(f"transport: {exc}") from exc
        if resp.status_code == 429 or resp.status_code >= 500:
            raise TransientProviderError(f"status {resp.status_code}")
        if resp.status_code != 200:
            raise ContentError(f"provider returned status {resp.status_code}")
        data = resp.json()
        try:
            return data["choices"][0]["message"]["content"] or ""
        except (KeyError, IndexError, TypeError) as exc:
            raise ContentError(f"malformed provider response: {exc}") from exc


class _RateLimiter:
    """Serializes admission per provider with a minimum call interval."""

    def __init__(self, min_interval_s: float):
        self.min_interval_s = min_interval_s
        self._lock = threading.Lock()
        self._next_free = 0.0

    def acquire(self) -> None:
        if self.min_interval_s <= 0:
            return
        with self._lock:
            now = time.monotonic()
            wait = self._next_free - now
            self._next_free = max(now, self._next_free) + self.min_interval_s
        if wait > 0:
            time.sleep(wait)


def _count_tokens(text: str) -> int:
    return len(text.split())


class Gateway:
    """Front door for every chat-model call.

    Thread-safe: callers from many worker threads share one gateway; the
    per-provider rate limiter serializes admission and transcript writes
    are atomic per entry.
    """

    def __init__(
        self,
        providers: dict[str, object],
        transcripts: TranscriptStore | None = None,
        replay: bool = True,
        cache: bool = True,
        backoff_base_s: float = BACKOFF_BASE_S,
        backoff_factor: float = BACKOFF_FACTOR,
        max_attempts: int = MAX_ATTEMPTS,
        rate_limits: dict[str, float] | None = None,
        scrub_keys: tuple[str, ...] = DEFAULT_SCRUB_KEYS,
        secret_env_vars: tuple[str, ...] = (),
        jitter: random.Random | None = None,
    ):
        self.providers = providers
        self.transcripts = transcripts
        self.replay = replay
        self.cache_enabled = cache
        self.backoff_base_s = backoff_base_s
        self.backoff_factor = backoff_factor
        self.max_attempts = max_attempts
        self.scrub_keys = tuple(k.lower() for k in scrub_keys)
        self.secret_env_vars = secret_env_vars
        self._jitter = jitter or random.Random()
        self._cache: dict[str, ChatExchange] = {}
        self._cache_lock = threading.Lock()
        self._limiters = {
            pid: _RateLimiter((rate_limits or {}).get(pid, 0.0)) for pid in providers
        }

    def _secret_values(self) -> tuple[str, ...]:
        return tuple(os.environ.get(v, "") for v in self.secret_env_vars)

    def complete(self, spec: ModelSpec, messages: list[dict[str, str]]) -> ChatExchange:
        """Run one chat request through retry, cache, and recording layers."""
        validate_messages(messages)
        provider = self.providers.get(spec.provider_id)
        if provider is None:
            raise ConfigurationError(f"unknown provider_id '{spec.provider_id}'")

        digest = request_digest(spec, messages)
        if self.cache_enabled:
            with self._cache_lock:
                hit = self._cache.get(digest)
            if hit is not None:
                return ChatExchange(
                    request=hit.request,
                    response_text=hit.response_text,
                    usage=hit.usage,
                    latency_ms=0.0,
                    cache_hit=True,
                    truncated=hit.truncated,
                )
        if self.replay and self.transcripts is not None:
            stored = self.transcripts.get(digest)
            if stored is not None:
                stored.cache_hit = True
                stored.latency_ms = 0.0
                self._remember(digest, stored)
                return stored

        limiter = self._limiters.get(spec.provider_id)
        if limiter is not None:
            limiter.acquire()

        attempt = 0
        start = time.monotonic()
        while True:
            attempt += 1
            try:
                text = provider.generate(spec, messages)
                break
            except TransientProviderError as exc:
                if attempt >= self.max_attempts:
                    raise TransportError(
                        f"provider '{spec.provider_id}' failed after {attempt} attempts: {exc}"
                    ) from exc
                delay = self.backoff_base_s * (self.backoff_factor ** (attempt - 1))
                delay *= 0.5 + self._jitter.random()  # jittered, never zeroes out
                logger.warning(
                    "transient fault from %s (attempt %d/%d), backing off %.2fs",
                    spec.provider_id, attempt, self.max_attempts, delay,
                )
                if delay > 0:
                    time.sleep(delay)
        latency_ms = (time.monotonic() - start) * 1000.0

        if not text or not text.strip():
            raise ContentError(f"provider '{spec.provider_id}' returned an empty body")

        truncated = False
        words = text.split()
        if len(words) > spec.max_output_tokens:
            text = " ".join(words[: spec.max_output_tokens])
            truncated = True

        is_mock = isinstance(provider, (MockProvider, FlakyProvider)) or not hasattr(
            provider, "credential"
        )
        exchange = ChatExchange(
            request=messages,
            response_text=text,
            usage={
                "prompt_tokens": sum(_count_tokens(m["content"]) for m in messages),
                "completion_tokens": _count_tokens(text),
            },
            # Mock latency is pinned to keep recorded artifacts reproducible.
            latency_ms=0.0 if is_mock else latency_ms,
            truncated=truncated,
        )
        self._remember(digest, exchange)
        if self.transcripts is not None:
            secrets = self._secret_values()
            clean = ChatExchange(
                request=scrub(exchange.request, self.scrub_keys, secrets),
                response_text=scrub(exchange.response_text, self.scrub_keys, secrets),
                usage=exchange.usage,
                latency_ms=exchange.latency_ms,
                truncated=exchange.truncated,
            )
            self.transcripts.put(digest, clean)
        return exchange

    def _remember(self, digest: str, exchange: ChatExchange) -> None:
        if self.cache_enabled:
            with self._cache_lock:
                self._cache.setdefault(digest, exchange)


def build_gateway(config: dict, base_dir: str | Path = ".") -> tuple[Gateway, dict[str, ModelSpec]]:
    """Construct a gateway and named ModelSpec roster from a config mapping.

    Config shape::

        {
          "providers": {
            "mock-a": {"type": "mock", "seed": 7, "rules": [["pat", "resp"]]},
            "api-b": {"type": "http", "base_url": "...", "api_key_env": "B_KEY"}
          },
          "models": {
            "scorer": {"provider_id": "mock-a", "model_name": "scorer-1",
                        "temperature": 0.0, "max_output_tokens": 512}
          },
          "transcripts_dir": "transcripts",
          "rate_limits": {"api-b": 0.5},
          "scrub_keys": ["api_key"],
          "secret_env_vars": ["B_KEY"]
        }
    """
    providers: dict[str, object] = {}
    secret_env_vars = list(config.get("secret_env_vars", []))
    for pid, pconf in config.get("providers", {}).items():
        ptype = pconf.get("type")
        if ptype == "mock":
            rules = [(p, r) for p, r in pconf.get("rules", [])]
            providers[pid] = mock_program(rules, int(pconf.get("seed", 0)))
        elif ptype == "http":
            providers[pid] = HttpChatProvider(
                base_url=pconf["base_url"],
                api_key_env=pconf["api_key_env"],
                path=pconf.get("path", "/v1/chat/completions"),
            )
            if pconf["api_key_env"] not in secret_env_vars:
                secret_env_vars.append(pconf["api_key_env"])
        else:
            raise ConfigurationError(f"provider '{pid}': unknown type {ptype!r}")

    models: dict[str, ModelSpec] = {}
    for name, mconf in config.get("models", {}).items():
        models[name] = ModelSpec(
            provider_id=mconf["provider_id"],
            model_name=mconf["model_name"],
            temperature=float(mconf.get("temperature", 0.0)),
            max_output_tokens=int(mconf.get("max_output_tokens", 1024)),
            request_timeout=float(mconf.get("request_timeout", 60.0)),
        )
        if models[name].provider_id not in providers:
            raise ConfigurationError(
                f"model '{name}' references unknown provider '{models[name].provider_id}'"
            )

    transcripts = None
    if config.get("transcripts_dir"):
        transcripts = TranscriptStore(Path(base_dir) / config["transcripts_dir"])

    gateway = Gateway(
        providers=providers,
        transcripts=transcripts,
        backoff_base_s=float(config.get("backoff_base_s", BACKOFF_BASE_S)),
        max_attempts=int(config.get("max_attempts", MAX_ATTEMPTS)),
        rate_limits=config.get("rate_limits"),
        scrub_keys=tuple(config.get("scrub_keys", DEFAULT_SCRUB_KEYS)),
        secret_env_vars=tuple(secret_env_vars),
    )
    return gateway, models
