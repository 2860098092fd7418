"""Uniform sampling interface over chat-completions backends.

Two backends share one contract: a remote chat-completions HTTP server
(POST {base_url}/v1/chat/completions with the request subset
{model, messages, n, temperature, max_tokens, seed} and the response subset
{choices[].message.content}) and a deterministic scripted mock. Responses are
cached content-addressed on disk so interrupted pipelines resume for free.

Mock script file: a JSON document {"default": [...] | null, "rules": [...]}.
Each rule holds "texts" plus one or more match fields, tried in this order of
precedence: "digest" (exact request digest); "tag" + "id" (pipeline stage and
problem id); "tag" alone matching the full request tag; "tag" alone matching
the stage portion of the tag (the part before the first "/"). A request with
no matching rule falls back to the script default; with no default it raises
ScriptMiss. Rules shorter than n_samples cycle their texts deterministically.
"""

from __future__ import annotations

import hashlib
import json
import os
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import requests

from .errors import BackendUnavailable, MalformedBackendReply, ScriptMiss
from .prompting import Message

# Stage defaults; the judge needs determinism, generation needs diversity.
GENERATION_TEMPERATURE = 0.7
JUDGE_TEMPERATURE = 0.0


@dataclass(frozen=True)
class GenRequest:
    messages: tuple[Message, ...]
    n_samples: int = 1
    temperature: float = GENERATION_TEMPERATURE
    max_tokens: int = 1024
    seed: int = 0
    tag: str = ""

    def __post_init__(self):
        object.__setattr__(self, "messages", tuple(self.messages))
        if not self.messages:
            raise ValueError("request needs at least one message")
        if self.n_samples < 1:
            raise ValueError(f"n_samples must be >= 1, got {self.n_samples}")
        if self.temperature < 0:
            raise ValueError(f"temperature must be >= 0, got {self.temperature}")
        if self.max_tokens < 16:
            raise ValueError(f"max_tokens must be >= 16, got {self.max_tokens}")


@dataclass(frozen=True)
class GenResponse:
    texts: tuple[str, ...]
    backend_id: str
    cached: bool = False


@dataclass(frozen=True)
class BackendConfig:
    kind: str
    model_name: str
    base_url: str = ""
    max_in_flight: int = 4
    retry_limit: int = 3
    cache_dir: str | None = None
    api_key_env: str = ""
    script_path: str | None = None
    timeout: float = 120.0
    retry_base_delay: float = 0.5

    def __post_init__(self):
        if self.kind not in ("http", "mock"):
            raise ValueError(f"backend kind must be http or mock, got {self.kind!r}")
        if self.max_in_flight < 1:
            raise ValueError(f"max_in_flight must be >= 1, got {self.max_in_flight}")
        if self.kind == "http" and not self.base_url:
            raise ValueError("http backend requires base_url")
        if self.kind == "mock" and not self.script_path:
            raise ValueError("mock backend requires script_path")


def _canonical_request(backend_id: str, model_name: str, request: GenRequest) -> dict:
    # The tag is a pipeline-stage label, deliberately excluded from the digest.
    return {
        "backend_id": backend_id,
        "model": model_name,
        "messages": [{"role": m.role, "content": m.content} for m in request.messages],
        "n": request.n_samples,
        "temperature": request.temperature,
        "max_tokens": request.max_tokens,
        "seed": request.seed,
    }


def request_digest(backend_id: str, model_name: str, request: GenRequest) -> str:
    payload = json.dumps(
        _canonical_request(backend_id, model_name, request),
        sort_keys=True,
        ensure_ascii=False,
    )
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


class BackendStats:
    """Thread-safe counters; pipeline stages run generate() from worker threads."""

    def __init__(self):
        self.requests = 0
        self.retries = 0
        self.cache_hits = 0
        self._lock = threading.Lock()

    def bump(self, name: str, by: int = 1) -> None:
        with self._lock:
            setattr(self, name, getattr(self, name) + by)


# ---------------------------------------------------------------------------
# Mock backend


@dataclass(frozen=True)
class MockRule:
    texts: tuple[str, ...]
    digest: str | None = None
    tag: str | None = None
    id: str | None = None


class MockScript:
    def __init__(self, rules: Sequence[MockRule], default: Sequence[str] | None, digest: str):
        self.rules = list(rules)
        self.default = list(default) if default is not None else None
        self.digest = digest

    @classmethod
    def from_dict(cls, doc: dict) -> "MockScript":
        rules = []
        for raw in doc.get("rules", []):
            texts = raw.get("texts")
            if not isinstance(texts, list) or not texts:
                raise ValueError(f"mock rule needs a non-empty texts list: {raw!r}")
            rules.append(
                MockRule(
                    texts=tuple(str(t) for t in texts),
                    digest=raw.get("digest"),
                    tag=raw.get("tag"),
                    id=raw.get("id"),
                )
            )
        default = doc.get("default")
        canonical = json.dumps(doc, sort_keys=True, ensure_ascii=False)
        digest = hashlib.sha256(canonical.encode("utf-8")).hexdigest()
        return cls(rules, default, digest)

    @classmethod
    def load(cls, path: str | Path) -> "MockScript":
        with Path(path).open(encoding="utf-8") as handle:
            return cls.from_dict(json.load(handle))

    def lookup(self, digest: str, tag: str) -> list[str]:
        stage, _, rest = tag.partition("/")
        problem_id = rest.split("/", 1)[0] if rest else ""
        passes: tuple[Callable[[MockRule], bool], ...] = (
            lambda r: r.digest is not None and r.digest == digest,
            lambda r: r.digest is None and r.id is not None and r.tag == stage and r.id == problem_id,
            lambda r: r.digest is None and r.id is None and r.tag == tag,
            lambda r: r.digest is None and r.id is None and r.tag == stage,
        )
        for accepts in passes:
            for rule in self.rules:
                if accepts(rule):
                    return list(rule.texts)
        if self.default is not None:
            return list(self.default)
        raise ScriptMiss(tag, digest)


class MockBackend:
    """Replays scripted texts; fully deterministic for a fixed script."""

    def __init__(self, config: BackendConfig, script: MockScript | None = None):
        self.config = config
        self.script = script or MockScript.load(config.script_path)
        self.backend_id = f"mock:{config.model_name}:{self.script.digest[:12]}"
        self.stats = BackendStats()

    def complete(self, request: GenRequest) -> list[str]:
        self.stats.bump("requests")
        digest = request_digest(self.backend_id, self.config.model_name, request)
        texts = self.script.lookup(digest, request.tag)
        return [texts[i % len(texts)] for i in range(request.n_samples)]


def load_mock_script(path: str | Path, model_name: str = "mock-model") -> MockBackend:
    """Build a mock backend straight from a script file."""
    config = BackendConfig(kind="mock", model_name=model_name, script_path=str(path))
    return MockBackend(config)


def write_mock_script(doc: dict, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(doc, sort_keys=True, ensure_ascii=False, indent=1), encoding="utf-8")
    return path


# ---------------------------------------------------------------------------
# HTTP backend

_RETRYABLE_STATUS = {408, 409, 429, 500, 502, 503, 504}

Transport = Callable[[str, dict, dict, float], tuple[int, dict]]


def _requests_transport(url: str, payload: dict, headers: dict, timeout: float) -> tuple[int, dict]:
    response = requests.post(url, json=payload, headers=headers, timeout=timeout)
    try:
        body = response.json()
    except ValueError:
        body = {"raw": response.text}
    return response.status_code, body


class HttpBackend:
    """Chat-completions client with bounded concurrency and exponential-backoff retry."""

    def __init__(
        self,
        config: BackendConfig,
        transport: Transport | None = None,
        sleep: Callable[[float], None] = time.sleep,
    ):
        self.config = config
        self.backend_id = f"http:{config.model_name}@{config.base_url}"
        self.stats = BackendStats()
        self._transport = transport or _requests_transport
        self._sleep = sleep
        self._slots = threading.BoundedSemaphore(config.max_in_flight)

    def _headers(self) -> dict:
        headers = {"Content-Type": "application/json"}
        key = os.environ.get(self.config.api_key_env, "") if self.config.api_key_env else ""
        if key:
            headers["Authorization"] = f"Bearer {key}"
        return headers

    def complete(self, request: GenRequest) -> list[str]:
        url = self.config.base_url.rstrip("/") + "/v1/chat/completions"
        payload = {
            "model": self.config.model_name,
            "messages": [{"role": m.role, "content": m.content} for m in request.messages],
            "n": request.n_samples,
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
            "seed": request.seed,
        }
        self.stats.bump("requests")
        last_error = "exhausted retries"
        for attempt in range(self.config.retry_limit + 1):
            if attempt:
                self.stats.bump("retries")
                self._sleep(self.config.retry_base_delay * (2 ** (attempt - 1)))
            with self._slots:
                try:
                    status, body = self._transport(url, payload, self._headers(), self.config.timeout)
                except (requests.ConnectionError, requests.Timeout, ConnectionError, TimeoutError, OSError) as exc:
                    last_error = f"transport failure: {exc}"
                    continue
            if status in _RETRYABLE_STATUS:
                last_error = f"status {status}"
                continue
            if status != 200:
                raise BackendUnavailable(f"{self.backend_id}: unretryable status {status}: {body}")
            return self._parse_reply(body, request.n_samples)
        raise BackendUnavailable(f"{self.backend_id}: {last_error} after {self.config.retry_limit} retries")

    def _parse_reply(self, body: dict, n_samples: int) -> list[str]:
        choices = body.get("choices")
        if not isinstance(choices, list):
            raise MalformedBackendReply(f"{self.backend_id}: reply has no choices list")
        if len(choices) != n_samples:
            raise MalformedBackendReply(
                f"{self.backend_id}: expected {n_samples} choices, got {len(choices)}"
            )
        texts = []
        for choice in choices:
            message = choice.get("message") if isinstance(choice, dict) else None
            content = message.get("content") if isinstance(message, dict) else None
            if not isinstance(content, str):
                raise MalformedBackendReply(f"{self.backend_id}: choice without message content")
            texts.append(content)
        return texts


# ---------------------------------------------------------------------------
# Gateway: backend + cache


def make_backend(config: BackendConfig, transport: Transport | None = None, sleep=time.sleep):
    if config.kind == "mock":
        return MockBackend(config)
    return HttpBackend(config, transport=transport, sleep=sleep)


class Gateway:
    """Caching front door; safe for concurrent callers."""

    def __init__(self, config: BackendConfig, transport: Transport | None = None, sleep=time.sleep):
        self.config = config
        self.backend = make_backend(config, transport=transport, sleep=sleep)
        self.cache_dir = Path(config.cache_dir) if config.cache_dir else None

    @property
    def backend_id(self) -> str:
        return self.backend.backend_id

    @property
    def stats(self) -> BackendStats:
        return self.backend.stats

    def _cache_path(self, digest: str) -> Path:
        return self.cache_dir / f"{digest}.json"

    def generate(self, request: GenRequest) -> GenResponse:
        digest = request_digest(self.backend_id, self.config.model_name, request)
        if self.cache_dir is not None:
            hit = self._cache_path(digest)
            if hit.exists():
                entry = json.loads(hit.read_text(encoding="utf-8"))
                self.backend.stats.bump("cache_hits")
                return GenResponse(tuple(entry["texts"]), entry["backend_id"], cached=True)
        texts = self.backend.complete(request)
        if len(texts) != request.n_samples:
            raise MalformedBackendReply(
                f"{self.backend_id}: backend produced {len(texts)} texts for n={request.n_samples}"
            )
        if self.cache_dir is not None:
            self._cache_write(digest, texts)
        return GenResponse(tuple(texts), self.backend_id, cached=False)

    def _cache_write(self, digest: str, texts: list[str]) -> None:
        self.cache_dir.mkdir(parents=True, exist_ok=True)
        entry = json.dumps(
            {"backend_id": self.backend_id, "texts": texts},
            sort_keys=True,
            ensure_ascii=False,
        )
        # Atomic replace keeps concurrent readers consistent (last writer wins
        # on identical content, which is the only legal collision).
        tmp = self._cache_path(digest).with_suffix(f".tmp.{os.getpid()}.{threading.get_ident()}")
        tmp.write_text(entry, encoding="utf-8")
        os.replace(tmp, self._cache_path(digest))


def generate(config: BackendConfig, request: GenRequest) -> GenResponse:
    """One-shot convenience wrapper around a throwaway Gateway."""
    return Gateway(config).generate(request)
