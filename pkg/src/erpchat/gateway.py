"""Role-routed access to chat-completion models, with hard limits and a
deterministic scripted backend for tests."""

from __future__ import annotations

import math
import threading
import time
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import httpx

DEFAULT_CONTEXT_WINDOW = 65_536
DEFAULT_TIMEOUT_S = 180.0
DEFAULT_MAX_OUTPUT_TOKENS = 2048

# Deterministic upper-bound token estimate: ceil(len/4) per message content.
CHARS_PER_TOKEN = 4


class Role(str, Enum):
    DIALOGUE = "dialogue"
    REASONER = "reasoner"
    CRITIC = "critic"
    EXTRACTOR = "extractor"


# SQL generation and critique want reproducibility; dialogue stays loose.
DEFAULT_TEMPERATURES = {
    Role.DIALOGUE: 0.7,
    Role.REASONER: 0.2,
    Role.CRITIC: 0.2,
    Role.EXTRACTOR: 0.0,
}


class Author(str, Enum):
    SYSTEM = "system"
    USER = "user"
    ASSISTANT = "assistant"


class GatewayError(Exception):
    pass


class TimeoutExceeded(GatewayError):
    """The backend did not answer within the role's request timeout."""


class ContextOverflow(GatewayError):
    """Estimated prompt size exceeds the role's context window."""


class BackendUnavailable(GatewayError):
    """Transport-level failure talking to the completion backend."""


@dataclass(frozen=True)
class RoleConfig:
    role: Role
    model_id: str
    context_window_tokens: int = DEFAULT_CONTEXT_WINDOW
    request_timeout_s: float = DEFAULT_TIMEOUT_S
    temperature: float | None = None
    max_output_tokens: int = DEFAULT_MAX_OUTPUT_TOKENS

    def __post_init__(self):
        if self.context_window_tokens < 1:
            raise ValueError("context_window_tokens must be >= 1")
        if self.request_timeout_s <= 0:
            raise ValueError("request_timeout_s must be > 0")
        if self.max_output_tokens < 1:
            raise ValueError("max_output_tokens must be >= 1")
        if self.temperature is None:
            object.__setattr__(self, "temperature", DEFAULT_TEMPERATURES[self.role])
        elif self.temperature < 0:
            raise ValueError("temperature must be >= 0")


@dataclass(frozen=True)
class ChatMessage:
    author: Author
    content: str

    def __post_init__(self):
        if self.author in (Author.USER, Author.ASSISTANT) and not self.content:
            raise ValueError(f"{self.author.value} message content must be non-empty")


@dataclass(frozen=True)
class CompletionResult:
    text: str
    model_id: str
    latency_s: float
    prompt_tokens: int | None = None
    output_tokens: int | None = None


def estimate_tokens(messages: list[ChatMessage]) -> int:
    """Upper-bound prompt size estimate; monotone in the message list."""
    return sum(math.ceil(len(m.content) / CHARS_PER_TOKEN) for m in messages)


class HttpChatBackend:
    """Client for an HTTP chat-completions endpoint.

    ``endpoint`` is the full URL of the completions route; ``role_endpoints``
    may point individual roles at different servers.
    """

    def __init__(self, endpoint: str, role_endpoints: dict[Role, str] | None = None):
        self.endpoint = endpoint
        self.role_endpoints = dict(role_endpoints or {})

    def complete(self, config: RoleConfig, messages: list[ChatMessage]) -> CompletionResult:
        url = self.role_endpoints.get(config.role, self.endpoint)
        body = {
            "model": config.model_id,
            "messages": [{"role": m.author.value, "content": m.content} for m in messages],
            "temperature": config.temperature,
            "max_tokens": config.max_output_tokens,
            "stream": False,
        }
        started = time.monotonic()
        try:
            response = httpx.post(url, json=body, timeout=config.request_timeout_s)
        except httpx.TimeoutException as exc:
            raise TimeoutExceeded(
                f"{config.role.value} request exceeded {config.request_timeout_s:g}s"
            ) from exc
        except httpx.HTTPError as exc:
            raise BackendUnavailable(f"cannot reach {url}: {exc}") from exc
        latency = time.monotonic() - started
        if response.status_code != 200:
            raise BackendUnavailable(f"{url} returned HTTP {response.status_code}")
        try:
            payload = response.json()
            text = payload["choices"][0]["message"]["content"]
        except (ValueError, LookupError, TypeError) as exc:
            raise BackendUnavailable(f"malformed completion payload from {url}") from exc
        usage = payload.get("usage") or {}
        return CompletionResult(
            text=text,
            model_id=config.model_id,
            latency_s=latency,
            prompt_tokens=usage.get("prompt_tokens"),
            output_tokens=usage.get("completion_tokens"),
        )


class ScriptedBackend:
    """Replays canned completions keyed by (role, call index).

    Queue items are completion strings, or exception instances to raise in
    place of a response. An exhausted queue raises BackendUnavailable so
    call-count overruns fail loudly in tests.
    """

    def __init__(self, scripts: dict[Role | str, list] | None = None):
        self._queues: dict[Role, list] = {role: [] for role in Role}
        self._cursor: dict[Role, int] = {role: 0 for role in Role}
        self._lock = threading.Lock()
        for key, items in (scripts or {}).items():
            self.extend(Role(key), items)

    @classmethod
    def from_dir(cls, path: str | Path) -> "ScriptedBackend":
        """Loads one subdirectory per role; response files replay in sorted order."""
        root = Path(path)
        backend = cls()
        for role in Role:
            role_dir = root / role.value
            if role_dir.is_dir():
                for file in sorted(role_dir.iterdir()):
                    if file.is_file():
                        backend.push(role, file.read_text(encoding="utf-8"))
        return backend

    def push(self, role: Role | str, item) -> None:
        self._queues[Role(role)].append(item)

    def extend(self, role: Role | str, items) -> None:
        self._queues[Role(role)].extend(items)

    def calls(self, role: Role | str) -> int:
        return self._cursor[Role(role)]

    @property
    def total_calls(self) -> int:
        return sum(self._cursor.values())

    def complete(self, config: RoleConfig, messages: list[ChatMessage]) -> CompletionResult:
        with self._lock:
            queue = self._queues[config.role]
            index = self._cursor[config.role]
            if index >= len(queue):
                raise BackendUnavailable(
                    f"scripted backend exhausted for role '{config.role.value}' "
                    f"(call index {index})"
                )
            self._cursor[config.role] = index + 1
            item = queue[index]
        if isinstance(item, BaseException):
            raise item
        return CompletionResult(text=str(item), model_id=config.model_id, latency_s=0.0)


def default_role_configs(model_id: str = "default", **overrides) -> dict[Role, RoleConfig]:
    return {role: RoleConfig(role=role, model_id=model_id, **overrides) for role in Role}


class Gateway:
    """Routes completion requests to per-role model configurations.

    Role resolution is total: roles missing from ``role_configs`` fall back
    to a default configuration built around ``default_model``.
    """

    def __init__(self, backend, role_configs: dict[Role, RoleConfig] | None = None,
                 default_model: str = "default"):
        self.backend = backend
        self._configs = default_role_configs(default_model)
        self._configs.update(role_configs or {})

    def config_for(self, role: Role | str) -> RoleConfig:
        return self._configs[Role(role)]

    def complete(self, role: Role | str, messages: list[ChatMessage]) -> CompletionResult:
        """Single chat completion for ``role``; enforces the context budget
        before any backend contact."""
        if not messages:
            raise ValueError("messages must be non-empty")
        config = self.config_for(role)
        estimated = estimate_tokens(messages)
        if estimated > config.context_window_tokens:
            raise ContextOverflow(
                f"estimated {estimated} prompt tokens exceed the "
                f"{config.context_window_tokens}-token window of role '{config.role.value}'"
            )
        started = time.monotonic()
        result = self.backend.complete(config, messages)
        if result.latency_s == 0.0:
            result = CompletionResult(
                text=result.text,
                model_id=result.model_id,
                latency_s=time.monotonic() - started,
                prompt_tokens=result.prompt_tokens,
                output_tokens=result.output_tokens,
            )
        return result
