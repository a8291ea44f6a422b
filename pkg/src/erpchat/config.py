"""Application configuration: packaged defaults, optional YAML file, and
``ERPCHAT_``-prefixed environment overrides (``__`` nests keys)."""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .gateway import (
    DEFAULT_CONTEXT_WINDOW,
    DEFAULT_MAX_OUTPUT_TOKENS,
    DEFAULT_TIMEOUT_S,
    Role,
    RoleConfig,
)
from .sqlagent import AgentLimits

ENV_PREFIX = "ERPCHAT_"


class ConfigError(Exception):
    pass


@dataclass(frozen=True)
class BackendSettings:
    kind: str = "http"  # 'http' | 'scripted'
    endpoint: str = "http://localhost:11434/v1/chat/completions"
    role_endpoints: dict = field(default_factory=dict)
    script_dir: str | None = None

    def __post_init__(self):
        if self.kind not in ("http", "scripted"):
            raise ConfigError(f"backend.kind must be http or scripted, got {self.kind!r}")
        if self.kind == "scripted" and not self.script_dir:
            raise ConfigError("backend.kind=scripted requires backend.script_dir")


@dataclass(frozen=True)
class AppConfig:
    database_path: str = "var/erp.db"
    semantic_path: str | None = None  # None: bundled description
    prompt_dir: str | None = None  # None: packaged templates
    storage_dir: str = "var/sessions"
    sample_limit: int = 3
    preview_limit: int = 10
    statement_timeout_s: float = 30.0
    sensitive_patterns: tuple[str, ...] = ()
    limits: AgentLimits = field(default_factory=AgentLimits)
    backend: BackendSettings = field(default_factory=BackendSettings)
    roles: dict = field(default_factory=dict)  # Role -> RoleConfig
    ui_dir: str | None = None

    def role_configs(self) -> dict[Role, RoleConfig]:
        return dict(self.roles)


def _deep_merge(base: dict, overlay: dict) -> dict:
    merged = dict(base)
    for key, value in overlay.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _deep_merge(merged[key], value)
        else:
            merged[key] = value
    return merged


def _coerce(text: str):
    lowered = text.lower()
    if lowered in ("true", "false"):
        return lowered == "true"
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            continue
    return text


def _env_overrides(environ) -> dict:
    """ERPCHAT_BACKEND__ENDPOINT=... becomes {'backend': {'endpoint': ...}}."""
    out: dict = {}
    for key, value in environ.items():
        if not key.startswith(ENV_PREFIX):
            continue
        path = key[len(ENV_PREFIX):].lower().split("__")
        node = out
        for part in path[:-1]:
            node = node.setdefault(part, {})
        node[path[-1]] = _coerce(value)
    return out


def _build_roles(raw: dict) -> dict[Role, RoleConfig]:
    roles: dict[Role, RoleConfig] = {}
    for name, settings in (raw or {}).items():
        try:
            role = Role(name)
        except ValueError as exc:
            raise ConfigError(f"unknown role {name!r}") from exc
        settings = settings or {}
        if isinstance(settings, str):
            settings = {"model_id": settings}
        try:
            roles[role] = RoleConfig(
                role=role,
                model_id=str(settings.get("model_id", "default")),
                context_window_tokens=int(
                    settings.get("context_window_tokens", DEFAULT_CONTEXT_WINDOW)
                ),
                request_timeout_s=float(
                    settings.get("request_timeout_s", DEFAULT_TIMEOUT_S)
                ),
                temperature=settings.get("temperature"),
                max_output_tokens=int(
                    settings.get("max_output_tokens", DEFAULT_MAX_OUTPUT_TOKENS)
                ),
            )
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"invalid settings for role {name!r}: {exc}") from exc
    return roles


def config_from_mapping(data: dict) -> AppConfig:
    data = dict(data or {})
    limits_raw = data.get("limits") or {}
    backend_raw = data.get("backend") or {}
    try:
        limits = AgentLimits(
            reasoner_attempts=int(limits_raw.get("reasoner_attempts", 5)),
            critic_rounds=int(limits_raw.get("critic_rounds", 3)),
        )
        backend = BackendSettings(
            kind=str(backend_raw.get("kind", "http")),
            endpoint=str(
                backend_raw.get("endpoint", "http://localhost:11434/v1/chat/completions")
            ),
            role_endpoints=dict(backend_raw.get("role_endpoints") or {}),
            script_dir=backend_raw.get("script_dir"),
        )
        return AppConfig(
            database_path=str(data.get("database_path", "var/erp.db")),
            semantic_path=data.get("semantic_path"),
            prompt_dir=data.get("prompt_dir"),
            storage_dir=str(data.get("storage_dir", "var/sessions")),
            sample_limit=int(data.get("sample_limit", 3)),
            preview_limit=int(data.get("preview_limit", 10)),
            statement_timeout_s=float(data.get("statement_timeout_s", 30.0)),
            sensitive_patterns=tuple(data.get("sensitive_patterns") or ()),
            limits=limits,
            backend=backend,
            roles=_build_roles(data.get("roles") or {}),
            ui_dir=data.get("ui_dir"),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid configuration value: {exc}") from exc


def load_config(path: str | Path | None = None, environ=None) -> AppConfig:
    """Layered load: YAML file (when given) under environment overrides."""
    data: dict = {}
    if path is not None:
        try:
            text = Path(path).read_text("utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config file {path}: {exc}") from exc
        try:
            loaded = yaml.safe_load(text) or {}
        except yaml.YAMLError as exc:
            raise ConfigError(f"config file {path} is not valid YAML: {exc}") from exc
        if not isinstance(loaded, dict):
            raise ConfigError(f"config file {path} must hold a mapping")
        data = loaded
    overrides = _env_overrides(os.environ if environ is None else environ)
    data = _deep_merge(data, overrides)
    return config_from_mapping(data)
