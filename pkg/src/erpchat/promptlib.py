"""Versioned prompt templates with named slots.

Templates are plain markdown files; ``{slot}`` placeholders are replaced
literally, so braces in filled-in values never re-expand.
"""

from __future__ import annotations

from importlib import resources
from pathlib import Path


class PromptNotFound(Exception):
    pass


class PromptLibrary:
    def __init__(self, directory: str | Path | None = None):
        self._directory = Path(directory) if directory else None
        self._cache: dict[str, str] = {}

    def load(self, name: str) -> str:
        if name not in self._cache:
            if self._directory is not None:
                path = self._directory / f"{name}.md"
                if not path.is_file():
                    raise PromptNotFound(f"no prompt template at {path}")
                text = path.read_text(encoding="utf-8")
            else:
                ref = resources.files("erpchat") / "prompts" / f"{name}.md"
                if not ref.is_file():
                    raise PromptNotFound(f"no packaged prompt template '{name}'")
                text = ref.read_text(encoding="utf-8")
            self._cache[name] = text
        return self._cache[name]

    def render(self, name: str, **slots: str) -> str:
        text = self.load(name)
        for key, value in slots.items():
            text = text.replace("{" + key + "}", value)
        return text
