"""Extraction of structured payloads from free-form model completions.

Completions are treated as untrusted text: fenced code blocks are located
with a deterministic scanner, a block is chosen (consulting the extractor
model only when the choice is ambiguous), and the block body is validated
against the expected shape.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field

import yaml

from .gateway import Author, ChatMessage, GatewayError, Role

log = logging.getLogger(__name__)

BLOCK_PREVIEW_CHARS = 200
TRANSCRIPT_TAIL_CHARS = 500

_FENCE_RE = re.compile(r"^\s*(`{3,})\s*([^`\s]*)[^`]*$")
_CLOSING_RE = re.compile(r"^\s*(`{3,})\s*$")


class ExtractionError(Exception):
    pass


class NoBlocks(ExtractionError):
    """The completion contained no fenced code block."""


class ShapeViolation(ExtractionError):
    def __init__(self, fieldname: str, reason: str):
        super().__init__(f"field '{fieldname}': {reason}")
        self.field = fieldname
        self.reason = reason


@dataclass(frozen=True)
class FencedBlock:
    language_tag: str | None
    content: str
    ordinal: int
    terminated: bool = True


@dataclass(frozen=True)
class FieldSpec:
    kind: str  # 'text' | 'enum' | 'list'
    choices: tuple[str, ...] = ()
    required: bool = True

    def __post_init__(self):
        if self.kind not in ("text", "enum", "list"):
            raise ValueError(f"unknown field kind '{self.kind}'")
        if self.kind == "enum" and not self.choices:
            raise ValueError("enum fields need choices")


@dataclass(frozen=True)
class ExtractionTarget:
    """What to pull out of a completion. ``shape`` of None means the raw
    block body is the payload."""

    name: str
    expected_tag: str | None = None
    shape: dict[str, FieldSpec] | None = None


def parse_fences(document: str) -> list[FencedBlock]:
    """Scans for fenced code blocks in order of appearance.

    A fence opens with three or more backticks (optionally tagged) and
    closes with a backtick-only line at least as long. A fence still open
    at end of input yields a block running to the end, flagged
    ``terminated=False``.
    """
    blocks: list[FencedBlock] = []
    open_len = 0
    open_tag: str | None = None
    body: list[str] = []
    in_block = False
    for line in document.split("\n"):
        if not in_block:
            match = _FENCE_RE.match(line)
            if match:
                in_block = True
                open_len = len(match.group(1))
                open_tag = match.group(2).lower() or None
                body = []
            continue
        closing = _CLOSING_RE.match(line)
        if closing and len(closing.group(1)) >= open_len:
            blocks.append(FencedBlock(open_tag, "\n".join(body), len(blocks)))
            in_block = False
        else:
            body.append(line)
    if in_block:
        blocks.append(FencedBlock(open_tag, "\n".join(body), len(blocks), terminated=False))
    return blocks


def serialize_block(block: FencedBlock) -> str:
    tag = block.language_tag or ""
    body = block.content + "\n" if block.content else ""
    return f"```{tag}\n{body}```"


def _preview(text: str, limit: int) -> str:
    flat = " ".join(text.split())
    return flat if len(flat) <= limit else flat[: limit - 3] + "..."


def select_block(
    blocks: list[FencedBlock],
    target: ExtractionTarget,
    transcript_tail: str = "",
    gateway=None,
    template: str | None = None,
) -> FencedBlock:
    """Chooses the block holding the target payload.

    Deterministic whenever possible: a single tag match wins outright, no
    match falls back to the last block, and only two or more matches
    consult the extractor model. Any extractor failure or out-of-range
    answer falls back to the last matching block.
    """
    if not blocks:
        raise NoBlocks(f"no fenced block found for target '{target.name}'")
    if target.expected_tag:
        candidates = [b for b in blocks if b.language_tag == target.expected_tag]
    else:
        candidates = list(blocks)
    if not candidates:
        return blocks[-1]
    if len(candidates) == 1:
        return candidates[0]
    if gateway is None or template is None:
        return candidates[-1]

    listing = "\n".join(
        f"[{b.ordinal}] tag={b.language_tag or '(none)'}: {_preview(b.content, BLOCK_PREVIEW_CHARS)}"
        for b in candidates
    )
    prompt = (
        template.replace("{target_name}", target.name)
        .replace("{blocks}", listing)
        .replace("{transcript_tail}", transcript_tail[-TRANSCRIPT_TAIL_CHARS:])
    )
    try:
        result = gateway.complete(Role.EXTRACTOR, [ChatMessage(Author.USER, prompt)])
        match = re.search(r"-?\d+", result.text)
        if match:
            choice = int(match.group())
            for block in candidates:
                if block.ordinal == choice:
                    return block
        log.warning("extractor gave no usable ordinal for '%s'; using fallback", target.name)
    except GatewayError as exc:
        log.warning("extractor call failed for '%s' (%s); using fallback", target.name, exc)
    return candidates[-1]


def parse_into(target: ExtractionTarget, block: FencedBlock):
    """Validates the block body against the target shape.

    Raw targets return the trimmed body verbatim. Shaped targets parse the
    body as key/value lines and check field presence and kinds.
    """
    if target.shape is None:
        return block.content.strip()
    try:
        data = yaml.safe_load(block.content)
    except yaml.YAMLError as exc:
        raise ShapeViolation("(document)", f"not parseable key/value text: {exc}") from exc
    if not isinstance(data, dict):
        raise ShapeViolation("(document)", f"expected a mapping, got {type(data).__name__}")

    out: dict[str, object] = {}
    for name, spec in target.shape.items():
        if name not in data or data[name] is None:
            if spec.required:
                raise ShapeViolation(name, "missing required field")
            continue
        value = data[name]
        if spec.kind == "list":
            if not isinstance(value, list):
                raise ShapeViolation(name, f"expected a list, got {type(value).__name__}")
            out[name] = value
        elif spec.kind == "enum":
            text = str(value).strip().lower()
            if text not in spec.choices:
                raise ShapeViolation(
                    name, f"'{text}' is not one of {', '.join(spec.choices)}"
                )
            out[name] = text
        else:
            if isinstance(value, (list, dict)):
                raise ShapeViolation(name, f"expected text, got {type(value).__name__}")
            out[name] = str(value)
    return out
