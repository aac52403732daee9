"""Text normalization and tokenization.

Normalization mirrors the corpus preparation rules: stylistic emphasis
markers are stripped, whitespace runs collapse to single spaces, and user /
URL references map to the fixed tokens ``[USER]`` / ``[URL]``. The result is
a fixpoint of the rewrite passes, so normalize_text is idempotent.
"""

from __future__ import annotations

import re

USER_TOKEN = "[USER]"
URL_TOKEN = "[URL]"

_URL_RE = re.compile(r"(?:https?://|www\.)\S+", re.IGNORECASE)
_MENTION_RE = re.compile(r"@\w+")
# Paired emphasis markers only; lone asterisks/underscores are content.
_STAR_EMPHASIS_RE = re.compile(r"\*+([^*]+)\*+")
_UNDERSCORE_EMPHASIS_RE = re.compile(r"(?<!\w)_+([^_]+?)_+(?!\w)")
_STRIKE_RE = re.compile(r"~~([^~]+)~~")
_WHITESPACE_RE = re.compile(r"\s+")

# Placeholder tokens pass through tokenization as single units.
_TOKEN_RE = re.compile(r"\[(?:USER|URL|NAME|RELIGION)\]|\w+")

_MAX_PASSES = 8


def _normalize_once(text: str) -> str:
    text = _URL_RE.sub(URL_TOKEN, text)
    text = _MENTION_RE.sub(USER_TOKEN, text)
    text = _STAR_EMPHASIS_RE.sub(r"\1", text)
    text = _UNDERSCORE_EMPHASIS_RE.sub(r"\1", text)
    text = _STRIKE_RE.sub(r"\1", text)
    return _WHITESPACE_RE.sub(" ", text).strip()


def normalize_text(raw: str) -> str:
    """Normalize a raw snippet; idempotent, empty input allowed."""
    current = raw
    for _ in range(_MAX_PASSES):
        rewritten = _normalize_once(current)
        if rewritten == current:
            break
        current = rewritten
    return current


def tokenize(text: str) -> list[str]:
    """Split on whitespace/punctuation boundaries, keeping placeholder tokens.

    Case is preserved here; lowercasing belongs to the feature layer.
    """
    return _TOKEN_RE.findall(text)
