"""Tokenization, normalization, and span bookkeeping shared by every stage.

The tokenizer is deliberately rule-based so that token counts (which feed
the compression-ratio filter) are reproducible: split on whitespace, then
peel leading/trailing punctuation off each chunk, keeping currency amounts,
percentages, decimals, and words with internal hyphens or apostrophes
intact. All offsets are Unicode scalar-value indices.
"""

from __future__ import annotations

import re
import unicodedata
from dataclasses import dataclass

from .errors import InvalidArgument

NORM_MODES = ("none", "casefold", "casefold+strip-punct")
MATCH_SCOPES = ("source-text", "source-entity-surfaces")

# Currency amount anchored at the current position, e.g. "$37.60" or "£1,200".
_CURRENCY_RE = re.compile(r"[$£€¥₹]\d[\d,]*(?:\.\d+)?")
# Decimal written with a leading point, e.g. ".75".
_LEADING_DECIMAL_RE = re.compile(r"\.\d")
# Number immediately followed by a percent sign; protects chunk tails like "3%".
_PERCENT_TAIL_RE = re.compile(r"\d%\Z")

_CHUNK_RE = re.compile(r"\S+")
_SENT_BOUNDARY_RE = re.compile(r"[.!?]+(?=\s)")


def _is_puncty(ch: str) -> bool:
    # Punctuation and symbols (currency signs are category Sc, "%" is Po).
    return unicodedata.category(ch)[0] in ("P", "S")


@dataclass(frozen=True)
class TokenSpan:
    surface: str
    char_start: int
    char_end: int


@dataclass(frozen=True)
class TokenizedText:
    text: str
    tokens: tuple[TokenSpan, ...]

    def surfaces(self) -> list[str]:
        return [t.surface for t in self.tokens]

    def __len__(self) -> int:
        return len(self.tokens)


@dataclass(frozen=True)
class MatcherConfig:
    """How surfaces are matched against a source: normalization plus scope."""

    mode: str = "none"
    scope: str = "source-text"

    def __post_init__(self):
        if self.mode not in NORM_MODES:
            raise InvalidArgument(f"unknown matcher mode {self.mode!r}")
        if self.scope not in MATCH_SCOPES:
            raise InvalidArgument(f"unknown matcher scope {self.scope!r}")


DEFAULT_MATCHER = MatcherConfig()


def _chunk_tokens(text: str, start: int, end: int, out: list[TokenSpan]) -> None:
    left, right = start, end
    # Peel leading punctuation unless it opens a protected form ("$37.60", ".75").
    while left < right and _is_puncty(text[left]):
        if _CURRENCY_RE.match(text, left, right) or _LEADING_DECIMAL_RE.match(text, left, right):
            break
        out.append(TokenSpan(text[left], left, left + 1))
        left += 1
    # Peel trailing punctuation unless it closes a protected form ("3%").
    tail: list[TokenSpan] = []
    while right > left and _is_puncty(text[right - 1]):
        if _PERCENT_TAIL_RE.search(text, left, right):
            break
        tail.append(TokenSpan(text[right - 1], right - 1, right))
        right -= 1
    if left < right:
        out.append(TokenSpan(text[left:right], left, right))
    out.extend(reversed(tail))


def tokenize(text: str) -> TokenizedText:
    """Split text into TokenSpans; joining spans over the original loses nothing."""
    spans: list[TokenSpan] = []
    for m in _CHUNK_RE.finditer(text):
        _chunk_tokens(text, m.start(), m.end(), spans)
    return TokenizedText(text=text, tokens=tuple(spans))


def token_count(text: str) -> int:
    return len(tokenize(text).tokens)


def normalize(text: str, mode: str = "none") -> str:
    """Normalize text for matching. Idempotent for every mode."""
    if mode not in NORM_MODES:
        raise InvalidArgument(f"unknown normalization mode {mode!r}")
    if mode == "none":
        return text
    strip = mode == "casefold+strip-punct"
    out = []
    for ch in text:
        if strip and _is_puncty(ch):
            continue
        out.append(ch.casefold())
    return "".join(out)


def collapse_ws(text: str) -> str:
    """Whitespace-normalized form used for change detection."""
    return " ".join(text.split())


def _norm_chars(text: str, mode: str):
    """Per-character normalization with an offset map back into the original.

    Returns (normalized string, origin index per normalized char, first-flag,
    last-flag). One original character may emit several normalized characters
    (e.g. a ligature under casefold); the flags mark emission boundaries so a
    match is only accepted when it covers whole original characters.
    """
    strip = mode == "casefold+strip-punct"
    chars: list[str] = []
    origin: list[int] = []
    first: list[bool] = []
    last: list[bool] = []
    for i, ch in enumerate(text):
        if strip and _is_puncty(ch):
            continue
        emitted = ch.casefold()
        for k, sub in enumerate(emitted):
            chars.append(sub)
            origin.append(i)
            first.append(k == 0)
            last.append(k == len(emitted) - 1)
    return "".join(chars), origin, first, last


def locate(haystack: str, needle: str, matcher: MatcherConfig | None = None) -> list[tuple[int, int]]:
    """All non-overlapping occurrences of needle, greedy left to right.

    Spans index the original haystack. Under a normalizing matcher each
    returned slice normalizes equal to the normalized needle.
    """
    if not needle:
        raise InvalidArgument("locate: needle must be non-empty")
    mode = matcher.mode if matcher is not None else "none"
    if mode == "none":
        spans = []
        i = haystack.find(needle)
        while i != -1:
            spans.append((i, i + len(needle)))
            i = haystack.find(needle, i + len(needle))
        return spans
    norm_needle = normalize(needle, mode)
    if not norm_needle:
        return []
    norm_hay, origin, first, last = _norm_chars(haystack, mode)
    spans = []
    i = norm_hay.find(norm_needle)
    while i != -1:
        j = i + len(norm_needle)
        if first[i] and last[j - 1]:
            spans.append((origin[i], origin[j - 1] + 1))
            i = norm_hay.find(norm_needle, j)
        else:
            i = norm_hay.find(norm_needle, i + 1)
    return spans


def sentence_spans(text: str) -> list[tuple[int, int]]:
    """Sentence boundaries: runs of .!? followed by whitespace end a sentence."""
    spans = []
    start = 0
    for m in _SENT_BOUNDARY_RE.finditer(text):
        spans.append((start, m.end()))
        nxt = m.end()
        while nxt < len(text) and text[nxt].isspace():
            nxt += 1
        start = nxt
    if start < len(text):
        spans.append((start, len(text)))
    return spans


def sentence_starts(text: str) -> set[int]:
    return {s for s, _ in sentence_spans(text)}
