"""Named-entity extraction, grounding, extrinsic-error marking, slot masking.

The rules backend finds numeric/temporal entities with patterns and
PERSON/ORG/LOC/MISC spans with a capitalized-run heuristic, optionally
backed by gazetteer files. It will not agree with a statistical recognizer
on every boundary; what matters for the pipeline is that detection,
editing, and scoring all share the same recognizer.
"""

from __future__ import annotations

import os
import re
from dataclasses import dataclass

from .errors import (
    InvalidArgument,
    InvalidSpans,
    MalformedMarkup,
    MissingAnnotation,
)
from .textcore import (
    DEFAULT_MATCHER,
    MatcherConfig,
    locate,
    normalize,
    sentence_starts,
    tokenize,
)

ENTITY_TYPES = (
    "PERSON", "ORG", "LOC", "DATE", "TIME",
    "MONEY", "PERCENT", "CARDINAL", "ORDINAL", "MISC",
)

BACKENDS = ("rules", "precomputed")

DEFAULT_OPEN_TOKEN = "<rm>"
DEFAULT_CLOSE_TOKEN = "</rm>"


@dataclass(frozen=True)
class EntityMention:
    surface: str
    etype: str
    start: int
    end: int

    def to_dict(self) -> dict:
        return {"surface": self.surface, "type": self.etype,
                "start": self.start, "end": self.end}

    @classmethod
    def from_dict(cls, d: dict) -> "EntityMention":
        return cls(surface=d["surface"], etype=d["type"],
                   start=d["start"], end=d["end"])


_MONTHS = ("January|February|March|April|May|June|July|August"
           "|September|October|November|December")
_WEEKDAYS = "Monday|Tuesday|Wednesday|Thursday|Friday|Saturday|Sunday"

# Ordered by priority; earlier patterns win ties at the same start offset.
_PATTERNS: list[tuple[str, re.Pattern]] = [
    ("MONEY", re.compile(
        r"[$£€¥₹]\d[\d,]*(?:\.\d+)?(?:\s?(?:million|billion|trillion|m|bn))?")),
    ("MONEY", re.compile(
        r"\b\d[\d,]*(?:\.\d+)?\s(?:dollars|pounds|euros|cents|pence)\b")),
    ("PERCENT", re.compile(r"\b\d[\d,]*(?:\.\d+)?\s?(?:%|percent|per cent)")),
    ("TIME", re.compile(
        r"\b\d{1,2}:\d{2}(?::\d{2})?(?:\s?(?:am|pm|a\.m\.|p\.m\.))?", re.IGNORECASE)),
    ("TIME", re.compile(r"\b\d{1,2}\s?(?:am|pm)\b")),
    ("DATE", re.compile(rf"\b\d{{1,2}}\s+(?:{_MONTHS})(?:,?\s+\d{{4}})?\b")),
    ("DATE", re.compile(rf"\b(?:{_MONTHS})(?:\s+\d{{1,2}})?(?:,?\s+\d{{4}})?\b")),
    ("DATE", re.compile(rf"\b(?:{_WEEKDAYS})\b")),
    ("DATE", re.compile(r"\b[12]\d{3}s?\b")),
    ("ORDINAL", re.compile(r"\b\d+(?:st|nd|rd|th)\b")),
    ("CARDINAL", re.compile(r"\b\d[\d,]*(?:\.\d+)?\b")),
]

# Capitalized words that never start an entity span on their own.
_CAP_STOPWORDS = frozenset("""
    The A An This That These Those There Here It He She They We You I Its His
    Her Their Our My Your In On At By For From To With As Of But And Or Nor
    If When While After Before During Since Until However Meanwhile Although
    Because So Then Now What Who Whom Whose Which Where Why How Not No Yes
    Some Many Most More Other Another Each Every All Both Few Several Such
""".split())

_ORG_KEYWORDS = frozenset("""
    Inc Corp Ltd Co Company Corporation Group University College Institute
    School Department Ministry Agency Authority Council Committee Commission
    Association Federation Union Bank Police Party Parliament Congress Senate
    Court Office Bureau Board Fund Foundation Organisation Organization
    United FC Airlines Motors Media News Times Post Journal
""".split())

_LOC_KEYWORDS = frozenset("""
    Street Avenue Road Lane Square Bridge Mount Mountain Mountains Lake River
    Island Islands Bay Valley Park Airport County Coast Ocean Sea Desert
    Beach Harbour Harbor Hill Hills
""".split())

_HONORIFICS = frozenset("""
    Mr Mrs Ms Dr Sir Dame Lord Lady Prof Professor President Chancellor
    Senator Gov Governor Capt Captain Sgt Sergeant Rev Judge Mayor Minister
""".split())

# Compact built-in geography list; extend with gazetteer files when needed.
_GEO = frozenset("""
    US USA U.S U.S.A UK U.K Britain England Scotland Wales Ireland France
    Paris Germany Berlin Russia Moscow China Beijing India Delhi Japan Tokyo
    Syria Damascus Iraq Iran Israel Egypt Libya Turkey Greece Italy Rome
    Spain Madrid Portugal Brazil Mexico Canada Australia Sydney Indonesia
    Jakarta Nigeria Kenya Nairobi Ethiopia Afghanistan Pakistan Ukraine Kyiv
    Poland Sweden Norway Oslo Denmark Netherlands Belgium Switzerland Austria
    London Washington Texas California Europe Africa Asia America Americas
""".split())


def load_gazetteer(directory: str) -> dict[str, frozenset[str]]:
    """Load per-type gazetteer files (PERSON.txt etc.), one surface per line."""
    gaz: dict[str, frozenset[str]] = {}
    for etype in ("PERSON", "ORG", "LOC", "MISC"):
        path = os.path.join(directory, etype + ".txt")
        if os.path.exists(path):
            with open(path, encoding="utf-8") as fh:
                gaz[etype] = frozenset(line.strip() for line in fh if line.strip())
    return gaz


def _pattern_mentions(text: str) -> list[EntityMention]:
    candidates = []
    for priority, (etype, rx) in enumerate(_PATTERNS):
        for m in rx.finditer(text):
            candidates.append((m.start(), -(m.end() - m.start()), priority, m.end(), etype))
    candidates.sort()
    kept: list[EntityMention] = []
    last_end = 0
    for start, _, _, end, etype in candidates:
        if start >= last_end:
            kept.append(EntityMention(text[start:end], etype, start, end))
            last_end = end
    return kept


def _classify_span(surface: str, words: list[str], at_sentence_start: bool,
                   preceding: str | None, gazetteer: dict[str, frozenset[str]] | None) -> str | None:
    if gazetteer:
        for etype in ("PERSON", "ORG", "LOC", "MISC"):
            if surface in gazetteer.get(etype, ()):
                return etype
    if surface in _GEO:
        return "LOC"
    if any(w.rstrip(".") in _ORG_KEYWORDS for w in words):
        return "ORG"
    if any(w in _LOC_KEYWORDS for w in words):
        return "LOC"
    if preceding is not None and preceding.rstrip(".") in _HONORIFICS:
        return "PERSON"
    if len(words) >= 2:
        return "PERSON"
    # A lone capitalized word at a sentence start carries no signal.
    if at_sentence_start:
        return None
    return "MISC"


def _capitalized_mentions(text: str, consumed: list[tuple[int, int]],
                          gazetteer: dict[str, frozenset[str]] | None) -> list[EntityMention]:
    toks = tokenize(text).tokens
    starts = sentence_starts(text)

    def free(tok) -> bool:
        return all(tok.char_end <= s or tok.char_start >= e for s, e in consumed)

    def capitalized(tok) -> bool:
        return tok.surface[0].isalpha() and tok.surface[0].isupper()

    mentions = []
    i = 0
    while i < len(toks):
        tok = toks[i]
        if not (capitalized(tok) and free(tok)):
            i += 1
            continue
        # Collect the run of capitalized tokens separated only by whitespace.
        group = [i]
        j = i + 1
        while j < len(toks):
            nxt = toks[j]
            gap = text[toks[j - 1].char_end:nxt.char_start]
            if gap.strip() or not (capitalized(nxt) and free(nxt)):
                break
            group.append(j)
            j = j + 1
        # Sentence-initial closed-class words are capitalization noise.
        while group and toks[group[0]].char_start in starts \
                and toks[group[0]].surface in _CAP_STOPWORDS:
            group.pop(0)
        if group and not (len(group) == 1 and toks[group[0]].surface in _CAP_STOPWORDS):
            first, last = toks[group[0]], toks[group[-1]]
            surface = text[first.char_start:last.char_end]
            words = [toks[g].surface for g in group]
            prev = toks[group[0] - 1].surface if group[0] > 0 else None
            etype = _classify_span(surface, words, first.char_start in starts,
                                   prev, gazetteer)
            if etype is not None:
                mentions.append(EntityMention(surface, etype, first.char_start, last.char_end))
        i = j
    return mentions


def _mentions_from_annotations(text: str, annotations: list[dict]) -> list[EntityMention]:
    mentions = []
    for d in annotations:
        m = EntityMention.from_dict(d)
        if m.etype not in ENTITY_TYPES:
            raise InvalidArgument(f"unknown entity type {m.etype!r}")
        if not (0 <= m.start < m.end <= len(text)) or text[m.start:m.end] != m.surface:
            raise InvalidSpans(f"annotation {m.surface!r} does not match its span")
        mentions.append(m)
    mentions.sort(key=lambda m: (m.start, m.end))
    for a, b in zip(mentions, mentions[1:]):
        if b.start < a.end:
            raise InvalidSpans(f"annotations overlap: {a.surface!r} / {b.surface!r}")
    return mentions


def extract_entities(text: str, backend: str = "rules", *,
                     annotations: list[dict] | None = None,
                     gazetteer: dict[str, frozenset[str]] | None = None) -> list[EntityMention]:
    """Non-overlapping mentions sorted by span."""
    if backend not in BACKENDS:
        raise InvalidArgument(f"unknown entity backend {backend!r}")
    if backend == "precomputed":
        if annotations is None:
            raise MissingAnnotation("precomputed backend needs an entity annotation")
        return _mentions_from_annotations(text, annotations)
    if not text:
        return []
    patterned = _pattern_mentions(text)
    consumed = [(m.start, m.end) for m in patterned]
    mentions = patterned + _capitalized_mentions(text, consumed, gazetteer)
    mentions.sort(key=lambda m: (m.start, m.end))
    return mentions


def _grounded(surface: str, source: str, matcher: MatcherConfig,
              source_surfaces: set[str] | None) -> bool:
    if matcher.scope == "source-entity-surfaces":
        assert source_surfaces is not None
        return normalize(surface, matcher.mode) in source_surfaces
    return bool(locate(source, surface, matcher))


def detect_extrinsic(summary: str, source: str,
                     matcher: MatcherConfig = DEFAULT_MATCHER,
                     backend: str = "rules", *,
                     summary_annotations: list[dict] | None = None,
                     source_annotations: list[dict] | None = None,
                     gazetteer: dict[str, frozenset[str]] | None = None) -> list[EntityMention]:
    """Summary mentions whose surface has no match in the source."""
    mentions = extract_entities(summary, backend, annotations=summary_annotations,
                                gazetteer=gazetteer)
    source_surfaces = None
    if matcher.scope == "source-entity-surfaces":
        source_mentions = extract_entities(source, backend,
                                           annotations=source_annotations,
                                           gazetteer=gazetteer)
        source_surfaces = {normalize(m.surface, matcher.mode) for m in source_mentions}
    return [m for m in mentions
            if not _grounded(m.surface, source, matcher, source_surfaces)]


@dataclass(frozen=True)
class MarkedText:
    """Text plus non-overlapping removal spans, serialized with special tokens."""

    base: str
    removal_spans: tuple[tuple[int, int], ...]
    open_token: str = DEFAULT_OPEN_TOKEN
    close_token: str = DEFAULT_CLOSE_TOKEN

    def serialize(self) -> str:
        parts = []
        prev = 0
        for s, e in self.removal_spans:
            parts.append(self.base[prev:s])
            parts.append(self.open_token + " ")
            parts.append(self.base[s:e])
            parts.append(" " + self.close_token)
            prev = e
        parts.append(self.base[prev:])
        return "".join(parts)


def _checked_spans(text: str, spans: list[tuple[int, int]]) -> tuple[tuple[int, int], ...]:
    ordered = sorted(spans)
    for s, e in ordered:
        if not (0 <= s < e <= len(text)):
            raise InvalidSpans(f"span [{s}, {e}) out of bounds")
    for (_, e1), (s2, _) in zip(ordered, ordered[1:]):
        if s2 < e1:
            raise InvalidSpans("spans overlap")
    return tuple(ordered)


def mark(summary: str, flagged: list[EntityMention] | list[tuple[int, int]],
         tokens: tuple[str, str] = (DEFAULT_OPEN_TOKEN, DEFAULT_CLOSE_TOKEN)) -> MarkedText:
    """Wrap each flagged span in special tokens (single-space padded)."""
    open_token, close_token = tokens
    if not open_token or not close_token:
        raise InvalidArgument("special tokens must be non-empty")
    if open_token in summary or close_token in summary:
        raise InvalidArgument("special token already occurs in the text")
    spans = [(m.start, m.end) if isinstance(m, EntityMention) else tuple(m)
             for m in flagged]
    for m in flagged:
        if isinstance(m, EntityMention) and summary[m.start:m.end] != m.surface:
            raise InvalidSpans(f"mention {m.surface!r} does not match the text")
    return MarkedText(base=summary, removal_spans=_checked_spans(summary, spans),
                      open_token=open_token, close_token=close_token)


def strip_marks(marked: str,
                tokens: tuple[str, str] = (DEFAULT_OPEN_TOKEN, DEFAULT_CLOSE_TOKEN)
                ) -> tuple[str, list[tuple[int, int]]]:
    """Exact inverse of mark; returned spans index into the stripped text."""
    open_token, close_token = tokens
    parts: list[str] = []
    spans: list[tuple[int, int]] = []
    pos = 0
    length = 0
    while True:
        i = marked.find(open_token, pos)
        chunk_end = i if i != -1 else len(marked)
        chunk = marked[pos:chunk_end]
        if close_token in chunk:
            raise MalformedMarkup("close token without a matching open token")
        parts.append(chunk)
        length += len(chunk)
        if i == -1:
            break
        j = i + len(open_token)
        if marked.startswith(" ", j):
            j += 1
        k = marked.find(close_token, j)
        if k == -1:
            raise MalformedMarkup("open token without a matching close token")
        if marked.find(open_token, j, k) != -1:
            raise MalformedMarkup("nested special tokens")
        content = marked[j:k]
        if content.endswith(" "):
            content = content[:-1]
        if not content:
            raise MalformedMarkup("empty marked span")
        spans.append((length, length + len(content)))
        parts.append(content)
        length += len(content)
        pos = k + len(close_token)
    return "".join(parts), spans


def parse_marked(marked: str,
                 tokens: tuple[str, str] = (DEFAULT_OPEN_TOKEN, DEFAULT_CLOSE_TOKEN)) -> MarkedText:
    base, spans = strip_marks(marked, tokens)
    return MarkedText(base=base, removal_spans=tuple(spans),
                      open_token=tokens[0], close_token=tokens[1])


def mask_slots(summary: str, mentions: list[EntityMention]) -> str:
    """Replace each mention with a typed mask token, e.g. [MASK:LOC]."""
    for m in mentions:
        if summary[m.start:m.end] != m.surface:
            raise InvalidSpans(f"mention {m.surface!r} does not match the text")
    ordered = sorted(mentions, key=lambda m: (m.start, m.end))
    _checked_spans(summary, [(m.start, m.end) for m in ordered])
    out = summary
    for m in reversed(ordered):
        out = out[:m.start] + f"[MASK:{m.etype}]" + out[m.end:]
    return out
