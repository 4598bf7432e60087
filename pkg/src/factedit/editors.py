"""Deterministic post-editors: deletion-based correction and entity swaps.

delete_correct removes marked spans. The token policy also drops a unit
noun trailing a numeric span ("$28 a barrel" loses "barrel"), which is what
produces the ungrammatical remnants deletion-based correctors are known
for. The phrase policy instead cuts the whole minimal prepositional or
numeric-measure phrase, via the dependency subtree when a parse is given
and a surface heuristic otherwise. Cleanup (on by default) drops function
words orphaned next to a cut and repairs spacing, doubled punctuation, and
decapitalized sentence starts.
"""

from __future__ import annotations

import itertools
import json
import os
import re
import time
from dataclasses import dataclass, field

from .corpus import dumps_row, write_jsonl
from .entity import EntityMention, MarkedText
from .errors import (
    DuplicateResponse,
    ExchangeError,
    InvalidArgument,
    InvalidSpans,
    MissingResponse,
    ParseAlignment,
    ValidationError,
)
from .metrics import entity_precision
from .textcore import DEFAULT_MATCHER, collapse_ws, sentence_starts, tokenize

POLICIES = ("token", "phrase")
DEFAULT_CAP = 64

_PREPOSITIONS = frozenset("""
    at in on of for with from by to into over under near after before during
    between through against about around off per within across along amid
    despite toward towards upon
""".split())
_ARTICLES = frozenset(("a", "an", "the"))
_COORD = frozenset(("and", "or", "but", "nor"))
_BEFORE_CUT = _PREPOSITIONS | _ARTICLES | _COORD
_CLOSING_PUNCT = ",.;:!?"

# "<amount> a|an|per <unit>" measure construction following a numeric span.
_MEASURE_RE = re.compile(r"\s+(a|an|per)\s+(\w+)")

# Dependency labels worth climbing through when hunting the containing phrase.
_CLIMB_LABELS = frozenset("""
    pobj obj dobj iobj nummod quantmod npadvmod nmod compound amod det poss
    case appos attr
""".split())


@dataclass(frozen=True)
class EditResult:
    record_id: str
    original: str
    edited: str
    changed: bool
    removed: tuple[tuple[int, int], ...]
    policy: str

    def to_dict(self) -> dict:
        return {"id": self.record_id, "original": self.original,
                "edited": self.edited, "changed": self.changed,
                "removed": [list(span) for span in self.removed],
                "policy": self.policy}


@dataclass(frozen=True)
class CandidateSet:
    record_id: str
    candidates: list[str]
    substitutions: list[list[tuple[str, str, str]]]
    unswappable: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"id": self.record_id, "candidates": self.candidates,
                "substitutions": [[list(s) for s in subs] for subs in self.substitutions],
                "unswappable": self.unswappable}


@dataclass(frozen=True)
class ParsedToken:
    index: int  # 1-based
    surface: str
    head: int  # 0 means root
    label: str


def read_parse_file(path: str) -> dict[str, list[ParsedToken]]:
    """Dependency sidecar: blank-line separated blocks, first line the record id,
    then one token per row as "index<TAB>surface<TAB>head-index<TAB>label"."""
    parses: dict[str, list[ParsedToken]] = {}
    with open(path, encoding="utf-8") as fh:
        block: list[str] = []
        start_line = 1
        for lineno, line in enumerate(fh, start=1):
            if line.strip():
                if not block:
                    start_line = lineno
                block.append(line.rstrip("\n"))
                continue
            if block:
                rid, toks = _parse_block(block, path, start_line)
                parses[rid] = toks
                block = []
        if block:
            rid, toks = _parse_block(block, path, start_line)
            parses[rid] = toks
    return parses


def _parse_block(block: list[str], path: str, start_line: int):
    rid = block[0].strip()
    toks = []
    for offset, row in enumerate(block[1:], start=1):
        parts = row.split("\t")
        if len(parts) != 4:
            raise ValidationError(
                f"{path}, line {start_line + offset}: expected 4 tab-separated fields")
        try:
            toks.append(ParsedToken(index=int(parts[0]), surface=parts[1],
                                    head=int(parts[2]), label=parts[3]))
        except ValueError as exc:
            raise ValidationError(
                f"{path}, line {start_line + offset}: bad index ({exc})") from exc
    return rid, toks


def _merge_ranges(base: str, ranges: list[tuple[int, int]]) -> list[tuple[int, int]]:
    """Merge overlapping ranges and ranges separated only by whitespace."""
    if not ranges:
        return []
    ordered = sorted(ranges)
    merged = [list(ordered[0])]
    for s, e in ordered[1:]:
        gap = base[merged[-1][1]:s]
        if s <= merged[-1][1] or (gap and gap.isspace()) or not gap:
            merged[-1][1] = max(merged[-1][1], e)
        else:
            merged.append([s, e])
    return [(s, e) for s, e in merged]


def _token_before(tokens, pos: int, base: str):
    best = None
    for t in tokens:
        if t.char_end <= pos:
            best = t
        else:
            break
    if best is not None and not base[best.char_end:pos].strip():
        return best
    return None


def _token_after(tokens, pos: int, base: str):
    for t in tokens:
        if t.char_start >= pos:
            if not base[pos:t.char_start].strip():
                return t
            return None
    return None


def _extend_orphans(base: str, tokens, ranges: list[tuple[int, int]]) -> list[tuple[int, int]]:
    ranges = _merge_ranges(base, ranges)
    for _ in range(len(tokens) + 1):
        grew = False
        updated = []
        for s, e in ranges:
            before = _token_before(tokens, s, base)
            if before is not None and before.surface.lower() in _BEFORE_CUT:
                s = before.char_start
                grew = True
            if base.startswith("'s", e) and (e + 2 == len(base) or not base[e + 2].isalnum()):
                e += 2
                grew = True
            else:
                after = _token_after(tokens, e, base)
                if after is not None and after.surface.lower() in _COORD:
                    e = after.char_end
                    grew = True
            updated.append((s, e))
        ranges = _merge_ranges(base, updated)
        if not grew:
            break
    return ranges


def _splice(base: str, ranges: list[tuple[int, int]]) -> str:
    """Delete ranges, repair junction whitespace/punctuation, recapitalize."""
    keep: list[tuple[str, int]] = []
    pos = 0
    for s, e in ranges:
        keep.extend((base[i], i) for i in range(pos, s))
        pos = e
    keep.extend((base[i], i) for i in range(pos, len(base)))

    def cut_points() -> list[int]:
        pts = []
        for k in range(len(keep)):
            prev_origin = keep[k - 1][1] if k else -1
            if keep[k][1] != prev_origin + 1:
                pts.append(k)
        if keep and keep[-1][1] != len(base) - 1:
            pts.append(len(keep))
        return pts

    for k in reversed(cut_points()):
        # Collapse doubled spaces around the cut.
        while 0 < k < len(keep) and keep[k][0].isspace() and keep[k - 1][0].isspace():
            keep.pop(k)
        # No space directly before closing punctuation.
        while 0 < k < len(keep) and keep[k][0] in _CLOSING_PUNCT and keep[k - 1][0].isspace():
            keep.pop(k - 1)
            k -= 1
        # Drop a duplicated separator left by the cut (",  ," and friends).
        if 0 < k < len(keep) and keep[k][0] in ",;:":
            back = k - 1
            while back >= 0 and keep[back][0].isspace():
                back -= 1
            if back >= 0 and keep[back][0] == keep[k][0]:
                keep.pop(k)
                while 0 < k < len(keep) and keep[k][0].isspace() and keep[k - 1][0].isspace():
                    keep.pop(k)
    if ranges and ranges[0][0] == 0:
        while keep and (keep[0][0].isspace() or keep[0][0] in ",;:"):
            keep.pop(0)
    if ranges and ranges[-1][1] == len(base):
        while keep and keep[-1][0].isspace():
            keep.pop()

    edited = "".join(ch for ch, _ in keep)
    original_starts = sentence_starts(base)
    for start in sentence_starts(edited):
        ch, origin = keep[start]
        if ch.isalpha() and ch.islower() and origin not in original_starts:
            keep[start] = (ch.upper(), origin)
    return "".join(ch for ch, _ in keep)


def _phrase_subtree_range(base: str, tokens, parse: list[ParsedToken],
                          span: tuple[int, int]) -> tuple[int, int] | None:
    covered = [i for i, t in enumerate(tokens)
               if t.char_start < span[1] and t.char_end > span[0]]
    if not covered:
        return None
    by_index = {p.index: p for p in parse}
    covered_ids = {i + 1 for i in covered}
    tops = [i + 1 for i in covered if parse[i].head not in covered_ids]
    chain = [tops[0] if tops else covered[0] + 1]
    while by_index[chain[-1]].label in _CLIMB_LABELS and by_index[chain[-1]].head in by_index:
        chain.append(by_index[chain[-1]].head)
    last = by_index[chain[-1]]
    if last.label == "prep" or last.surface.lower() in _PREPOSITIONS:
        root = last.index
    elif len(chain) > 1:
        root = chain[-2]
    else:
        root = chain[-1]
    subtree = {root}
    changed = True
    while changed:
        changed = False
        for p in parse:
            if p.head in subtree and p.index not in subtree:
                subtree.add(p.index)
                changed = True
    spans = [tokens[i - 1] for i in sorted(subtree)]
    return (min(t.char_start for t in spans), max(t.char_end for t in spans))


def delete_correct(marked: MarkedText, policy: str = "token",
                   parse: list[ParsedToken] | None = None,
                   cleanup: bool = True, record_id: str = "") -> EditResult:
    """Remove the marked spans from the text under the chosen policy."""
    if policy not in POLICIES:
        raise InvalidArgument(f"unknown policy {policy!r}")
    base = marked.base
    spans = sorted(marked.removal_spans)
    for (_, e1), (s2, _) in zip(spans, spans[1:]):
        if s2 < e1:
            raise InvalidSpans("marked spans overlap")
    if not spans:
        return EditResult(record_id, base, base, False, (), policy)

    toks = tokenize(base).tokens
    if parse is not None:
        if [p.surface for p in parse] != [t.surface for t in toks]:
            raise ParseAlignment("parse tokens do not match the text")

    ranges: list[tuple[int, int]] = []
    for s, e in spans:
        ranges.append((s, e))
        has_digit = any(ch.isdigit() for ch in base[s:e])
        m = _MEASURE_RE.match(base, e)
        if policy == "token":
            if has_digit and m:
                # Drop the unit noun but leave the determiner dangling.
                ranges.append((m.start(2), m.end(2)))
        else:
            handled = False
            if parse is not None:
                subtree = _phrase_subtree_range(base, toks, parse, (s, e))
                if subtree is not None:
                    ranges.append(subtree)
                    handled = True
            if not handled:
                if has_digit and m:
                    ranges.append((e, m.end(2)))
                before = _token_before(toks, s, base)
                if before is not None and before.surface.lower() in _PREPOSITIONS:
                    ranges.append((before.char_start, s))

    ranges = _merge_ranges(base, ranges)
    if cleanup:
        ranges = _extend_orphans(base, toks, ranges)
    edited = _splice(base, ranges)
    changed = collapse_ws(edited) != collapse_ws(base)
    return EditResult(record_id, base, edited, changed, tuple(spans), policy)


def enumerate_swaps(summary: str, flagged: list[EntityMention],
                    source_mentions: list[EntityMention],
                    cap: int = DEFAULT_CAP, record_id: str = "") -> CandidateSet:
    """All ways to replace flagged mentions with same-typed source surfaces.

    Candidate 0 is always the unmodified summary; the product is enumerated
    in source order and truncated at cap. A flagged mention with no option
    keeps its surface and is reported as unswappable.
    """
    if cap < 1:
        raise InvalidArgument("cap must be >= 1")
    ordered = sorted(flagged, key=lambda m: (m.start, m.end))
    for a, b in zip(ordered, ordered[1:]):
        if b.start < a.end:
            raise InvalidSpans("flagged mentions overlap")
    for m in ordered:
        if summary[m.start:m.end] != m.surface:
            raise InvalidSpans(f"mention {m.surface!r} does not match the text")
    if not ordered:
        return CandidateSet(record_id, [summary], [[]], [])

    options: list[list[str]] = []
    for m in ordered:
        opts = []
        seen = set()
        for s in source_mentions:
            if s.etype == m.etype and s.surface not in seen:
                seen.add(s.surface)
                opts.append(s.surface)
        options.append(opts)
    unswappable = [m.surface for m, o in zip(ordered, options) if not o]

    candidates = [summary]
    substitutions: list[list[tuple[str, str, str]]] = [[]]
    for combo in itertools.product(*[o if o else [None] for o in options]):
        if len(candidates) >= cap:
            break
        text = summary
        subs = []
        for m, replacement in sorted(zip(ordered, combo),
                                     key=lambda pair: pair[0].start, reverse=True):
            if replacement is None:
                continue
            text = text[:m.start] + replacement + text[m.end:]
            subs.append((m.surface, replacement, m.etype))
        subs.reverse()
        candidates.append(text)
        substitutions.append(subs)
    return CandidateSet(record_id, candidates, substitutions, unswappable)


def rank_candidates(cands: CandidateSet, source: str, matcher=None,
                    backend: str = "rules", *, gazetteer=None) -> list[int]:
    """Candidate indices best-first by entity precision; stable on ties."""
    matcher = matcher or DEFAULT_MATCHER
    scores = [entity_precision(text, source, matcher, backend, gazetteer=gazetteer)
              for text in cands.candidates]
    return sorted(range(len(scores)), key=lambda i: (-scores[i], i))


REQUEST_FILE = "requests.jsonl"
RESPONSE_FILE = "responses.jsonl"


def run_external_editor(items: list[tuple[str, str, str]], exchange_dir: str,
                        sep: str = "<sep>",
                        tokens: tuple[str, str] = ("<rm>", "</rm>"),
                        timeout: float = 60.0,
                        poll_interval: float = 0.05) -> list[EditResult]:
    """File exchange with an external editor process.

    items are (record_id, source, serialized marked summary). Requests go to
    exchange_dir/requests.jsonl as {"id", "input"}; the external process
    must write exchange_dir/responses.jsonl lines {"id", "output"}.
    """
    from .entity import strip_marks

    os.makedirs(exchange_dir, exist_ok=True)
    request_path = os.path.join(exchange_dir, REQUEST_FILE)
    response_path = os.path.join(exchange_dir, RESPONSE_FILE)
    expected: dict[str, tuple[str, tuple[tuple[int, int], ...]]] = {}
    rows = []
    for record_id, source, marked in items:
        base, spans = strip_marks(marked, tokens)
        expected[record_id] = (base, tuple(spans))
        rows.append({"id": record_id, "input": f"{source} {sep} {marked}"})
    write_jsonl(request_path, rows)

    deadline = time.monotonic() + timeout
    while not os.path.exists(response_path):
        if time.monotonic() >= deadline:
            raise MissingResponse(expected)
        time.sleep(poll_interval)

    responses: dict[str, str] = {}
    with open(response_path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValidationError(
                    f"{response_path}, line {lineno}: invalid JSON ({exc.msg})") from exc
            rid, output = obj.get("id"), obj.get("output")
            if not isinstance(rid, str) or not isinstance(output, str):
                raise ValidationError(
                    f"{response_path}, line {lineno}: need string 'id' and 'output'")
            if rid in responses:
                raise DuplicateResponse(f"duplicate response id {rid!r}")
            if rid not in expected:
                raise ExchangeError(f"response for unknown id {rid!r}")
            responses[rid] = output
    missing = set(expected) - set(responses)
    if missing:
        raise MissingResponse(missing)

    results = []
    for rid, (base, spans) in expected.items():
        output = responses[rid]
        results.append(EditResult(
            record_id=rid, original=base, edited=output,
            changed=collapse_ws(base) != collapse_ws(output),
            removed=spans, policy="external"))
    results.sort(key=lambda r: r.record_id)
    return results
