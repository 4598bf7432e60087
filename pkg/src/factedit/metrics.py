"""Automatic evaluation: ROUGE-1/2/L, entity precision/recall, R1-c, Edit%.

Conventions (recorded in every run manifest): texts are tokenized with the
toolkit tokenizer and casefolded, no stemming unless asked for, ROUGE-L is
a single LCS over the whole text unless the summary-level flag is set.
Entity metrics are vacuous-true: a text with zero mentions scores 100.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .entity import extract_entities
from .errors import AlignmentError, EmptyCorpus, InvalidArgument
from .textcore import (
    DEFAULT_MATCHER,
    MatcherConfig,
    collapse_ws,
    locate,
    normalize,
    sentence_spans,
    tokenize,
)

EXTERNAL_METRICS = ("bs_p_src", "bs_f1_ref", "d_arc", "qafe", "cola")

# Table layout used for the flat TSV summary row.
TSV_COLUMNS = (
    ("E-P_src", "e_p_src"), ("BS-P_src", "bs_p_src"), ("D_arc", "d_arc"),
    ("QAFE", "qafe"), ("E-R_ref", "e_r_ref"), ("BS-F1_ref", "bs_f1_ref"),
    ("R1", "r1"), ("R2", "r2"), ("RL", "rl"), ("R1-c", "r1_c"),
    ("CoLA", "cola"), ("Edit%", "edit_percent"),
)


@dataclass(frozen=True)
class RougeScore:
    precision: float
    recall: float
    f1: float

    def scaled(self) -> tuple[float, float, float]:
        """Percent values rounded to two decimals, as reported."""
        return (round(self.precision * 100, 2),
                round(self.recall * 100, 2),
                round(self.f1 * 100, 2))


def _f1(p: float, r: float) -> float:
    return 2 * p * r / (p + r) if p + r > 0 else 0.0


_SUFFIXES = ("sses", "ies", "ing", "ed", "es", "s")


def _light_stem(token: str) -> str:
    # Cheap suffix stemmer for the optional stemming flag; not Porter.
    for suf in _SUFFIXES:
        if token.endswith(suf) and len(token) - len(suf) >= 3:
            if suf == "sses":
                return token[:-2]
            if suf == "ies":
                return token[:-3] + "y"
            return token[: -len(suf)]
    return token


def rouge_tokens(text: str, stem: bool = False) -> list[str]:
    toks = [t.casefold() for t in tokenize(text).surfaces()]
    if stem:
        toks = [_light_stem(t) for t in toks]
    return toks


def _ngrams(tokens: Sequence[str], n: int) -> Counter:
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def rouge_n(hyp: str, ref: str, n: int, stem: bool = False) -> RougeScore:
    """Clipped n-gram overlap precision/recall/F1."""
    if n not in (1, 2):
        raise InvalidArgument("rouge_n supports n in {1, 2}")
    hyp_counts = _ngrams(rouge_tokens(hyp, stem), n)
    ref_counts = _ngrams(rouge_tokens(ref, stem), n)
    overlap = sum(min(c, ref_counts[g]) for g, c in hyp_counts.items())
    hyp_total = sum(hyp_counts.values())
    ref_total = sum(ref_counts.values())
    p = overlap / hyp_total if hyp_total else 0.0
    r = overlap / ref_total if ref_total else 0.0
    return RougeScore(p, r, _f1(p, r))


def _lcs_length(a: Sequence[str], b: Sequence[str]) -> int:
    if not a or not b:
        return 0
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0]
        for j, y in enumerate(b, start=1):
            cur.append(prev[j - 1] + 1 if x == y else max(prev[j], cur[j - 1]))
        prev = cur
    return prev[len(b)]


def _lcs_match_indices(ref: Sequence[str], hyp: Sequence[str]) -> set[int]:
    """Indices of ref tokens participating in one LCS with hyp."""
    m, n = len(ref), len(hyp)
    table = [[0] * (n + 1) for _ in range(m + 1)]
    for i in range(1, m + 1):
        for j in range(1, n + 1):
            if ref[i - 1] == hyp[j - 1]:
                table[i][j] = table[i - 1][j - 1] + 1
            else:
                table[i][j] = max(table[i - 1][j], table[i][j - 1])
    matched = set()
    i, j = m, n
    while i > 0 and j > 0:
        if ref[i - 1] == hyp[j - 1]:
            matched.add(i - 1)
            i, j = i - 1, j - 1
        elif table[i - 1][j] >= table[i][j - 1]:
            i -= 1
        else:
            j -= 1
    return matched


def _sentences_tokens(text: str, stem: bool) -> list[list[str]]:
    return [rouge_tokens(text[s:e], stem) for s, e in sentence_spans(text)]


def rouge_l(hyp: str, ref: str, stem: bool = False,
            summary_level: bool = False) -> RougeScore:
    """LCS-based ROUGE; summary_level sums union-LCS over reference sentences."""
    hyp_toks = rouge_tokens(hyp, stem)
    ref_toks = rouge_tokens(ref, stem)
    if not summary_level:
        lcs = _lcs_length(hyp_toks, ref_toks)
        p = lcs / len(hyp_toks) if hyp_toks else 0.0
        r = lcs / len(ref_toks) if ref_toks else 0.0
        return RougeScore(p, r, _f1(p, r))
    hyp_budget = Counter(hyp_toks)
    total = 0
    for ref_sent in _sentences_tokens(ref, stem):
        union: set[int] = set()
        for hyp_sent in _sentences_tokens(hyp, stem):
            union |= _lcs_match_indices(ref_sent, hyp_sent)
        for idx in sorted(union):
            tok = ref_sent[idx]
            if hyp_budget[tok] > 0:
                hyp_budget[tok] -= 1
                total += 1
    p = total / len(hyp_toks) if hyp_toks else 0.0
    r = total / len(ref_toks) if ref_toks else 0.0
    return RougeScore(p, r, _f1(p, r))


def _grounded_counts(text: str, other: str, matcher: MatcherConfig,
                     backend: str, annotations, other_annotations,
                     gazetteer) -> tuple[int, int]:
    mentions = extract_entities(text, backend, annotations=annotations,
                                gazetteer=gazetteer)
    if not mentions:
        return 0, 0
    surfaces = None
    if matcher.scope == "source-entity-surfaces":
        other_mentions = extract_entities(other, backend,
                                          annotations=other_annotations,
                                          gazetteer=gazetteer)
        surfaces = {normalize(m.surface, matcher.mode) for m in other_mentions}
    grounded = 0
    for m in mentions:
        if surfaces is not None:
            ok = normalize(m.surface, matcher.mode) in surfaces
        else:
            ok = bool(locate(other, m.surface, matcher))
        grounded += ok
    return grounded, len(mentions)


def entity_precision(summary: str, source: str,
                     matcher: MatcherConfig = DEFAULT_MATCHER,
                     backend: str = "rules", *,
                     summary_annotations=None, source_annotations=None,
                     gazetteer=None) -> float:
    """Percent of summary mentions grounded in the source; vacuously 100."""
    g, t = _grounded_counts(summary, source, matcher, backend,
                            summary_annotations, source_annotations, gazetteer)
    return 100.0 if t == 0 else 100.0 * g / t


def entity_recall(reference: str, summary: str,
                  matcher: MatcherConfig = DEFAULT_MATCHER,
                  backend: str = "rules", *,
                  reference_annotations=None, summary_annotations=None,
                  gazetteer=None) -> float:
    """Percent of reference mentions found in the summary; vacuously 100."""
    g, t = _grounded_counts(reference, summary, matcher, backend,
                            reference_annotations, summary_annotations, gazetteer)
    return 100.0 if t == 0 else 100.0 * g / t


def entity_counts(text: str, other: str,
                  matcher: MatcherConfig = DEFAULT_MATCHER,
                  backend: str = "rules", *,
                  annotations=None, other_annotations=None,
                  gazetteer=None) -> tuple[int, int]:
    """(grounded, total) mention counts, for micro-averaged aggregates."""
    return _grounded_counts(text, other, matcher, backend,
                            annotations, other_annotations, gazetteer)


def clean_reference(ref: str, source: str,
                    matcher: MatcherConfig = DEFAULT_MATCHER,
                    backend: str = "rules", *,
                    reference_annotations=None, gazetteer=None) -> str:
    """Reference with every mention not grounded in the source deleted."""
    mentions = extract_entities(ref, backend, annotations=reference_annotations,
                                gazetteer=gazetteer)
    doomed = [m for m in mentions if not locate(source, m.surface, matcher)] \
        if matcher.scope == "source-text" else None
    if doomed is None:
        source_mentions = extract_entities(source, backend, gazetteer=gazetteer)
        surfaces = {normalize(m.surface, matcher.mode) for m in source_mentions}
        doomed = [m for m in mentions
                  if normalize(m.surface, matcher.mode) not in surfaces]
    out = ref
    for m in sorted(doomed, key=lambda m: m.start, reverse=True):
        out = out[:m.start] + out[m.end:]
    return collapse_ws(out)


def r1_clean(hyp: str, ref: str, source: str,
             matcher: MatcherConfig = DEFAULT_MATCHER,
             backend: str = "rules", *, stem: bool = False,
             reference_annotations=None, gazetteer=None) -> RougeScore:
    """ROUGE-1 against the reference with ungrounded entities removed."""
    cleaned = clean_reference(ref, source, matcher, backend,
                              reference_annotations=reference_annotations,
                              gazetteer=gazetteer)
    return rouge_n(hyp, cleaned, 1, stem=stem)


def edit_percent(pairs: Iterable[tuple[str, str]]) -> float:
    """Percent of (original, edited) pairs that differ modulo whitespace."""
    changed = 0
    total = 0
    for original, edited in pairs:
        total += 1
        changed += collapse_ws(original) != collapse_ws(edited)
    if total == 0:
        raise EmptyCorpus("edit_percent over zero pairs")
    return 100.0 * changed / total


def align_pairs(originals: Iterable[tuple[str, str]],
                edited: Iterable[tuple[str, str]]) -> list[tuple[str, str]]:
    """Join two (id, text) streams on id; mismatched id sets are an error."""
    a = dict(originals)
    b = dict(edited)
    if set(a) != set(b):
        missing = sorted(set(a) ^ set(b))[:5]
        raise AlignmentError(f"id sets differ, e.g. {missing}")
    return [(a[k], b[k]) for k in sorted(a)]


ROW_METRICS = ("e_p_src", "e_r_ref", "r1", "r2", "rl", "r1_c")


@dataclass
class EvalReport:
    """Per-record rows plus corpus aggregates and external passthrough values."""

    records: list[dict]
    aggregates: dict
    external: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"records": self.records, "aggregates": self.aggregates,
                "external": self.external}

    def tsv(self, label: str = "run") -> str:
        merged = dict(self.aggregates)
        merged.update(self.external)
        header = "Model\t" + "\t".join(name for name, _ in TSV_COLUMNS)
        cells = [label]
        for _, key in TSV_COLUMNS:
            value = merged.get(key)
            cells.append("-" if value is None else f"{value:.2f}")
        return header + "\n" + "\t".join(cells) + "\n"


def build_report(rows: list[dict], external_values: dict | None = None) -> EvalReport:
    """Aggregate per-record metric rows into a report (macro means)."""
    if not rows:
        raise EmptyCorpus("build_report needs at least one row")
    for row in rows:
        missing = [k for k in ("id",) + ROW_METRICS if k not in row]
        if missing:
            raise InvalidArgument(f"row {row.get('id')!r} missing {missing}")
    aggregates = {key: sum(r[key] for r in rows) / len(rows) for key in ROW_METRICS}
    flags = [r.get("changed") for r in rows]
    if all(isinstance(f, bool) for f in flags):
        aggregates["edit_percent"] = 100.0 * sum(flags) / len(flags)
    else:
        aggregates["edit_percent"] = None
    external = {}
    if external_values:
        for key, value in external_values.items():
            if key not in EXTERNAL_METRICS:
                raise InvalidArgument(f"unknown external metric {key!r}")
            external[key] = value
    return EvalReport(records=rows, aggregates=aggregates, external=external)
