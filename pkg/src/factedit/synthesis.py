"""Training-data synthesis from sentence-compression pairs and clean corpora.

Pipeline: ratio-filter compression pairs, pair each kept sentence with the
entities its compressed side lost (perturber direction), keep only corpus
records whose reference is fully grounded, draw entity insertion tasks, and
turn externally perturbed summaries into post-editor pairs with the inserted
entities wrapped in special tokens. Every stage is deterministic given
(corpus, seed, config) and reports its counts for the run manifest.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from .corpus import CorpusRecord
from .entity import (
    DEFAULT_CLOSE_TOKEN,
    DEFAULT_OPEN_TOKEN,
    extract_entities,
    mark,
)
from .errors import InvalidArgument, ValidationError
from .textcore import DEFAULT_MATCHER, MatcherConfig, locate, token_count

DEFAULT_SEP = "<sep>"
DEFAULT_MIN_RATIO = 0.75
DEFAULT_SAMPLE_N = 200_000
ENTITY_JOINER = "; "


@dataclass(frozen=True)
class CompressionPair:
    id: str
    uncompressed: str
    compressed: str

    @classmethod
    def from_dict(cls, d: dict, where: str = "pair") -> "CompressionPair":
        for key in ("id", "uncompressed", "compressed"):
            if not isinstance(d.get(key), str) or not d[key]:
                raise ValidationError(f"{where}: field {key!r} must be a non-empty string")
        return cls(id=d["id"], uncompressed=d["uncompressed"], compressed=d["compressed"])

    def to_dict(self) -> dict:
        return {"id": self.id, "uncompressed": self.uncompressed,
                "compressed": self.compressed}


@dataclass(frozen=True)
class TrainingPair:
    id: str
    direction: str  # "perturber" or "post-editor"
    input: str
    target: str
    inserted_entities: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        d = {"id": self.id, "direction": self.direction,
             "input": self.input, "target": self.target}
        if self.direction == "post-editor":
            d["inserted_entities"] = list(self.inserted_entities)
        return d


@dataclass(frozen=True)
class InsertionTask:
    record_id: str
    reference: str
    k: int
    entities: tuple[str, ...]
    seed: int

    @property
    def task_id(self) -> str:
        return f"{self.record_id}#k{self.k}"

    def perturber_input(self, sep: str = DEFAULT_SEP) -> str:
        return f"{self.reference} {sep} {ENTITY_JOINER.join(self.entities)}"

    def to_dict(self) -> dict:
        return {"task_id": self.task_id, "record_id": self.record_id,
                "reference": self.reference, "k": self.k,
                "entities": list(self.entities), "seed": self.seed}


def _rng(*parts) -> random.Random:
    # String seeding keeps sampling stable across processes and platforms.
    return random.Random("|".join(str(p) for p in parts))


def filter_compression(pairs: list[CompressionPair],
                       min_ratio: float = DEFAULT_MIN_RATIO
                       ) -> tuple[list[CompressionPair], dict]:
    """Keep pairs whose compressed/uncompressed token ratio is >= min_ratio.

    The boundary is inclusive: a pair at exactly the threshold is kept.
    Pairs with a zero-token uncompressed side are skipped and counted.
    """
    if not (0 < min_ratio <= 1):
        raise InvalidArgument("min_ratio must be in (0, 1]")
    kept = []
    counts = {"input": len(pairs), "kept": 0, "dropped": 0, "skipped_zero_tokens": 0}
    for pair in pairs:
        longer = token_count(pair.uncompressed)
        if longer == 0:
            counts["skipped_zero_tokens"] += 1
            continue
        ratio = token_count(pair.compressed) / longer
        if ratio >= min_ratio:
            kept.append(pair)
            counts["kept"] += 1
        else:
            counts["dropped"] += 1
    return kept, counts


def entity_diff(pair: CompressionPair, backend: str = "rules",
                matcher: MatcherConfig = DEFAULT_MATCHER, *,
                gazetteer=None) -> list[str]:
    """Surfaces mentioned in the uncompressed side but absent from the compressed."""
    mentions = extract_entities(pair.uncompressed, backend, gazetteer=gazetteer)
    diff = []
    seen = set()
    for m in mentions:
        if m.surface in seen:
            continue
        seen.add(m.surface)
        if not locate(pair.compressed, m.surface, matcher):
            diff.append(m.surface)
    return diff


def emit_perturber_pairs(pairs: list[CompressionPair], sep: str = DEFAULT_SEP,
                         backend: str = "rules",
                         matcher: MatcherConfig = DEFAULT_MATCHER, *,
                         gazetteer=None) -> tuple[list[TrainingPair], dict]:
    """One training pair per compression pair with a non-empty entity diff."""
    out = []
    counts = {"input": len(pairs), "emitted": 0, "dropped_empty_diff": 0}
    for pair in pairs:
        diff = entity_diff(pair, backend, matcher, gazetteer=gazetteer)
        if not diff:
            counts["dropped_empty_diff"] += 1
            continue
        out.append(TrainingPair(
            id=pair.id, direction="perturber",
            input=f"{pair.compressed} {sep} {ENTITY_JOINER.join(diff)}",
            target=pair.uncompressed))
        counts["emitted"] += 1
    return out, counts


def clean_subset(records: list[CorpusRecord], backend: str = "rules",
                 matcher: MatcherConfig = DEFAULT_MATCHER, *,
                 gazetteer=None) -> tuple[list[CorpusRecord], dict]:
    """Records whose reference mentions are all grounded in the source."""
    from .entity import detect_extrinsic

    kept = []
    counts = {"input": len(records), "kept": 0, "dropped": 0, "skipped_no_reference": 0}
    for rec in records:
        if rec.reference is None:
            counts["skipped_no_reference"] += 1
            continue
        annotations = rec.annotations_for("reference") if backend == "precomputed" else None
        source_annotations = rec.annotations_for("source") if backend == "precomputed" else None
        flagged = detect_extrinsic(rec.reference, rec.source, matcher, backend,
                                   summary_annotations=annotations,
                                   source_annotations=source_annotations,
                                   gazetteer=gazetteer)
        if flagged:
            counts["dropped"] += 1
        else:
            kept.append(rec)
            counts["kept"] += 1
    return kept, counts


def make_insertion_tasks(record: CorpusRecord, seed: int,
                         backend: str = "rules",
                         matcher: MatcherConfig = DEFAULT_MATCHER, *,
                         gazetteer=None) -> list[InsertionTask]:
    """Up to three tasks (k = 1, 2, 3) drawing source entities absent from the reference.

    Sampling is uniform without replacement, seeded by (seed, record id, k),
    so adding records to a corpus never reshuffles existing tasks.
    """
    if record.reference is None:
        raise InvalidArgument(f"record {record.id!r} has no reference")
    annotations = record.annotations_for("source") if backend == "precomputed" else None
    mentions = extract_entities(record.source, backend, annotations=annotations,
                                gazetteer=gazetteer)
    pool = []
    seen = set()
    for m in mentions:
        if m.surface in seen:
            continue
        seen.add(m.surface)
        if not locate(record.reference, m.surface, matcher):
            pool.append(m.surface)
    tasks = []
    for k in (1, 2, 3):
        if len(pool) < k:
            break
        chosen = _rng(seed, record.id, k).sample(pool, k)
        tasks.append(InsertionTask(record_id=record.id, reference=record.reference,
                                   k=k, entities=tuple(chosen), seed=seed))
    return tasks


def emit_editor_pair(record: CorpusRecord, task: InsertionTask, perturbed: str,
                     sep: str = DEFAULT_SEP,
                     matcher: MatcherConfig = DEFAULT_MATCHER,
                     tokens: tuple[str, str] = (DEFAULT_OPEN_TOKEN, DEFAULT_CLOSE_TOKEN),
                     ) -> tuple[TrainingPair | None, dict]:
    """Wrap the task entities inside the perturbed summary and pair with the reference.

    Each entity is matched at its first occurrence. A perturbed summary
    missing any task entity failed the insertion contract and is rejected.
    Overlapping matches resolve by dropping the later span.
    """
    counts = {"emitted": 0, "rejected_missing_entity": 0, "overlap_dropped": 0}
    spans = []
    for surface in task.entities:
        hits = locate(perturbed, surface, matcher)
        if not hits:
            counts["rejected_missing_entity"] += 1
            return None, counts
        spans.append(hits[0])
    spans.sort()
    chosen = []
    for span in spans:
        if chosen and span[0] < chosen[-1][1]:
            counts["overlap_dropped"] += 1
            continue
        chosen.append(span)
    marked = mark(perturbed, chosen, tokens)
    counts["emitted"] = 1
    pair = TrainingPair(
        id=task.task_id, direction="post-editor",
        input=f"{record.source} {sep} {marked.serialize()}",
        target=record.reference or "",
        inserted_entities=tuple(task.entities))
    return pair, counts


def sample(items: list, n: int = DEFAULT_SAMPLE_N, seed: int = 0, *,
           key=None) -> list:
    """Uniform sample without replacement, deterministic under seed, sorted by id."""
    if n < 0:
        raise InvalidArgument("sample size must be >= 0")
    if key is None:
        key = lambda item: item["id"] if isinstance(item, dict) else item.id
    if len(items) <= n:
        return sorted(items, key=key)
    chosen = _rng(seed, "sample", len(items), n).sample(items, n)
    return sorted(chosen, key=key)
