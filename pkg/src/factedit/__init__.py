"""Toolkit for entity-grounded summary post-editing.

Detection of extrinsic entity mentions, special-token marking, deterministic
deletion and entity-swap editors, compression-based training-data synthesis,
and the matching evaluation suite.
"""

from .corpus import CorpusRecord, read_records, write_jsonl
from .editors import (
    CandidateSet,
    EditResult,
    delete_correct,
    enumerate_swaps,
    rank_candidates,
    run_external_editor,
)
from .entity import (
    ENTITY_TYPES,
    EntityMention,
    MarkedText,
    detect_extrinsic,
    extract_entities,
    load_gazetteer,
    mark,
    mask_slots,
    parse_marked,
    strip_marks,
)
from .errors import (
    AlignmentError,
    DuplicateResponse,
    EmptyCorpus,
    FacteditError,
    InvalidArgument,
    InvalidSpans,
    MalformedMarkup,
    MissingAnnotation,
    MissingResponse,
    ParseAlignment,
    ValidationError,
)
from .metrics import (
    EvalReport,
    RougeScore,
    build_report,
    clean_reference,
    edit_percent,
    entity_precision,
    entity_recall,
    r1_clean,
    rouge_l,
    rouge_n,
)
from .synthesis import (
    CompressionPair,
    InsertionTask,
    TrainingPair,
    clean_subset,
    emit_editor_pair,
    emit_perturber_pairs,
    entity_diff,
    filter_compression,
    make_insertion_tasks,
    sample,
)
from .textcore import (
    MatcherConfig,
    TokenSpan,
    TokenizedText,
    locate,
    normalize,
    token_count,
    tokenize,
)

__version__ = "0.1.0"
