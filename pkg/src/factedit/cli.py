"""Command-line front end for the post-editing toolkit.

Every subcommand reads line-delimited JSON, writes line-delimited JSON (or
a JSON report) atomically, sorts its output by id, and drops a manifest
with the resolved configuration hash, the seed, and stage counts next to
the primary output. `--workers` only affects speed, never bytes.
"""

from __future__ import annotations

import argparse
import functools
import json
import multiprocessing
import sys
import traceback
from collections import defaultdict

from .config import PipelineConfig, resolve_config, write_manifest
from .corpus import (
    CorpusRecord,
    read_jsonl,
    read_records,
    write_jsonl,
    write_text,
)
from .editors import (
    delete_correct,
    enumerate_swaps,
    rank_candidates,
    read_parse_file,
    run_external_editor,
)
from .entity import (
    EntityMention,
    detect_extrinsic,
    extract_entities,
    load_gazetteer,
    mark,
    parse_marked,
)
from .errors import FacteditError, ValidationError
from .metrics import (
    EXTERNAL_METRICS,
    build_report,
    entity_counts,
    entity_precision,
    entity_recall,
    r1_clean,
    rouge_l,
    rouge_n,
)
from .synthesis import (
    CompressionPair,
    clean_subset,
    emit_editor_pair,
    emit_perturber_pairs,
    filter_compression,
    make_insertion_tasks,
    sample,
)

SUBCOMMANDS = (
    "ner", "detect", "mark", "mask", "filter-compression", "perturber-data",
    "insertion-tasks", "editor-data", "clean-subset", "sample", "edit",
    "swaps", "external-edit", "eval", "report",
)


class _Parser(argparse.ArgumentParser):
    # Usage problems are input validation failures: exit 1, not argparse's 2.
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(1)


_FLAG_TO_CONFIG = {
    "matcher_mode": "matcher_mode",
    "scope": "matcher_scope",
    "backend": "backend",
    "gazetteer": "gazetteer_dir",
    "open_token": "open_token",
    "close_token": "close_token",
    "sep": "sep",
    "min_ratio": "min_ratio",
    "n": "sample_n",
    "seed": "seed",
    "cap": "cap",
    "policy": "policy",
    "cleanup": "cleanup",
    "field": "field",
    "stem": "rouge_stem",
    "rl_summary": "rouge_l_summary",
    "entity_agg": "entity_agg",
}


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key-value config file")
    p.add_argument("--workers", type=int, default=1, help="parallel workers (speed only)")
    p.add_argument("--matcher-mode", dest="matcher_mode",
                   choices=("none", "casefold", "casefold+strip-punct"))
    p.add_argument("--scope", choices=("source-text", "source-entity-surfaces"))
    p.add_argument("--backend", choices=("rules", "precomputed"))
    p.add_argument("--gazetteer", help="directory with per-type gazetteer files")
    p.add_argument("--open-token", dest="open_token")
    p.add_argument("--close-token", dest="close_token")
    p.add_argument("--sep")
    p.add_argument("--min-ratio", dest="min_ratio", type=float)
    p.add_argument("--n", type=int, help="sample size")
    p.add_argument("--seed", type=int)
    p.add_argument("--cap", type=int)
    p.add_argument("--policy", choices=("token", "phrase"))
    p.add_argument("--cleanup", action=argparse.BooleanOptionalAction, default=None)
    p.add_argument("--field", choices=("reference", "hypothesis"))
    p.add_argument("--stem", action=argparse.BooleanOptionalAction, default=None)
    p.add_argument("--rl-summary", dest="rl_summary",
                   action=argparse.BooleanOptionalAction, default=None)
    p.add_argument("--entity-agg", dest="entity_agg", choices=("macro", "micro"))


def _config_from_args(args) -> PipelineConfig:
    flags = {}
    for dest, name in _FLAG_TO_CONFIG.items():
        value = getattr(args, dest, None)
        if value is not None:
            flags[name] = value
    return resolve_config(flags, getattr(args, "config", None))


def _parallel_map(fn, items, workers: int) -> list:
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    chunk = max(1, len(items) // (workers * 4))
    with multiprocessing.Pool(workers) as pool:
        return pool.map(fn, items, chunksize=chunk)


def _annotations(record: CorpusRecord, fieldname: str, cfg: PipelineConfig):
    if cfg.backend != "precomputed":
        return None
    return record.annotations_for(fieldname)


# Worker functions are module level so they pickle for multiprocessing.

def _ner_record(record: CorpusRecord, cfg: PipelineConfig, gazetteer) -> dict:
    out = record.to_dict()
    entities = {}
    for fieldname in ("source", "reference", "hypothesis"):
        text = record.text_for(fieldname)
        if text is None:
            continue
        mentions = extract_entities(text, "rules", gazetteer=gazetteer)
        entities[fieldname] = [m.to_dict() for m in mentions]
    out["entities"] = entities
    return out


def _detect_record(record: CorpusRecord, cfg: PipelineConfig, gazetteer) -> dict:
    fieldname = record.summary_field(cfg.field)
    text = record.text_for(fieldname)
    flagged = detect_extrinsic(
        text, record.source, cfg.matcher(), cfg.backend,
        summary_annotations=_annotations(record, fieldname, cfg),
        source_annotations=_annotations(record, "source", cfg),
        gazetteer=gazetteer)
    out = record.to_dict()
    out["flagged"] = [m.to_dict() for m in flagged]
    out["marked"] = mark(text, flagged, cfg.tokens()).serialize()
    return out


def _mark_record(record: CorpusRecord, cfg: PipelineConfig) -> dict:
    flagged = record.extra.get("flagged")
    if flagged is None:
        raise ValidationError(f"record {record.id!r} has no 'flagged' field; run detect first")
    fieldname = record.summary_field(cfg.field)
    text = record.text_for(fieldname)
    mentions = [EntityMention.from_dict(d) for d in flagged]
    out = record.to_dict()
    out["marked"] = mark(text, mentions, cfg.tokens()).serialize()
    return out


def _mask_record(record: CorpusRecord, cfg: PipelineConfig, gazetteer) -> dict:
    from .entity import mask_slots

    fieldname = record.summary_field(cfg.field)
    text = record.text_for(fieldname)
    mentions = extract_entities(text, cfg.backend,
                                annotations=_annotations(record, fieldname, cfg),
                                gazetteer=gazetteer)
    out = record.to_dict()
    out["masked"] = mask_slots(text, mentions)
    return out


def _edit_row(row: dict, cfg: PipelineConfig, parses) -> dict:
    marked = parse_marked(row["marked"], cfg.tokens())
    parse = parses.get(row["id"]) if parses else None
    result = delete_correct(marked, cfg.policy, parse=parse,
                            cleanup=cfg.cleanup, record_id=row["id"])
    return result.to_dict()


def _swaps_record(record: CorpusRecord, cfg: PipelineConfig, gazetteer) -> dict:
    flagged_dicts = record.extra.get("flagged")
    if flagged_dicts is None:
        raise ValidationError(f"record {record.id!r} has no 'flagged' field; run detect first")
    fieldname = record.summary_field(cfg.field)
    text = record.text_for(fieldname)
    flagged = [EntityMention.from_dict(d) for d in flagged_dicts]
    source_mentions = extract_entities(
        record.source, cfg.backend,
        annotations=_annotations(record, "source", cfg), gazetteer=gazetteer)
    cands = enumerate_swaps(text, flagged, source_mentions, cfg.cap, record.id)
    out = cands.to_dict()
    out["ranking"] = rank_candidates(cands, record.source, cfg.matcher(),
                                     "rules", gazetteer=gazetteer)
    return out


def _eval_row(item: tuple, cfg: PipelineConfig, gazetteer) -> dict:
    record, hyp, changed = item
    matcher = cfg.matcher()
    row = {"id": record.id}
    row["e_p_src"] = entity_precision(
        hyp, record.source, matcher, cfg.backend,
        summary_annotations=None, source_annotations=_annotations(record, "source", cfg),
        gazetteer=gazetteer)
    row["e_r_ref"] = entity_recall(
        record.reference, hyp, matcher, cfg.backend,
        reference_annotations=_annotations(record, "reference", cfg),
        gazetteer=gazetteer)
    row["r1"] = rouge_n(hyp, record.reference, 1, stem=cfg.rouge_stem).scaled()[2]
    row["r2"] = rouge_n(hyp, record.reference, 2, stem=cfg.rouge_stem).scaled()[2]
    row["rl"] = rouge_l(hyp, record.reference, stem=cfg.rouge_stem,
                        summary_level=cfg.rouge_l_summary).scaled()[2]
    row["r1_c"] = r1_clean(hyp, record.reference, record.source, matcher,
                           cfg.backend, stem=cfg.rouge_stem,
                           reference_annotations=_annotations(record, "reference", cfg),
                           gazetteer=gazetteer).scaled()[2]
    row["changed"] = changed
    if cfg.entity_agg == "micro":
        row["_ep"] = entity_counts(hyp, record.source, matcher, cfg.backend,
                                   gazetteer=gazetteer)
        row["_er"] = entity_counts(record.reference, hyp, matcher, cfg.backend,
                                   gazetteer=gazetteer)
    return row


def _load_gazetteer(cfg: PipelineConfig):
    return load_gazetteer(cfg.gazetteer_dir) if cfg.gazetteer_dir else None


def _read_compression(path: str) -> list[CompressionPair]:
    pairs = []
    for lineno, row in enumerate(read_jsonl(path), start=1):
        pairs.append(CompressionPair.from_dict(row, f"{path}, line {lineno}"))
    return pairs


def _read_external(path: str) -> dict:
    """Ingest external metric values: lines {id, metric, value}.

    Rows with id "*" set the corpus value directly; otherwise per-record
    values are averaged.
    """
    star: dict = {}
    values = defaultdict(list)
    for lineno, row in enumerate(read_jsonl(path, required=("id", "metric", "value")),
                                 start=1):
        where = f"{path}, line {lineno}"
        metric = row["metric"]
        if metric not in EXTERNAL_METRICS:
            raise ValidationError(f"{where}: unknown metric {metric!r}")
        value = row["value"]
        if not isinstance(value, (int, float)) or isinstance(value, bool):
            raise ValidationError(f"{where}: value must be a number")
        if row["id"] == "*":
            if metric in star:
                raise ValidationError(f"{where}: duplicate corpus-level value for {metric!r}")
            star[metric] = float(value)
        else:
            values[metric].append(float(value))
    out = {m: sum(v) / len(v) for m, v in values.items()}
    out.update(star)
    return out


def cmd_ner(args, cfg: PipelineConfig) -> None:
    records = read_records(args.inp)
    worker = functools.partial(_ner_record, cfg=cfg, gazetteer=_load_gazetteer(cfg))
    rows = _parallel_map(worker, records, args.workers)
    rows.sort(key=lambda r: r["id"])
    write_jsonl(args.out, rows)
    write_manifest(args.out, "ner", cfg, {"records": len(rows)})


def cmd_detect(args, cfg: PipelineConfig) -> None:
    records = read_records(args.inp)
    worker = functools.partial(_detect_record, cfg=cfg, gazetteer=_load_gazetteer(cfg))
    rows = _parallel_map(worker, records, args.workers)
    rows.sort(key=lambda r: r["id"])
    write_jsonl(args.out, rows)
    flagged_total = sum(len(r["flagged"]) for r in rows)
    with_flags = sum(1 for r in rows if r["flagged"])
    write_manifest(args.out, "detect", cfg, {
        "records": len(rows), "flagged_mentions": flagged_total,
        "records_with_flags": with_flags})


def cmd_mark(args, cfg: PipelineConfig) -> None:
    records = read_records(args.inp)
    worker = functools.partial(_mark_record, cfg=cfg)
    rows = _parallel_map(worker, records, args.workers)
    rows.sort(key=lambda r: r["id"])
    write_jsonl(args.out, rows)
    write_manifest(args.out, "mark", cfg, {"records": len(rows)})


def cmd_mask(args, cfg: PipelineConfig) -> None:
    records = read_records(args.inp)
    worker = functools.partial(_mask_record, cfg=cfg, gazetteer=_load_gazetteer(cfg))
    rows = _parallel_map(worker, records, args.workers)
    rows.sort(key=lambda r: r["id"])
    write_jsonl(args.out, rows)
    write_manifest(args.out, "mask", cfg, {"records": len(rows)})


def cmd_filter_compression(args, cfg: PipelineConfig) -> None:
    pairs = _read_compression(args.inp)
    kept, counts = filter_compression(pairs, cfg.min_ratio)
    kept.sort(key=lambda p: p.id)
    write_jsonl(args.out, [p.to_dict() for p in kept])
    write_manifest(args.out, "filter-compression", cfg, counts)


def cmd_perturber_data(args, cfg: PipelineConfig) -> None:
    pairs = _read_compression(args.inp)
    out_pairs, counts = emit_perturber_pairs(
        pairs, cfg.sep, "rules", cfg.matcher(), gazetteer=_load_gazetteer(cfg))
    out_pairs.sort(key=lambda p: p.id)
    write_jsonl(args.out, [p.to_dict() for p in out_pairs])
    write_manifest(args.out, "perturber-data", cfg, counts)


def cmd_insertion_tasks(args, cfg: PipelineConfig) -> None:
    records = read_records(args.inp)
    gazetteer = _load_gazetteer(cfg)
    tasks = []
    counts = {"records": len(records), "tasks": 0, "records_empty_pool": 0,
              "skipped_no_reference": 0}
    for record in records:
        if record.reference is None:
            counts["skipped_no_reference"] += 1
            continue
        record_tasks = make_insertion_tasks(record, cfg.seed, cfg.backend,
                                            cfg.matcher(), gazetteer=gazetteer)
        if not record_tasks:
            counts["records_empty_pool"] += 1
        tasks.extend(record_tasks)
    counts["tasks"] = len(tasks)
    tasks.sort(key=lambda t: t.task_id)
    write_jsonl(args.out, [t.to_dict() for t in tasks])
    if args.requests:
        write_jsonl(args.requests,
                    [{"task_id": t.task_id, "input": t.perturber_input(cfg.sep)}
                     for t in tasks])
    write_manifest(args.out, "insertion-tasks", cfg, counts)


def cmd_editor_data(args, cfg: PipelineConfig) -> None:
    records = {r.id: r for r in read_records(args.inp)}
    task_rows = read_jsonl(args.tasks, required=("task_id", "record_id", "k",
                                                 "reference", "entities", "seed"))
    responses: dict[str, str] = {}
    for lineno, row in enumerate(read_jsonl(args.responses,
                                            required=("task_id", "output")), start=1):
        where = f"{args.responses}, line {lineno}"
        if row["task_id"] in responses:
            raise ValidationError(f"{where}: duplicate task_id {row['task_id']!r}")
        responses[row["task_id"]] = row["output"]
    pairs = []
    totals = {"tasks": len(task_rows), "emitted": 0,
              "rejected_missing_entity": 0, "overlap_dropped": 0,
              "missing_response": 0}
    from .synthesis import InsertionTask

    for row in task_rows:
        record = records.get(row["record_id"])
        if record is None:
            raise ValidationError(f"{args.tasks}: unknown record id {row['record_id']!r}")
        task = InsertionTask(record_id=row["record_id"], reference=row["reference"],
                             k=row["k"], entities=tuple(row["entities"]),
                             seed=row["seed"])
        perturbed = responses.get(task.task_id)
        if perturbed is None:
            totals["missing_response"] += 1
            continue
        pair, counts = emit_editor_pair(record, task, perturbed, cfg.sep,
                                        cfg.matcher(), cfg.tokens())
        for key in ("emitted", "rejected_missing_entity", "overlap_dropped"):
            totals[key] += counts[key]
        if pair is not None:
            pairs.append(pair)
    pairs.sort(key=lambda p: p.id)
    write_jsonl(args.out, [p.to_dict() for p in pairs])
    write_manifest(args.out, "editor-data", cfg, totals)


def cmd_clean_subset(args, cfg: PipelineConfig) -> None:
    records = read_records(args.inp)
    kept, counts = clean_subset(records, cfg.backend, cfg.matcher(),
                                gazetteer=_load_gazetteer(cfg))
    kept.sort(key=lambda r: r.id)
    write_jsonl(args.out, [r.to_dict() for r in kept])
    write_manifest(args.out, "clean-subset", cfg, counts)


def cmd_sample(args, cfg: PipelineConfig) -> None:
    rows = read_jsonl(args.inp, required=("id",))
    chosen = sample(rows, cfg.sample_n, cfg.seed)
    write_jsonl(args.out, chosen)
    write_manifest(args.out, "sample", cfg,
                   {"input": len(rows), "sampled": len(chosen)})


def cmd_edit(args, cfg: PipelineConfig) -> None:
    rows = read_jsonl(args.inp, required=("id", "marked"))
    parses = read_parse_file(args.parse) if args.parse else None
    worker = functools.partial(_edit_row, cfg=cfg, parses=parses)
    results = _parallel_map(worker, rows, args.workers)
    results.sort(key=lambda r: r["id"])
    write_jsonl(args.out, results)
    write_manifest(args.out, "edit", cfg, {
        "records": len(results),
        "changed": sum(1 for r in results if r["changed"])})


def cmd_swaps(args, cfg: PipelineConfig) -> None:
    records = read_records(args.inp)
    worker = functools.partial(_swaps_record, cfg=cfg, gazetteer=_load_gazetteer(cfg))
    rows = _parallel_map(worker, records, args.workers)
    rows.sort(key=lambda r: r["id"])
    write_jsonl(args.out, rows)
    write_manifest(args.out, "swaps", cfg, {
        "records": len(rows),
        "candidates": sum(len(r["candidates"]) for r in rows)})


def cmd_external_edit(args, cfg: PipelineConfig) -> None:
    rows = read_jsonl(args.inp, required=("id", "source", "marked"))
    items = [(r["id"], r["source"], r["marked"]) for r in rows]
    results = run_external_editor(items, args.exchange, cfg.sep, cfg.tokens(),
                                  timeout=args.timeout)
    write_jsonl(args.out, [r.to_dict() for r in results])
    write_manifest(args.out, "external-edit", cfg, {
        "records": len(results),
        "changed": sum(1 for r in results if r.changed)})


def _hyp_text(row: dict, path: str, lineno_hint: str = "") -> tuple[str, bool | None]:
    if "edited" in row:
        changed = row.get("changed")
        return row["edited"], changed if isinstance(changed, bool) else None
    if "hypothesis" in row:
        return row["hypothesis"], None
    raise ValidationError(f"{path}: row {row.get('id')!r} has neither 'edited' nor 'hypothesis'")


def cmd_eval(args, cfg: PipelineConfig) -> None:
    refs = {r.id: r for r in read_records(args.ref)}
    hyp_rows = read_jsonl(args.hyp, required=("id",))
    items = []
    for row in hyp_rows:
        record = refs.get(row["id"])
        if record is None:
            raise ValidationError(f"{args.hyp}: id {row['id']!r} not present in {args.ref}")
        if record.reference is None:
            raise ValidationError(f"{args.ref}: record {row['id']!r} has no reference")
        text, changed = _hyp_text(row, args.hyp)
        items.append((record, text, changed))
    worker = functools.partial(_eval_row, cfg=cfg, gazetteer=_load_gazetteer(cfg))
    rows = _parallel_map(worker, items, args.workers)
    rows.sort(key=lambda r: r["id"])
    micro = None
    if cfg.entity_agg == "micro":
        ep = [r.pop("_ep") for r in rows]
        er = [r.pop("_er") for r in rows]
        micro = {}
        for key, counts in (("e_p_src", ep), ("e_r_ref", er)):
            grounded = sum(g for g, _ in counts)
            total = sum(t for _, t in counts)
            micro[key] = 100.0 if total == 0 else 100.0 * grounded / total
    external = _read_external(args.external) if args.external else None
    report = build_report(rows, external)
    if micro:
        report.aggregates.update(micro)
    payload = json.dumps(report.to_dict(), ensure_ascii=False, indent=2) + "\n"
    if args.out:
        write_text(args.out, payload)
        write_text(args.out + ".tsv", report.tsv(args.label))
        write_manifest(args.out, "eval", cfg, {"records": len(rows)})
    else:
        sys.stdout.write(payload)


def cmd_report(args, cfg: PipelineConfig) -> None:
    rows = read_jsonl(args.rows, required=("id",))
    external = _read_external(args.external) if args.external else None
    report = build_report(rows, external)
    payload = json.dumps(report.to_dict(), ensure_ascii=False, indent=2) + "\n"
    if args.out:
        write_text(args.out, payload)
        write_text(args.out + ".tsv", report.tsv(args.label))
        write_manifest(args.out, "report", cfg, {"records": len(rows)})
    else:
        sys.stdout.write(payload)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="factedit",
                     description="Compression-based summary post-editing toolkit")
    sub = parser.add_subparsers(dest="command", metavar="subcommand")

    def add(name, handler, helptext, **io):
        p = sub.add_parser(name, help=helptext)
        if io.get("inp", True):
            p.add_argument("--in", dest="inp", required=True, help="input JSONL")
        if io.get("out", True):
            p.add_argument("--out", required=io.get("out_required", True),
                           help="output path")
        _add_config_flags(p)
        p.set_defaults(handler=handler)
        return p

    add("ner", cmd_ner, "annotate records with rule-based entities")
    add("detect", cmd_detect, "flag extrinsic entities and mark the summary")
    add("mark", cmd_mark, "wrap already-flagged entities in special tokens")
    add("mask", cmd_mask, "replace entities with typed mask slots")
    add("filter-compression", cmd_filter_compression,
        "drop aggressively compressed sentence pairs")
    add("perturber-data", cmd_perturber_data,
        "build perturber training pairs from compression data")
    p = add("insertion-tasks", cmd_insertion_tasks,
            "draw entity insertion tasks from clean records")
    p.add_argument("--requests", help="also write perturber request file")
    p = add("editor-data", cmd_editor_data,
            "build post-editor pairs from perturber outputs")
    p.add_argument("--tasks", required=True, help="insertion task JSONL")
    p.add_argument("--responses", required=True, help="perturber response JSONL")
    add("clean-subset", cmd_clean_subset,
        "keep records whose reference is fully grounded")
    add("sample", cmd_sample, "seeded uniform sample without replacement")
    p = add("edit", cmd_edit, "deterministic deletion-based post-editing")
    p.add_argument("--parse", help="dependency parse sidecar file")
    add("swaps", cmd_swaps, "enumerate entity-swap candidate summaries")
    p = add("external-edit", cmd_external_edit,
            "round-trip marked records through an external editor")
    p.add_argument("--exchange", required=True, help="exchange directory")
    p.add_argument("--timeout", type=float, default=60.0)
    p = sub.add_parser("eval", help="score hypotheses against a corpus")
    p.add_argument("--hyp", required=True, help="edited/hypothesis JSONL")
    p.add_argument("--ref", required=True, help="corpus JSONL with source+reference")
    p.add_argument("--out", help="report JSON path (stdout when omitted)")
    p.add_argument("--external", help="external metric ingest JSONL")
    p.add_argument("--label", default="run", help="row label for the TSV summary")
    _add_config_flags(p)
    p.set_defaults(handler=cmd_eval)
    p = sub.add_parser("report", help="aggregate precomputed metric rows")
    p.add_argument("--rows", required=True, help="per-record metric rows JSONL")
    p.add_argument("--out", help="report JSON path (stdout when omitted)")
    p.add_argument("--external", help="external metric ingest JSONL")
    p.add_argument("--label", default="run")
    _add_config_flags(p)
    p.set_defaults(handler=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if not getattr(args, "handler", None):
        parser.print_usage(sys.stderr)
        return 1
    try:
        cfg = _config_from_args(args)
        args.handler(args, cfg)
        return 0
    except FacteditError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception:
        traceback.print_exc()
        return 2


if __name__ == "__main__":
    sys.exit(main())
