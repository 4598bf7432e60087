"""Line-delimited corpus records and their JSON serialization."""

from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass, field
from typing import Any, Iterable

from .errors import ValidationError

_KNOWN_FIELDS = ("id", "source", "reference", "hypothesis", "entities")
TEXT_FIELDS = ("source", "reference", "hypothesis")


@dataclass
class CorpusRecord:
    """One document/reference/hypothesis triple flowing through the pipeline.

    `entities` holds optional precomputed mentions per text field, each as a
    dict with surface/type/start/end. Unknown keys from the input line are
    preserved in `extra` and written back on serialization.
    """

    id: str
    source: str
    reference: str | None = None
    hypothesis: str | None = None
    entities: dict[str, list[dict]] | None = None
    extra: dict[str, Any] = field(default_factory=dict)

    def text_for(self, fieldname: str) -> str | None:
        if fieldname == "source":
            return self.source
        if fieldname == "reference":
            return self.reference
        if fieldname == "hypothesis":
            return self.hypothesis
        return None

    def summary_field(self, preferred: str | None = None) -> str:
        """Which field carries the summary being processed."""
        if preferred:
            if self.text_for(preferred) is None:
                raise ValidationError(f"record {self.id!r} has no {preferred!r} field")
            return preferred
        return "hypothesis" if self.hypothesis is not None else "reference"

    def annotations_for(self, fieldname: str) -> list[dict] | None:
        if self.entities is None:
            return None
        return self.entities.get(fieldname)

    def to_dict(self) -> dict:
        d: dict[str, Any] = {"id": self.id, "source": self.source}
        if self.reference is not None:
            d["reference"] = self.reference
        if self.hypothesis is not None:
            d["hypothesis"] = self.hypothesis
        if self.entities is not None:
            d["entities"] = self.entities
        for k in sorted(self.extra):
            d[k] = self.extra[k]
        return d

    @classmethod
    def from_dict(cls, d: dict, where: str = "record") -> "CorpusRecord":
        if not isinstance(d, dict):
            raise ValidationError(f"{where}: expected a JSON object")
        rid = d.get("id")
        if not isinstance(rid, str) or not rid:
            raise ValidationError(f"{where}: field 'id' must be a non-empty string")
        source = d.get("source")
        if not isinstance(source, str):
            raise ValidationError(f"{where}: field 'source' must be a string")
        reference = d.get("reference")
        hypothesis = d.get("hypothesis")
        for name, val in (("reference", reference), ("hypothesis", hypothesis)):
            if val is not None and not isinstance(val, str):
                raise ValidationError(f"{where}: field {name!r} must be a string")
        if reference is None and hypothesis is None:
            raise ValidationError(f"{where}: need at least one of 'reference'/'hypothesis'")
        entities = d.get("entities")
        if entities is not None:
            _check_entities(entities, d, where)
        extra = {k: v for k, v in d.items() if k not in _KNOWN_FIELDS}
        return cls(id=rid, source=source, reference=reference,
                   hypothesis=hypothesis, entities=entities, extra=extra)


def _check_entities(entities: Any, record: dict, where: str) -> None:
    if not isinstance(entities, dict):
        raise ValidationError(f"{where}: 'entities' must map field names to mention lists")
    for fieldname, mentions in entities.items():
        if fieldname not in TEXT_FIELDS:
            raise ValidationError(f"{where}: entities for unknown field {fieldname!r}")
        text = record.get(fieldname)
        if not isinstance(mentions, list):
            raise ValidationError(f"{where}: entities[{fieldname!r}] must be a list")
        for m in mentions:
            if not isinstance(m, dict) or not {"surface", "type", "start", "end"} <= set(m):
                raise ValidationError(
                    f"{where}: mentions need surface/type/start/end keys")
            if isinstance(text, str):
                s, e = m["start"], m["end"]
                if not (isinstance(s, int) and isinstance(e, int) and 0 <= s < e <= len(text)):
                    raise ValidationError(f"{where}: bad mention span [{s}, {e})")
                if text[s:e] != m["surface"]:
                    raise ValidationError(
                        f"{where}: mention surface {m['surface']!r} does not match its span")


def read_records(path: str) -> list[CorpusRecord]:
    """Read a JSONL corpus; diagnostics carry the offending line number."""
    records = []
    seen: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            where = f"{path}, line {lineno}"
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValidationError(f"{where}: invalid JSON ({exc.msg})") from exc
            rec = CorpusRecord.from_dict(obj, where)
            if rec.id in seen:
                raise ValidationError(f"{where}: duplicate record id {rec.id!r}")
            seen.add(rec.id)
            records.append(rec)
    return records


def read_jsonl(path: str, required: tuple[str, ...] = ()) -> list[dict]:
    """Read generic JSONL rows with line-numbered validation."""
    rows = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            where = f"{path}, line {lineno}"
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValidationError(f"{where}: invalid JSON ({exc.msg})") from exc
            if not isinstance(obj, dict):
                raise ValidationError(f"{where}: expected a JSON object")
            for key in required:
                if key not in obj:
                    raise ValidationError(f"{where}: missing field {key!r}")
            rows.append(obj)
    return rows


def dumps_row(obj: dict) -> str:
    return json.dumps(obj, ensure_ascii=False)


def write_jsonl(path: str, rows: Iterable[dict]) -> None:
    """Atomic JSONL write: temp file in the target directory, then rename."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".tmp-", dir=directory)
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            for row in rows:
                fh.write(dumps_row(row))
                fh.write("\n")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_text(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".tmp-", dir=directory)
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
