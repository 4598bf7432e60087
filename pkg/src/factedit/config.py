"""Pipeline configuration resolution and run manifests.

Precedence: command-line flags > FACTEDIT_* environment variables > config
file > defaults. The resolved semantic configuration (no paths, no worker
counts, nothing time-dependent) is hashed into every run manifest so reruns
can be checked byte for byte.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import os
from dataclasses import dataclass

from .corpus import write_text
from .errors import ValidationError
from .textcore import MatcherConfig

ENV_PREFIX = "FACTEDIT_"


@dataclass(frozen=True)
class PipelineConfig:
    matcher_mode: str = "none"
    matcher_scope: str = "source-text"
    backend: str = "rules"
    gazetteer_dir: str | None = None
    open_token: str = "<rm>"
    close_token: str = "</rm>"
    sep: str = "<sep>"
    min_ratio: float = 0.75
    sample_n: int = 200_000
    seed: int = 0
    cap: int = 64
    policy: str = "token"
    cleanup: bool = True
    field: str | None = None
    rouge_stem: bool = False
    rouge_l_summary: bool = False
    entity_agg: str = "macro"

    def matcher(self) -> MatcherConfig:
        return MatcherConfig(mode=self.matcher_mode, scope=self.matcher_scope)

    def tokens(self) -> tuple[str, str]:
        return (self.open_token, self.close_token)

    def semantic_dict(self) -> dict:
        return dataclasses.asdict(self)


_FIELD_TYPES = {f.name: f.type for f in dataclasses.fields(PipelineConfig)}


def _coerce(name: str, raw: str, where: str):
    kind = _FIELD_TYPES[name]
    raw = raw.strip()
    if kind == "bool":
        low = raw.lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ValidationError(f"{where}: {name} expects a boolean, got {raw!r}")
    try:
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
    except ValueError as exc:
        raise ValidationError(f"{where}: {name} expects a number, got {raw!r}") from exc
    if raw.lower() == "none":
        return None
    return raw


def load_config_file(path: str) -> dict:
    """Key-value config file: one `key = value` per line, # comments allowed."""
    values: dict = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            where = f"{path}, line {lineno}"
            if "=" not in stripped:
                raise ValidationError(f"{where}: expected key = value")
            key, _, raw = stripped.partition("=")
            key = key.strip().replace("-", "_")
            if key not in _FIELD_TYPES:
                raise ValidationError(f"{where}: unknown config key {key!r}")
            values[key] = _coerce(key, raw, where)
    return values


def env_overrides(environ=None) -> dict:
    environ = os.environ if environ is None else environ
    values: dict = {}
    for key, raw in environ.items():
        if not key.startswith(ENV_PREFIX):
            continue
        name = key[len(ENV_PREFIX):].lower()
        if name in _FIELD_TYPES:
            values[name] = _coerce(name, raw, f"environment variable {key}")
    return values


def resolve_config(flag_values: dict | None = None,
                   config_path: str | None = None,
                   environ=None) -> PipelineConfig:
    values: dict = {}
    if config_path:
        values.update(load_config_file(config_path))
    values.update(env_overrides(environ))
    if flag_values:
        values.update({k: v for k, v in flag_values.items() if v is not None})
    try:
        return PipelineConfig(**values)
    except TypeError as exc:
        raise ValidationError(f"bad configuration: {exc}") from exc


def config_hash(cfg: PipelineConfig) -> str:
    canon = json.dumps(cfg.semantic_dict(), sort_keys=True)
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()


def write_manifest(out_path: str, subcommand: str, cfg: PipelineConfig,
                   counts: dict) -> str:
    """Write `<out>.manifest.json` next to an output file; returns its path."""
    manifest = {
        "subcommand": subcommand,
        "config": cfg.semantic_dict(),
        "config_hash": config_hash(cfg),
        "seed": cfg.seed,
        "counts": counts,
    }
    path = out_path + ".manifest.json"
    write_text(path, json.dumps(manifest, sort_keys=True, indent=2) + "\n")
    return path
