"""Pipeline configuration: one TOML file, every threshold overridable.

Defaults reproduce the published curation thresholds. Unknown keys are
errors. ``UVCURATE_CONFIG`` names the file when ``--config`` is not given.
"""

from __future__ import annotations

import os
import sys
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Mapping

import tomli_w

from .errors import ConfigError
from .params import PurifyThresholds, SplitParams, StatThresholds
from .providers import KINDS, Endpoint

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

ENV_VAR = "UVCURATE_CONFIG"


@dataclass(frozen=True)
class PipelineOptions:
    seed: int = 0
    workers: int = 1
    side_anchor: str = "edges"
    reject_dissolve: bool = False
    text_detection: str = "provider"
    caption_frames: int = 8
    prompt_labels: bool = False
    target_frames: int = 81
    samples_per_clip: int = 1
    sequence_fps_num: int = 30
    sequence_fps_den: int = 1

    def __post_init__(self):
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if self.side_anchor not in ("edges", "quarter_centers"):
            raise ConfigError(f"side_anchor must be 'edges' or 'quarter_centers', got {self.side_anchor!r}")
        if self.text_detection not in ("provider", "off"):
            raise ConfigError(f"text_detection must be 'provider' or 'off', got {self.text_detection!r}")
        if min(self.caption_frames, self.target_frames, self.samples_per_clip,
               self.sequence_fps_num, self.sequence_fps_den) < 1:
            raise ConfigError("frame counts and rates must be >= 1")


@dataclass(frozen=True)
class PipelineConfig:
    pipeline: PipelineOptions = field(default_factory=PipelineOptions)
    split: SplitParams = field(default_factory=SplitParams)
    stat: StatThresholds = field(default_factory=StatThresholds)
    purify: PurifyThresholds = field(default_factory=PurifyThresholds)
    providers: dict[str, Endpoint] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "pipeline": asdict(self.pipeline),
            "split": asdict(self.split),
            "stat": asdict(self.stat),
            "purify": asdict(self.purify),
            "providers": {k: asdict(v) for k, v in sorted(self.providers.items())},
        }

    def dumps(self) -> str:
        return tomli_w.dumps(self.to_dict())

    def with_overrides(self, **pipeline_fields) -> "PipelineConfig":
        values = {k: v for k, v in pipeline_fields.items() if v is not None}
        return replace(self, pipeline=replace(self.pipeline, **values)) if values else self


_SECTIONS = {
    "pipeline": PipelineOptions,
    "split": SplitParams,
    "stat": StatThresholds,
    "purify": PurifyThresholds,
}


def _build(cls, section: str, data: Mapping[str, Any]):
    if not isinstance(data, Mapping):
        raise ConfigError(f"[{section}] must be a table")
    known = {f.name: f for f in fields(cls)}
    unknown = sorted(set(data) - set(known))
    if unknown:
        raise ConfigError(f"unknown key(s) in [{section}]: {', '.join(unknown)}")
    values = {}
    for name, value in data.items():
        default = known[name].default
        if isinstance(default, bool) and not isinstance(value, bool):
            raise ConfigError(f"[{section}] {name} must be a boolean")
        if isinstance(default, float) and isinstance(value, int) and not isinstance(value, bool):
            value = float(value)
        if isinstance(default, int) and not isinstance(default, bool) and not isinstance(value, int):
            raise ConfigError(f"[{section}] {name} must be an integer")
        values[name] = value
    try:
        return cls(**values)
    except (ValueError, TypeError) as e:
        raise ConfigError(f"[{section}] {e}") from e


def config_from_dict(data: Mapping[str, Any]) -> PipelineConfig:
    unknown = sorted(set(data) - set(_SECTIONS) - {"providers"})
    if unknown:
        raise ConfigError(f"unknown section(s): {', '.join(unknown)}")
    parts = {name: _build(cls, name, data.get(name, {})) for name, cls in _SECTIONS.items()}
    providers = {}
    for kind, ep in (data.get("providers") or {}).items():
        if kind not in KINDS:
            raise ConfigError(f"unknown provider kind {kind!r}; expected one of {', '.join(KINDS)}")
        if "url" not in ep:
            raise ConfigError(f"[providers.{kind}] needs a url")
        providers[kind] = _build(Endpoint, f"providers.{kind}", ep)
    return PipelineConfig(providers=providers, **parts)


def loads(text: str) -> PipelineConfig:
    try:
        return config_from_dict(tomllib.loads(text))
    except tomllib.TOMLDecodeError as e:
        raise ConfigError(f"invalid TOML: {e}") from e


def load(path: str | os.PathLike | None = None) -> PipelineConfig:
    """Load ``path``, else ``$UVCURATE_CONFIG``, else the defaults."""
    path = path or os.environ.get(ENV_VAR)
    if not path:
        return PipelineConfig()
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from e
    return loads(text)
