"""Structured captions and training-prompt sampling.

Each clip gets nine category captions from a captioning provider plus a
summary merged from them by a second provider. At training time a prompt
is drawn as: one of brief / detailed / summarized with equal odds; a brief
or detailed base is then extended with one of the other seven categories,
chosen uniformly.
"""

from __future__ import annotations

from dataclasses import dataclass, fields, replace
from importlib import resources
from typing import Mapping, Protocol, Sequence

from .errors import EmptySummary, IncompleteCaptions, ProviderMalformedResponse, SchemaViolation
from .providers import CAPTION_FIELDS
from .purification import sample_positions
from .rng import PortableRNG

TEMPLATE_VERSION = "v1"

CATEGORY_LABELS = {
    "brief": "Brief",
    "detailed": "Detailed",
    "background": "Background",
    "theme": "Theme",
    "style": "Style",
    "shot_type": "ShotType",
    "camera_movement": "CameraMovement",
    "lighting": "Lighting",
    "atmosphere": "Atmosphere",
    "summarized": "Summarized",
}
BASES = ("brief", "detailed", "summarized")
SUPPLEMENTS = tuple(f for f in CAPTION_FIELDS if f not in BASES)


def load_template(name: str, version: str = TEMPLATE_VERSION) -> str:
    return resources.files("uvcurate").joinpath(f"prompts/{name}_{version}.txt").read_text("utf-8")


@dataclass(frozen=True)
class StructuredCaption:
    brief: str = ""
    detailed: str = ""
    background: str = ""
    theme: str = ""
    style: str = ""
    shot_type: str = ""
    camera_movement: str = ""
    lighting: str = ""
    atmosphere: str = ""
    summarized: str = ""

    @property
    def categories(self) -> dict[str, str]:
        return {name: getattr(self, name) for name in CAPTION_FIELDS}

    @property
    def status(self) -> str:
        full = all(v.strip() for v in self.categories.values()) and self.summarized.strip()
        return "complete" if full else "partial"

    @property
    def word_counts(self) -> dict[str, int]:
        return {f.name: len(getattr(self, f.name).split()) for f in fields(self)}

    @property
    def total_words(self) -> int:
        return sum(self.word_counts.values())

    def to_dict(self) -> dict:
        d = {f.name: getattr(self, f.name) for f in fields(self)}
        d["word_counts"] = self.word_counts
        return d

    @classmethod
    def from_dict(cls, d: Mapping) -> "StructuredCaption":
        names = {f.name for f in fields(cls)}
        extra = set(d) - names - {"word_counts"}
        if extra:
            raise SchemaViolation(f"unknown caption fields {sorted(extra)}")
        return cls(**{k: d[k] for k in names if k in d})


class CaptionProvider(Protocol):
    def request(self, kind: str, clip_id: str, frames: Sequence, payload: Mapping | None = None): ...


def request_captions(clip_id: str, frames: Sequence, provider: CaptionProvider, n_frames: int = 8,
                     source_id: str | None = None) -> StructuredCaption:
    """Ask the captioning provider for the nine category captions."""
    picked = [frames[i] for i in sample_positions(len(frames), n_frames)]
    payload = {
        "prompt": load_template("caption").format(n_frames=len(picked)),
        "template_version": TEMPLATE_VERSION,
        "source_id": source_id or clip_id,
    }
    try:
        result = provider.request("caption", clip_id, picked, payload)
    except ProviderMalformedResponse as e:
        raise SchemaViolation(str(e)) from e
    empty = [name for name in CAPTION_FIELDS if not result[name].strip()]
    if empty:
        raise SchemaViolation(f"empty caption fields: {empty}")
    return StructuredCaption(**result)


def summarize(captions: StructuredCaption, provider: CaptionProvider, clip_id: str = "") -> str:
    """Merge the nine category captions into one summary via the provider."""
    missing = [name for name, text in captions.categories.items() if not text.strip()]
    if missing:
        raise SchemaViolation(f"cannot summarize; missing categories {missing}")
    listing = "\n".join(f"{CATEGORY_LABELS[k]}: {v}" for k, v in captions.categories.items())
    payload = {
        "prompt": load_template("summary").format(captions=listing),
        "template_version": TEMPLATE_VERSION,
        "caption": captions.categories,
    }
    text = provider.request("summary", clip_id, [], payload)
    if not text.strip():
        raise EmptySummary(f"summary provider returned an empty summary for {clip_id!r}")
    return text


def caption_clip(clip_id: str, frames: Sequence, provider: CaptionProvider, n_frames: int = 8,
                 source_id: str | None = None) -> StructuredCaption:
    captions = request_captions(clip_id, frames, provider, n_frames, source_id)
    return replace(captions, summarized=summarize(captions, provider, clip_id))


# -- prompt sampling -------------------------------------------------------------

@dataclass(frozen=True)
class PromptSample:
    base: str
    supplement: str | None
    text: str

    def __post_init__(self):
        if (self.supplement is None) != (self.base == "Summarized"):
            raise ValueError("a supplement is present exactly when the base is not Summarized")
        if self.supplement in ("Brief", "Detailed", "Summarized"):
            raise ValueError(f"{self.supplement} cannot be a supplement")

    def to_dict(self) -> dict:
        return {"base": self.base, "supplement": self.supplement, "text": self.text}


def sample_prompt(captions: StructuredCaption, rng, labels: bool = False) -> PromptSample:
    """Draw one training prompt.

    ``rng`` needs a ``randbelow(n)`` method (see :class:`~uvcurate.rng.PortableRNG`).
    The base is drawn first from (brief, detailed, summarized); a supplement
    index is drawn only for brief/detailed bases.
    """
    if captions.status != "complete":
        raise IncompleteCaptions("prompt sampling needs all nine categories and a summary")

    def part(name):
        text = getattr(captions, name)
        return f"{CATEGORY_LABELS[name]}: {text}" if labels else text

    base = BASES[rng.randbelow(len(BASES))]
    if base == "summarized":
        return PromptSample("Summarized", None, part(base))
    supplement = SUPPLEMENTS[rng.randbelow(len(SUPPLEMENTS))]
    return PromptSample(CATEGORY_LABELS[base], CATEGORY_LABELS[supplement], f"{part(base)} {part(supplement)}")


def prompt_stream(captions: StructuredCaption, seed: int, clip_id: str, n: int, labels: bool = False) -> list[PromptSample]:
    """``n`` prompts from the ``(seed, clip_id)`` stream; identical on every run."""
    rng = PortableRNG(seed, clip_id)
    return [sample_prompt(captions, rng, labels) for _ in range(n)]
