"""Threshold sets for the filtering, splitting and gating stages.

Kept free of heavy imports so configuration handling stays fast.
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class StatThresholds:
    text_area_ratio: float = 0.02
    bad_frame_ratio: float = 0.05
    border_depth_ratio: float = 0.03
    border_mean_max: float = 3.0
    exposure_low: int = 5
    exposure_high: int = 250
    exposure_pixel_ratio: float = 0.12
    gray_variance_min: float = 1.2
    variance_bessel: bool = False
    border_mode: str = "union"
    text_sample_interval: int = 5

    def __post_init__(self):
        for name in ("text_area_ratio", "bad_frame_ratio", "border_depth_ratio", "exposure_pixel_ratio"):
            value = getattr(self, name)
            if not 0 < value < 1:
                raise ValueError(f"{name} must lie in (0, 1), got {value}")
        if not 0 <= self.exposure_low < self.exposure_high <= 255:
            raise ValueError("need 0 <= exposure_low < exposure_high <= 255")
        if self.border_mean_max <= 0 or self.gray_variance_min <= 0:
            raise ValueError("border_mean_max and gray_variance_min must be positive")
        if self.border_mode not in ("union", "per_side"):
            raise ValueError(f"border_mode must be 'union' or 'per_side', got {self.border_mode!r}")
        if self.text_sample_interval < 1:
            raise ValueError("text_sample_interval must be >= 1")


@dataclass(frozen=True)
class SplitParams:
    adaptive_threshold: float = 3.0
    min_content_score: float = 15.0
    window_radius: int = 2
    min_scene_len: int = 15
    dissolve_sim_threshold: float = 0.5

    def __post_init__(self):
        if self.window_radius < 1:
            raise ValueError("window_radius must be >= 1")
        if self.min_scene_len < 2:
            raise ValueError("min_scene_len must be >= 2")
        if self.adaptive_threshold <= 0 or self.min_content_score <= 0 or self.dissolve_sim_threshold <= 0:
            raise ValueError("thresholds must be positive")


@dataclass(frozen=True)
class PurifyThresholds:
    vtss_min: float = 0.01
    motion_min: float = 0.1
    motion_max: float = 100.0
    caption_sim_min: float = 0.2
    flow_sample_interval: int = 8
    flow_downscale: int = 512

    def __post_init__(self):
        if not self.motion_min < self.motion_max:
            raise ValueError("motion_min must be below motion_max")
        if self.flow_sample_interval < 1 or self.flow_downscale < 16:
            raise ValueError("flow_sample_interval >= 1 and flow_downscale >= 16 required")
