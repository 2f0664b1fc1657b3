"""Detector configuration: grid geometry, gating thresholds, egg template."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from ..errors import InvalidConfigError
from ..grid import CELL_PX, HEATMAP_SIDE, IMAGE_SIDE

# Width of the darkness band above the template intensity that still counts
# as "egg-dark", both as the pixel mask cut and the blob mean-intensity gate.
DARK_BAND = 0.15

# Blob area must fall within [0.5x, 2x] of the template ellipse area.
AREA_GATE = (0.5, 2.0)


@dataclass(frozen=True)
class EggTemplate:
    """Matched-filter target: a dark ellipse of known size and intensity."""

    major_px: float = 10.0
    minor_px: float = 6.0
    intensity: float = 0.15

    @property
    def area_px(self) -> float:
        return math.pi * self.major_px * self.minor_px / 4.0

    @property
    def dark_cut(self) -> float:
        return self.intensity + DARK_BAND


@dataclass(frozen=True)
class ModelMeta:
    """Training settings of the original embedded model; descriptive only."""

    layers: int = 1
    filters: int = 32
    kernel_size: int = 1
    strides: int = 1
    activation: str = "ReLU6"
    alpha: float = 0.35
    training_cycles: int = 200
    learning_rate: float = 0.001


@dataclass(frozen=True)
class DetectorConfig:
    grid_cell_px: int = CELL_PX
    heatmap_side: int = HEATMAP_SIDE
    confidence_threshold: float = 0.80
    snapshots_per_reading: int = 5
    snapshot_interval_s: float = 2.0
    match_radius_cells: float = 2.0
    processing_margin_s: float = 2.0
    template: EggTemplate = field(default_factory=EggTemplate)
    model_meta: ModelMeta = field(default_factory=ModelMeta)

    def __post_init__(self):
        if self.heatmap_side * self.grid_cell_px != IMAGE_SIDE:
            raise InvalidConfigError(
                ["heatmap_side", "grid_cell_px"],
                f"heatmap_side*grid_cell_px must equal {IMAGE_SIDE}, got "
                f"{self.heatmap_side}x{self.grid_cell_px}",
            )
        if not (0.0 < self.confidence_threshold <= 1.0):
            raise InvalidConfigError(["confidence_threshold"])
        if self.snapshots_per_reading < 1:
            raise InvalidConfigError(["snapshots_per_reading"])
        if self.snapshot_interval_s < 0 or self.processing_margin_s < 0:
            raise InvalidConfigError(["snapshot_interval_s", "processing_margin_s"])
        if self.match_radius_cells < 0:
            raise InvalidConfigError(["match_radius_cells"])

    @property
    def image_side(self) -> int:
        return self.heatmap_side * self.grid_cell_px
