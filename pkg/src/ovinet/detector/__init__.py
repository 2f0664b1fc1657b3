from .config import DetectorConfig, EggTemplate, ModelMeta
from .blobs import BACKEND, blob_stats
from .heatmap import HeatMap, score_heatmap
from .objects import DetectionObject, extract_objects
from .reading import (
    CameraContext,
    EggObservation,
    ReadingResult,
    associate_tracks,
    default_camera,
    reading_latency,
    run_reading,
)

__all__ = [
    "BACKEND",
    "CameraContext",
    "DetectionObject",
    "DetectorConfig",
    "EggObservation",
    "EggTemplate",
    "HeatMap",
    "ModelMeta",
    "ReadingResult",
    "associate_tracks",
    "blob_stats",
    "default_camera",
    "extract_objects",
    "reading_latency",
    "run_reading",
    "score_heatmap",
]
