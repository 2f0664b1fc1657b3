"""One egg-count reading: 5 snapshots, cross-snapshot identity, averaged scores.

An egg is reported iff its track appears in every snapshot of the reading and
the mean of its per-snapshot confidences clears the acceptance threshold.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import SnapshotCountError
from ..simclock import ts_round
from .config import DetectorConfig
from .heatmap import score_heatmap
from .objects import DetectionObject, extract_objects


@dataclass(frozen=True)
class CameraContext:
    sensor_model: str = "ov5640-sim"
    hw_version: str = "1.0"
    fw_version: str = "1.0.0"
    hal_version: str = "1.0"
    os_version: str = "sim-os 1.0"
    frame_size: str = "512x512"
    pixformat: str = "GRAYSCALE"


def default_camera() -> CameraContext:
    return CameraContext()


@dataclass(frozen=True)
class EggObservation:
    egg_id: str                      # "<reading>.<j>"
    centroid: tuple[float, float]    # mean (x, y) over snapshots
    avg_confidence: float


@dataclass
class ReadingResult:
    reading_seq: int
    egg_count: int
    eggs: list                       # list[EggObservation]
    timestamp: float                 # Unix seconds at reading completion
    camera_context: CameraContext
    snapshot_refs: list = field(default_factory=list)

    @property
    def confidences(self) -> tuple[float, ...]:
        return tuple(e.avg_confidence for e in self.eggs)


def reading_latency(cfg: DetectorConfig) -> float:
    """Modeled sensing latency: inter-snapshot waits plus processing margin."""
    return (cfg.snapshots_per_reading - 1) * cfg.snapshot_interval_s \
        + cfg.processing_margin_s


def _clock_now(clock) -> float:
    return clock.now if hasattr(clock, "now") else float(clock)


class _Track:
    __slots__ = ("ref_yx", "objects")

    def __init__(self, obj: DetectionObject):
        self.ref_yx = obj.centroid_yx
        self.objects = [obj]


def associate_tracks(per_snapshot_objects, cfg: DetectorConfig) -> list[_Track]:
    """Greedy nearest-centroid association across snapshots.

    Candidate pairs are taken in ascending (distance, object (y,x), track (y,x))
    order, so equidistant candidates resolve to the lower (y, x) centroid.
    """
    snapshots = list(per_snapshot_objects)
    radius_px = cfg.match_radius_cells * cfg.grid_cell_px
    tracks = [_Track(o) for o in snapshots[0]] if snapshots else []
    for objs in snapshots[1:]:
        pairs = []
        for oi, obj in enumerate(objs):
            for ti, track in enumerate(tracks):
                d = math.dist(obj.centroid_yx, track.ref_yx)
                if d <= radius_px:
                    pairs.append((d, obj.centroid_yx, track.ref_yx, oi, ti))
        pairs.sort()
        taken_obj: set[int] = set()
        taken_track: set[int] = set()
        for _d, _oyx, _tyx, oi, ti in pairs:
            if oi in taken_obj or ti in taken_track:
                continue
            taken_obj.add(oi)
            taken_track.add(ti)
            tracks[ti].objects.append(objs[oi])
        for oi, obj in enumerate(objs):
            if oi not in taken_obj:
                tracks.append(_Track(obj))
    return tracks


def run_reading(
    scene_images,
    cfg: DetectorConfig,
    clock,
    *,
    reading_seq: int = 1,
    camera: CameraContext | None = None,
    archive_dir=None,
    device_id: str = "dev",
) -> ReadingResult:
    """Score snapshots of one scene and report the eggs passing the gate."""
    images = [np.asarray(img, dtype=np.float64) for img in scene_images]
    if len(images) != cfg.snapshots_per_reading:
        raise SnapshotCountError(
            f"expected {cfg.snapshots_per_reading} snapshots, got {len(images)}"
        )
    per_snapshot = [extract_objects(score_heatmap(img, cfg), cfg) for img in images]
    tracks = associate_tracks(per_snapshot, cfg)

    accepted = []
    for track in tracks:
        if len(track.objects) != cfg.snapshots_per_reading:
            continue
        avg_conf = sum(o.confidence for o in track.objects) / len(track.objects)
        if avg_conf < cfg.confidence_threshold:
            continue
        xs = [o.centroid[0] for o in track.objects]
        ys = [o.centroid[1] for o in track.objects]
        centroid = (sum(xs) / len(xs), sum(ys) / len(ys))
        accepted.append((centroid, avg_conf))
    accepted.sort(key=lambda item: (item[0][1], item[0][0]))

    eggs = [
        EggObservation(
            egg_id=f"{reading_seq}.{j + 1}",
            centroid=centroid,
            avg_confidence=avg_conf,
        )
        for j, (centroid, avg_conf) in enumerate(accepted)
    ]

    refs = [
        f"{device_id}-r{reading_seq:05d}-s{i + 1}"
        for i in range(cfg.snapshots_per_reading)
    ]
    if archive_dir is not None:
        from ..synthgen import write_pgm

        out = Path(archive_dir)
        out.mkdir(parents=True, exist_ok=True)
        for ref, img in zip(refs, images):
            write_pgm(out / f"{ref}.pgm", np.round(img * 255.0).astype(np.uint8))

    return ReadingResult(
        reading_seq=reading_seq,
        egg_count=len(eggs),
        eggs=eggs,
        timestamp=ts_round(_clock_now(clock) + reading_latency(cfg)),
        camera_context=camera or default_camera(),
        snapshot_refs=refs,
    )
