"""Centroid extraction: 4-connected active cells -> detection objects."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from ..grid import cell_center_xy
from .config import DetectorConfig
from .heatmap import HeatMap


@dataclass(frozen=True)
class DetectionObject:
    object_id: int
    centroid: tuple[float, float]        # (x, y) image pixels
    confidence: float                    # max member-cell score
    cell_footprint: frozenset            # {(row, col), ...}, 4-connected

    @property
    def centroid_yx(self) -> tuple[float, float]:
        return (self.centroid[1], self.centroid[0])


def extract_objects(hm: HeatMap, cfg: DetectorConfig) -> list[DetectionObject]:
    """Objects are 4-connected components of cells scoring >= the threshold.

    Centroid = score-weighted mean of member cell centers (image pixels);
    objects sorted by centroid (y, x); ids assigned 1..n in that order.
    """
    scores = hm.scores
    side = hm.side
    active = scores >= cfg.confidence_threshold
    seen = np.zeros_like(active, dtype=bool)
    raw = []
    for r in range(side):
        for c in range(side):
            if not active[r, c] or seen[r, c]:
                continue
            comp = []
            queue = deque([(r, c)])
            seen[r, c] = True
            while queue:
                cr, cc = queue.popleft()
                comp.append((cr, cc))
                for nr, nc in ((cr - 1, cc), (cr + 1, cc), (cr, cc - 1), (cr, cc + 1)):
                    if 0 <= nr < side and 0 <= nc < side \
                            and active[nr, nc] and not seen[nr, nc]:
                        seen[nr, nc] = True
                        queue.append((nr, nc))
            weights = np.array([scores[rc] for rc in comp])
            centers = np.array([cell_center_xy(rc[0], rc[1]) for rc in comp])
            total = weights.sum()
            cx, cy = (centers * weights[:, None]).sum(axis=0) / total
            raw.append(((cy, cx), float(weights.max()), frozenset(comp)))

    raw.sort(key=lambda item: item[0])
    return [
        DetectionObject(
            object_id=i + 1,
            centroid=(yx[1], yx[0]),
            confidence=conf,
            cell_footprint=cells,
        )
        for i, (yx, conf, cells) in enumerate(raw)
    ]
