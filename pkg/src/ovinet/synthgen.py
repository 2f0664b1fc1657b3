"""Deterministic synthetic tongue-depressor scenes with exact ground truth.

A scene is a 512x512 greyscale raster: a light depressor strip on a darker
tray, carrying dark elliptical eggs and optional distractor objects (seeds,
soil, stones, grains). Distractors are constructed to be separable from eggs
by size or brightness, so a size/intensity-gated scorer can reject them.
"""

from __future__ import annotations

import csv
import json
import math
import zlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import InvalidParamsError, PlacementInfeasibleError
from .grid import cells_of_pixels, dilate4

IMAGE_SIDE = 512

# Depressor strip placed on the tray; eggs are only laid on the strip.
DEPRESSOR_ROWS = (96, 416)
DEPRESSOR_COLS = (16, 496)

DISTRACTOR_KINDS = ("grain", "seed", "soil", "stone")

_MAX_PLACE_TRIES = 400


@dataclass(frozen=True)
class GeneratorParams:
    """Knobs for scene synthesis. Defaults model a ~0.8 mm egg at 0.08 mm/px."""

    seed: int
    image_size: tuple[int, int] = (IMAGE_SIDE, IMAGE_SIDE)
    egg_axis_px: tuple[float, float] = (10.0, 6.0)
    egg_intensity: float = 0.15
    background_intensity: float = 0.75
    noise_sigma: float = 0.02
    distractor_kinds: frozenset = frozenset(DISTRACTOR_KINDS)

    def validate(self) -> None:
        if tuple(self.image_size) != (IMAGE_SIDE, IMAGE_SIDE):
            raise InvalidParamsError(
                f"image_size must be {IMAGE_SIDE}x{IMAGE_SIDE}, got {self.image_size}"
            )
        major, minor = self.egg_axis_px
        if not (major > minor > 0):
            raise InvalidParamsError("egg_axis_px must satisfy major > minor > 0")
        for name in ("egg_intensity", "background_intensity", "noise_sigma"):
            v = getattr(self, name)
            if not (0.0 <= v <= 1.0):
                raise InvalidParamsError(f"{name} out of [0,1]: {v}")
        if self.background_intensity - self.egg_intensity < 0.25:
            raise InvalidParamsError(
                "background_intensity must exceed egg_intensity by >= 0.25"
            )
        unknown = set(self.distractor_kinds) - set(DISTRACTOR_KINDS)
        if unknown:
            raise InvalidParamsError(f"unknown distractor kinds: {sorted(unknown)}")

    @property
    def egg_area_px(self) -> float:
        major, minor = self.egg_axis_px
        return math.pi * major * minor / 4.0

    @property
    def tray_intensity(self) -> float:
        # Tray must stay clearly above the dark-mask cut for any valid params.
        return max(self.egg_intensity + 0.25, self.background_intensity - 0.20)


@dataclass
class DepressorScene:
    """Rendered raster plus exact ground truth."""

    scene_id: str
    image: np.ndarray  # float64 in [0,1], 8-bit quantized
    eggs: list = field(default_factory=list)        # (center_x, center_y, rotation)
    distractors: list = field(default_factory=list)  # (kind, (x, y), footprint_px)

    @property
    def egg_count(self) -> int:
        return len(self.eggs)

    def image_u8(self) -> np.ndarray:
        return np.round(self.image * 255.0).astype(np.uint8)


def ellipse_pixels(cx, cy, major, minor, theta):
    """Pixel (rows, cols) whose centers fall inside the rotated ellipse."""
    a = major / 2.0
    b = minor / 2.0
    reach = int(math.ceil(a)) + 1
    r0 = max(0, int(math.floor(cy)) - reach)
    r1 = min(IMAGE_SIDE - 1, int(math.ceil(cy)) + reach)
    c0 = max(0, int(math.floor(cx)) - reach)
    c1 = min(IMAGE_SIDE - 1, int(math.ceil(cx)) + reach)
    rows = np.arange(r0, r1 + 1)
    cols = np.arange(c0, c1 + 1)
    cc, rr = np.meshgrid(cols, rows)
    dx = cc - cx
    dy = rr - cy
    ct, st = math.cos(theta), math.sin(theta)
    u = (dx * ct + dy * st) / a
    v = (-dx * st + dy * ct) / b
    inside = u * u + v * v <= 1.0
    return rr[inside].astype(np.intp), cc[inside].astype(np.intp)


def disk_pixels(cx, cy, radius):
    return ellipse_pixels(cx, cy, 2 * radius, 2 * radius, 0.0)


def square_pixels(cx, cy, side):
    h = side / 2.0
    r0 = max(0, int(math.ceil(cy - h)))
    r1 = min(IMAGE_SIDE - 1, int(math.floor(cy + h)))
    c0 = max(0, int(math.ceil(cx - h)))
    c1 = min(IMAGE_SIDE - 1, int(math.floor(cx + h)))
    rows = np.arange(r0, r1 + 1)
    cols = np.arange(c0, c1 + 1)
    cc, rr = np.meshgrid(cols, rows)
    return rr.ravel().astype(np.intp), cc.ravel().astype(np.intp)


def _distractor_shape(kind: str, cx: float, cy: float, theta: float, p: GeneratorParams):
    """Pixel set and intensity for one distractor.

    stone/soil are dark like eggs but fail the size gate (too big / too small);
    seed/grain are egg-scale but >= 0.3 brighter, so they never enter the mask.
    """
    major, minor = p.egg_axis_px
    if kind == "stone":
        radius = math.sqrt(2.5 * p.egg_area_px / math.pi) + 1.0
        rows, cols = disk_pixels(cx, cy, radius)
        return rows, cols, p.egg_intensity + 0.02
    if kind == "soil":
        offsets = ((0, 0), (4, 1), (-4, 2), (1, -5), (-2, 6), (5, 5))
        rs, cs = [], []
        for dy, dx in offsets:
            r, c = disk_pixels(cx + dx, cy + dy, 1.1)
            rs.append(r)
            cs.append(c)
        return np.concatenate(rs), np.concatenate(cs), p.egg_intensity + 0.04
    if kind == "seed":
        rows, cols = ellipse_pixels(cx, cy, 1.6 * major, 1.6 * minor, theta)
        return rows, cols, min(1.0, p.egg_intensity + 0.35)
    if kind == "grain":
        rows, cols = square_pixels(cx, cy, 0.8 * major)
        return rows, cols, min(1.0, p.egg_intensity + 0.40)
    raise InvalidParamsError(f"unknown distractor kind {kind!r}")


def _scene_rng(params: GeneratorParams, scene_id: str) -> np.random.Generator:
    return np.random.default_rng(
        np.random.SeedSequence([params.seed, zlib.crc32(scene_id.encode())])
    )


def generate_scene(
    params: GeneratorParams,
    egg_count: int,
    distractor_count: int = 0,
    scene_id: str | None = None,
) -> DepressorScene:
    """Render one scene with exactly egg_count eggs and the requested distractors.

    Placement keeps every object's heat-map cell footprint disjoint from (and
    not 4-adjacent to) every other footprint, and egg centers at least
    max(8, major+3) px apart, so ground truth stays unambiguous at grid
    resolution and pixel blobs never merge.
    """
    params.validate()
    if egg_count < 0 or distractor_count < 0:
        raise InvalidParamsError("egg_count and distractor_count must be >= 0")
    if scene_id is None:
        scene_id = f"s{params.seed}-e{egg_count}-d{distractor_count}"
    rng = _scene_rng(params, scene_id)

    major, minor = params.egg_axis_px
    min_center_dist = max(8.0, major + 3.0)
    margin = major / 2.0 + 2.0
    r_lo, r_hi = DEPRESSOR_ROWS[0] + margin, DEPRESSOR_ROWS[1] - margin
    c_lo, c_hi = DEPRESSOR_COLS[0] + margin, DEPRESSOR_COLS[1] - margin

    canvas = np.full((IMAGE_SIDE, IMAGE_SIDE), params.tray_intensity, dtype=np.float64)
    canvas[DEPRESSOR_ROWS[0]:DEPRESSOR_ROWS[1],
           DEPRESSOR_COLS[0]:DEPRESSOR_COLS[1]] = params.background_intensity

    blocked_cells: set = set()
    egg_centers: list[tuple[float, float]] = []

    def admissible(rows, cols) -> bool:
        if rows.size == 0:
            return False
        if (rows.min() < DEPRESSOR_ROWS[0] or rows.max() >= DEPRESSOR_ROWS[1]
                or cols.min() < DEPRESSOR_COLS[0] or cols.max() >= DEPRESSOR_COLS[1]):
            return False
        cells = cells_of_pixels(rows.tolist(), cols.tolist())
        return not (dilate4(cells) & blocked_cells)

    def claim(rows, cols) -> None:
        blocked_cells.update(cells_of_pixels(rows.tolist(), cols.tolist()))

    eggs = []
    for _ in range(egg_count):
        placed = False
        for _attempt in range(_MAX_PLACE_TRIES):
            cx = rng.uniform(c_lo, c_hi)
            cy = rng.uniform(r_lo, r_hi)
            theta = rng.uniform(0.0, math.pi)
            if any(math.hypot(cx - ex, cy - ey) < min_center_dist
                   for ex, ey in egg_centers):
                continue
            rows, cols = ellipse_pixels(cx, cy, major, minor, theta)
            if not admissible(rows, cols):
                continue
            canvas[rows, cols] = params.egg_intensity
            claim(rows, cols)
            egg_centers.append((cx, cy))
            eggs.append((cx, cy, theta))
            placed = True
            break
        if not placed:
            raise PlacementInfeasibleError(scene_id, len(eggs), egg_count)

    kinds = sorted(params.distractor_kinds)
    if distractor_count and not kinds:
        raise InvalidParamsError("distractors requested but distractor_kinds is empty")
    distractors = []
    for i in range(distractor_count):
        kind = kinds[i % len(kinds)]
        placed = False
        for _attempt in range(_MAX_PLACE_TRIES):
            cx = rng.uniform(c_lo + 8, c_hi - 8)
            cy = rng.uniform(r_lo + 8, r_hi - 8)
            theta = rng.uniform(0.0, math.pi)
            rows, cols, intensity = _distractor_shape(kind, cx, cy, theta, params)
            if not admissible(rows, cols):
                continue
            canvas[rows, cols] = intensity
            claim(rows, cols)
            distractors.append((kind, (cx, cy), int(rows.size)))
            placed = True
            break
        if not placed:
            raise PlacementInfeasibleError(scene_id, len(distractors), distractor_count)

    noisy = canvas + rng.normal(0.0, params.noise_sigma, canvas.shape)
    image = np.round(np.clip(noisy, 0.0, 1.0) * 255.0) / 255.0
    return DepressorScene(scene_id=scene_id, image=image, eggs=eggs,
                          distractors=distractors)


def scene_corpus(spec_rows, params: GeneratorParams) -> list[DepressorScene]:
    """One scene per (scene_id, egg_count, distractor_count) row."""
    rows = list(spec_rows)
    if not rows:
        raise InvalidParamsError("corpus spec is empty")
    scenes = []
    for scene_id, egg_count, distractor_count in rows:
        try:
            scenes.append(
                generate_scene(params, egg_count, distractor_count, scene_id=scene_id)
            )
        except PlacementInfeasibleError:
            raise
        except InvalidParamsError as exc:
            raise InvalidParamsError(f"scene {scene_id!r}: {exc}") from exc
    return scenes


# --- disk archive ---------------------------------------------------------

def write_pgm(path, image_u8: np.ndarray) -> None:
    h, w = image_u8.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(image_u8.tobytes())


def read_pgm(path) -> np.ndarray:
    data = Path(path).read_bytes()
    if not data.startswith(b"P5"):
        raise InvalidParamsError(f"{path}: not a binary PGM file")
    fields = []
    pos = 2
    while len(fields) < 3:
        while pos < len(data) and data[pos] in b" \t\r\n":
            pos += 1
        if data[pos:pos + 1] == b"#":
            while pos < len(data) and data[pos] not in b"\r\n":
                pos += 1
            continue
        start = pos
        while pos < len(data) and data[pos] not in b" \t\r\n":
            pos += 1
        fields.append(int(data[start:pos]))
    pos += 1  # single whitespace after maxval
    w, h, maxval = fields
    if maxval != 255:
        raise InvalidParamsError(f"{path}: unsupported maxval {maxval}")
    return np.frombuffer(data[pos:pos + w * h], dtype=np.uint8).reshape(h, w)


def save_scene(scene: DepressorScene, out_dir) -> tuple[Path, Path]:
    """Write <id>.pgm plus a <id>.truth.json sidecar; return both paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    img_path = out / f"{scene.scene_id}.pgm"
    truth_path = out / f"{scene.scene_id}.truth.json"
    write_pgm(img_path, scene.image_u8())
    truth = {
        "scene_id": scene.scene_id,
        "eggs": [[float(x), float(y), float(t)] for x, y, t in scene.eggs],
        "distractors": [
            {"kind": k, "center": [float(x), float(y)], "footprint_px": n}
            for k, (x, y), n in scene.distractors
        ],
    }
    truth_path.write_text(json.dumps(truth, indent=1) + "\n")
    return img_path, truth_path


def load_scene(out_dir, scene_id: str) -> DepressorScene:
    out = Path(out_dir)
    image = read_pgm(out / f"{scene_id}.pgm").astype(np.float64) / 255.0
    truth = json.loads((out / f"{scene_id}.truth.json").read_text())
    eggs = [tuple(e) for e in truth["eggs"]]
    distractors = [
        (d["kind"], tuple(d["center"]), d["footprint_px"])
        for d in truth["distractors"]
    ]
    return DepressorScene(scene_id=scene_id, image=image, eggs=eggs,
                          distractors=distractors)


def read_corpus_spec(path) -> list[tuple[str, int, int]]:
    """Parse `scene_id,egg_count,distractor_count` rows; '#' lines ignored."""
    rows = []
    with open(path, newline="") as fh:
        for rec in csv.reader(fh):
            if not rec or rec[0].lstrip().startswith("#"):
                continue
            if len(rec) != 3:
                raise InvalidParamsError(f"bad corpus row: {rec!r}")
            rows.append((rec[0].strip(), int(rec[1]), int(rec[2])))
    return rows
