"""Fixed raster/heat-map geometry: 512x512 pixels, 8x8-pixel cells, 64x64 grid."""

from __future__ import annotations

IMAGE_SIDE = 512
CELL_PX = 8
HEATMAP_SIDE = IMAGE_SIDE // CELL_PX  # 64


def cell_of(row: int, col: int) -> tuple[int, int]:
    return (row // CELL_PX, col // CELL_PX)


def cell_center_xy(cell_row: int, cell_col: int) -> tuple[float, float]:
    """Center of a heat-map cell in image pixel coordinates (x, y)."""
    return ((cell_col + 0.5) * CELL_PX, (cell_row + 0.5) * CELL_PX)


def cells_of_pixels(rows, cols) -> set[tuple[int, int]]:
    """Set of heat-map cells touched by the given pixel coordinate arrays."""
    return set(zip((r // CELL_PX for r in rows), (c // CELL_PX for c in cols)))


def dilate4(cells: set[tuple[int, int]]) -> set[tuple[int, int]]:
    """Cells plus their 4-neighbours (clipped to the grid)."""
    out = set(cells)
    for r, c in cells:
        for rr, cc in ((r - 1, c), (r + 1, c), (r, c - 1), (r, c + 1)):
            if 0 <= rr < HEATMAP_SIDE and 0 <= cc < HEATMAP_SIDE:
                out.add((rr, cc))
    return out
