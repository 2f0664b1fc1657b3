"""Shared fixtures and independent oracles.

Oracles here deliberately re-derive expected values from ground truth or by
brute force (pixel rasterization, flood-fill labeling, rule re-evaluation)
without touching the implementation paths they check.
"""

import math

import numpy as np
import pytest

from ovinet.detector import DetectorConfig
from ovinet.synthgen import GeneratorParams


@pytest.fixture
def params():
    return GeneratorParams(seed=7)


@pytest.fixture
def cfg():
    return DetectorConfig()


# --- oracle: cells overlapped by a ground-truth ellipse -----------------------

def ellipse_cells_oracle(center_x, center_y, major, minor, theta,
                         cell_px=8) -> set:
    """Rasterize the ellipse by brute force and map pixels to grid cells."""
    a, b = major / 2.0, minor / 2.0
    reach = int(math.ceil(a)) + 1
    cells = set()
    for r in range(int(center_y) - reach, int(center_y) + reach + 1):
        for c in range(int(center_x) - reach, int(center_x) + reach + 1):
            dx, dy = c - center_x, r - center_y
            u = (dx * math.cos(theta) + dy * math.sin(theta)) / a
            v = (-dx * math.sin(theta) + dy * math.cos(theta)) / b
            if u * u + v * v <= 1.0:
                cells.add((r // cell_px, c // cell_px))
    return cells


# --- oracle: connected components on the 64x64 grid ---------------------------

def components_oracle(active: np.ndarray) -> list:
    """4-connected components by iterative flood fill; list of frozensets."""
    side = active.shape[0]
    todo = {(r, c) for r in range(side) for c in range(side) if active[r, c]}
    comps = []
    while todo:
        seed = min(todo)
        stack = [seed]
        todo.discard(seed)
        comp = set()
        while stack:
            r, c = stack.pop()
            comp.add((r, c))
            for nb in ((r - 1, c), (r + 1, c), (r, c - 1), (r, c + 1)):
                if nb in todo:
                    todo.discard(nb)
                    stack.append(nb)
        comps.append(frozenset(comp))
    return comps


# --- oracle: edge-triggered rule evaluation over a full series -----------------

def alarms_oracle(series, condition) -> list:
    """Indices where the condition starts to hold (edge-triggered)."""
    fired = []
    was = False
    for i, value in enumerate(series):
        now = condition(value)
        if now and not was:
            fired.append(i)
        was = now
    return fired
