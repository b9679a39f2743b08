"""Deterministic rasterization of a world state to an 840x480 frame.

The playfield is drawn inside exactly the window that the vision crop
extracts; everything outside it is UI chrome.  All drawing is integer
rectangle fills with fixed colors, so identical states produce
bit-identical frames.
"""

import numpy as np

from slingdqn import vision
from slingdqn.env import world

UI_COLOR = (58, 58, 66)
SKY_COLOR = (158, 202, 232)
GROUND_COLOR = (96, 72, 40)
SLING_COLOR = (122, 62, 28)
BIRD_COLOR = (208, 40, 32)
QUEUE_COLOR = (208, 40, 32)

MATERIAL_COLORS = {
    world.ICE: (176, 224, 240),
    world.WOOD: (186, 130, 62),
    world.STONE: (128, 128, 128),
    world.PIG: (88, 184, 72),
}

_LEFT, _TOP = vision.DEFAULT_CROP_OFFSET


def _fill_world_rect(frame, x0, x1, y0, y1, color):
    """Fill a world-space rectangle [x0,x1) x [y0,y1), y up, clipped."""
    x0 = max(0, int(x0))
    x1 = min(world.PLAYFIELD_WIDTH, int(x1))
    y0 = max(0, int(y0))
    y1 = min(world.PLAYFIELD_HEIGHT, int(y1))
    if x0 >= x1 or y0 >= y1:
        return
    r0 = _TOP + world.PLAYFIELD_HEIGHT - y1
    r1 = _TOP + world.PLAYFIELD_HEIGHT - y0
    frame[r0:r1, _LEFT + x0 : _LEFT + x1] = color


# Static background (UI chrome, sky, ground, sling post) per sling
# position; rebuilt lazily and copied for every frame.
_BASE_CACHE = {}


def _base_frame(sling):
    frame = np.empty((vision.RAW_HEIGHT, vision.RAW_WIDTH, 3), dtype=np.uint8)
    frame[:] = UI_COLOR
    frame[
        _TOP : _TOP + world.PLAYFIELD_HEIGHT, _LEFT : _LEFT + world.PLAYFIELD_WIDTH
    ] = SKY_COLOR
    _fill_world_rect(frame, 0, world.PLAYFIELD_WIDTH, 0, world.GROUND_HEIGHT, GROUND_COLOR)
    sx, sy = sling
    _fill_world_rect(frame, sx - 2, sx + 2, world.GROUND_HEIGHT, sy, SLING_COLOR)
    return frame


def render(state):
    """Rasterize a state; returns an (480, 840, 3) uint8 frame."""
    level = state.level
    key = tuple(level.sling)
    if key not in _BASE_CACHE:
        _BASE_CACHE[key] = _base_frame(key)
    frame = _BASE_CACHE[key].copy()

    for c in range(level.ncols):
        for r in range(level.nrows):
            mat = int(state.grid[c, r])
            if mat == world.EMPTY:
                continue
            x0 = level.origin_x + c * world.CELL
            y0 = world.GROUND_HEIGHT + r * world.CELL
            _fill_world_rect(
                frame, x0, x0 + world.CELL, y0, y0 + world.CELL, MATERIAL_COLORS[mat]
            )

    sx, sy = level.sling
    if state.birds_left and not state.done:
        _fill_world_rect(frame, sx - 4, sx + 4, sy - 4, sy + 4, BIRD_COLOR)

    # Remaining-bird indicator along the top edge of the playfield.
    for k in range(len(state.birds_left)):
        x0 = 6 + k * 14
        y0 = world.PLAYFIELD_HEIGHT - 16
        _fill_world_rect(frame, x0, x0 + 10, y0, y0 + 10, QUEUE_COLOR)
    return frame
