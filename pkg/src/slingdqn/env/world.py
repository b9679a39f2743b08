"""Deterministic slingshot world: ballistic shots against cell structures.

The playfield is 770x310 world units (mapped 1:1 to the cropped frame,
y up, ground strip at the bottom).  A level is a column-major grid of
material cells resting on the ground plus a queue of birds.  A shot
launches a bird from the sling at a fixed speed along an integer angle
in [0, 90]; the bird follows a parabola integrated at a fixed timestep,
spending its energy budget to destroy the cells it enters.  After the
flight, unsupported cells fall straight down within their column and a
falling stone crushes any pig it lands on.  Everything is integer/fixed
arithmetic or IEEE doubles in a fixed evaluation order, so transitions
are bit-reproducible.
"""

import math
from dataclasses import dataclass, field, replace

import numpy as np

from slingdqn.backend import USE_NUMBA, compiled

PLAYFIELD_WIDTH = 770
PLAYFIELD_HEIGHT = 310
CELL = 20
GROUND_HEIGHT = 10

LAUNCH_SPEED = 180.0
GRAVITY = 200.0
TIMESTEP = 1.0 / 240.0
MAX_FLIGHT_SECONDS = 6.0

RELEASE_RADIUS = 50.0

EMPTY, ICE, WOOD, STONE, PIG = 0, 1, 2, 3, 4
MATERIAL_NAMES = {EMPTY: "empty", ICE: "ice", WOOD: "wood", STONE: "stone", PIG: "pig"}
MATERIAL_CODES = {v: k for k, v in MATERIAL_NAMES.items()}
HIT_POINTS = np.array([0, 1, 2, 3, 1], dtype=np.int64)  # indexed by material

BIRD_ENERGY = {"red": 3}

PIG_SCORE = 5000
SCORE_PER_HIT_POINT = 500
BONUS_PER_UNUSED_BIRD = 10_000

ACTION_COUNT = 91


class LevelError(ValueError):
    """A level definition violates an invariant."""


@dataclass(frozen=True)
class Level:
    """Static level definition.

    ``grid[col, row]`` holds material codes with row 0 on the ground;
    ``origin_x`` is the world x of the leftmost column.
    """

    id: str
    grid: np.ndarray
    birds: tuple
    sling: tuple
    origin_x: int

    def __post_init__(self):
        object.__setattr__(self, "grid", np.ascontiguousarray(self.grid, dtype=np.int8))
        validate_level(self)

    @property
    def ncols(self):
        return self.grid.shape[0]

    @property
    def nrows(self):
        return self.grid.shape[1]


def validate_level(level):
    grid = level.grid
    if grid.ndim != 2 or grid.size == 0:
        raise LevelError(f"{level.id}: grid must be a non-empty 2-d array")
    if grid.min() < EMPTY or grid.max() > PIG:
        raise LevelError(f"{level.id}: grid contains unknown material codes")
    if not np.any(grid == PIG):
        raise LevelError(f"{level.id}: level must contain at least one pig")
    if len(level.birds) == 0:
        raise LevelError(f"{level.id}: bird queue must be nonempty")
    for b in level.birds:
        if b not in BIRD_ENERGY:
            raise LevelError(f"{level.id}: unknown bird kind {b!r}")
    ncols, nrows = grid.shape
    if level.origin_x < 0 or level.origin_x + ncols * CELL > PLAYFIELD_WIDTH:
        raise LevelError(f"{level.id}: grid does not fit the playfield horizontally")
    if GROUND_HEIGHT + nrows * CELL > PLAYFIELD_HEIGHT:
        raise LevelError(f"{level.id}: grid does not fit the playfield vertically")
    sx, sy = level.sling
    if not (0 <= sx < PLAYFIELD_WIDTH and GROUND_HEIGHT <= sy < PLAYFIELD_HEIGHT):
        raise LevelError(f"{level.id}: sling reference {level.sling} out of bounds")


@dataclass(frozen=True)
class WorldState:
    """Full mutable state of an episode (immutable snapshot per step)."""

    level: Level
    grid: np.ndarray
    birds_left: tuple
    score: int = 0
    done: bool = False
    won: bool = False

    @property
    def pigs_left(self):
        return int(np.count_nonzero(self.grid == PIG))


def reset(level):
    """Pristine state from a level definition."""
    validate_level(level)
    state = WorldState(
        level=level,
        grid=level.grid.copy(),
        birds_left=tuple(level.birds),
        score=0,
        done=False,
        won=False,
    )
    return state


def release_point(angle, sling):
    """Drag-back point at a fixed radius behind the sling for an angle."""
    if not 0 <= angle <= 90:
        raise ValueError(f"angle {angle} outside [0, 90]")
    theta = math.radians(angle)
    return (
        sling[0] - RELEASE_RADIUS * math.cos(theta),
        sling[1] - RELEASE_RADIUS * math.sin(theta),
    )


def _flight(grid, hp, origin_x, x, y, vx, vy, dt, energy, max_steps,
            hit_cols, hit_rows):
    """Integrate one shot; destroys cells in ``grid`` in place.

    Returns the number of destroyed cells.  Pure scalar math in a fixed
    order; compiled with Numba on the default backend.
    """
    ncols, nrows = grid.shape
    count = 0
    for _ in range(max_steps):
        vy -= GRAVITY * dt
        x += vx * dt
        y += vy * dt
        if x < 0.0 or x >= PLAYFIELD_WIDTH or y < GROUND_HEIGHT or y >= PLAYFIELD_HEIGHT:
            break
        col = int(math.floor((x - origin_x) / CELL))
        row = int(math.floor((y - GROUND_HEIGHT) / CELL))
        if 0 <= col < ncols and 0 <= row < nrows:
            mat = grid[col, row]
            if mat != 0:
                cost = hp[mat]
                if energy >= cost:
                    energy -= cost
                    grid[col, row] = 0
                    hit_cols[count] = col
                    hit_rows[count] = row
                    count += 1
                else:
                    break
    return count


_flight_jit = compiled(_flight)


def _settle_column(col_cells):
    """Cells of one column fall straight down; falling stones crush pigs.

    ``col_cells`` is the bottom-up material array for a column.  Returns
    ``(new_cells, crushed_pig_count)``.
    """
    placed = []
    crushed = 0
    for row in range(len(col_cells)):
        mat = col_cells[row]
        if mat == EMPTY:
            continue
        if mat == STONE and row > len(placed):
            while placed and placed[-1] == PIG:
                placed.pop()
                crushed += 1
        placed.append(mat)
    out = np.zeros_like(col_cells)
    out[: len(placed)] = placed
    return out, crushed


def settle(grid):
    """Gravity pass over every column; returns ``(grid', crushed_pigs)``."""
    out = grid.copy()
    crushed = 0
    for c in range(grid.shape[0]):
        new_col, n = _settle_column(grid[c])
        out[c] = new_col
        crushed += n
    return out, crushed


def simulate_shot(state, angle, timestep=TIMESTEP):
    """Fire the next bird at ``angle`` degrees; returns ``(state', delta)``.

    The returned score delta includes destruction points and, on a win,
    the bonus for unused birds.  The transition completes only after the
    world has fully settled.
    """
    if state.done:
        raise ValueError("episode is finished; reset the level to play again")
    if not 0 <= int(angle) <= 90:
        raise ValueError(f"angle {angle} outside [0, 90]")
    angle = int(angle)
    theta = math.radians(angle)
    sx, sy = state.level.sling
    vx = LAUNCH_SPEED * math.cos(theta)
    vy = LAUNCH_SPEED * math.sin(theta)
    energy = BIRD_ENERGY[state.birds_left[0]]

    grid = state.grid.copy()
    before = state.grid
    max_steps = int(MAX_FLIGHT_SECONDS / timestep)
    hit_cols = np.empty(grid.size, dtype=np.int64)
    hit_rows = np.empty(grid.size, dtype=np.int64)
    fly = _flight_jit if USE_NUMBA else _flight
    n_hits = fly(
        grid,
        HIT_POINTS,
        float(state.level.origin_x),
        float(sx),
        float(sy),
        vx,
        vy,
        float(timestep),
        energy,
        max_steps,
        hit_cols,
        hit_rows,
    )

    delta = 0
    for k in range(n_hits):
        mat = int(before[hit_cols[k], hit_rows[k]])
        delta += PIG_SCORE if mat == PIG else SCORE_PER_HIT_POINT * int(HIT_POINTS[mat])

    grid, crushed = settle(grid)
    delta += crushed * PIG_SCORE

    birds_left = state.birds_left[1:]
    won = not np.any(grid == PIG)
    if won:
        delta += BONUS_PER_UNUSED_BIRD * len(birds_left)
    done = won or len(birds_left) == 0
    new_state = WorldState(
        level=state.level,
        grid=grid,
        birds_left=birds_left,
        score=state.score + delta,
        done=done,
        won=won,
    )
    return new_state, delta


def win_bonus(prev_state, new_state):
    """Bonus portion of the last transition's score delta (0 if no win)."""
    if new_state.won and not prev_state.won:
        return BONUS_PER_UNUSED_BIRD * len(new_state.birds_left)
    return 0


def sweep_first_shot(level, timestep=TIMESTEP):
    """Score delta of every possible first shot, angle 0..90."""
    deltas = []
    for angle in range(ACTION_COUNT):
        _, d = simulate_shot(reset(level), angle, timestep=timestep)
        deltas.append(d)
    return deltas


def best_first_angle(level, timestep=TIMESTEP):
    """Highest-scoring first angle, ties broken by the lowest angle."""
    deltas = sweep_first_shot(level, timestep=timestep)
    best = int(np.argmax(deltas))
    return best, deltas[best]


def greedy_oracle_episode(level, timestep=TIMESTEP):
    """Play a level by brute-forcing the best angle for every shot.

    Returns ``(angles, total_score, won)``; used to seed the score
    registry and by the play-oracle command.
    """
    state = reset(level)
    angles = []
    while not state.done:
        best_angle, best_delta, best_state = 0, None, None
        for angle in range(ACTION_COUNT):
            nxt, d = simulate_shot(state, angle, timestep=timestep)
            if best_delta is None or d > best_delta:
                best_angle, best_delta, best_state = angle, d, nxt
        angles.append(best_angle)
        state = best_state
    return angles, state.score, state.won
