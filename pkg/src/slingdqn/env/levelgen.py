"""Procedural authoring of the bundled level packs.

Levels are generated from a master seed, verified against the
brute-force oracle (the greedy shot sequence must win, the best first
angle must agree between the production timestep and a 10x finer one,
and single-bird levels must keep a few winning angles so they are not
razor thin), then frozen to disk together with the score registry
seeded from each level's oracle episode total.

Run ``python -m slingdqn.env.levelgen`` to regenerate the shipped pack.
"""

import os

import numpy as np

from slingdqn.env import levels as levelio
from slingdqn.env import world

MASTER_SEED = 20180901
SLING = (70, 50)
ORACLE_FINE_FACTOR = 10
# Single-bird levels keep a handful of winning angles: enough that the
# task is learnable, few enough that the uniform-random baseline stays
# weak.
MIN_WIN_ANGLES_1BIRD = 3
MAX_WIN_ANGLES_1BIRD = 14
MAX_FIRST_HIT_ANGLES_MULTI = 15


# Pig cells must stay inside ballistic reach of the fixed sling; beyond
# ~260 world units even the flattest full-power shot lands short, and
# elevated boxes must stay under the envelope of reachable parabolas.
PIG_X_MIN, PIG_X_MAX = 145, 240


def _grid(ncols, nrows):
    return np.zeros((ncols, nrows), dtype=np.int8)


def _origin_for(pig_col, rng, x_max=PIG_X_MAX):
    """Grid origin placing ``pig_col`` at a reachable world x."""
    x = int(rng.integers(PIG_X_MIN, max(PIG_X_MIN + 1, x_max)))
    return max(100, x - pig_col * world.CELL)


def _perch_reach(height):
    """Farthest x where a box at grid row ``height`` is still hittable."""
    head = 121 - 20 * height  # parabola envelope minus the box bottom
    if head <= 0:
        return PIG_X_MIN + 1
    return min(PIG_X_MAX, int(SLING[0] + 18 * np.sqrt(head)) - 15)


def _shielded_perch(rng):
    """A pig on a tower with a stone block guarding the near side."""
    height = int(rng.integers(1, 4))
    grid = _grid(7, height + 2)
    col = int(rng.integers(2, 5))
    mat = world.WOOD if rng.random() < 0.5 else world.STONE
    for r in range(height):
        grid[col, r] = mat
        grid[col - 1, r] = mat
    grid[col, height] = world.PIG
    grid[col - 1, height] = world.STONE
    return grid, ("red",), _origin_for(col, rng, _perch_reach(height))


def _stone_keep(rng):
    """A ground pig right behind a tall stone wall: only a lob gets in."""
    wall_h = int(rng.integers(2, 5))
    grid = _grid(8, wall_h + 1)
    wall_col = int(rng.integers(1, 3))
    pig_col = wall_col + int(rng.integers(1, 3))
    for r in range(wall_h):
        grid[wall_col, r] = world.STONE
    grid[pig_col, 0] = world.PIG
    return grid, ("red",), _origin_for(pig_col, rng)


def _stone_crush(rng):
    """Stones stacked over a flanked pig; breaking the lower one crushes it."""
    grid = _grid(7, 4)
    col = int(rng.integers(2, 5))
    grid[col, 0] = world.PIG
    grid[col, 1] = world.STONE
    grid[col, 2] = world.STONE
    grid[col - 1, 0] = world.STONE  # blocks the direct ground-level hit
    if rng.random() < 0.5:
        grid[col + 1, 0] = world.WOOD
    return grid, ("red",), _origin_for(col, rng)


def _ice_box(rng):
    """A pig under an ice cap with stone flanks: punch through the roof."""
    grid = _grid(8, 3)
    col = int(rng.integers(2, 5))
    grid[col, 0] = world.PIG
    grid[col, 1] = world.ICE
    grid[col - 1, 0] = world.STONE
    grid[col + 1, 0] = world.STONE
    if rng.random() < 0.5:
        grid[col + 1, 1] = world.ICE
    return grid, ("red",), _origin_for(col, rng)


def _two_targets(rng):
    """Two pigs, one bird each: a shielded perch and a walled pig.

    The far pig must stay within steep-lob reach (~205 world units) or
    no shot can drop in behind its wall.
    """
    grid = _grid(10, 4)
    col_a = int(rng.integers(1, 3))
    col_b = col_a + int(rng.integers(3, 5))
    h_a = int(rng.integers(1, 3))
    mat = world.WOOD if rng.random() < 0.5 else world.STONE
    for r in range(h_a):
        grid[col_a, r] = mat
    grid[col_a, h_a] = world.PIG
    grid[col_a - 1, h_a] = world.STONE
    grid[col_b, 0] = world.PIG
    grid[col_b - 1, 0] = world.STONE
    origin = _origin_for(col_b, rng, x_max=205)
    return grid, ("red", "red"), origin


_TEMPLATES = (
    _shielded_perch,
    _stone_keep,
    _stone_crush,
    _ice_box,
    _two_targets,
)


def _candidate(level_id, template, rng):
    grid, birds, origin = template(rng)
    origin = min(origin, world.PLAYFIELD_WIDTH - grid.shape[0] * world.CELL)
    return world.Level(id=level_id, grid=grid, birds=birds, sling=SLING, origin_x=origin)


def _verify(level):
    angles, total, won = world.greedy_oracle_episode(level)
    if not won:
        return None
    coarse, _ = world.best_first_angle(level)
    fine, _ = world.best_first_angle(level, timestep=world.TIMESTEP / ORACLE_FINE_FACTOR)
    if coarse != fine:
        return None
    start_pigs = world.reset(level).pigs_left
    first_wins = 0
    first_hits = 0
    for angle in range(world.ACTION_COUNT):
        s, _ = world.simulate_shot(world.reset(level), angle)
        first_wins += int(s.won)
        first_hits += int(s.pigs_left < start_pigs)
    if len(level.birds) == 1:
        if not MIN_WIN_ANGLES_1BIRD <= first_wins <= MAX_WIN_ANGLES_1BIRD:
            return None
    elif first_hits > MAX_FIRST_HIT_ANGLES_MULTI:
        return None
    return {"angles": angles, "total": total}


def make_level(level_id, template_index, seed):
    """First verified candidate for a template; deterministic per seed."""
    template = _TEMPLATES[template_index % len(_TEMPLATES)]
    for attempt in range(200):
        rng = np.random.default_rng((seed, attempt))
        level = _candidate(level_id, template, rng)
        info = _verify(level)
        if info is not None:
            return level, info
    raise RuntimeError(f"could not author a verified level for {level_id}")


def make_pack(prefix, count, seed_base):
    pack = []
    oracle = {}
    for i in range(count):
        level_id = f"{prefix}-{i + 1:02d}"
        level, info = make_level(level_id, i, seed_base + i)
        pack.append(level)
        oracle[level_id] = info
    return pack, oracle


def write_packs(data_dir, master_seed=MASTER_SEED):
    """Author both packs and the oracle-seeded registry under ``data_dir``."""
    from slingdqn.env.rewards import ScoreRegistry

    registry = ScoreRegistry()
    for name, count, base in (
        (levelio.TRAIN_PACK, 21, master_seed),
        (levelio.VALIDATION_PACK, 10, master_seed + 10_000),
    ):
        pack_dir = os.path.join(data_dir, name)
        os.makedirs(pack_dir, exist_ok=True)
        pack, oracle = make_pack(name, count, base)
        for level in pack:
            levelio.save_level(os.path.join(pack_dir, f"{level.id}.txt"), level)
        for level_id, info in oracle.items():
            registry.observe(level_id, info["total"])
    registry.save(os.path.join(data_dir, levelio.REGISTRY_BASENAME))
    return registry


def main():
    here = os.path.dirname(os.path.abspath(__file__))
    data_dir = os.path.join(here, "data")
    registry = write_packs(data_dir)
    for level_id, total in sorted(registry.as_dict().items()):
        print(f"{level_id}: oracle episode total {total}")


if __name__ == "__main__":
    main()
