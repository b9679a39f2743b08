"""Level files: a small line-oriented text format plus the bundled packs.

Format (``#`` starts a comment, blank lines ignored)::

    id: train-01
    sling: 70 50
    origin: 180
    birds: red red
    grid:
    ..S
    .WP
    SWW

Grid rows are written top to bottom using one character per cell:
``.`` empty, ``I`` ice, ``W`` wood, ``S`` stone, ``P`` pig.  Short rows
are padded with empty cells on the right.
"""

import os
from importlib import resources

import numpy as np

from slingdqn.env import world

CHAR_TO_MATERIAL = {
    ".": world.EMPTY,
    "I": world.ICE,
    "W": world.WOOD,
    "S": world.STONE,
    "P": world.PIG,
}
MATERIAL_TO_CHAR = {v: k for k, v in CHAR_TO_MATERIAL.items()}

TRAIN_PACK = "train"
VALIDATION_PACK = "validation"
REGISTRY_BASENAME = "registry.json"


def parse_level(text, fallback_id=None):
    fields = {}
    grid_rows = []
    in_grid = False
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].rstrip()
        if not line.strip():
            continue
        if in_grid:
            grid_rows.append(line.strip())
            continue
        if line.strip() == "grid:":
            in_grid = True
            continue
        key, _, value = line.partition(":")
        fields[key.strip()] = value.strip()
    if not grid_rows:
        raise world.LevelError("level file has no grid section")
    for required in ("sling", "birds"):
        if required not in fields:
            raise world.LevelError(f"level file missing {required!r} field")

    ncols = max(len(r) for r in grid_rows)
    nrows = len(grid_rows)
    grid = np.zeros((ncols, nrows), dtype=np.int8)
    for visual_row, line in enumerate(grid_rows):
        row = nrows - 1 - visual_row  # file lists top row first
        for col, ch in enumerate(line):
            if ch not in CHAR_TO_MATERIAL:
                raise world.LevelError(f"unknown grid character {ch!r}")
            grid[col, row] = CHAR_TO_MATERIAL[ch]

    sx, sy = (int(v) for v in fields["sling"].split())
    return world.Level(
        id=fields.get("id", fallback_id or "unnamed"),
        grid=grid,
        birds=tuple(fields["birds"].split()),
        sling=(sx, sy),
        origin_x=int(fields.get("origin", "0")),
    )


def format_level(level):
    lines = [
        f"id: {level.id}",
        f"sling: {level.sling[0]} {level.sling[1]}",
        f"origin: {level.origin_x}",
        "birds: " + " ".join(level.birds),
        "grid:",
    ]
    for visual_row in range(level.nrows):
        row = level.nrows - 1 - visual_row
        lines.append(
            "".join(MATERIAL_TO_CHAR[int(level.grid[c, row])] for c in range(level.ncols))
        )
    return "\n".join(lines) + "\n"


def load_level(path):
    with open(path) as f:
        return parse_level(f.read(), fallback_id=os.path.splitext(os.path.basename(path))[0])


def save_level(path, level):
    with open(path, "w") as f:
        f.write(format_level(level))


def load_pack(directory):
    """All ``.txt`` levels in a directory, sorted by filename."""
    names = sorted(n for n in os.listdir(directory) if n.endswith(".txt"))
    if not names:
        raise world.LevelError(f"no level files in {directory}")
    return [load_level(os.path.join(directory, n)) for n in names]


def _data_root():
    return resources.files("slingdqn.env") / "data"


def bundled_pack_dir(name):
    path = _data_root() / name
    if not path.is_dir():
        raise world.LevelError(f"no bundled level pack named {name!r}")
    return str(path)


def load_bundled_pack(name):
    return load_pack(bundled_pack_dir(name))


def bundled_registry_path():
    return str(_data_root() / REGISTRY_BASENAME)


def resolve_pack(name_or_path):
    """Interpret a config value as a bundled pack name or a directory."""
    if name_or_path in (TRAIN_PACK, VALIDATION_PACK):
        return load_bundled_pack(name_or_path)
    return load_pack(name_or_path)
