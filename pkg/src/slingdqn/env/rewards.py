"""The two reward functions and the per-level best-score registry."""

import json
import os
import tempfile

CLIP_THRESHOLD = 3000

REWARD_MODES = ("clipped", "normalized")


def reward_clipped(score_delta):
    """+1 for a shot scoring above the threshold, -1 otherwise."""
    return 1.0 if score_delta > CLIP_THRESHOLD else -1.0


class ScoreRegistry:
    """Monotone map of level id to the best episode score ever observed."""

    def __init__(self, best=None):
        self._best = dict(best or {})

    def best(self, level_id):
        return self._best.get(level_id)

    def observe(self, level_id, episode_total):
        """Record an episode total; stored maxima only ever increase."""
        episode_total = int(episode_total)
        cur = self._best.get(level_id)
        if cur is None or episode_total > cur:
            self._best[level_id] = episode_total

    def as_dict(self):
        return dict(self._best)

    def save(self, path):
        """Atomic rewrite (temp file + rename)."""
        directory = os.path.dirname(os.path.abspath(path))
        os.makedirs(directory, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
        try:
            with os.fdopen(fd, "w") as f:
                json.dump(self._best, f, indent=1, sort_keys=True)
                f.write("\n")
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise

    @classmethod
    def load(cls, path):
        with open(path) as f:
            return cls(json.load(f))

    def copy(self):
        return ScoreRegistry(self._best)


def reward_normalized(score_delta, level_id, registry):
    """Per-shot score divided by the level's best known episode score."""
    best = registry.best(level_id)
    if best is None:
        raise KeyError(f"no registry entry for level {level_id!r}")
    if best <= 0:
        raise ValueError(f"registry maximum for level {level_id!r} must be positive")
    return score_delta / best
