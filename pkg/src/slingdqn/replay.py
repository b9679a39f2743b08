"""Bounded experience store with uniform minibatch sampling.

The buffer is a fixed-capacity ring with FIFO eviction.  Stored frames
are the integer 84x84x3 form (normalization happens at batch assembly);
pushes keep references, sampled batches are owned copies.  A dataset on
disk is a directory of PPM frame files (content-hashed, so repeated
frames are stored once) plus a CSV index of transitions.
"""

import csv
import hashlib
import os
from dataclasses import dataclass

import numpy as np

from slingdqn import ppm
from slingdqn.vision import STATE_SHAPE

INDEX_NAME = "index.csv"
FRAMES_DIR = "frames"
INDEX_FIELDS = ("state", "action", "reward", "next_state", "done")


@dataclass(frozen=True)
class Experience:
    """One transition: state, action taken, reward, successor, terminal flag."""

    state: np.ndarray
    action: int
    reward: float
    next_state: np.ndarray
    done: bool


def validate_experience(e):
    for name, frame in (("state", e.state), ("next_state", e.next_state)):
        if not isinstance(frame, np.ndarray) or frame.shape != STATE_SHAPE:
            raise ValueError(f"{name} must be an array of shape {STATE_SHAPE}")
    if not 0 <= int(e.action) <= 90:
        raise ValueError(f"action {e.action} outside [0, 90]")
    if not np.isfinite(e.reward):
        raise ValueError(f"non-finite reward {e.reward}")
    if not isinstance(e.done, (bool, np.bool_)):
        raise ValueError("done must be a boolean")


class ReplayBuffer:
    """Ring of experiences; one writer, sampling never mutates."""

    def __init__(self, capacity):
        if capacity < 1:
            raise ValueError("capacity must be positive")
        self.capacity = int(capacity)
        self._ring = []
        self._next = 0
        self.insert_count = 0

    def __len__(self):
        return len(self._ring)

    def push(self, e):
        validate_experience(e)
        if len(self._ring) < self.capacity:
            self._ring.append(e)
        else:
            self._ring[self._next] = e
        self._next = (self._next + 1) % self.capacity
        self.insert_count += 1

    def contents(self):
        """Stored experiences in insertion order (oldest first)."""
        if len(self._ring) < self.capacity:
            return list(self._ring)
        return self._ring[self._next :] + self._ring[: self._next]

    def sample_indices(self, batch_size, rng):
        if batch_size > len(self._ring):
            raise ValueError(
                f"buffer holds {len(self._ring)} experiences, need {batch_size}"
            )
        return rng.integers(len(self._ring), size=batch_size)

    def sample(self, batch_size, rng):
        """Uniform sample with replacement; the batch owns its arrays."""
        idx = self.sample_indices(batch_size, rng)
        return self.take(idx)

    def take(self, indices):
        """Owned copies of the experiences at raw ring slots ``indices``."""
        return [self._owned(self._ring[i]) for i in indices]

    @staticmethod
    def _owned(e):
        return Experience(
            state=e.state.copy(),
            action=e.action,
            reward=e.reward,
            next_state=e.next_state.copy(),
            done=e.done,
        )


def _frame_filename(frame):
    digest = hashlib.sha1(frame.tobytes()).hexdigest()[:20]
    return f"{digest}.ppm"


class DatasetWriter:
    """Appends transitions to a dataset directory.

    Frames are deduplicated by content hash, the index is flushed after
    every row so a crash leaves a readable prefix.
    """

    def __init__(self, directory, append=False):
        self.directory = directory
        self.frames_dir = os.path.join(directory, FRAMES_DIR)
        os.makedirs(self.frames_dir, exist_ok=True)
        index_path = os.path.join(directory, INDEX_NAME)
        fresh = not (append and os.path.exists(index_path))
        self._file = open(index_path, "a" if append else "w", newline="")
        self._csv = csv.writer(self._file)
        if fresh:
            self._csv.writerow(INDEX_FIELDS)
            self._file.flush()
        self._known = set(os.listdir(self.frames_dir))

    def _store_frame(self, frame):
        name = _frame_filename(frame)
        if name not in self._known:
            ppm.write_ppm(os.path.join(self.frames_dir, name), frame)
            self._known.add(name)
        return name

    def add(self, e):
        validate_experience(e)
        row = (
            self._store_frame(e.state),
            int(e.action),
            repr(float(e.reward)),
            self._store_frame(e.next_state),
            int(bool(e.done)),
        )
        self._csv.writerow(row)
        self._file.flush()

    def close(self):
        self._file.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def save_dataset(directory, experiences, append=False):
    with DatasetWriter(directory, append=append) as w:
        for e in experiences:
            w.add(e)


def load_dataset(directory):
    """Read a dataset directory back into a list of experiences."""
    frames_dir = os.path.join(directory, FRAMES_DIR)
    cache = {}

    def frame(name):
        if name not in cache:
            cache[name] = ppm.read_ppm(os.path.join(frames_dir, name))
        return cache[name]

    out = []
    with open(os.path.join(directory, INDEX_NAME), newline="") as f:
        reader = csv.reader(f)
        header = next(reader)
        if tuple(header) != INDEX_FIELDS:
            raise ValueError(f"unexpected index header {header}")
        for row in reader:
            out.append(
                Experience(
                    state=frame(row[0]),
                    action=int(row[1]),
                    reward=float(row[2]),
                    next_state=frame(row[3]),
                    done=bool(int(row[4])),
                )
            )
    return out


def load_into_buffer(directory, buffer):
    """Bulk-load a collected dataset before any environment interaction."""
    for e in load_dataset(directory):
        buffer.push(e)
    return buffer
