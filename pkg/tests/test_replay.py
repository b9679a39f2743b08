"""Replay buffer: FIFO eviction, uniform sampling, dataset round-trips."""

import numpy as np
import pytest
from scipy import stats

from slingdqn import replay


def _frame(value):
    return np.full((84, 84, 3), value % 256, dtype=np.uint8)


def _exp(i, done=False):
    return replay.Experience(
        state=_frame(i), action=i % 91, reward=float(i), next_state=_frame(i + 1), done=done
    )


class TestPush:
    def test_size_grows_then_saturates_fifo(self):
        buf = replay.ReplayBuffer(2)
        for i in range(3):
            buf.push(_exp(i))
        assert len(buf) == 2
        rewards = [e.reward for e in buf.contents()]
        assert rewards == [1.0, 2.0]

    def test_single_push(self):
        buf = replay.ReplayBuffer(10)
        buf.push(_exp(0))
        assert len(buf) == 1
        assert buf.insert_count == 1

    def test_counter_keeps_counting_past_capacity(self):
        """115k pushes into a 100k ring: size saturates, counter doesn't."""
        buf = replay.ReplayBuffer(100_000)
        e = _exp(7)  # shared reference; the ring does not copy on push
        for _ in range(115_000):
            buf.push(e)
        assert len(buf) == 100_000
        assert buf.insert_count == 115_000

    def test_fifo_exact_for_small_capacities(self):
        """Eviction order against a list oracle, capacities 1..8."""
        for capacity in range(1, 9):
            for n in range(1, 20):
                buf = replay.ReplayBuffer(capacity)
                oracle = []
                for i in range(n):
                    buf.push(_exp(i))
                    oracle.append(i)
                    oracle = oracle[-capacity:]
                got = [int(e.reward) for e in buf.contents()]
                assert got == oracle, f"capacity={capacity} n={n}"

    def test_invalid_experience_rejected(self):
        buf = replay.ReplayBuffer(4)
        bad_action = replay.Experience(_frame(0), 91, 0.0, _frame(1), False)
        with pytest.raises(ValueError):
            buf.push(bad_action)
        bad_shape = replay.Experience(
            np.zeros((10, 10, 3), np.uint8), 0, 0.0, _frame(1), False
        )
        with pytest.raises(ValueError):
            buf.push(bad_shape)
        bad_reward = replay.Experience(_frame(0), 0, float("nan"), _frame(1), False)
        with pytest.raises(ValueError):
            buf.push(bad_reward)


class TestSample:
    def test_single_element_buffer_repeats_it(self):
        buf = replay.ReplayBuffer(10)
        buf.push(_exp(5))
        batch = buf.sample(3, np.random.default_rng(0))
        assert len(batch) == 3
        assert all(e.reward == 5.0 for e in batch)

    def test_underfilled_buffer_rejected(self):
        buf = replay.ReplayBuffer(10)
        buf.push(_exp(0))
        with pytest.raises(ValueError):
            buf.sample(2, np.random.default_rng(0))

    def test_same_seed_same_batch(self):
        buf = replay.ReplayBuffer(50)
        for i in range(50):
            buf.push(_exp(i))
        a = buf.sample(8, np.random.default_rng(42))
        b = buf.sample(8, np.random.default_rng(42))
        assert [e.reward for e in a] == [e.reward for e in b]

    def test_sampling_is_uniform_by_chi_square(self):
        buf = replay.ReplayBuffer(100)
        for i in range(100):
            buf.push(_exp(i))
        rng = np.random.default_rng(7)
        counts = np.zeros(100, dtype=np.int64)
        for _ in range(100):
            for e in buf.sample(1000, rng):
                counts[int(e.reward)] += 1
        assert stats.chisquare(counts).pvalue > 0.01

    def test_sampling_never_mutates_the_buffer(self):
        buf = replay.ReplayBuffer(5)
        for i in range(5):
            buf.push(_exp(i))
        before = [e.reward for e in buf.contents()]
        batch = buf.sample(3, np.random.default_rng(1))
        batch[0].state[:] = 99  # scribbling on the copy is fine
        assert [e.reward for e in buf.contents()] == before
        assert all(int(e.state[0, 0, 0]) == int(e.reward) for e in buf.contents())

    def test_batch_owns_its_arrays(self):
        buf = replay.ReplayBuffer(2)
        buf.push(_exp(1))
        batch = buf.sample(1, np.random.default_rng(0))
        assert batch[0].state is not buf.contents()[0].state


class TestDataset:
    def test_round_trip(self, tmp_path):
        exps = [_exp(i, done=(i % 3 == 0)) for i in range(7)]
        exps[2] = replay.Experience(_frame(2), 50, -0.125, _frame(3), False)
        replay.save_dataset(tmp_path / "ds", exps)
        back = replay.load_dataset(tmp_path / "ds")
        assert len(back) == 7
        for a, b in zip(exps, back):
            assert np.array_equal(a.state, b.state)
            assert np.array_equal(a.next_state, b.next_state)
            assert (a.action, a.reward, a.done) == (b.action, b.reward, b.done)

    def test_identical_frames_stored_once(self, tmp_path):
        e = _exp(4)
        replay.save_dataset(tmp_path / "ds", [e, e, e])
        frames = list((tmp_path / "ds" / replay.FRAMES_DIR).iterdir())
        assert len(frames) == 2  # state and next_state differ, rest dedup

    def test_append_mixes_collections(self, tmp_path):
        replay.save_dataset(tmp_path / "ds", [_exp(i) for i in range(4)])
        replay.save_dataset(tmp_path / "ds", [_exp(i) for i in range(10, 13)], append=True)
        back = replay.load_dataset(tmp_path / "ds")
        assert len(back) == 4 + 3

    def test_bulk_load_into_buffer(self, tmp_path):
        replay.save_dataset(tmp_path / "ds", [_exp(i) for i in range(6)])
        buf = replay.load_into_buffer(tmp_path / "ds", replay.ReplayBuffer(4))
        assert len(buf) == 4
        assert buf.insert_count == 6
        assert [e.reward for e in buf.contents()] == [2.0, 3.0, 4.0, 5.0]
