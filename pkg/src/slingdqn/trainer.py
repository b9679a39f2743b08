"""Run orchestration: data collection, training, evaluation, reporting.

A run directory holds everything a run produces: ``metrics.csv`` (one
row per episode), numbered checkpoints at the evaluation cadence (online
net, target net, trainer state, replay index), the greedy-action matrix
per evaluation epoch, and the final checkpoint.  Given the same config
and seed, collect/train/evaluate are bit-reproducible, and a run resumed
from a checkpoint emits exactly the rows the uninterrupted run would
have.
"""

import csv
import hashlib
import json
import os
from dataclasses import dataclass, field

import numpy as np

from slingdqn import ppm, qnet, replay, vision
from slingdqn.env import levels as levelio
from slingdqn.env import rewards, world
from slingdqn.env.rendering import render
from slingdqn.nn import optim

METRICS_FIELDS = (
    "episode",
    "level",
    "env_step",
    "epsilon",
    "loss",
    "mean_q",
    "reward_return",
    "score",
    "won",
    "shots",
)

EPISODES_FIELDS = (
    "episode",
    "level",
    "shot",
    "action",
    "score_delta",
    "reward",
    "done",
    "won",
    "policy",
)

POLICIES = ("random", "epsilon-greedy", "greedy")


class TrainingAborted(RuntimeError):
    """Raised when a non-finite loss surfaces; carries the batch indices."""


@dataclass
class EpisodeRecord:
    """Per-episode trace: one (action, destruction delta, reward) per shot."""

    level_id: str
    policy: str
    shots: list = field(default_factory=list)
    terminal_bonus: int = 0
    total_score: int = 0
    won: bool = False

    def check(self):
        total = sum(d for _, d, _ in self.shots) + self.terminal_bonus
        if total != self.total_score:
            raise AssertionError(
                f"episode total {self.total_score} != shot deltas + bonus {total}"
            )


class FrameStore:
    """Interns identical frames so the replay ring shares one copy each."""

    def __init__(self):
        self._frames = {}

    def intern(self, frame):
        key = hashlib.sha1(frame.tobytes()).digest()
        found = self._frames.get(key)
        if found is None:
            frame.setflags(write=False)
            self._frames[key] = frame
            return frame
        return found

    def __len__(self):
        return len(self._frames)


def observe_frame(state):
    """Render a world state and reduce it to the stored 84x84x3 frame."""
    return vision.preprocess_to_frame(render(state))


def _norm(frame, dtype=np.float32):
    return vision.normalize(frame, dtype=dtype).tensor


def _reward_fn(mode, registry):
    if mode == "clipped":
        return lambda delta, level_id: rewards.reward_clipped(delta)
    return lambda delta, level_id: rewards.reward_normalized(delta, level_id, registry)


def _load_registry_for(cfg):
    registry = rewards.ScoreRegistry.load(levelio.bundled_registry_path())
    return registry


def _csv_writer(path, fields, append=False):
    fresh = not (append and os.path.exists(path))
    f = open(path, "a" if append else "w", newline="")
    w = csv.writer(f)
    if fresh:
        w.writerow(fields)
        f.flush()
    return f, w


# ---------------------------------------------------------------------------
# Collection


def collect(cfg, policy, episode_count, out_dir, checkpoint=None, epsilon=0.1):
    """Play episodes on the training pack and append them to a dataset.

    ``policy`` is one of ``random``, ``epsilon-greedy``, ``greedy``; the
    greedy variants act through the given checkpoint (or a fresh network
    when none is supplied).  Frames are stored via the vision pipeline;
    datasets from several collections can simply be concatenated.
    """
    if policy not in POLICIES:
        raise ValueError(f"policy must be one of {POLICIES}")
    pack = levelio.resolve_pack(cfg.train_pack)
    registry = _load_registry_for(cfg)
    reward_fn = _reward_fn(cfg.reward_mode, registry)
    rng = np.random.default_rng(cfg.seed)
    net = None
    if policy in ("epsilon-greedy", "greedy"):
        if checkpoint is not None:
            net, _, _, _ = qnet.load_network(checkpoint)
        else:
            net = qnet.build_network(cfg.seed, cfg.conv_filters)
    eps = {"random": 1.0, "epsilon-greedy": float(epsilon), "greedy": 0.0}[policy]

    os.makedirs(out_dir, exist_ok=True)
    episodes_path = os.path.join(out_dir, "episodes.csv")
    ef, ew = _csv_writer(episodes_path, EPISODES_FIELDS, append=True)
    n_transitions = 0
    try:
        with replay.DatasetWriter(out_dir, append=True) as writer:
            for episode in range(episode_count):
                level = pack[episode % len(pack)]
                state = world.reset(level)
                frame = observe_frame(state)
                record = EpisodeRecord(level_id=level.id, policy=policy)
                shot = 0
                while not state.done:
                    if policy == "random":
                        action = int(rng.integers(qnet.ACTION_COUNT))
                    else:
                        action = qnet.select_action(net, _norm(frame), eps, rng)
                    new_state, delta = world.simulate_shot(state, action)
                    reward = reward_fn(delta, level.id)
                    next_frame = observe_frame(new_state)
                    writer.add(
                        replay.Experience(
                            state=frame,
                            action=action,
                            reward=reward,
                            next_state=next_frame,
                            done=new_state.done,
                        )
                    )
                    bonus = world.win_bonus(state, new_state)
                    record.shots.append((action, delta - bonus, reward))
                    record.terminal_bonus += bonus
                    ew.writerow(
                        (
                            episode,
                            level.id,
                            shot,
                            action,
                            delta,
                            repr(float(reward)),
                            int(new_state.done),
                            int(new_state.won),
                            policy,
                        )
                    )
                    ef.flush()
                    n_transitions += 1
                    state, frame = new_state, next_frame
                    shot += 1
                record.total_score = state.score
                record.won = state.won
                record.check()
                registry.observe(level.id, state.score)
    finally:
        ef.close()
    return n_transitions


# ---------------------------------------------------------------------------
# Training


def _checkpoint_paths(out_dir, tag):
    return {
        "net": os.path.join(out_dir, f"checkpoint-{tag}.json"),
        "target": os.path.join(out_dir, f"target-{tag}.json"),
        "trainer": os.path.join(out_dir, f"trainer-{tag}.json"),
        "replay": os.path.join(out_dir, f"replay-{tag}.csv"),
        "registry": os.path.join(out_dir, f"registry-{tag}.json"),
    }


def _dump_replay(buffer, store_dir, index_path):
    """Spill the ring to the dataset format (shared, deduplicated frames)."""
    frames_dir = os.path.join(store_dir, replay.FRAMES_DIR)
    os.makedirs(frames_dir, exist_ok=True)
    known = set(os.listdir(frames_dir))

    def store(frame):
        name = replay._frame_filename(frame)
        if name not in known:
            ppm.write_ppm(os.path.join(frames_dir, name), frame)
            known.add(name)
        return name

    with open(index_path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(replay.INDEX_FIELDS)
        for e in buffer.contents():
            w.writerow(
                (
                    store(e.state),
                    int(e.action),
                    repr(float(e.reward)),
                    store(e.next_state),
                    int(bool(e.done)),
                )
            )


def _load_replay(index_path, store_dir, capacity, insert_count, store):
    frames_dir = os.path.join(store_dir, replay.FRAMES_DIR)
    cache = {}

    def frame(name):
        if name not in cache:
            cache[name] = store.intern(ppm.read_ppm(os.path.join(frames_dir, name)))
        return cache[name]

    contents = []
    with open(index_path, newline="") as f:
        reader = csv.reader(f)
        next(reader)
        for row in reader:
            contents.append(
                replay.Experience(
                    state=frame(row[0]),
                    action=int(row[1]),
                    reward=float(row[2]),
                    next_state=frame(row[3]),
                    done=bool(int(row[4])),
                )
            )
    return _restore_ring(capacity, contents, insert_count)


def _restore_ring(capacity, contents, insert_count):
    """Rebuild a ReplayBuffer with the exact in-memory slot layout.

    Sampling indexes raw ring slots, so the rotation must match for a
    resumed run to draw identical batches.
    """
    buf = replay.ReplayBuffer(capacity)
    size = len(contents)
    if size < capacity:
        buf._ring = list(contents)
        buf._next = size % capacity
    else:
        nxt = insert_count % capacity
        ring = [None] * size
        for j, e in enumerate(contents):
            ring[(nxt + j) % size] = e
        buf._ring = ring
        buf._next = nxt
    buf.insert_count = insert_count
    return buf


def _greedy_eval_actions(net, pack):
    """Greedy actions over one pass of a pack; no rng, no buffer writes."""
    counts = np.zeros(qnet.ACTION_COUNT, dtype=np.int64)
    wins = 0
    protocol_total = 0
    for level in pack:
        state = world.reset(level)
        frame = observe_frame(state)
        while not state.done:
            action = int(np.argmax(net.q_values(_norm(frame))))
            counts[action] += 1
            state, _ = world.simulate_shot(state, action)
            frame = observe_frame(state)
        wins += int(state.won)
        protocol_total += state.score if state.won else 0
    return counts, wins, protocol_total


@dataclass
class TrainResult:
    out_dir: str
    checkpoint: str
    metrics_path: str
    env_steps: int
    grad_steps: int
    episodes: int


def train(cfg, resume=None):
    """Experience-replay training loop.

    Per environment step: select an action on the current frame
    (epsilon-greedy), fire it, store the transition; every
    ``update_rate`` steps draw a uniform batch and apply one gradient
    update; hard-sync the target network every ``tau`` gradient steps.
    Checkpoints land at the evaluation cadence and the run is resumable
    from any of them.
    """
    agent = cfg.agent
    pack = levelio.resolve_pack(cfg.train_pack)
    out_dir = cfg.out_dir
    os.makedirs(out_dir, exist_ok=True)
    store = FrameStore()

    if resume is None:
        rng = np.random.default_rng(cfg.seed)
        net = qnet.build_network(cfg.seed, cfg.conv_filters)
        target = net.copy()
        opt = optim.init_optimizer(optim.ADAM, net.params)
        buffer = replay.ReplayBuffer(cfg.replay_capacity)
        registry = _load_registry_for(cfg)
        env_step = grad_step = episode = 0
        append = False
    else:
        net, target, opt, buffer, registry, rng, counters = _load_trainer_state(
            cfg, resume, store
        )
        env_step, grad_step, episode = counters
        append = os.path.dirname(os.path.abspath(resume)) == os.path.abspath(out_dir)

    reward_fn = _reward_fn(cfg.reward_mode, registry)
    metrics_path = os.path.join(out_dir, "metrics.csv")
    mf, mw = _csv_writer(metrics_path, METRICS_FIELDS, append=append)
    matrix_path = os.path.join(out_dir, "action-matrix.csv")
    xf, xw = _csv_writer(
        matrix_path,
        ("epoch", "episode", "env_step", "wins", "protocol_total")
        + tuple(f"a{a}" for a in range(qnet.ACTION_COUNT)),
        append=append,
    )
    epoch = episode // cfg.eval_every_episodes

    last_loss = float("nan")
    try:
        while env_step < cfg.total_steps:
            level = pack[episode % len(pack)]
            state = world.reset(level)
            frame = store.intern(observe_frame(state))
            record = EpisodeRecord(level_id=level.id, policy="epsilon-greedy")
            reward_return = 0.0
            q_max_sum = 0.0
            shots = 0
            while not state.done:
                epsilon = agent.epsilon_at(env_step)
                q = net.q_values(_norm(frame))
                q_max_sum += float(np.max(q))
                action = qnet.epsilon_greedy(q, epsilon, rng)
                new_state, delta = world.simulate_shot(state, action)
                reward = reward_fn(delta, level.id)
                next_frame = store.intern(observe_frame(new_state))
                buffer.push(
                    replay.Experience(
                        state=frame,
                        action=action,
                        reward=reward,
                        next_state=next_frame,
                        done=new_state.done,
                    )
                )
                env_step += 1
                reward_return += reward
                bonus = world.win_bonus(state, new_state)
                record.shots.append((action, delta - bonus, reward))
                record.terminal_bonus += bonus
                shots += 1
                state, frame = new_state, next_frame

                if len(buffer) >= cfg.replay_warmup and env_step % agent.update_rate == 0:
                    idx = buffer.sample_indices(agent.batch_size, rng)
                    batch = buffer.take(idx)
                    try:
                        loss, grads = qnet.loss_and_grads(net, target, batch, agent)
                    except ValueError as e:
                        raise TrainingAborted(
                            f"{e}; offending replay slots {sorted(int(i) for i in idx)}"
                        ) from e
                    net.params, opt = optim.apply_update(
                        net.params, grads, opt, agent.learning_rate
                    )
                    grad_step += 1
                    target = qnet.sync_target(net, target, grad_step, agent.tau)
                    last_loss = loss

            record.total_score = state.score
            record.won = state.won
            record.check()
            registry.observe(level.id, state.score)
            episode += 1
            mw.writerow(
                (
                    episode,
                    level.id,
                    env_step,
                    repr(float(agent.epsilon_at(env_step))),
                    repr(float(last_loss)),
                    repr(q_max_sum / shots),
                    repr(float(reward_return)),
                    state.score,
                    int(state.won),
                    shots,
                )
            )
            mf.flush()

            if episode % cfg.eval_every_episodes == 0:
                epoch += 1
                counts, wins, protocol = _greedy_eval_actions(net, pack)
                xw.writerow((epoch, episode, env_step, wins, protocol) + tuple(counts))
                xf.flush()
                _save_trainer_state(
                    cfg, out_dir, f"{episode:07d}", net, target, opt, buffer,
                    registry, rng, env_step, grad_step, episode,
                )
    finally:
        mf.close()
        xf.close()

    final = _save_trainer_state(
        cfg, out_dir, "final", net, target, opt, buffer, registry, rng,
        env_step, grad_step, episode,
    )
    registry.save(os.path.join(out_dir, "registry.json"))
    return TrainResult(
        out_dir=out_dir,
        checkpoint=final["net"],
        metrics_path=metrics_path,
        env_steps=env_step,
        grad_steps=grad_step,
        episodes=episode,
    )


def _save_trainer_state(
    cfg, out_dir, tag, net, target, opt, buffer, registry, rng,
    env_step, grad_step, episode,
):
    paths = _checkpoint_paths(out_dir, tag)
    qnet.save_network(
        paths["net"],
        net,
        opt_state=opt,
        step=grad_step,
        agent_config=cfg.agent,
        extra_header={"env_step": env_step, "episode": episode, "run_config": cfg.to_dict()},
    )
    qnet.save_network(paths["target"], target, step=grad_step)
    _dump_replay(buffer, out_dir, paths["replay"])
    registry.save(paths["registry"])
    state = {
        "env_step": env_step,
        "grad_step": grad_step,
        "episode": episode,
        "replay_insert_count": buffer.insert_count,
        "replay_index": os.path.basename(paths["replay"]),
        "rng_state": rng.bit_generator.state,
        "registry_file": os.path.basename(paths["registry"]),
    }
    with open(paths["trainer"], "w") as f:
        json.dump(state, f, indent=1)
        f.write("\n")
    return paths


def _load_trainer_state(cfg, checkpoint_path, store):
    """Rebuild everything from a ``checkpoint-<tag>.json`` path."""
    directory = os.path.dirname(os.path.abspath(checkpoint_path))
    base = os.path.basename(checkpoint_path)
    if not base.startswith("checkpoint-") or not base.endswith(".json"):
        raise ValueError(f"{checkpoint_path} is not a trainer checkpoint")
    tag = base[len("checkpoint-") : -len(".json")]
    paths = _checkpoint_paths(directory, tag)
    net, opt, _, _ = qnet.load_network(paths["net"])
    target, _, _, _ = qnet.load_network(paths["target"])
    with open(paths["trainer"]) as f:
        state = json.load(f)
    registry = rewards.ScoreRegistry.load(
        os.path.join(directory, state["registry_file"])
    )
    buffer = _load_replay(
        os.path.join(directory, state["replay_index"]),
        directory,
        cfg.replay_capacity,
        state["replay_insert_count"],
        store,
    )
    rng = np.random.default_rng()
    rng.bit_generator.state = state["rng_state"]
    counters = (state["env_step"], state["grad_step"], state["episode"])
    return net, target, opt, buffer, registry, rng, counters


# ---------------------------------------------------------------------------
# Evaluation


@dataclass
class LevelScore:
    level_id: str
    raw_score: int
    won: bool
    protocol_score: int
    actions: tuple


def evaluate(net, pack):
    """One greedy try per level; a failed level scores zero.

    Returns the per-level rows plus a totals summary.  Never touches the
    network or a replay buffer.
    """
    rows = []
    for level in pack:
        state = world.reset(level)
        frame = observe_frame(state)
        actions = []
        while not state.done:
            action = int(np.argmax(net.q_values(_norm(frame))))
            actions.append(action)
            state, _ = world.simulate_shot(state, action)
            frame = observe_frame(state)
        rows.append(
            LevelScore(
                level_id=level.id,
                raw_score=state.score,
                won=state.won,
                protocol_score=state.score if state.won else 0,
                actions=tuple(actions),
            )
        )
    return rows


def evaluate_checkpoint(checkpoint_path, pack):
    net, _, _, _ = qnet.load_network(checkpoint_path)
    return evaluate(net, pack)


def protocol_total(rows):
    return sum(r.protocol_score for r in rows)


def format_score_table(rows):
    lines = [f"{'level':<16}{'score':>10}  {'won':<5}{'protocol':>10}  actions"]
    for r in rows:
        lines.append(
            f"{r.level_id:<16}{r.raw_score:>10}  {str(r.won).lower():<5}"
            f"{r.protocol_score:>10}  {' '.join(map(str, r.actions))}"
        )
    wins = sum(r.won for r in rows)
    lines.append(
        f"{'total':<16}{sum(r.raw_score for r in rows):>10}  {wins:>2}/{len(rows)}"
        f"{protocol_total(rows):>10}"
    )
    return "\n".join(lines)


def write_score_table(path, rows):
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(("level", "raw_score", "won", "protocol_score", "actions"))
        for r in rows:
            w.writerow(
                (r.level_id, r.raw_score, int(r.won), r.protocol_score,
                 " ".join(map(str, r.actions)))
            )
        w.writerow(("total", sum(r.raw_score for r in rows), sum(r.won for r in rows),
                    protocol_total(rows), ""))


def random_policy_mean_protocol(pack, passes, seed):
    """Mean one-try protocol total of the uniform-random policy."""
    rng = np.random.default_rng(seed)
    totals = []
    for _ in range(passes):
        total = 0
        for level in pack:
            state = world.reset(level)
            while not state.done:
                state, _ = world.simulate_shot(state, int(rng.integers(qnet.ACTION_COUNT)))
            total += state.score if state.won else 0
        totals.append(total)
    return float(np.mean(totals))


# ---------------------------------------------------------------------------
# Action statistics


def dataset_action_histogram(dataset_dir):
    """91-bin histogram of the actions stored in a dataset index."""
    counts = np.zeros(qnet.ACTION_COUNT, dtype=np.int64)
    with open(os.path.join(dataset_dir, replay.INDEX_NAME), newline="") as f:
        reader = csv.reader(f)
        next(reader)
        for row in reader:
            counts[int(row[1])] += 1
    return counts


def checkpoint_action_matrix(run_dir, pack):
    """Greedy-action counts per saved checkpoint (rows ordered by step)."""
    tags = []
    for name in os.listdir(run_dir):
        if name.startswith("checkpoint-") and name.endswith(".json"):
            tag = name[len("checkpoint-") : -len(".json")]
            if tag != "final":
                tags.append(tag)
    tags.sort()
    rows = []
    for epoch, tag in enumerate(tags, start=1):
        net, _, step, _ = qnet.load_network(
            os.path.join(run_dir, f"checkpoint-{tag}.json")
        )
        counts, wins, protocol = _greedy_eval_actions(net, pack)
        rows.append({"epoch": epoch, "step": step, "wins": wins,
                     "protocol_total": protocol, "counts": counts})
    return rows


def write_histogram_csv(path, counts):
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(("angle", "count"))
        for angle, count in enumerate(counts):
            w.writerow((angle, int(count)))


def write_action_matrix_csv(path, rows):
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(("epoch", "step", "wins", "protocol_total")
                   + tuple(f"a{a}" for a in range(qnet.ACTION_COUNT)))
        for r in rows:
            w.writerow((r["epoch"], r["step"], r["wins"], r["protocol_total"])
                       + tuple(int(c) for c in r["counts"]))
