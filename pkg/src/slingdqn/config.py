"""Run configuration: agent hyperparameters plus orchestration settings.

Configs load from a JSON file and merge with command-line overrides;
the seed fixes every stochastic choice of a run.
"""

import json
from dataclasses import dataclass, field, replace

from slingdqn.qnet import AgentConfig

# Width of the conv trunk used by the shipped default run.  The full
# published-scale widths (32, 64, 64, 512) are available through the
# config; the reduced net keeps the end-to-end run desk sized.
REDUCED_CONV_FILTERS = (16, 32, 32, 128)


@dataclass(frozen=True)
class RunConfig:
    agent: AgentConfig = field(default_factory=AgentConfig)
    conv_filters: tuple = REDUCED_CONV_FILTERS
    train_pack: str = "train"
    validation_pack: str = "validation"
    reward_mode: str = "normalized"
    replay_capacity: int = 100_000
    replay_warmup: int = 1000
    total_steps: int = 150_000
    eval_every_episodes: int = 20_000
    seed: int = 7
    out_dir: str = "runs/default"

    def __post_init__(self):
        if self.reward_mode not in ("clipped", "normalized"):
            raise ValueError(f"unknown reward mode {self.reward_mode!r}")
        if self.replay_warmup < self.agent.batch_size:
            raise ValueError("replay warm-up must cover at least one batch")
        if self.replay_capacity < self.replay_warmup:
            raise ValueError("replay capacity below the warm-up minimum")
        if len(self.conv_filters) != 4 or min(self.conv_filters) < 1:
            raise ValueError("conv_filters must be four positive widths")

    def to_dict(self):
        doc = {
            "agent": self.agent.to_dict(),
            "conv_filters": list(self.conv_filters),
            "train_pack": self.train_pack,
            "validation_pack": self.validation_pack,
            "reward_mode": self.reward_mode,
            "replay_capacity": self.replay_capacity,
            "replay_warmup": self.replay_warmup,
            "total_steps": self.total_steps,
            "eval_every_episodes": self.eval_every_episodes,
            "seed": self.seed,
            "out_dir": self.out_dir,
        }
        return doc

    @classmethod
    def from_dict(cls, doc):
        doc = dict(doc)
        agent = AgentConfig.from_dict(doc.pop("agent")) if "agent" in doc else AgentConfig()
        if "conv_filters" in doc:
            doc["conv_filters"] = tuple(doc["conv_filters"])
        return cls(agent=agent, **doc)


def load_config(path=None, overrides=None):
    """Config from an optional JSON file plus flag overrides.

    ``overrides`` maps RunConfig field names (or AgentConfig names
    prefixed with ``agent.``) to values; ``None`` values are ignored.
    """
    cfg = RunConfig() if path is None else RunConfig.from_dict(_read_json(path))
    if not overrides:
        return cfg
    agent_kwargs = {}
    run_kwargs = {}
    for key, value in overrides.items():
        if value is None:
            continue
        if key.startswith("agent."):
            agent_kwargs[key[len("agent.") :]] = value
        else:
            run_kwargs[key] = value
    if agent_kwargs:
        run_kwargs["agent"] = replace(cfg.agent, **agent_kwargs)
    return replace(cfg, **run_kwargs) if run_kwargs else cfg


def save_config(path, cfg):
    with open(path, "w") as f:
        json.dump(cfg.to_dict(), f, indent=1, sort_keys=True)
        f.write("\n")


def _read_json(path):
    with open(path) as f:
        return json.load(f)
