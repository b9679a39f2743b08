from slingdqn.env.world import (
    Level,
    LevelError,
    WorldState,
    best_first_angle,
    greedy_oracle_episode,
    release_point,
    reset,
    simulate_shot,
    sweep_first_shot,
)
from slingdqn.env.rendering import render
from slingdqn.env.rewards import ScoreRegistry, reward_clipped, reward_normalized

__all__ = [
    "Level",
    "LevelError",
    "WorldState",
    "best_first_angle",
    "greedy_oracle_episode",
    "release_point",
    "reset",
    "simulate_shot",
    "sweep_first_shot",
    "render",
    "ScoreRegistry",
    "reward_clipped",
    "reward_normalized",
]
