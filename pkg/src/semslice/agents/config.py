from __future__ import annotations

from dataclasses import dataclass, field


@dataclass
class AgentConfig:
    gamma: float = 0.5
    tau: float = 0.005
    lr_actor: float = 1e-4
    lr_critic: float = 1e-3
    noise_std: float = 0.5
    noise_decay: float = 0.98
    noise_min: float = 0.02
    batch_size: int = 64
    warmup_steps: int = 500
    buffer_capacity: int = 50_000
    hidden: list[int] = field(default_factory=lambda: [64, 64])
    zero_init_actor: bool = True    # actor starts at the equal split
    # discrete baseline
    dqn_grid_levels: int = 0        # 0 picks the largest grid with <= 3000 points
    dqn_lr: float = 1e-3
    dqn_target_period: int = 100
    epsilon_start: float = 1.0
    epsilon_end: float = 0.05
    epsilon_decay: float = 0.95

    def __post_init__(self) -> None:
        if not 0.0 <= self.gamma < 1.0:
            raise ValueError("gamma must lie in [0, 1)")
        if not 0.0 <= self.tau <= 1.0:
            raise ValueError("tau must lie in [0, 1]")
        if min(self.lr_actor, self.lr_critic, self.dqn_lr) < 0:
            raise ValueError("learning rates must be nonnegative")
        if self.noise_std < 0 or not 0.0 < self.noise_decay <= 1.0:
            raise ValueError("noise_std must be >= 0 and noise_decay in (0, 1]")
        if self.batch_size < 1 or self.buffer_capacity < 1 or self.warmup_steps < 0:
            raise ValueError("batch_size, buffer_capacity must be positive; warmup_steps >= 0")
        if not (0.0 <= self.epsilon_end <= self.epsilon_start <= 1.0):
            raise ValueError("need 0 <= epsilon_end <= epsilon_start <= 1")

    def noise_at(self, episode: int) -> float:
        """Exploration scale for a given episode; nonincreasing in ``episode``."""
        return max(self.noise_std * self.noise_decay ** episode, min(self.noise_min, self.noise_std))

    def epsilon_at(self, episode: int) -> float:
        return max(self.epsilon_start * self.epsilon_decay ** episode, self.epsilon_end)
