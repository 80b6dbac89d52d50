from .config import AgentConfig
from .ddpg import DDPGAgent, DDPGNets, ddpg_select_action, ddpg_targets, ddpg_train_step, init_ddpg
from .dqn import DQNAgent, dqn_select_action, dqn_targets, dqn_train_step
from .features import feature_dim, observation_features
from .heuristics import EqualAgent, ProportionalAgent
from .replay import ReplayBuffer, Transition
from .simplex import (AllocationAction, composition_grid, default_grid_levels, equal_allocation,
                      grid_allocations, grid_size, project_to_simplex, proportional_allocation,
                      softmax_allocation)

__all__ = [
    "AgentConfig", "AllocationAction", "DDPGAgent", "DDPGNets", "DQNAgent", "EqualAgent",
    "ProportionalAgent", "ReplayBuffer", "Transition", "composition_grid", "ddpg_select_action",
    "ddpg_targets", "ddpg_train_step", "default_grid_levels", "dqn_select_action", "dqn_targets",
    "dqn_train_step", "equal_allocation", "feature_dim", "grid_allocations", "grid_size",
    "init_ddpg", "observation_features", "project_to_simplex", "proportional_allocation",
    "softmax_allocation",
]
