"""From-scratch TD3 in numpy."""

from .agent import (AgentNets, Hyperparams, TD3Agent, actor_update, critic_update,
                    load_checkpoint, make_nets, save_checkpoint, select_action, td_target,
                    train_iteration)
from .buffer import Batch, ReplayBuffer
from .mlp import AdamState, Mlp, adam_step, polyak_update

__all__ = [
    "AdamState", "AgentNets", "Batch", "Hyperparams", "Mlp", "ReplayBuffer", "TD3Agent",
    "actor_update", "adam_step", "critic_update", "load_checkpoint", "make_nets",
    "polyak_update", "save_checkpoint", "select_action", "td_target", "train_iteration",
]
