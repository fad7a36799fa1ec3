"""The agent contract and generic baseline agents.

An agent is driven as: setup(obs_spec, act_spec) once, then per episode
reset(first_obs) followed by step(obs, reward, done) -> action each tick
(the first step of an episode is called with the same observation that was
passed to reset, and reward 0). Agents may keep state between steps; reset
clears per-episode state.

A "team" is agent-shaped too: its obs/act specs are SeqSpecs and its
observations and actions are SeqV tuples, one item per controlled lane.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from typing import Sequence

from .errors import SetupError
from .rng import RngStream
from .values import SeqSpec, SeqV, SpaceSpec, Value, space_sample


class Agent(ABC):
    """A policy for a single environment slot."""

    #: Raw environment slots covered; multi-slot actors (teams) override this.
    slots: int = 1

    def setup(self, obs_spec: SpaceSpec, act_spec: SpaceSpec) -> None:
        self.obs_spec = obs_spec
        self.act_spec = act_spec

    def reset(self, first_obs: Value) -> None:
        """Clear per-episode state; first_obs is the episode's initial observation."""

    @abstractmethod
    def step(self, obs: Value, reward: float, done: bool) -> Value:
        """Return an action in act_spec for the current observation."""


class RandomAgent(Agent):
    """Samples the action space uniformly from a seeded stream."""

    def __init__(self, seed: int = 0, *, rng: RngStream | None = None):
        self._rng = rng if rng is not None else RngStream(seed, ("random-agent",))

    def step(self, obs: Value, reward: float, done: bool) -> Value:
        return space_sample(self.act_spec, self._rng)


class ConstantAgent(Agent):
    """Always returns the same action."""

    def __init__(self, action: Value):
        self._action = action

    def step(self, obs: Value, reward: float, done: bool) -> Value:
        return self._action


class TeamAgent(Agent):
    """Drives one member policy per lane of a SeqSpec-shaped slot.

    This is the consumer-side counterpart of a team-forming interface: wrapping
    an environment with make_team leaves slots whose observations are SeqV
    tuples, and a TeamAgent splits those lanes across its members. Each member
    sees the team's (already combined) scalar reward.
    """

    def __init__(self, members: Sequence[Agent]):
        self.members = list(members)
        if not self.members:
            raise SetupError("a team needs at least one member")

    def setup(self, obs_spec: SpaceSpec, act_spec: SpaceSpec) -> None:
        super().setup(obs_spec, act_spec)
        if not isinstance(obs_spec, SeqSpec) or not isinstance(act_spec, SeqSpec):
            raise SetupError("TeamAgent needs SeqSpec observation and action spaces")
        if len(obs_spec) != len(self.members) or len(act_spec) != len(self.members):
            raise SetupError(
                f"TeamAgent has {len(self.members)} members but the specs have "
                f"{len(obs_spec)}/{len(act_spec)} lanes"
            )
        for member, o, a in zip(self.members, obs_spec.items, act_spec.items):
            member.setup(o, a)

    def reset(self, first_obs: Value) -> None:
        assert isinstance(first_obs, SeqV)
        for member, o in zip(self.members, first_obs.items):
            member.reset(o)

    def step(self, obs: Value, reward: float, done: bool) -> Value:
        assert isinstance(obs, SeqV)
        return SeqV(tuple(
            member.step(o, reward, done) for member, o in zip(self.members, obs.items)
        ))
