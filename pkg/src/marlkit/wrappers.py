"""Attaching interfaces to either side of the RL loop.

wrap_env(env, itf) hides the transforms inside env.step(): the wrapped
environment exposes the interface's outer specs. wrap_agent(members, itf)
hides them inside the agent instead: the wrapped agent accepts raw
observations for the slots it covers and emits raw actions, so agents trained
with different interfaces can play each other in the original environment.
lift_single_wrapper adapts a classic single-slot observation/reward/action
wrapper so it composes in interface stacks.
"""

from __future__ import annotations

from typing import Sequence

from .agents import Agent
from .bundles import Bundle, StepResult
from .env import Env
from .errors import SetupError, SpaceMismatch
from .interfaces import Combine, Identity, Interface
from .values import SpaceSpec, Value, space_contains


class WrappedEnv(Env):
    """An environment with an interface folded into reset/step."""

    def __init__(self, base: Env, interface: Interface):
        super().__init__()
        self.base = base
        self.interface = interface
        interface.setup(base.observation_specs, base.action_specs)
        self._obs_specs = interface.outer_obs_specs
        self._act_specs = interface.outer_act_specs
        self._groups = interface.slot_groups

    @property
    def observation_specs(self) -> list[SpaceSpec]:
        return list(self._obs_specs)

    @property
    def action_specs(self) -> list[SpaceSpec]:
        return list(self._act_specs)

    @property
    def parties(self) -> list[int]:
        base_parties = self.base.parties
        out = []
        for group in self._groups:
            members = {base_parties[i] for i in group}
            out.append(members.pop() if len(members) == 1 else -1)
        return out

    @property
    def unwrapped(self) -> Env:
        return self.base.unwrapped

    def _do_reset(self, seed: int) -> Bundle:
        return self.interface.reset(self.base.reset(seed))

    def _do_step(self, actions: Bundle) -> StepResult:
        raw_actions = self.interface.act_trans(actions)
        raw = self.base.step(raw_actions)
        obs, rewards = self.interface.obs_trans(raw.obs, raw.rewards)
        alive = tuple(any(raw.alive[i] for i in g) for g in self._groups)
        return StepResult(obs=obs, rewards=rewards, done=raw.done, alive=alive, info=raw.info)

    def raw_record(self) -> tuple[Bundle, StepResult]:
        return self.base.raw_record()

    def state_value(self) -> Value:
        return self.base.state_value()

    def render_ascii(self) -> str:
        return self.base.render_ascii()


def wrap_env(env: Env, itf: Interface) -> WrappedEnv:
    """Wrap an interface on an environment."""
    return WrappedEnv(env, itf)


def wrap_env_per_agent(env: Env, itfs: Sequence[Interface]) -> WrappedEnv:
    """One single-slot interface per agent slot, applied independently."""
    if len(itfs) != env.num_slots:
        raise SetupError(
            f"need one interface per slot: got {len(itfs)} for {env.num_slots} slots"
        )
    partition = [[i] for i in range(env.num_slots)]
    wrapped = WrappedEnv(env, Combine(Identity(), list(itfs), partition))
    for k, count in enumerate(wrapped.interface._child_outer_counts):
        if count != 1:
            raise SetupError(f"interface {k} changes its slot count; wrap it explicitly")
    return wrapped


class WrappedAgent:
    """A team: member agents behind an interface, covering raw env slots.

    The wrapped agent presents the interface's inner (raw) specs to the
    outside; member k is fed the interface's outer slot k. Rewards reach each
    member after the interface's reward transform (teams see the group sum).
    """

    def __init__(self, members: Sequence[Agent], interface: Interface,
                 covered_slots: int | None = None):
        self.members = list(members)
        self.interface = interface
        if covered_slots is None:
            covered_slots = interface.inner_count_for(len(self.members))
        if covered_slots is None:
            raise SetupError(
                "cannot derive the covered raw slot count from this interface; "
                "pass covered_slots explicitly"
            )
        self.slots = int(covered_slots)
        self._setup_specs: tuple | None = None
        self._pending_first: Bundle | None = None

    def setup(self, obs_specs: Sequence[SpaceSpec], act_specs: Sequence[SpaceSpec]) -> None:
        key = (tuple(obs_specs), tuple(act_specs))
        if self._setup_specs is not None:
            if key != self._setup_specs:
                raise SetupError("wrapped agent was set up on different specs")
            return
        if len(obs_specs) != self.slots:
            raise SetupError(f"expected {self.slots} raw slots, got {len(obs_specs)}")
        outer_obs, outer_act = self.interface.setup(list(obs_specs), list(act_specs))
        if len(outer_obs) != len(self.members):
            raise SetupError(
                f"interface exposes {len(outer_obs)} outer slots for "
                f"{len(self.members)} members"
            )
        for member, o, a in zip(self.members, outer_obs, outer_act):
            member.setup(o, a)
        self._setup_specs = key

    def reset(self, first_obs: Sequence[Value]) -> None:
        outer = self.interface.reset(Bundle(tuple(first_obs)))
        for member, o in zip(self.members, outer):
            member.reset(o)
        self._pending_first = outer

    def step(self, obs: Sequence[Value], rewards: Sequence[float], done: bool) -> list[Value]:
        if self._pending_first is not None:
            # The episode's first observation was already transformed by reset.
            outer_obs = self._pending_first
            outer_rewards = (0.0,) * len(self.members)
            self._pending_first = None
        else:
            outer_obs, outer_rewards = self.interface.obs_trans(
                Bundle(tuple(obs)), tuple(rewards)
            )
        actions = []
        for member, o, r in zip(self.members, outer_obs, outer_rewards):
            act = member.step(o, r, done)
            actions.append(act)
        for k, (act, spec) in enumerate(zip(actions, self.interface.outer_act_specs)):
            if not space_contains(spec, act):
                raise SpaceMismatch(f"member {k} action {act!r} not in {spec!r}")
        raw = self.interface.act_trans(Bundle(tuple(actions)))
        return list(raw.slots)


def wrap_agent(members: Sequence[Agent], itf: Interface,
               covered_slots: int | None = None) -> WrappedAgent:
    """Wrap an interface on one or more agents, forming a team-shaped actor."""
    return WrappedAgent(members, itf, covered_slots)


class SingleSlotWrapper:
    """A classic single-agent wrapper: per-slot transforms only.

    Subclasses override any of the hooks; the defaults are identities. Lift the
    wrapper into an interface with lift_single_wrapper to compose it in stacks.
    """

    def obs_spec(self, spec: SpaceSpec) -> SpaceSpec:
        return spec

    def act_spec(self, spec: SpaceSpec) -> SpaceSpec:
        return spec

    def obs(self, value: Value) -> Value:
        return value

    def reward(self, reward: float) -> float:
        return reward

    def act(self, action: Value) -> Value:
        return action


class LiftedWrapper(Interface):
    """Applies a SingleSlotWrapper independently to every slot."""

    def __init__(self, wrapper: SingleSlotWrapper, inner: Interface | None = None):
        super().__init__(inner)
        self.wrapper = wrapper

    def _setup(self, obs_specs, act_specs):
        return (
            [self.wrapper.obs_spec(s) for s in obs_specs],
            [self.wrapper.act_spec(s) for s in act_specs],
        )

    def _obs(self, obs, rewards):
        out = Bundle(tuple(self.wrapper.obs(v) for v in obs))
        return out, tuple(self.wrapper.reward(r) for r in rewards)

    def _act(self, actions):
        return Bundle(tuple(self.wrapper.act(a) for a in actions))


def lift_single_wrapper(w: SingleSlotWrapper) -> Interface:
    """Lift a per-slot wrapper into an interface usable in stacks."""
    return LiftedWrapper(w)
