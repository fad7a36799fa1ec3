"""Episode replay logging and re-simulation verification.

A replay file is JSON Lines. The first line is a match header carrying the
toolkit version and the match spec; each episode contributes a header line
(episode index, seed, post-reset state hash), one line per step (step index,
the innermost environment's action bundle in canonical JSON form, raw rewards,
done flag, post-step state hash), and an outcome footer.

Hashes are 64-bit blake2b digests of the environment's canonical state
serialization, so a replay verifies by rebuilding the raw environment from
the header, replaying the recorded actions (no agents needed), and comparing
hashes step by step. Float fields use shortest round-trip reprs, which makes
equal runs produce byte-identical files on any platform.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Any, IO, Iterator

from .bundles import Bundle
from .env import Env
from .errors import FormatError
from .serial import value_from_jsonable, value_to_jsonable, value_hash_hex

FORMAT_VERSION = 1


def state_hash(env: Env) -> str:
    """Hash of the innermost environment's canonical state."""
    return value_hash_hex(env.unwrapped.state_value())


def _dump(obj: dict[str, Any]) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


class ReplayWriter:
    """Serial JSONL writer for one match's episodes."""

    def __init__(self, stream: IO[str]):
        self._stream = stream

    def match_header(self, spec_jsonable: dict[str, Any], version: str) -> None:
        self._stream.write(_dump({
            "kind": "match", "format": FORMAT_VERSION,
            "version": version, "spec": spec_jsonable,
        }) + "\n")

    def episode_header(self, index: int, seed: int, reset_hash: str) -> None:
        self._stream.write(_dump({
            "kind": "episode", "index": index, "seed": seed, "reset_hash": reset_hash,
        }) + "\n")

    def step(self, t: int, raw_actions: Bundle, rewards: tuple[float, ...],
             done: bool, digest: str) -> None:
        self._stream.write(_dump({
            "kind": "step", "t": t,
            "actions": [value_to_jsonable(a) for a in raw_actions],
            "rewards": list(rewards), "done": done, "hash": digest,
        }) + "\n")

    def outcome(self, winner: int | None, draw: bool,
                returns: tuple[float, ...], length: int) -> None:
        self._stream.write(_dump({
            "kind": "outcome", "winner": winner, "draw": draw,
            "returns": list(returns), "length": length,
        }) + "\n")


@dataclass
class ReplayEpisode:
    index: int
    seed: int
    reset_hash: str
    steps: list[dict[str, Any]]
    outcome: dict[str, Any] | None


@dataclass
class Replay:
    header: dict[str, Any]
    episodes: list[ReplayEpisode]


def _lines(path: str) -> Iterator[dict[str, Any]]:
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise FormatError(f"{path}:{lineno}: not valid JSON: {exc}") from exc
            if not isinstance(obj, dict) or "kind" not in obj:
                raise FormatError(f"{path}:{lineno}: record without a kind tag")
            yield obj


def read_replay(path: str) -> Replay:
    header: dict[str, Any] | None = None
    episodes: list[ReplayEpisode] = []
    for obj in _lines(path):
        kind = obj["kind"]
        if kind == "match":
            if header is not None:
                raise FormatError(f"{path}: duplicate match header")
            if obj.get("format") != FORMAT_VERSION:
                raise FormatError(f"{path}: unsupported format {obj.get('format')!r}")
            header = obj
        elif kind == "episode":
            if header is None:
                raise FormatError(f"{path}: episode before match header")
            episodes.append(ReplayEpisode(
                index=obj["index"], seed=obj["seed"],
                reset_hash=obj["reset_hash"], steps=[], outcome=None,
            ))
        elif kind == "step":
            if not episodes:
                raise FormatError(f"{path}: step before any episode header")
            episodes[-1].steps.append(obj)
        elif kind == "outcome":
            if not episodes:
                raise FormatError(f"{path}: outcome before any episode header")
            episodes[-1].outcome = obj
        else:
            raise FormatError(f"{path}: unknown record kind {kind!r}")
    if header is None:
        raise FormatError(f"{path}: missing match header")
    return Replay(header=header, episodes=episodes)


@dataclass
class VerifyResult:
    ok: bool
    episode: int | None = None
    step: int | None = None
    message: str = "ok"


def replay_verify(path: str) -> VerifyResult:
    """Re-simulate a replay from its seeds and actions, comparing state hashes.

    Agents are not needed: the recorded action bundles drive the raw
    environment directly. Returns the first divergent (episode, step), if any.
    """
    from .registry import make_env  # deferred: registry pulls in all envs

    replay = read_replay(path)
    env_spec = replay.header["spec"]["env"]
    for ep in replay.episodes:
        env = make_env(env_spec["name"], env_spec.get("params") or {})
        env.reset(ep.seed)
        if state_hash(env) != ep.reset_hash:
            return VerifyResult(False, ep.index, None, "reset state diverged")
        for rec in ep.steps:
            try:
                actions = Bundle(tuple(value_from_jsonable(a) for a in rec["actions"]))
            except FormatError:
                raise
            except Exception as exc:
                raise FormatError(f"{path}: bad action record at t={rec.get('t')}") from exc
            env.step(actions)
            if state_hash(env) != rec["hash"]:
                return VerifyResult(False, ep.index, rec["t"], "state hash diverged")
    return VerifyResult(True)
