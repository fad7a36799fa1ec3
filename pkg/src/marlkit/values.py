"""Observation/action payloads and their space descriptors.

Values are immutable recursive payloads: a discrete index, a flat vector, a
(height, width, channels) grid in row-major order, a string-keyed mapping, or
an ordered sequence. Spaces describe sets of values and support membership
tests, sampling and canonical flattening.

Equality of values is structural and exact: two values are equal iff their
canonical little-endian serializations are byte-identical, which makes real
entries compare bitwise (0.0 != -0.0, and equal-bit NaNs compare equal).
Mappings iterate in ascending lexicographic key order everywhere.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field
from typing import Iterator, Mapping, Sequence

from .errors import SpaceMismatch
from .rng import RngStream

_U32 = struct.Struct("<I")
_U64 = struct.Struct("<Q")


class Value:
    """Base class for observation/action payloads."""

    __slots__ = ()

    def canonical_bytes(self) -> bytes:
        """Canonical little-endian serialization; the basis of equality and hashing."""
        cb = self._cb
        if cb is None:
            parts: list[bytes] = []
            self._encode(parts)
            cb = b"".join(parts)
            object.__setattr__(self, "_cb", cb)
        return cb

    def _encode(self, out: list[bytes]) -> None:
        raise NotImplementedError

    def __eq__(self, other) -> bool:
        if not isinstance(other, Value):
            return NotImplemented
        return self.canonical_bytes() == other.canonical_bytes()

    def __ne__(self, other) -> bool:
        eq = self.__eq__(other)
        return eq if eq is NotImplemented else not eq

    def __hash__(self) -> int:
        return hash(self.canonical_bytes())


def _pack_floats(values: Sequence[float]) -> bytes:
    return struct.pack(f"<{len(values)}d", *values)


@dataclass(frozen=True, slots=True, eq=False)
class DiscreteV(Value):
    """A single non-negative index."""

    index: int
    _cb: bytes | None = field(default=None, init=False, repr=False)

    def __post_init__(self):
        if not isinstance(self.index, int) or isinstance(self.index, bool) or self.index < 0:
            raise ValueError(f"discrete index must be a non-negative int, got {self.index!r}")

    def _encode(self, out: list[bytes]) -> None:
        out.append(b"\x01" + _U64.pack(self.index))


def _float_tuple(entries) -> tuple[float, ...]:
    if type(entries) is tuple and all(type(e) is float for e in entries):
        return entries
    return tuple(float(e) for e in entries)


@dataclass(frozen=True, slots=True, eq=False)
class VectorV(Value):
    """An ordered tuple of reals."""

    entries: tuple[float, ...]
    _cb: bytes | None = field(default=None, init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "entries", _float_tuple(self.entries))

    def _encode(self, out: list[bytes]) -> None:
        out.append(b"\x02" + _U32.pack(len(self.entries)) + _pack_floats(self.entries))

    def __len__(self) -> int:
        return len(self.entries)


@dataclass(frozen=True, slots=True, eq=False)
class GridV(Value):
    """Reals on a (height, width, channels) grid, stored row-major."""

    shape: tuple[int, int, int]
    entries: tuple[float, ...]
    _cb: bytes | None = field(default=None, init=False, repr=False)

    def __post_init__(self):
        shape = tuple(int(s) for s in self.shape)
        if len(shape) != 3 or any(s <= 0 for s in shape):
            raise ValueError(f"grid shape must be 3 positive ints, got {self.shape!r}")
        entries = _float_tuple(self.entries)
        h, w, c = shape
        if len(entries) != h * w * c:
            raise ValueError(f"grid of shape {shape} needs {h * w * c} entries, got {len(entries)}")
        object.__setattr__(self, "shape", shape)
        object.__setattr__(self, "entries", entries)

    def at(self, row: int, col: int, channel: int = 0) -> float:
        h, w, c = self.shape
        return self.entries[(row * w + col) * c + channel]

    def _encode(self, out: list[bytes]) -> None:
        h, w, c = self.shape
        out.append(b"\x03" + _U32.pack(h) + _U32.pack(w) + _U32.pack(c) + _pack_floats(self.entries))


@dataclass(frozen=True, slots=True, eq=False)
class MappingV(Value):
    """String-keyed mapping of values; iterates in ascending key order."""

    entries: tuple[tuple[str, Value], ...]
    _cb: bytes | None = field(default=None, init=False, repr=False)

    def __post_init__(self):
        raw = self.entries
        if isinstance(raw, Mapping):
            items = list(raw.items())
        else:
            items = list(raw)
        items.sort(key=lambda kv: kv[0])
        keys = [k for k, _ in items]
        if len(set(keys)) != len(keys):
            raise ValueError("mapping keys must be unique")
        for k, v in items:
            if not isinstance(k, str):
                raise ValueError(f"mapping keys must be str, got {k!r}")
            if not isinstance(v, Value):
                raise ValueError(f"mapping values must be Value, got {v!r}")
        object.__setattr__(self, "entries", tuple(items))

    def keys(self) -> tuple[str, ...]:
        return tuple(k for k, _ in self.entries)

    def items(self) -> tuple[tuple[str, Value], ...]:
        return self.entries

    def get(self, key: str, default: Value | None = None) -> Value | None:
        for k, v in self.entries:
            if k == key:
                return v
        return default

    def __getitem__(self, key: str) -> Value:
        v = self.get(key)
        if v is None:
            raise KeyError(key)
        return v

    def __contains__(self, key: str) -> bool:
        return self.get(key) is not None

    def _encode(self, out: list[bytes]) -> None:
        out.append(b"\x04" + _U32.pack(len(self.entries)))
        for k, v in self.entries:
            raw = k.encode("utf-8")
            out.append(_U32.pack(len(raw)) + raw)
            v._encode(out)


@dataclass(frozen=True, slots=True, eq=False)
class SeqV(Value):
    """An ordered sequence of values."""

    items: tuple[Value, ...]
    _cb: bytes | None = field(default=None, init=False, repr=False)

    def __post_init__(self):
        items = tuple(self.items)
        for v in items:
            if not isinstance(v, Value):
                raise ValueError(f"sequence items must be Value, got {v!r}")
        object.__setattr__(self, "items", items)

    def __len__(self) -> int:
        return len(self.items)

    def __getitem__(self, i: int) -> Value:
        return self.items[i]

    def __iter__(self) -> Iterator[Value]:
        return iter(self.items)

    def _encode(self, out: list[bytes]) -> None:
        out.append(b"\x05" + _U32.pack(len(self.items)))
        for v in self.items:
            v._encode(out)


# ---------------------------------------------------------------------------
# Space descriptors


class SpaceSpec:
    """Base class for space descriptors."""

    __slots__ = ()


@dataclass(frozen=True, slots=True)
class DiscreteSpec(SpaceSpec):
    """Indices 0..n-1."""

    n: int

    def __post_init__(self):
        if not isinstance(self.n, int) or self.n < 1:
            raise ValueError(f"discrete space size must be >= 1, got {self.n!r}")


@dataclass(frozen=True, slots=True)
class BoxSpec(SpaceSpec):
    """Bounded reals, shaped [length] for vectors or [h, w, c] for grids."""

    shape: tuple[int, ...]
    low: float
    high: float

    def __post_init__(self):
        shape = tuple(int(s) for s in self.shape)
        if len(shape) not in (1, 3) or any(s < 0 for s in shape):
            raise ValueError(f"box shape must be [len] or [h, w, c], got {self.shape!r}")
        object.__setattr__(self, "shape", shape)
        object.__setattr__(self, "low", float(self.low))
        object.__setattr__(self, "high", float(self.high))
        if not self.low <= self.high:
            raise ValueError(f"box bounds must satisfy low <= high, got [{self.low}, {self.high}]")


@dataclass(frozen=True, slots=True)
class MappingSpec(SpaceSpec):
    """String-keyed mapping of sub-spaces, in ascending key order."""

    entries: tuple[tuple[str, SpaceSpec], ...]

    def __post_init__(self):
        raw = self.entries
        if isinstance(raw, Mapping):
            items = list(raw.items())
        else:
            items = list(raw)
        items.sort(key=lambda kv: kv[0])
        keys = [k for k, _ in items]
        if len(set(keys)) != len(keys):
            raise ValueError("mapping spec keys must be unique")
        object.__setattr__(self, "entries", tuple(items))

    def keys(self) -> tuple[str, ...]:
        return tuple(k for k, _ in self.entries)

    def items(self) -> tuple[tuple[str, SpaceSpec], ...]:
        return self.entries

    def __getitem__(self, key: str) -> SpaceSpec:
        for k, v in self.entries:
            if k == key:
                return v
        raise KeyError(key)


@dataclass(frozen=True, slots=True)
class SeqSpec(SpaceSpec):
    """An ordered tuple of sub-spaces."""

    items: tuple[SpaceSpec, ...]

    def __post_init__(self):
        object.__setattr__(self, "items", tuple(self.items))

    def __len__(self) -> int:
        return len(self.items)

    def __getitem__(self, i: int) -> SpaceSpec:
        return self.items[i]


# ---------------------------------------------------------------------------
# Operations


def space_contains(spec: SpaceSpec, v: Value) -> bool:
    """True iff v structurally matches spec with all entries within bounds.

    Total: never raises on mismatched variants.
    """
    if isinstance(spec, DiscreteSpec):
        return isinstance(v, DiscreteV) and v.index < spec.n
    if isinstance(spec, BoxSpec):
        if len(spec.shape) == 1:
            if not isinstance(v, VectorV) or len(v.entries) != spec.shape[0]:
                return False
            entries = v.entries
        else:
            if not isinstance(v, GridV) or v.shape != spec.shape:
                return False
            entries = v.entries
        lo, hi = spec.low, spec.high
        return all(lo <= e <= hi for e in entries)
    if isinstance(spec, MappingSpec):
        if not isinstance(v, MappingV) or v.keys() != spec.keys():
            return False
        return all(space_contains(s, val) for (_, s), (_, val) in zip(spec.entries, v.entries))
    if isinstance(spec, SeqSpec):
        if not isinstance(v, SeqV) or len(v) != len(spec):
            return False
        return all(space_contains(s, val) for s, val in zip(spec.items, v.items))
    return False


def space_sample(spec: SpaceSpec, rng: RngStream) -> Value:
    """Draw a uniform member of spec from rng; deterministic given the stream."""
    if isinstance(spec, DiscreteSpec):
        return DiscreteV(rng.randrange(spec.n))
    if isinstance(spec, BoxSpec):
        count = math.prod(spec.shape)
        entries = tuple(rng.uniform(spec.low, spec.high) for _ in range(count))
        if len(spec.shape) == 1:
            return VectorV(entries)
        return GridV(spec.shape, entries)
    if isinstance(spec, MappingSpec):
        return MappingV(tuple((k, space_sample(s, rng)) for k, s in spec.entries))
    if isinstance(spec, SeqSpec):
        return SeqV(tuple(space_sample(s, rng) for s in spec.items))
    raise TypeError(f"cannot sample from {spec!r}")


def _flatten_into(v: Value, spec: SpaceSpec | None, out: list[float]) -> None:
    if isinstance(v, DiscreteV):
        if isinstance(spec, DiscreteSpec):
            one_hot = [0.0] * spec.n
            one_hot[v.index] = 1.0
            out.extend(one_hot)
        else:
            out.append(float(v.index))
    elif isinstance(v, (VectorV, GridV)):
        out.extend(v.entries)
    elif isinstance(v, MappingV):
        for k, sub in v.entries:
            sub_spec = spec[k] if isinstance(spec, MappingSpec) else None
            _flatten_into(sub, sub_spec, out)
    elif isinstance(v, SeqV):
        for i, sub in enumerate(v.items):
            sub_spec = spec[i] if isinstance(spec, SeqSpec) else None
            _flatten_into(sub, sub_spec, out)
    else:
        raise TypeError(f"cannot flatten {v!r}")


def flatten(v: Value, spec: SpaceSpec | None = None) -> VectorV:
    """Canonical flattening to a vector.

    Mappings flatten by ascending key, sequences in order, grids row-major.
    A discrete index becomes a one-hot of length n when its spec is provided,
    else the single scalar index.
    """
    out: list[float] = []
    _flatten_into(v, spec, out)
    return VectorV(tuple(out))


def flat_length(spec: SpaceSpec) -> int:
    """Length of flatten(v, spec) for any v in spec."""
    if isinstance(spec, DiscreteSpec):
        return spec.n
    if isinstance(spec, BoxSpec):
        return math.prod(spec.shape)
    if isinstance(spec, MappingSpec):
        return sum(flat_length(s) for _, s in spec.entries)
    if isinstance(spec, SeqSpec):
        return sum(flat_length(s) for s in spec.items)
    raise TypeError(f"cannot measure {spec!r}")


def flat_bounds(spec: SpaceSpec) -> tuple[float, float]:
    """(low, high) covering every scalar of the flattened form of spec."""
    if isinstance(spec, DiscreteSpec):
        return 0.0, 1.0
    if isinstance(spec, BoxSpec):
        return spec.low, spec.high
    if isinstance(spec, MappingSpec):
        subs = [flat_bounds(s) for _, s in spec.entries]
    elif isinstance(spec, SeqSpec):
        subs = [flat_bounds(s) for s in spec.items]
    else:
        raise TypeError(f"cannot bound {spec!r}")
    if not subs:
        return 0.0, 0.0
    return min(lo for lo, _ in subs), max(hi for _, hi in subs)


def require_in_space(spec: SpaceSpec, v: Value, what: str) -> None:
    """Raise SpaceMismatch with context unless v is in spec."""
    if not space_contains(spec, v):
        raise SpaceMismatch(f"{what}: {v!r} not in {spec!r}")
