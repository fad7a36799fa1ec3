"""Canonical value serialization: JSON text form and 64-bit state hashing.

The JSON form is a variant tag plus payload:

    {"d": 3}                                  discrete index
    {"v": [0.5, 1.0]}                         vector
    {"g": {"shape": [h, w, c], "data": [...]}} grid, row-major
    {"m": {"key": <value>, ...}}              mapping
    {"s": [<value>, ...]}                     sequence

Floats are emitted with Python's shortest round-trip repr, so equal doubles
always produce identical text and parsing recovers the exact bits. Hashes are
blake2b-64 over the canonical little-endian byte form (see Value.canonical_bytes),
so they are endianness- and platform-independent.
"""

from __future__ import annotations

import hashlib
from typing import Any

from .errors import FormatError
from .values import DiscreteV, GridV, MappingV, SeqV, Value, VectorV


def value_to_jsonable(v: Value) -> dict[str, Any]:
    if isinstance(v, DiscreteV):
        return {"d": v.index}
    if isinstance(v, VectorV):
        return {"v": list(v.entries)}
    if isinstance(v, GridV):
        return {"g": {"shape": list(v.shape), "data": list(v.entries)}}
    if isinstance(v, MappingV):
        return {"m": {k: value_to_jsonable(sub) for k, sub in v.entries}}
    if isinstance(v, SeqV):
        return {"s": [value_to_jsonable(sub) for sub in v.items]}
    raise TypeError(f"not a Value: {v!r}")


def value_from_jsonable(obj: Any) -> Value:
    if not isinstance(obj, dict) or len(obj) != 1:
        raise FormatError(f"malformed value payload: {obj!r}")
    tag, payload = next(iter(obj.items()))
    try:
        if tag == "d":
            return DiscreteV(int(payload))
        if tag == "v":
            return VectorV(tuple(payload))
        if tag == "g":
            return GridV(tuple(payload["shape"]), tuple(payload["data"]))
        if tag == "m":
            return MappingV(tuple((k, value_from_jsonable(sub)) for k, sub in payload.items()))
        if tag == "s":
            return SeqV(tuple(value_from_jsonable(sub) for sub in payload))
    except FormatError:
        raise
    except Exception as exc:
        raise FormatError(f"malformed {tag!r} payload: {payload!r}") from exc
    raise FormatError(f"unknown value tag {tag!r}")


def value_hash(v: Value) -> int:
    """64-bit hash of the canonical byte form."""
    digest = hashlib.blake2b(v.canonical_bytes(), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def value_hash_hex(v: Value) -> str:
    """The 64-bit hash as 16 lowercase hex chars, as stored in replays."""
    return format(value_hash(v), "016x")
