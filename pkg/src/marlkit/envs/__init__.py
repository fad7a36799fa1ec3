"""Built-in deterministic multi-agent game environments."""

from . import bomber, gridbattle, pong

__all__ = ["bomber", "gridbattle", "pong"]
