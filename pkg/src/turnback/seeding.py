"""Deterministic per-dialogue random streams.

A stream is seeded with the first 8 bytes (big endian) of
blake2b("{seed}:{dialogue_id}"), so the same (seed, id) pair yields the
same stream on every platform and regardless of processing order. That is
what makes injection parallelizable and shuffle-proof.
"""

from __future__ import annotations

import hashlib
import random


def derive_rng(seed: int, dialogue_id: str) -> random.Random:
    """Random stream that depends only on (seed, dialogue_id)."""
    digest = hashlib.blake2b(f"{seed}:{dialogue_id}".encode("utf-8"), digest_size=8).digest()
    return random.Random(int.from_bytes(digest, "big"))


def selection_draw(seed: int, dialogue_id: str) -> float:
    """Uniform [0, 1) draw used to rank dialogues for proportional mixing.

    Derived under a distinct key so it never interacts with the injection
    stream of the same dialogue.
    """
    return derive_rng(seed, "select:" + dialogue_id).random()
