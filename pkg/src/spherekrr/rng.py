"""Reproducible random streams.

Streams are addressed by a (master_seed, stream_index) pair and are backed by
the counter-based Philox generator, so any collection of streams can be
consumed in any order (or in parallel) without changing what each one yields.
"""

from __future__ import annotations

import numpy as np

__all__ = ["RandomStream", "make_stream", "draw_standard_normal"]


class RandomStream:
    """Single-consumer stream of random draws.

    Two streams with distinct (master_seed, stream_index) pairs are
    statistically independent; identical pairs reproduce identical output.
    A stream's output depends only on its address and the call sequence.
    """

    def __init__(self, master_seed: int, stream_index: int = 0):
        if master_seed < 0 or master_seed >= 2**64:
            raise ValueError("master_seed must fit in 64 unsigned bits")
        if stream_index < 0 or stream_index >= 2**64:
            raise ValueError("stream_index must fit in 64 unsigned bits")
        self.master_seed = int(master_seed)
        self.stream_index = int(stream_index)
        seq = np.random.SeedSequence(self.master_seed, spawn_key=(self.stream_index,))
        self._gen = np.random.Generator(np.random.Philox(seq))

    def standard_normal(self, *shape: int) -> np.ndarray:
        return self._gen.standard_normal(shape if shape else None)

    def __repr__(self) -> str:
        return f"RandomStream(master_seed={self.master_seed}, stream_index={self.stream_index})"


def make_stream(master_seed: int, stream_index: int = 0) -> RandomStream:
    """Create the stream addressed by (master_seed, stream_index)."""
    return RandomStream(master_seed, stream_index)


def draw_standard_normal(stream: RandomStream, count: int) -> np.ndarray:
    """Draw `count` i.i.d. standard normal values from the stream."""
    return stream.standard_normal(count)
