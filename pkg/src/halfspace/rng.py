"""Reproducible random streams.

Every Monte Carlo routine in the package splits its samples into fixed-size
blocks and gives block ``b`` its own stream ``(master_seed, b)``.  A stream is
a Philox-4x64 counter-based generator keyed by ``numpy.random.SeedSequence``
with ``entropy=master_seed`` and ``spawn_key=(b, *sub)``, so the uniforms a
block sees do not depend on how many workers run or in which order blocks
finish.  Results are concatenated in block order.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence, TypeVar

import numpy as np

__all__ = [
    "RngStream",
    "DEFAULT_BLOCK",
    "block_sizes",
    "default_workers",
    "map_blocks",
]

DEFAULT_BLOCK = 512
_MASK64 = (1 << 64) - 1

T = TypeVar("T")


@dataclass(frozen=True)
class RngStream:
    """A named, reproducible stream of random numbers.

    ``sub`` extends the key so that one block can own several disjoint
    streams (for instance bulk and boundary weights of one environment).
    """

    master_seed: int
    stream_index: int = 0
    sub: tuple[int, ...] = ()
    _gen: np.random.Generator = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if self.stream_index < 0 or any(s < 0 for s in self.sub):
            raise ValueError("stream indices must be non-negative")
        ss = np.random.SeedSequence(
            entropy=int(self.master_seed) & _MASK64,
            spawn_key=(int(self.stream_index), *map(int, self.sub)),
        )
        object.__setattr__(self, "_gen", np.random.Generator(np.random.Philox(ss)))

    @property
    def generator(self) -> np.random.Generator:
        return self._gen

    def child(self, *sub: int) -> "RngStream":
        """A disjoint stream derived from this one."""
        return RngStream(self.master_seed, self.stream_index, self.sub + tuple(sub))

    def uniform(self, size) -> np.ndarray:
        return self._gen.random(size)

    def normal(self, size) -> np.ndarray:
        return self._gen.standard_normal(size)

    def gamma(self, shape: float, size) -> np.ndarray:
        return self._gen.standard_gamma(shape, size)


def block_sizes(samples: int, block: int = DEFAULT_BLOCK) -> list[int]:
    """Split ``samples`` into consecutive blocks of at most ``block``."""
    if samples < 0:
        raise ValueError("samples must be non-negative")
    full, rest = divmod(samples, block)
    sizes = [block] * full
    if rest:
        sizes.append(rest)
    return sizes


def default_workers() -> int:
    return max(1, len(os.sched_getaffinity(0)) if hasattr(os, "sched_getaffinity") else os.cpu_count() or 1)


def map_blocks(
    fn: Callable[[RngStream, int], T],
    samples: int,
    master_seed: int,
    workers: int | None = None,
    block: int = DEFAULT_BLOCK,
    sub: Sequence[int] = (),
) -> list[T]:
    """Run ``fn(stream, size)`` over all blocks and return results in block order."""
    sizes = block_sizes(samples, block)
    streams = [RngStream(master_seed, b, tuple(sub)) for b in range(len(sizes))]
    workers = default_workers() if workers is None else max(1, int(workers))
    if workers == 1 or len(sizes) <= 1:
        return [fn(s, m) for s, m in zip(streams, sizes)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, streams, sizes))
