"""Counter-based random streams.

Each Monte Carlo sample owns the stream keyed by ``(seed, sample_index)``.
Draw number ``e`` of that stream is the Philox4x32-10 block at counter
``(sample_index, e // 2)`` under key ``seed``, so any draw of any sample can
be produced without touching the others.  This is what makes censuses
independent of how samples are sharded across workers.
"""

from dataclasses import dataclass

import numpy as np
from numba import njit

from . import _kernels as _k
from .validation import check_int, check_uint64

GENERATOR = "philox4x32-10"


@njit(cache=True)
def _fill_uniforms(seed, index, start, out):
    for i in range(out.shape[0]):
        out[i] = _k.stream_uniform(seed, index, start + np.uint64(i))


@dataclass(frozen=True)
class SeedSpec:
    seed: int
    sample_index: int

    @property
    def key(self):
        """128-bit stream identity; distinct (seed, index) pairs never collide."""
        return (self.seed << 64) | self.sample_index

    def uniforms(self, count, start=0):
        """``count`` uniforms on (0, 1) starting at draw ``start``."""
        count = check_int(count, "count", minimum=0)
        out = np.empty(count)
        _fill_uniforms(np.uint64(self.seed), np.uint64(self.sample_index),
                       np.uint64(check_int(start, "start", minimum=0)), out)
        return out


def derive_stream(seed, sample_index):
    return SeedSpec(check_uint64(seed, "seed"), check_uint64(sample_index, "sample_index"))
