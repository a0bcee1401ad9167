"""Counter-based splittable random streams.

Every random quantity in the package is a pure function of a 64-bit stream
key and a counter: ``value(key, i) = mix64(key + (i+1) * GOLDEN)`` where
``mix64`` is the splitmix64 output mixer.  Keys for child streams are derived
by hashing (parent key, tag), so path ``i`` of a run always sees the same
stream regardless of scheduling, batching or backend.

Three forms are provided and produce identical bits:

* Python integers (`derive_key`, `stream_u64`) for setup code,
* numba-compatible scalar helpers in `_loops` (same constants),
* vectorized NumPy uint64 helpers (`stream_u64_array`, `uniform_array`).
"""

from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB

# Domain-separation tags for named substreams.
TAG_THINNING = 0x7468696E
TAG_CLUSTER = 0x636C7573
TAG_GEOMSUM = 0x67656F6D
TAG_DIFFUSION = 0x64696666
TAG_IMMIGRANTS = 0x696D6D69
TAG_GENERATION = 0x67656E65


def mix64(z: int) -> int:
    z &= MASK64
    z = ((z ^ (z >> 30)) * _MIX1) & MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & MASK64
    return z ^ (z >> 31)


def derive_key(key: int, tag: int) -> int:
    """Child stream key from (parent key, tag); safe to chain."""
    return mix64((key & MASK64) ^ mix64((tag + GOLDEN) & MASK64))


def path_key(master_seed: int, tag: int, index: int) -> int:
    """Stream key for path ``index`` of the substream named ``tag``."""
    return derive_key(derive_key(master_seed, tag), index)


def stream_u64(key: int, counter: int) -> int:
    return mix64((key + (counter + 1) * GOLDEN) & MASK64)


def stream_uniform(key: int, counter: int) -> float:
    """Uniform draw in the open interval (0, 1), 53-bit resolution."""
    return ((stream_u64(key, counter) >> 11) + 0.5) * 2.0**-53


def stream_u64_array(key: int, counters: np.ndarray) -> np.ndarray:
    """Vectorized `stream_u64` over a uint64 counter array."""
    z = (np.uint64(key) + (counters.astype(np.uint64) + np.uint64(1)) * np.uint64(GOLDEN))
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX2)
    return z ^ (z >> np.uint64(31))


def uniform_array(key: int, counters: np.ndarray) -> np.ndarray:
    bits = stream_u64_array(key, counters)
    return ((bits >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53


def derive_key_array(key: int, tags: np.ndarray) -> np.ndarray:
    """Vectorized `derive_key` over an integer tag array (returns uint64)."""
    t = tags.astype(np.uint64) + np.uint64(GOLDEN)
    t = (t ^ (t >> np.uint64(30))) * np.uint64(_MIX1)
    t = (t ^ (t >> np.uint64(27))) * np.uint64(_MIX2)
    t = t ^ (t >> np.uint64(31))
    z = np.uint64(key) ^ t
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX2)
    return z ^ (z >> np.uint64(31))
