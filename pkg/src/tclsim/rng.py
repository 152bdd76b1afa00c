"""Counter-based per-appliance random streams.

Every appliance owns independent streams keyed by (seed, purpose tag, index).
Draw ``n`` of a stream is a pure function of its key and ``n`` (SplitMix64
output function), so results do not depend on iteration order or worker count.
"""
from __future__ import annotations

import zlib

import numba as nb
import numpy as np

_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_MASK64 = (1 << 64) - 1

FLEET, INIT, SWITCH = "fleet", "init", "switch"


@nb.njit(cache=True, inline="always")
def mix64(x):
    x = (x ^ (x >> np.uint64(30))) * _M1
    x = (x ^ (x >> np.uint64(27))) * _M2
    return x ^ (x >> np.uint64(31))


@nb.njit(cache=True, inline="always")
def uniform_at(key, counter):
    """Draw number ``counter`` (0-based) of the stream ``key``, uniform on [0, 1)."""
    x = mix64(key + (np.uint64(counter) + np.uint64(1)) * _GAMMA)
    return np.float64(x >> np.uint64(11)) * (1.0 / 9007199254740992.0)


@nb.njit(cache=True)
def _keys(base, n):
    out = np.empty(n, dtype=np.uint64)
    for i in range(n):
        out[i] = mix64(mix64(base + np.uint64(i) * _GAMMA) ^ base)
    return out


@nb.njit(cache=True)
def _block(keys, start, width):
    out = np.empty((keys.size, width))
    for i in range(keys.size):
        for j in range(width):
            out[i, j] = uniform_at(keys[i], start + j)
    return out


def stream_keys(seed: int, tag: str, n: int) -> np.ndarray:
    """Keys of the ``tag`` streams of appliances 0..n-1 under ``seed``."""
    base = np.uint64((int(seed) ^ (zlib.crc32(tag.encode()) << 32)) & _MASK64)
    return _keys(np.uint64(mix64(base)), n)


def uniforms(keys: np.ndarray, start: int = 0, width: int = 1) -> np.ndarray:
    """Draws ``start .. start+width-1`` of every stream; shape (len(keys), width)."""
    return _block(np.asarray(keys, dtype=np.uint64), start, width)
