"""Counter-based random streams.

Every draw is a pure function of (seed, domain, stream, counter), so paths can be split
across workers in any way and still reproduce bit for bit. The mixer is the SplitMix64
finaliser; stream keys are themselves mixed so neighbouring streams are decorrelated.
The Cython kernel implements the same functions.
"""
from __future__ import annotations

import numpy as np

GOLDEN = np.uint64(0x9E3779B97F4A7C15)
M1 = np.uint64(0xBF58476D1CE4E5B9)
M2 = np.uint64(0x94D049BB133111EB)
DOMAIN_HORIZON = 0x5A17
DOMAIN_NOISE = 0xD1FF
TWO_PI = 6.283185307179586


def mix64(z):
    z = np.asarray(z, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = (z ^ (z >> np.uint64(30))) * M1
        z = (z ^ (z >> np.uint64(27))) * M2
    return z ^ (z >> np.uint64(31))


def stream_keys(seed: int, domain: int, streams) -> np.ndarray:
    base = mix64(np.uint64(seed & 0xFFFFFFFFFFFFFFFF) ^ np.uint64(domain))
    s = np.asarray(streams, dtype=np.uint64)
    with np.errstate(over="ignore"):
        return mix64(base + s * GOLDEN)


def uniforms(keys, counters) -> np.ndarray:
    """Uniforms in (0, 1); broadcasting keys against counters."""
    k = np.asarray(keys, dtype=np.uint64)
    c = np.asarray(counters, dtype=np.uint64)
    with np.errstate(over="ignore"):
        bits = mix64(k + (c + np.uint64(1)) * GOLDEN)
    return ((bits >> np.uint64(11)).astype(np.float64) + 0.5) * (1.0 / 9007199254740992.0)


def normals(keys, counters) -> np.ndarray:
    """Box-Muller normals; counter 2j uses the cosine and 2j+1 the sine of pair j."""
    c = np.asarray(counters, dtype=np.uint64)
    pair = c >> np.uint64(1)
    u1 = uniforms(keys, pair * np.uint64(2))
    u2 = uniforms(keys, pair * np.uint64(2) + np.uint64(1))
    rad = np.sqrt(-2.0 * np.log(u1))
    ang = TWO_PI * u2
    return np.where((c & np.uint64(1)) == 0, rad * np.cos(ang), rad * np.sin(ang))


def horizon_from_uniform(u, lam):
    """Inverse CDF of Exp(lam)."""
    return -np.log1p(-np.asarray(u, dtype=float)) / lam


def path_streams(path_index, antithetic: bool):
    """Stream id and sign of the Gaussian increments for each global path index."""
    p = np.asarray(path_index, dtype=np.int64)
    if antithetic:
        return (p // 2).astype(np.uint64), np.where(p % 2 == 0, 1.0, -1.0)
    return p.astype(np.uint64), np.ones(p.shape)
