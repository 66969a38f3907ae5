"""Counter-based Gaussian streams keyed by 64-bit seeds.

Every episode owns a seed; draw ``k`` of that episode is a pure function of
``(seed, k)``.  This is the SplitMix64 construction (a Weyl sequence pushed
through a 64-bit finalizer), evaluated for many seeds at once with numpy so
that a million episodes can be generated without constructing a million
generator objects.  Uniforms are mapped to normals with the exact inverse CDF.
"""

from __future__ import annotations

import numpy as np
from scipy.special import ndtri

from .errors import ParameterError

SEED_BITS = 64
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_MASTER_SALT = np.uint64(0x5851F42D4C957F2D)


def check_seed(seed: int) -> int:
    seed = int(seed)
    if not 0 <= seed < 2**SEED_BITS:
        raise ParameterError(f"seed must be a 64-bit unsigned integer, got {seed}")
    return seed


def _mix(z: np.ndarray) -> np.ndarray:
    # uint64 array arithmetic wraps modulo 2**64 without warnings.
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def episode_seeds(master_seed: int, indices) -> np.ndarray:
    """Seeds for episodes ``indices`` of the run keyed by ``master_seed``."""
    key = _mix(np.asarray([check_seed(master_seed)], dtype=np.uint64) ^ _MASTER_SALT)
    idx = np.asarray(indices, dtype=np.uint64)
    return _mix(key + (idx + np.uint64(1)) * _GOLDEN)


def episode_seed(master_seed: int, index: int) -> int:
    return int(episode_seeds(master_seed, [index])[0])


def uniforms(seeds, n_draws: int) -> np.ndarray:
    """Array of shape ``(len(seeds), n_draws)`` of uniforms in the open interval (0, 1)."""
    s = np.asarray(seeds, dtype=np.uint64).reshape(-1, 1)
    k = np.arange(1, n_draws + 1, dtype=np.uint64).reshape(1, -1)
    bits = _mix(s + k * _GOLDEN) >> np.uint64(11)
    return (bits.astype(np.float64) + 0.5) * 2.0**-53


def standard_normals(seeds, n_draws: int) -> np.ndarray:
    return ndtri(uniforms(seeds, n_draws))
