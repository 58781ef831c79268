"""Counter-based random streams keyed by (seed, trajectory index).

Every trajectory owns a Philox generator whose 128-bit key packs the run
seed in the low word and the trajectory index in the high word.  Draws are
therefore independent of how trajectories are scheduled across workers.
"""

import numpy as np

from .errors import ConfigError

ALGORITHM = "Philox4x64-10 (numpy.random.Philox), key=(seed, trajectory)"

_MASK = (1 << 64) - 1


def check_seed(seed):
    if int(seed) != seed or not 0 <= seed <= _MASK:
        raise ConfigError(f"seed must be an integer in [0, 2**64), got {seed!r}")
    return int(seed)


def stream(seed, index=0):
    """Independent generator for trajectory ``index`` of run ``seed``."""
    seed = check_seed(seed)
    if index < 0 or index > _MASK:
        raise ConfigError(f"trajectory index out of range: {index}")
    return np.random.Generator(np.random.Philox(key=seed | (int(index) << 64)))


def streams(seed, start, stop):
    return [stream(seed, i) for i in range(start, stop)]


def normals(generators, count, n):
    """Draw ``count`` steps of n normals from each generator; shape (len, count, n)."""
    out = np.empty((len(generators), count, n))
    for j, g in enumerate(generators):
        g.standard_normal(out=out[j])
    return out
