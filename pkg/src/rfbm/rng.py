"""Named, counter-based random substreams.

Every replication draws from its own Philox stream keyed by ``(seed, name)``,
where ``name`` looks like ``"fbm/17"`` or ``"pickands/0.1/3"``. Results then do
not depend on chunking or on how many workers run.
"""

import hashlib

import numpy as np

MASK64 = (1 << 64) - 1


def _name_key(name):
    digest = hashlib.blake2b(name.encode("utf-8"), digest_size=16).digest()
    return tuple(int.from_bytes(digest[i:i + 4], "little") for i in range(0, 16, 4))


def substream(seed, name):
    """Independent generator for the stream ``name`` under the root ``seed``."""
    seed = int(seed)
    if not 0 <= seed <= MASK64:
        raise ValueError("seed must be a 64-bit unsigned integer")
    ss = np.random.SeedSequence(seed, spawn_key=_name_key(name))
    return np.random.Generator(np.random.Philox(ss))


def as_generator(seed, name):
    """Accept either a ready Generator or an integer root seed."""
    if isinstance(seed, np.random.Generator):
        return seed
    return substream(seed, name)


def stacked_normals(seed, prefix, reps, size, first=0):
    """Rows ``r`` are ``size`` standard normals from stream ``f"{prefix}/{first + r}"``."""
    out = np.empty((reps, size))
    for r in range(reps):
        out[r] = substream(seed, f"{prefix}/{first + r}").standard_normal(size)
    return out
