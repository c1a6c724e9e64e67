"""Deterministic counter-keyed random streams.

Every stochastic routine derives its generators from a base seed plus a
tuple of small integer ids (purpose, test id, chunk index, ...).  Streams
are independent Philox instances keyed through ``SeedSequence`` spawn keys,
so results are bitwise reproducible and do not depend on execution order
or worker count.  Draws are produced in fixed-size chunks; the chunk size
is part of the scheme and must not change between runs that are expected
to match byte for byte.
"""

from __future__ import annotations

import numpy as np

from .errors import InvalidInput

# Fixed chunk length for chunked sampling schemes.
CHUNK = 4096

# Purpose ids (first component of the spawn key).
SAMPLE_STREAM = 0
COND_STREAM = 1
NOISE_STREAM = 2
GENERIC_STREAM = 3


def validate_seed(seed):
    """Check that ``seed`` is a nonnegative integer below 2**64."""
    if not isinstance(seed, (int, np.integer)):
        raise InvalidInput(f"seed must be an integer, got {type(seed).__name__}")
    if seed < 0 or seed >= 2**64:
        raise InvalidInput("seed must lie in [0, 2**64)")
    return int(seed)


def substream(seed, *path):
    """Return a Generator for the stream keyed by (seed, *path)."""
    seed = validate_seed(seed)
    ss = np.random.SeedSequence(entropy=seed, spawn_key=tuple(int(p) for p in path))
    return np.random.Generator(np.random.Philox(ss))


def chunked_standard_normal(seed, path, n, dim):
    """Draw an (n, dim) standard-normal matrix in deterministic chunks.

    Chunk c is generated from the stream (seed, *path, c), so any prefix
    of the output is independent of how the chunks are scheduled.
    """
    out = np.empty((n, dim))
    for c, start in enumerate(range(0, n, CHUNK)):
        stop = min(start + CHUNK, n)
        gen = substream(seed, *path, c)
        out[start:stop] = gen.standard_normal((stop - start, dim))
    return out
