"""Named random sub-streams derived from one integer seed."""

import numpy as np

STREAMS = {"train": 0, "negatives": 1, "subsample": 2, "synth": 3, "ica": 4, "bench": 5}


def stream(seed: int, name: str, *extra: int) -> np.random.Generator:
    """Return an independent generator for ``name`` under ``seed``.

    Extra integers further split the stream (e.g. a trial index), so
    ``stream(s, "synth", 7)`` never collides with ``stream(s, "synth", 8)``.
    """
    if name not in STREAMS:
        raise KeyError(f"unknown random stream {name!r}")
    return np.random.default_rng([int(seed), STREAMS[name], *map(int, extra)])
