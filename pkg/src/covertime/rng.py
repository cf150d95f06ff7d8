"""Seeded generator substreams."""
from __future__ import annotations

import os

import numpy as np

DEFAULT_SEED = 0xC0FFEE
SEED_ENV = "COVERTIME_SEED"


def default_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None or raw.strip() == "":
        return DEFAULT_SEED
    return parse_seed(raw)


def parse_seed(raw: str | int) -> int:
    value = raw if isinstance(raw, int) else int(str(raw).strip(), 0)
    if not 0 <= value < 2**64:
        raise ValueError(f"seed must be a 64-bit unsigned integer, got {raw}")
    return value


def substream(seed: int, index: int) -> np.random.Generator:
    """Independent generator keyed by (seed, index).

    SeedSequence hashes the pair into the PCG64 state, so nearby seeds
    and indices give unrelated streams.
    """
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(index)]))


def spawn_seeds(rng: np.random.Generator, count: int) -> list[int]:
    """Draw child seeds from a generator for nested parallel work."""
    return [int(x) for x in rng.integers(0, 2**63, size=count, dtype=np.int64)]
