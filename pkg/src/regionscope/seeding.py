"""Deterministic rational sampling for seeded generic choices.

All "generic" data in the toolkit (arrangement weights, output rows) comes
from here, so builds are reproducible from (parameters, seed) alone.
"""

from __future__ import annotations

import random
from fractions import Fraction

from .geometry import Matrix, Vector


def rng_for(seed: int) -> random.Random:
    return random.Random(seed)


def seeded_rational(
    rng: random.Random,
    *,
    max_numerator: int = 12,
    max_denominator: int = 4,
    nonzero: bool = False,
) -> Fraction:
    while True:
        value = Fraction(
            rng.randint(-max_numerator, max_numerator),
            rng.randint(1, max_denominator),
        )
        if value != 0 or not nonzero:
            return value


def seeded_vector(seed_or_rng, dim: int, *, nonzero: bool = False) -> Vector:
    rng = seed_or_rng if isinstance(seed_or_rng, random.Random) else rng_for(seed_or_rng)
    return Vector(seeded_rational(rng, nonzero=nonzero) for _ in range(dim))


def seeded_matrix(
    seed_or_rng, n_rows: int, n_cols: int, *, nonzero: bool = False
) -> Matrix:
    rng = seed_or_rng if isinstance(seed_or_rng, random.Random) else rng_for(seed_or_rng)
    return Matrix(
        [[seeded_rational(rng, nonzero=nonzero) for _ in range(n_cols)] for _ in range(n_rows)],
        n_cols=n_cols,
    )
