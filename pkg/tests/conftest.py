"""Shared reference systems for the test suite.

Factory functions (not fixtures) so tests can parametrize over them; each
call returns a fresh immutable system.
"""

import numpy as np

from markovprod import AffineMap, IntervalBox, MapSystem, MoebiusMap, build_shift

THIRD = 1.0 / 3.0
TWO_THIRDS = 2.0 / 3.0

UNIT = IntervalBox((0.0,), (1.0,))
UNIT_SQUARE = IntervalBox((0.0, 0.0), (1.0, 1.0))


def cantor_maps():
    # Integer Moebius form keeps both endpoint fixed points exact.
    return (MoebiusMap(1, 0, 0, 3), MoebiusMap(1, 2, 0, 3))


def cantor_iid() -> MapSystem:
    return MapSystem(
        shift=build_shift([[0.5, 0.5], [0.5, 0.5]]),
        maps=cantor_maps(),
        ambient=UNIT,
    )


def cantor_markov() -> MapSystem:
    return MapSystem(
        shift=build_shift([[0.9, 0.1], [0.2, 0.8]]),
        maps=cantor_maps(),
        ambient=UNIT,
    )


def diagonal_2d() -> MapSystem:
    scale = ((THIRD, 0.0), (0.0, THIRD))
    return MapSystem(
        shift=build_shift([[0.5, 0.5], [0.5, 0.5]]),
        maps=(
            AffineMap(scale, (0.0, 0.0)),
            AffineMap(scale, (TWO_THIRDS, TWO_THIRDS)),
        ),
        ambient=UNIT_SQUARE,
    )


def moebius_pair() -> MapSystem:
    # x/(4-x) onto [0, 1/3] and 2/(3-x) onto [2/3, 1]; both increasing,
    # derivative ranges inside [2/9, 1/2].
    return MapSystem(
        shift=build_shift([[0.5, 0.5], [0.5, 0.5]]),
        maps=(MoebiusMap(1, 0, -1, 4), MoebiusMap(0, 2, -1, 3)),
        ambient=UNIT,
    )


def identity_control() -> MapSystem:
    return MapSystem(
        shift=build_shift([[1.0]]),
        maps=(AffineMap(((1.0,),), (0.0,)),),
        ambient=UNIT,
    )


def single_contraction() -> MapSystem:
    # x/2 + 1/4, fixed point 1/2.
    return MapSystem(
        shift=build_shift([[1.0]]),
        maps=(AffineMap(((0.5,),), (0.25,)),),
        ambient=UNIT,
    )


SPLITTING_SYSTEMS = {
    "cantor_iid": cantor_iid,
    "cantor_markov": cantor_markov,
    "diagonal_2d": diagonal_2d,
    "moebius_pair": moebius_pair,
}


def random_irreducible(seed: int, k: int) -> np.ndarray:
    """Row-stochastic matrix with a guaranteed k-cycle, random sparsity."""
    rng = np.random.default_rng(seed)
    raw = rng.random((k, k)) * (rng.random((k, k)) < 0.7)
    for i in range(k):
        raw[i, (i + 1) % k] += 0.1  # cycle keeps it irreducible
    return raw / raw.sum(axis=1, keepdims=True)
