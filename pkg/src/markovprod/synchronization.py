"""Forward-image contraction, fibre collapse, coding points, and Birkhoff
averages.

Upper curves are chained box enclosures (rigorous, nonincreasing along
forward words); lower curves track a deterministic point cloud through the
same maps, so the true image diameter is bracketed.  Rates are fitted on
the upper curve only.  Fibre (reverse-order) enclosures certify weak
hyperbolicity sample-wise, and the coding point of a finite word comes with
the enclosure diameter as its error bound.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateCurve, NoRowPositiveState, NotPrimitive
from .maps import (
    AffineMap,
    MapSystem,
    MoebiusMap,
    batch_reverse_boxes,
    forward_box_chain,
    map_points,
    reverse_box,
    reverse_composition,
)
from .shift import PRIMITIVE, Word, check_word, sample_word, sample_words
from .splitting import ambient_cloud

FIT_FLOOR = 1e-14
DEFAULT_CLOUD = 256
BATCH_COUNT = 100


@dataclass(frozen=True)
class DecayCurve:
    """Bracketed image diameters along one word.

    upper[n] is the l1 diameter of the chained enclosure of the first n
    maps (rigorous upper bound, nonincreasing); lower[n] is the l1 diameter
    of a mapped point cloud (attained lower bound, may fluctuate within
    enclosure slack)."""

    word: Word
    n: tuple[int, ...]
    upper: tuple[float, ...]
    lower: tuple[float, ...]


def image_diameter_curve(
    sys: MapSystem, word: Word, n_max: int, cloud_size: int = DEFAULT_CLOUD
) -> DecayCurve:
    word = check_word(word, sys.k)
    if len(word) < n_max:
        raise ValueError(f"word of length {len(word)} cannot drive {n_max} steps")
    boxes = forward_box_chain(sys, word[:n_max])
    upper = tuple(
        float(sum(float(h) - float(l) for l, h in zip(b.lo, b.hi))) for b in boxes
    )
    cloud = ambient_cloud(sys, cloud_size)
    lower = [float((cloud.max(axis=0) - cloud.min(axis=0)).sum())]
    for sym in word[:n_max]:
        cloud = map_points(sys.maps[sym - 1], cloud)
        lower.append(float((cloud.max(axis=0) - cloud.min(axis=0)).sum()))
    return DecayCurve(
        word=word[:n_max],
        n=tuple(range(n_max + 1)),
        upper=upper,
        lower=tuple(lower),
    )


def fit_decay_rate(curve: DecayCurve) -> tuple[float, float]:
    """Least-squares log-linear fit of the upper curve: returns (C, q) with
    upper_n ~ C q^n, fitted over the entries above the floor 1e-14."""
    n = np.asarray(curve.n, dtype=float)
    upper = np.asarray(curve.upper, dtype=float)
    usable = upper > FIT_FLOOR
    if int(usable.sum()) < 3:
        raise DegenerateCurve(
            f"only {int(usable.sum())} usable points above {FIT_FLOOR}"
        )
    slope, intercept = np.polyfit(n[usable], np.log(upper[usable]), 1)
    return float(np.exp(intercept)), float(np.exp(slope))


@dataclass(frozen=True)
class RateFit:
    trial: int
    q_hat: float
    c_hat: float


@dataclass(frozen=True)
class SyncResult:
    curves: tuple[DecayCurve, ...]
    fits: tuple[RateFit, ...]

    @property
    def max_q(self) -> float:
        return max(f.q_hat for f in self.fits)

    @property
    def contracting_fraction(self) -> float:
        return sum(1 for f in self.fits if f.q_hat < 1.0) / len(self.fits)


def _require_row_positive(sys: MapSystem) -> None:
    if not any(np.all(sys.shift.P[u] > 0.0) for u in range(sys.k)):
        raise NoRowPositiveState("no state has a strictly positive transition row")


def sync_experiment(
    sys: MapSystem,
    trials: int,
    n_max: int,
    seed: int = 0,
    cloud_size: int = DEFAULT_CLOUD,
) -> SyncResult:
    """Forward-image diameter decay over independently sampled words."""
    _require_row_positive(sys)
    if trials < 1:
        raise ValueError("trials must be >= 1")
    curves = []
    fits = []
    for t in range(trials):
        word = sample_word(sys.shift, n_max, seed=seed + t)
        curve = image_diameter_curve(sys, word, n_max, cloud_size)
        c_hat, q_hat = fit_decay_rate(curve)
        curves.append(curve)
        fits.append(RateFit(trial=t, q_hat=q_hat, c_hat=c_hat))
    return SyncResult(curves=tuple(curves), fits=tuple(fits))


@dataclass(frozen=True)
class ContractionRow:
    trial: int
    s: int
    n: int
    length: float


@dataclass(frozen=True)
class ContractionFit:
    trial: int
    s: int
    q_hat: float
    c_hat: float


@dataclass(frozen=True)
class ContractionResult:
    rows: tuple[ContractionRow, ...]
    fits: tuple[ContractionFit, ...]


def measure_contraction_experiment(
    sys: MapSystem, trials: int, n_max: int, seed: int = 0
) -> ContractionResult:
    """Lebesgue length of each coordinate projection of the forward
    enclosures, per sampled word, with per-coordinate rate fits."""
    _require_row_positive(sys)
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rows = []
    fits = []
    for t in range(trials):
        word = sample_word(sys.shift, n_max, seed=seed + t)
        boxes = forward_box_chain(sys, word)
        for s in range(1, sys.dim + 1):
            lengths = [float(b.hi[s - 1]) - float(b.lo[s - 1]) for b in boxes]
            for n, length in enumerate(lengths):
                rows.append(ContractionRow(trial=t, s=s, n=n, length=length))
            curve = DecayCurve(
                word=word,
                n=tuple(range(len(lengths))),
                upper=tuple(lengths),
                lower=tuple(lengths),
            )
            c_hat, q_hat = fit_decay_rate(curve)
            fits.append(ContractionFit(trial=t, s=s, q_hat=q_hat, c_hat=c_hat))
    return ContractionResult(rows=tuple(rows), fits=tuple(fits))


@dataclass(frozen=True)
class WeakHyperbolicityResult:
    fraction: float
    trials: int
    depth: int
    tol: float
    max_diameter: float


def weak_hyperbolicity_experiment(
    sys: MapSystem, trials: int, depth: int, tol: float, seed: int = 0
) -> WeakHyperbolicityResult:
    """Fraction of inverse-measure words whose fibre enclosure at the given
    depth has l1 diameter below tol."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    words = sample_words(sys.shift, trials, depth, inverse=True, seed=seed)
    lo, hi = batch_reverse_boxes(sys, words)
    diam = (hi - lo).sum(axis=1)
    return WeakHyperbolicityResult(
        fraction=float((diam < tol).mean()),
        trials=trials,
        depth=depth,
        tol=tol,
        max_diameter=float(diam.max()),
    )


def coding_point(sys: MapSystem, word: Word) -> tuple[tuple, float]:
    """Finite-depth coding point with a rigorous radius.

    Returns the reverse-order composition applied to the box center and the
    l1 diameter of the chained fibre enclosure: the limit point of any
    extension of the word lies inside that enclosure, and so does the
    returned point (up to evaluation rounding), so the diameter bounds
    their distance."""
    word = check_word(word, sys.k, allow_empty=False)
    anchor = sys.ambient.center()
    point = reverse_composition(sys, word, anchor)
    box = reverse_box(sys, word)
    diameter = float(sum(float(h) - float(l) for l, h in zip(box.lo, box.hi)))
    return point, diameter


@dataclass(frozen=True)
class ErgodicResult:
    average: float
    batch_sigma: float
    reference: float
    reference_sigma: float
    steps: int


def test_function(spec):
    """Built-in observables: ("coordinate", s), ("square", s),
    ("product", s, t), all 1-based, or any callable on point tuples."""
    if callable(spec):
        return spec
    kind = spec[0]
    if kind == "coordinate":
        s = spec[1] - 1
        return lambda x: float(x[s])
    if kind == "square":
        s = spec[1] - 1
        return lambda x: float(x[s]) ** 2
    if kind == "product":
        s, t = spec[1] - 1, spec[2] - 1
        return lambda x: float(x[s]) * float(x[t])
    raise ValueError(f"unknown test function {spec!r}")


def _fast_apply(f):
    if isinstance(f, MoebiusMap):
        a, b, c, d = f.a, f.b, f.c, f.d
        return lambda x: ((a * x[0] + b) / (c * x[0] + d),)
    assert isinstance(f, AffineMap)
    rows = f.matrix
    off = f.offset
    return lambda x: tuple(
        o + sum(a * v for a, v in zip(row, x)) for row, o in zip(rows, off)
    )


def ergodic_average(
    sys: MapSystem, x, phi, n: int, seed: int = 0, target_samples: int = 20_000
) -> ErgodicResult:
    """Birkhoff average of an observable along one sampled forward orbit.

    Requires a primitive shift; meaningful as a law-of-orbits check only
    when the system has a certified split witness (callers verify that).
    The spread of 100 batch means estimates the correlated-sample error of
    the time average; the reference value integrates the observable against
    a sampled estimate of the stationary law of coded points."""
    if sys.shift.classification != PRIMITIVE:
        raise NotPrimitive("ergodic averaging requires a primitive shift")
    if n < BATCH_COUNT:
        raise ValueError(f"n must be at least {BATCH_COUNT}")
    f_phi = test_function(phi)
    x = tuple(float(v) for v in x)
    if not sys.ambient.contains(x):
        raise ValueError(f"starting point {x} outside the ambient box")

    P = sys.shift.P
    cums = tuple(tuple(float(c) for c in np.cumsum(P[i])) for i in range(sys.k))
    p_cum = tuple(float(c) for c in np.cumsum(sys.shift.p))
    rng = np.random.default_rng(seed)
    us = rng.random(n)
    appliers = tuple(_fast_apply(f) for f in sys.maps)

    def pick(cum, u):
        for j, c in enumerate(cum):
            if u < c:
                return j
        return len(cum) - 1

    batch_size = n // BATCH_COUNT
    used = batch_size * BATCH_COUNT
    batch_sums = np.zeros(BATCH_COUNT)
    state = pick(p_cum, us[0])
    total = 0.0
    pt = x
    for i in range(used):
        v = f_phi(pt)
        total += v
        batch_sums[i // batch_size] += v
        if i + 1 < used:
            state = pick(cums[state], us[i + 1])
            pt = appliers[state](pt)

    average = total / used
    batch_means = batch_sums / batch_size
    batch_sigma = float(batch_means.std(ddof=1) / np.sqrt(BATCH_COUNT))

    from .markov_operator import estimate_target

    target = estimate_target(sys, target_samples, seed=seed + 104729)
    vals = np.array([f_phi(tuple(pt_)) for pt_ in target.measure.points])
    reference = float((vals * target.measure.weights).sum())
    reference_sigma = float(vals.std(ddof=1) / np.sqrt(target_samples))
    return ErgodicResult(
        average=average,
        batch_sigma=batch_sigma,
        reference=reference,
        reference_sigma=reference_sigma,
        steps=used,
    )
