"""State-tagged particle measures and the transfer operator that drives them.

A measure on the product of the symbol alphabet and the ambient box is held
as weighted particles (state, point, weight).  One operator application
pushes each particle through every map with positive transition probability
from its state, so the per-state mass vector evolves exactly by the
transition matrix (up to float summation) no matter how points are
resampled.  The long-run law of orbits is estimated separately by sampling
inverse-measure words and evaluating reverse-order compositions, with the
chained enclosure diameter of each sample kept as a convergence
certificate.  An empirical weak-* surrogate distance compares per-state
masses plus per-coordinate transport distances of the normalized sections;
it detects mass misallocation and marginal displacement, which is what the
stability statement needs at finite resolution, but it is strictly weaker
than testing all continuous observables.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NotPrimitive
from .maps import MapSystem, batch_reverse_boxes, batch_reverse_points, map_points
from .shift import PRIMITIVE, sample_words

MASS_TOL = 1e-12
TARGET_DEPTH = 64


@dataclass(frozen=True, eq=False)
class StateTaggedMeasure:
    """Weighted particles (state, point, weight) with unit total mass."""

    states: np.ndarray
    points: np.ndarray
    weights: np.ndarray
    k: int

    @property
    def n_particles(self) -> int:
        return self.states.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def state_mass(self) -> np.ndarray:
        # fsum keeps the per-state totals exact to the last ulp, so the
        # mass-evolution identity survives any particle count.
        return np.array(
            [math.fsum(self.weights[self.states == j + 1]) for j in range(self.k)]
        )


def make_measure(sys: MapSystem, states, points, weights) -> StateTaggedMeasure:
    states = np.asarray(states, dtype=np.int64)
    points = np.asarray(points, dtype=float)
    weights = np.asarray(weights, dtype=float)
    if points.ndim == 1:
        points = points[:, None]
    n = states.shape[0]
    if points.shape != (n, sys.dim) or weights.shape != (n,):
        raise ValueError("states, points and weights must have matching shapes")
    if n == 0:
        raise ValueError("a measure needs at least one particle")
    if np.any(states < 1) or np.any(states > sys.k):
        raise ValueError(f"states must lie in 1..{sys.k}")
    if np.any(weights <= 0.0):
        raise ValueError("weights must be positive")
    if abs(weights.sum() - 1.0) > MASS_TOL:
        raise ValueError(f"weights sum to {weights.sum()!r}, expected 1")
    lo = np.asarray(sys.ambient.lo, dtype=float)
    hi = np.asarray(sys.ambient.hi, dtype=float)
    if np.any(points < lo) or np.any(points > hi):
        raise ValueError("some point lies outside the ambient box")
    return StateTaggedMeasure(states=states, points=points, weights=weights, k=sys.k)


def build_initial(
    sys: MapSystem, kind: str, n_particles: int, seed: int = 0
) -> StateTaggedMeasure:
    """Canonical starting measures for stability runs.

    "uniform": random points, states cycling through the alphabet (equal
    state masses).  "corner": everything at the lower corner, state 1.
    "center": everything at the box center, state 1.
    """
    if n_particles < 1:
        raise ValueError("n_particles must be >= 1")
    lo = np.asarray(sys.ambient.lo, dtype=float)
    hi = np.asarray(sys.ambient.hi, dtype=float)
    if kind == "uniform":
        rng = np.random.default_rng(seed)
        points = lo + rng.random((n_particles, sys.dim)) * (hi - lo)
        states = (np.arange(n_particles) % sys.k) + 1
    elif kind == "corner":
        points = np.tile(lo, (n_particles, 1))
        states = np.ones(n_particles, dtype=np.int64)
    elif kind == "center":
        points = np.tile((lo + hi) / 2.0, (n_particles, 1))
        states = np.ones(n_particles, dtype=np.int64)
    else:
        raise ValueError(f"unknown initial kind {kind!r}")
    weights = np.full(n_particles, 1.0 / n_particles)
    return make_measure(sys, states, points, weights)


def apply_operator(mu: StateTaggedMeasure, sys: MapSystem) -> StateTaggedMeasure:
    """One transfer step: particle (i, x, w) spawns (j, f_j(x), w p_ij) for
    every j with p_ij > 0.  Children are emitted in j-blocks, so the output
    ordering is deterministic."""
    P = sys.shift.P
    states_out = []
    points_out = []
    weights_out = []
    for j in range(1, sys.k + 1):
        step = P[mu.states - 1, j - 1]
        mask = step > 0.0
        if not np.any(mask):
            continue
        points_out.append(map_points(sys.maps[j - 1], mu.points[mask]))
        weights_out.append(mu.weights[mask] * step[mask])
        states_out.append(np.full(int(mask.sum()), j, dtype=np.int64))
    return StateTaggedMeasure(
        states=np.concatenate(states_out),
        points=np.concatenate(points_out),
        weights=np.concatenate(weights_out),
        k=mu.k,
    )


def _allocate_slots(masses: np.ndarray, target: int) -> np.ndarray:
    """Largest-remainder slot allocation with one guaranteed slot per
    positive-mass stratum.  Deterministic: ties break on state index."""
    positive = masses > 0.0
    raw = target * masses
    base = np.floor(raw).astype(int)
    base[positive & (base == 0)] = 1
    remainder = raw - np.floor(raw)
    order = sorted(range(len(masses)), key=lambda j: (-remainder[j], j))
    diff = target - int(base[positive].sum())
    idx = 0
    while diff > 0:
        j = order[idx % len(order)]
        if positive[j]:
            base[j] += 1
            diff -= 1
        idx += 1
    shrink = sorted(range(len(masses)), key=lambda j: (remainder[j], j))
    idx = 0
    while diff < 0:
        j = shrink[idx % len(shrink)]
        if positive[j] and base[j] > 1:
            base[j] -= 1
            diff += 1
        idx += 1
    base[~positive] = 0
    return base


def resample(
    mu: StateTaggedMeasure, target_count: int, seed: int = 0
) -> StateTaggedMeasure:
    """Systematic resampling inside each state stratum.

    Slots are split across strata by largest remainder (at least one per
    positive-mass stratum), then each stratum is resampled systematically
    with a single uniform offset, and its mass is spread equally over its
    slots, so per-state masses survive exactly."""
    if target_count < mu.k:
        raise ValueError("target_count must be at least the number of states")
    masses = mu.state_mass()
    slots = _allocate_slots(masses, target_count)
    rng = np.random.default_rng(seed)
    states_out = []
    points_out = []
    weights_out = []
    for j in range(1, mu.k + 1):
        n_j = int(slots[j - 1])
        if n_j == 0:
            continue
        sel = mu.states == j
        w = mu.weights[sel]
        pts = mu.points[sel]
        cum = np.cumsum(w)
        # cum[-1] carries sequential-summation drift of order n*eps; the
        # emitted masses must not inherit it, so the stratum mass is an
        # exact fsum and the cumsum serves only to place the selections.
        mass = math.fsum(w)
        offsets = (rng.random() + np.arange(n_j)) / n_j * min(mass, float(cum[-1]))
        idx = np.minimum(np.searchsorted(cum, offsets, side="right"), w.shape[0] - 1)
        states_out.append(np.full(n_j, j, dtype=np.int64))
        points_out.append(pts[idx])
        weights_out.append(np.full(n_j, mass / n_j))
    return StateTaggedMeasure(
        states=np.concatenate(states_out),
        points=np.concatenate(points_out),
        weights=np.concatenate(weights_out),
        k=mu.k,
    )


@dataclass(frozen=True, eq=False)
class TargetEstimate:
    measure: StateTaggedMeasure
    diameters: np.ndarray
    depth: int

    @property
    def max_diameter(self) -> float:
        return float(self.diameters.max())


def estimate_target(
    sys: MapSystem, n_samples: int, depth: int = TARGET_DEPTH, seed: int = 0
) -> TargetEstimate:
    """Sampled estimate of the stationary law of coded points.

    Draws words from the inverse measure, applies the reverse-order
    composition to the box center, and tags each sample with its first
    symbol.  The chained enclosure diameter of each word bounds how far the
    returned point can sit from the true limit point of any extension."""
    if sys.shift.classification != PRIMITIVE:
        raise NotPrimitive("target estimation requires a primitive shift")
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    if depth < 0:
        raise ValueError("depth must be >= 0")
    anchor = np.asarray(sys.ambient.center(), dtype=float)
    if depth == 0:
        # Zero-depth fibres are the whole box: every sample sits at the
        # anchor, tagged by a stationary draw.
        rng = np.random.default_rng(seed)
        states = 1 + np.minimum(
            np.searchsorted(np.cumsum(sys.shift.p), rng.random(n_samples), side="right"),
            sys.k - 1,
        )
        ambient_diam = float(
            (np.asarray(sys.ambient.hi, float) - np.asarray(sys.ambient.lo, float)).sum()
        )
        measure = make_measure(
            sys,
            states,
            np.tile(anchor, (n_samples, 1)),
            np.full(n_samples, 1.0 / n_samples),
        )
        return TargetEstimate(
            measure=measure, diameters=np.full(n_samples, ambient_diam), depth=0
        )
    words = sample_words(sys.shift, n_samples, depth, inverse=True, seed=seed)
    points = batch_reverse_points(sys, words, anchor)
    lo, hi = batch_reverse_boxes(sys, words)
    diameters = (hi - lo).sum(axis=1)
    measure = make_measure(
        sys,
        words[:, 0],
        points,
        np.full(n_samples, 1.0 / n_samples),
    )
    return TargetEstimate(measure=measure, diameters=diameters, depth=depth)


def wasserstein_1d(x1, w1, x2, w2) -> float:
    """Exact transport distance of two weighted one-dimensional samples.

    Both weight vectors must sum to 1.  Computed as the integral of the
    quantile gap over a merged breakpoint grid."""
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    w1 = np.asarray(w1, dtype=float)
    w2 = np.asarray(w2, dtype=float)
    o1 = np.argsort(x1, kind="stable")
    o2 = np.argsort(x2, kind="stable")
    x1, w1 = x1[o1], w1[o1]
    x2, w2 = x2[o2], w2[o2]
    c1 = np.cumsum(w1)
    c2 = np.cumsum(w2)
    grid = np.union1d(c1, c2)
    grid = grid[grid <= min(c1[-1], c2[-1]) + 1e-15]
    prev = np.concatenate(([0.0], grid[:-1]))
    du = grid - prev
    mid = (grid + prev) / 2.0
    q1 = x1[np.minimum(np.searchsorted(c1, mid, side="left"), x1.shape[0] - 1)]
    q2 = x2[np.minimum(np.searchsorted(c2, mid, side="left"), x2.shape[0] - 1)]
    return float(np.sum(np.abs(q1 - q2) * du))


def weak_star_distance(mu: StateTaggedMeasure, nu: StateTaggedMeasure) -> float:
    """Per-state mass gaps plus transported per-coordinate marginal gaps.

    Zero exactly when the state masses and all per-state per-coordinate
    marginals agree.  Symmetric.  Distances of normalized sections are
    weighted by the smaller section mass so the two summands stay on the
    scale of total variation."""
    if mu.k != nu.k or mu.dim != nu.dim:
        raise ValueError("measures live on different spaces")
    m1 = mu.state_mass()
    m2 = nu.state_mass()
    total = 0.0
    for j in range(mu.k):
        total += abs(float(m1[j]) - float(m2[j]))
        overlap = min(float(m1[j]), float(m2[j]))
        if overlap <= 0.0:
            continue
        sel1 = mu.states == j + 1
        sel2 = nu.states == j + 1
        w1 = mu.weights[sel1] / m1[j]
        w2 = nu.weights[sel2] / m2[j]
        for s in range(mu.dim):
            total += overlap * wasserstein_1d(
                mu.points[sel1, s], w1, nu.points[sel2, s], w2
            )
    return total


@dataclass(frozen=True)
class StabilityRow:
    step: int
    initial_id: str
    distance: float
    mass_gap: float


@dataclass(frozen=True)
class StabilityResult:
    rows: tuple[StabilityRow, ...]
    mass_identity_error: float
    target_diameter: float


def stability_experiment(
    sys: MapSystem,
    initials: dict[str, StateTaggedMeasure],
    n_steps: int,
    particle_budget: int,
    seed: int = 0,
    *,
    target_samples: int | None = None,
    target_depth: int = TARGET_DEPTH,
) -> StabilityResult:
    """Iterate the operator from several starting measures.

    Records, per step, the surrogate distance to a sampled target and the
    sup gap between state masses and the stationary vector.  Also tracks
    the worst deviation of the empirical state-mass vector from the exact
    matrix-power evolution of its starting value, which resampling must not
    disturb."""
    target = estimate_target(
        sys, target_samples or particle_budget, target_depth, seed=seed + 977
    )
    p = sys.shift.p
    P = sys.shift.P
    rows: list[StabilityRow] = []
    worst = 0.0
    for idx, (name, mu) in enumerate(sorted(initials.items())):
        expected = mu.state_mass()
        current = mu
        rows.append(
            StabilityRow(
                step=0,
                initial_id=name,
                distance=weak_star_distance(current, target.measure),
                mass_gap=float(np.abs(current.state_mass() - p).max()),
            )
        )
        for n in range(1, n_steps + 1):
            current = apply_operator(current, sys)
            current = resample(current, particle_budget, seed=seed + 7919 * idx + n)
            expected = expected @ P
            worst = max(worst, float(np.abs(current.state_mass() - expected).max()))
            rows.append(
                StabilityRow(
                    step=n,
                    initial_id=name,
                    distance=weak_star_distance(current, target.measure),
                    mass_gap=float(np.abs(current.state_mass() - p).max()),
                )
            )
    return StabilityResult(
        rows=tuple(rows),
        mass_identity_error=worst,
        target_diameter=target.max_diameter,
    )


def sorted_particles(mu: StateTaggedMeasure) -> np.ndarray:
    """Rows (state, point..., weight) sorted lexicographically, for
    order-independent serialization."""
    rows = np.column_stack([mu.states.astype(float), mu.points, mu.weights])
    order = np.lexsort(tuple(rows[:, c] for c in range(rows.shape[1] - 1, -1, -1)))
    return rows[order]
