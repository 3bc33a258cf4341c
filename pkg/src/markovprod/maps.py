"""Interval boxes and finite systems of box self-maps.

Provides:
- IntervalBox: compact axis-aligned boxes with exact per-coordinate
  interval images under the supported map kinds
- AffineMap x -> A x + b and MoebiusMap x -> (a x + b) / (c x + d) (1-D)
- point evaluation, forward orbits f_{w_n} o ... o f_{w_1} and reverse
  compositions f_{w_1} o ... o f_{w_n}, scalar and vectorised
- monotone sign classification of a system: the common pattern
  t in {+,-}^m such that coordinate function j of every map follows t
  when t_j = t_1 and the flipped pattern otherwise, with zero partial
  dependence acting as a wildcard

Scalar code paths use plain Python arithmetic so the same functions run
on floats and on fractions.Fraction coefficients; the batch helpers
require float data.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product

import numpy as np

from .errors import (
    DenominatorVanishes,
    NotSelfMapping,
    OutsideDomain,
)
from .shift import MarkovShiftSpec, Word, check_word

PLUS = "+"
MINUS = "-"
ZERO = "0"

_FLIP = {PLUS: MINUS, MINUS: PLUS}


@dataclass(frozen=True)
class IntervalBox:
    """Product of closed intervals [lo_s, hi_s], 1 <= s <= m."""

    lo: tuple
    hi: tuple

    def __post_init__(self):
        if len(self.lo) != len(self.hi) or not self.lo:
            raise ValueError("lo and hi must be nonempty tuples of equal length")
        for a, b in zip(self.lo, self.hi):
            if a > b:
                raise ValueError(f"interval [{a!r}, {b!r}] is empty")

    @property
    def dim(self) -> int:
        return len(self.lo)

    def project(self, s: int) -> tuple:
        """Closed interval of coordinate s (1-based)."""
        return (self.lo[s - 1], self.hi[s - 1])

    def diameter(self):
        """l1 diameter: sum of side lengths."""
        return sum(b - a for a, b in zip(self.lo, self.hi))

    def center(self) -> tuple:
        return tuple((a + b) / 2 for a, b in zip(self.lo, self.hi))

    def contains(self, x) -> bool:
        return all(a <= v <= b for a, v, b in zip(self.lo, x, self.hi))

    def contains_box(self, other: "IntervalBox") -> bool:
        return all(a <= c for a, c in zip(self.lo, other.lo)) and all(
            d <= b for d, b in zip(other.hi, self.hi)
        )

    def corners(self) -> list[tuple]:
        return [tuple(pt) for pt in product(*zip(self.lo, self.hi))]


@dataclass(frozen=True)
class AffineMap:
    """x -> A x + b with a square matrix A stored as a tuple of rows."""

    matrix: tuple[tuple, ...]
    offset: tuple

    def __post_init__(self):
        m = len(self.offset)
        if m == 0 or len(self.matrix) != m or any(len(row) != m for row in self.matrix):
            raise ValueError("matrix must be m x m matching the offset length")

    @property
    def dim(self) -> int:
        return len(self.offset)

    @property
    def kind(self) -> str:
        return "affine"


@dataclass(frozen=True)
class MoebiusMap:
    """x -> (a x + b) / (c x + d) on one coordinate."""

    a: object
    b: object
    c: object
    d: object

    @property
    def dim(self) -> int:
        return 1

    @property
    def kind(self) -> str:
        return "moebius1d"

    def determinant(self):
        return self.a * self.d - self.b * self.c


Map = AffineMap | MoebiusMap


def evaluate_map(f: Map, x, ambient: IntervalBox | None = None) -> tuple:
    """Image of a single point, as a tuple of scalars.

    When `ambient` is given the point must lie inside it.
    """
    x = tuple(x)
    if len(x) != f.dim:
        raise ValueError(f"point of dimension {len(x)} fed to a {f.dim}-dimensional map")
    if ambient is not None and not ambient.contains(x):
        raise OutsideDomain(f"point {x} outside the ambient box")
    if isinstance(f, AffineMap):
        return tuple(
            b + sum(a * v for a, v in zip(row, x)) for row, b in zip(f.matrix, f.offset)
        )
    den = f.c * x[0] + f.d
    if den == 0:
        raise DenominatorVanishes(f"denominator vanishes at x = {x[0]!r}")
    return ((f.a * x[0] + f.b) / den,)


def box_image(f: Map, box: IntervalBox) -> IntervalBox:
    """Exact interval image of a box, coordinate by coordinate.

    Affine: b_s + sum_l [min, max](A_sl * [lo_l, hi_l]).  Moebius: monotone
    between endpoints once the denominator is checked to have one sign on
    the interval.
    """
    if box.dim != f.dim:
        raise ValueError("box dimension does not match the map")
    if isinstance(f, AffineMap):
        lo, hi = [], []
        for row, b in zip(f.matrix, f.offset):
            acc_lo, acc_hi = b, b
            for a, u, v in zip(row, box.lo, box.hi):
                t0, t1 = a * u, a * v
                if t0 > t1:
                    t0, t1 = t1, t0
                acc_lo += t0
                acc_hi += t1
            lo.append(acc_lo)
            hi.append(acc_hi)
        return IntervalBox(tuple(lo), tuple(hi))
    den0 = f.c * box.lo[0] + f.d
    den1 = f.c * box.hi[0] + f.d
    if den0 == 0 or den1 == 0 or (den0 > 0) != (den1 > 0):
        raise DenominatorVanishes(
            f"denominator has a zero on [{box.lo[0]!r}, {box.hi[0]!r}]"
        )
    y0 = (f.a * box.lo[0] + f.b) / den0
    y1 = (f.a * box.hi[0] + f.b) / den1
    if y0 > y1:
        y0, y1 = y1, y0
    return IntervalBox((y0,), (y1,))


def injective(f: Map) -> bool:
    if isinstance(f, MoebiusMap):
        return f.determinant() != 0
    det = np.linalg.det(np.array(f.matrix, dtype=float))
    return det != 0.0


def sign_table(f: Map) -> tuple[tuple[str, ...], ...]:
    """Per coordinate function, the sign of the dependence on each variable."""

    def sgn(v) -> str:
        if v > 0:
            return PLUS
        if v < 0:
            return MINUS
        return ZERO

    if isinstance(f, AffineMap):
        return tuple(tuple(sgn(a) for a in row) for row in f.matrix)
    return ((sgn(f.determinant()),),)


def map_points(f: Map, pts: np.ndarray) -> np.ndarray:
    """Vectorised image of an (n, m) float array of points."""
    pts = np.asarray(pts, dtype=float)
    if isinstance(f, AffineMap):
        A = np.array(f.matrix, dtype=float)
        b = np.array(f.offset, dtype=float)
        return pts @ A.T + b
    den = f.c * pts + f.d
    if np.any(den == 0.0):
        raise DenominatorVanishes("denominator vanishes at a sample point")
    return (f.a * pts + f.b) / den


def map_boxes(f: Map, lo: np.ndarray, hi: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised box images for (n, m) arrays of lower/upper corners."""
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    if isinstance(f, AffineMap):
        A = np.array(f.matrix, dtype=float)
        b = np.array(f.offset, dtype=float)
        t0 = lo[:, None, :] * A[None, :, :]
        t1 = hi[:, None, :] * A[None, :, :]
        new_lo = np.minimum(t0, t1).sum(axis=2) + b
        new_hi = np.maximum(t0, t1).sum(axis=2) + b
        return new_lo, new_hi
    den0 = f.c * lo + f.d
    den1 = f.c * hi + f.d
    if np.any(den0 == 0.0) or np.any(den1 == 0.0) or np.any((den0 > 0) != (den1 > 0)):
        raise DenominatorVanishes("denominator has a zero inside a sample interval")
    y0 = (f.a * lo + f.b) / den0
    y1 = (f.a * hi + f.b) / den1
    return np.minimum(y0, y1), np.maximum(y0, y1)


@dataclass(frozen=True)
class MonotoneType:
    """Common sign class of a system: pattern plus the per-map sign tables."""

    signs: tuple[str, ...]
    tables: tuple[tuple[tuple[str, ...], ...], ...]


def _compatible(table: tuple[tuple[str, ...], ...], signs: tuple[str, ...]) -> bool:
    flipped = tuple(_FLIP[s] for s in signs)
    for j, row in enumerate(table):
        required = signs if signs[j] == signs[0] else flipped
        if all(e == ZERO for e in row):
            return False
        for e, r in zip(row, required):
            if e != ZERO and e != r:
                return False
    return True


@dataclass(frozen=True)
class MapSystem:
    """k maps sharing an ambient box and the alphabet of a Markov shift.

    Construction verifies that every map sends the ambient box into itself,
    by exact endpoint comparison of its box image.
    """

    ambient: IntervalBox
    maps: tuple[Map, ...]
    shift: MarkovShiftSpec

    def __post_init__(self):
        if not self.maps:
            raise ValueError("system needs at least one map")
        if len(self.maps) != self.shift.k:
            raise ValueError(
                f"{len(self.maps)} maps for a {self.shift.k}-state shift"
            )
        for i, f in enumerate(self.maps):
            if f.dim != self.ambient.dim:
                raise ValueError(f"map {i + 1} has dimension {f.dim}, ambient {self.ambient.dim}")
            image = box_image(f, self.ambient)
            if not self.ambient.contains_box(image):
                raise NotSelfMapping(
                    f"map {i + 1} sends the ambient box to {image.lo}..{image.hi}"
                )

    @property
    def k(self) -> int:
        return len(self.maps)

    @property
    def dim(self) -> int:
        return self.ambient.dim

    def map_for(self, symbol: int) -> Map:
        if not 1 <= symbol <= self.k:
            raise ValueError(f"symbol {symbol} outside 1..{self.k}")
        return self.maps[symbol - 1]


def monotone_classes(sys: MapSystem) -> tuple[MonotoneType, ...]:
    """All sign patterns t compatible with every map, in lexicographic order
    with '+' before '-'; empty when the system is not monotone."""
    tables = tuple(sign_table(f) for f in sys.maps)
    found = []
    for signs in product((PLUS, MINUS), repeat=sys.dim):
        if all(_compatible(t, signs) for t in tables):
            found.append(MonotoneType(signs=signs, tables=tables))
    return tuple(found)


def classify_monotone_type(sys: MapSystem) -> MonotoneType | None:
    """First compatible sign class, or None when the system is not monotone."""
    classes = monotone_classes(sys)
    return classes[0] if classes else None


def in_order_cone(x, y, signs: tuple[str, ...]) -> bool:
    """Strict order x < y coordinatewise, with '-' coordinates reversed."""
    return all(
        (a < b) if s == PLUS else (a > b) for a, b, s in zip(x, y, signs)
    )


def forward_orbit(sys: MapSystem, word: Word, x) -> tuple:
    """Apply f_{w_1} first: the orbit point f_{w_n} o ... o f_{w_1}(x)."""
    word = check_word(word, sys.k)
    x = tuple(x)
    if not sys.ambient.contains(x):
        raise OutsideDomain(f"orbit start {x} outside the ambient box")
    for s in word:
        x = evaluate_map(sys.map_for(s), x)
    return x


def reverse_composition(sys: MapSystem, word: Word, x) -> tuple:
    """Apply f_{w_n} first: the coding-direction point f_{w_1} o ... o f_{w_n}(x)."""
    word = check_word(word, sys.k)
    x = tuple(x)
    if not sys.ambient.contains(x):
        raise OutsideDomain(f"composition anchor {x} outside the ambient box")
    for s in reversed(word):
        x = evaluate_map(sys.map_for(s), x)
    return x


def forward_box_chain(sys: MapSystem, word: Word, box: IntervalBox | None = None) -> list[IntervalBox]:
    """Chained enclosures of f_{w_j} o ... o f_{w_1}(box) for j = 0..n.

    Index j holds the enclosure after the first j maps, so entry 0 is the
    starting box itself.
    """
    word = check_word(word, sys.k)
    cur = sys.ambient if box is None else box
    out = [cur]
    for s in word:
        cur = box_image(sys.map_for(s), cur)
        out.append(cur)
    return out


def forward_box(sys: MapSystem, word: Word, box: IntervalBox | None = None) -> IntervalBox:
    return forward_box_chain(sys, word, box)[-1]


def reverse_box_chain(sys: MapSystem, word: Word, box: IntervalBox | None = None) -> list[IntervalBox]:
    """Chained enclosures of f_{w_1} o ... o f_{w_j}(box) for j = 0..n.

    Entry j encloses the fibre of the length-j prefix.  Each entry is
    evaluated innermost-first (the only sound order for chained images), so
    the whole chain costs O(n^2) box images.  When `box` is the ambient box
    (the default) the entries are nested, because every further map sends
    the ambient box into itself before the prefix is applied.
    """
    word = check_word(word, sys.k)
    start = sys.ambient if box is None else box
    out = [start]
    for j in range(1, len(word) + 1):
        cur = start
        for s in reversed(word[:j]):
            cur = box_image(sys.map_for(s), cur)
        out.append(cur)
    return out


def reverse_box(sys: MapSystem, word: Word, box: IntervalBox | None = None) -> IntervalBox:
    word = check_word(word, sys.k)
    cur = sys.ambient if box is None else box
    for s in reversed(word):
        cur = box_image(sys.map_for(s), cur)
    return cur


def batch_reverse_points(sys: MapSystem, words: np.ndarray, anchor) -> np.ndarray:
    """Reverse compositions of many words at once, from a common anchor.

    words is an (n, depth) integer array of symbols; the result is (n, m).
    """
    words = np.asarray(words)
    n = words.shape[0]
    pts = np.tile(np.asarray(anchor, dtype=float), (n, 1))
    for t in range(words.shape[1] - 1, -1, -1):
        col = words[:, t]
        for j in range(1, sys.k + 1):
            mask = col == j
            if mask.any():
                pts[mask] = map_points(sys.maps[j - 1], pts[mask])
    return pts


def batch_reverse_boxes(sys: MapSystem, words: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Chained enclosures of the reverse compositions of many words at once."""
    words = np.asarray(words)
    n = words.shape[0]
    lo = np.tile(np.asarray(sys.ambient.lo, dtype=float), (n, 1))
    hi = np.tile(np.asarray(sys.ambient.hi, dtype=float), (n, 1))
    for t in range(words.shape[1] - 1, -1, -1):
        col = words[:, t]
        for j in range(1, sys.k + 1):
            mask = col == j
            if mask.any():
                lo[mask], hi[mask] = map_boxes(sys.maps[j - 1], lo[mask], hi[mask])
    return lo, hi
