"""Exact cylinder enumeration for the inverse Markov measure.

Ground truth for the probabilistic experiments.  Enumerates every word of a
bounded length once, depth-first with incremental measure products, and
computes:

- membership_measure: total inverse measure of the words w of length n whose
  chained image enclosure of f_{w_0} o ... o f_{w_{n-1}} (ambient) contains a
  given value x in projection s
- avoidance_measure: total inverse measure of the words of length ell*N with
  no N-block equal to a given word
- substitute_blocks: blockwise word substitution
- verify_bounds: for a normalized witness pair, the membership-vs-avoidance
  inequality on a grid of x values, injectivity and per-word measure growth
  of the block substitution on the enumerated membership set, and the
  geometric decay bound of the avoidance measure

Every routine runs either on floats or, with exact=True, on Fractions built
from the same float inputs (Fraction(v) is the exact value of the float v),
flowing through identical code paths so the two modes differ only in
rounding.  One-dimensional enclosures are exact interval images; for m >= 2
the chained enclosure is an upper bound and rows are flagged accordingly.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import BudgetExceeded, HypothesisViolated, LengthMismatch
from .maps import AffineMap, IntervalBox, Map, MapSystem, MoebiusMap, box_image
from .shift import MarkovShiftSpec, Word, check_word
from .splitting import NormalizedPair

ENUMERATION_BUDGET = 1 << 24
DEFAULT_GRID = 33


@dataclass(frozen=True)
class BoundCheck:
    """One verified row: a single (ell, x) combination."""

    ell: int
    x: float | Fraction
    s: int
    lhs: float | Fraction
    rhs: float | Fraction
    bound_holds: bool
    injective: bool
    measure_monotone: bool
    geometric_bound: float | Fraction
    geometric_holds: bool
    membership_words: int
    avoidance_words: int
    enumerated: int
    exact_enclosures: bool

    @property
    def holds(self) -> bool:
        return (
            self.bound_holds
            and self.injective
            and self.measure_monotone
            and self.geometric_holds
        )


@dataclass(frozen=True)
class OracleReport:
    word: Word
    replacement: Word
    block_length: int
    s: int
    swapped: bool
    word_measure: float | Fraction
    replacement_measure: float | Fraction
    decay_floor: float | Fraction
    exact: bool
    rows: tuple[BoundCheck, ...]

    @property
    def all_hold(self) -> bool:
        return all(row.holds for row in self.rows)


@dataclass(frozen=True)
class _Tables:
    """Scalar twins of the shift data: stationary vector and inverse matrix."""

    p: tuple
    q: tuple[tuple, ...]
    one: object


def _tables(shift: MarkovShiftSpec, exact: bool) -> _Tables:
    if exact:
        conv = Fraction
        one = Fraction(1)
    else:
        conv = float
        one = 1.0
    p = tuple(conv(v) for v in shift.p)
    q = tuple(tuple(conv(v) for v in row) for row in shift.Q)
    return _Tables(p=p, q=q, one=one)


def _exact_map(f: Map) -> Map:
    if isinstance(f, AffineMap):
        return AffineMap(
            tuple(tuple(Fraction(a) for a in row) for row in f.matrix),
            tuple(Fraction(b) for b in f.offset),
        )
    return MoebiusMap(Fraction(f.a), Fraction(f.b), Fraction(f.c), Fraction(f.d))


def _exact_box(box: IntervalBox) -> IntervalBox:
    return IntervalBox(
        tuple(Fraction(v) for v in box.lo), tuple(Fraction(v) for v in box.hi)
    )


def _scalar_geometry(sys: MapSystem, exact: bool) -> tuple[tuple[Map, ...], IntervalBox]:
    if exact:
        return tuple(_exact_map(f) for f in sys.maps), _exact_box(sys.ambient)
    return sys.maps, sys.ambient


def inverse_word_measure(tables: _Tables, word: Word):
    """Inverse cylinder measure from precomputed scalar tables."""
    if not word:
        return tables.one
    acc = tables.p[word[0] - 1]
    for a, b in zip(word, word[1:]):
        acc = acc * tables.q[a - 1][b - 1]
    return acc


def _check_budget(k: int, n: int) -> None:
    if k**n > ENUMERATION_BUDGET:
        raise BudgetExceeded(
            f"{k}^{n} words exceed the enumeration budget {ENUMERATION_BUDGET}"
        )


def _enumerate_membership(
    maps: tuple[Map, ...],
    ambient: IntervalBox,
    tables: _Tables,
    x,
    s: int,
    n: int,
    collect: bool,
):
    """DFS over word prefixes with sound pruning.

    The chained enclosure of a prefix contains the enclosure of every
    extension (maps send the ambient box into itself and box images are
    inclusion-monotone), so a prefix whose projection misses x kills the
    whole subtree.  Zero-measure transitions prune likewise.
    """
    k = len(maps)
    si = s - 1
    total = tables.one * 0
    count = 0
    words: list[Word] | None = [] if collect else None
    path: list[int] = []

    def chain_contains() -> bool:
        box = ambient
        for sym in reversed(path):
            box = box_image(maps[sym - 1], box)
        return box.lo[si] <= x <= box.hi[si]

    def rec(measure, last: int) -> None:
        nonlocal total, count
        if len(path) == n:
            total = total + measure
            count += 1
            if words is not None:
                words.append(tuple(path))
            return
        for a in range(1, k + 1):
            step = tables.q[last - 1][a - 1] if last else tables.p[a - 1]
            if step == 0:
                continue
            path.append(a)
            if chain_contains():
                rec(measure * step, a)
            path.pop()

    if n == 0:
        return tables.one, 1, ([()] if collect else None)
    rec(tables.one, 0)
    return total, count, words


def membership_measure(sys: MapSystem, x, s: int, n: int, *, exact: bool = False):
    """Inverse measure of the length-n words whose image enclosure meets x.

    Membership is tested on the closed projection interval of the chained
    enclosure of f_{w_0} o ... o f_{w_{n-1}} (ambient); n = 0 gives 1.  Exact
    for one-dimensional systems, an upper bound for m >= 2.
    """
    if not 1 <= s <= sys.dim:
        raise ValueError(f"coordinate {s} outside 1..{sys.dim}")
    if n < 0:
        raise ValueError("n must be >= 0")
    _check_budget(sys.k, n)
    maps, ambient = _scalar_geometry(sys, exact)
    tables = _tables(sys.shift, exact)
    if exact:
        x = Fraction(x)
    lo, hi = ambient.project(s)
    if not lo <= x <= hi:
        raise ValueError(f"x = {x!r} outside the ambient projection [{lo!r}, {hi!r}]")
    total, _, _ = _enumerate_membership(maps, ambient, tables, x, s, n, collect=False)
    return total


def avoidance_measure(
    shift: MarkovShiftSpec, word: Word, ell: int, *, exact: bool = False
):
    """Inverse measure of the length-(ell*N) words with no N-block equal
    to `word` at offsets 0, N, ..., (ell-1)N.  ell = 0 gives 1."""
    word = check_word(word, shift.k, allow_empty=False)
    if ell < 0:
        raise ValueError("ell must be >= 0")
    n_block = len(word)
    _check_budget(shift.k, ell * n_block)
    tables = _tables(shift, exact)
    total, _ = _enumerate_avoidance(tables, shift.k, word, ell)
    return total


def _enumerate_avoidance(tables: _Tables, k: int, word: Word, ell: int):
    n_block = len(word)
    n = ell * n_block
    total = tables.one * 0
    count = 0

    def rec(pos: int, last: int, match: bool, measure) -> None:
        nonlocal total, count
        if pos == n:
            total = total + measure
            count += 1
            return
        r = pos % n_block
        closing = r == n_block - 1
        for a in range(1, k + 1):
            step = tables.q[last - 1][a - 1] if pos else tables.p[a - 1]
            if step == 0:
                continue
            still = match and a == word[r]
            if closing and still:
                continue
            rec(pos + 1, a, True if closing else still, measure * step)

    if n == 0:
        return tables.one, 1
    rec(0, 0, True, tables.one)
    return total, count


def substitute_blocks(word: Word, block: Word, replacement: Word) -> Word:
    """Replace every N-block of `word` equal to `block` by `replacement`."""
    n_block = len(block)
    if n_block == 0:
        raise LengthMismatch("block must be nonempty")
    if len(replacement) != n_block:
        raise LengthMismatch(
            f"replacement length {len(replacement)} != block length {n_block}"
        )
    if len(word) % n_block:
        raise LengthMismatch(
            f"word length {len(word)} is not a multiple of the block length {n_block}"
        )
    out: list[int] = []
    for i in range(0, len(word), n_block):
        piece = word[i : i + n_block]
        out.extend(replacement if piece == block else piece)
    return tuple(out)


def _reverse_boxes_disjoint(maps, ambient, word_a: Word, word_b: Word) -> bool:
    def rev_box(word: Word) -> IntervalBox:
        box = ambient
        for sym in reversed(word):
            box = box_image(maps[sym - 1], box)
        return box

    ba, bb = rev_box(word_a), rev_box(word_b)
    for s in range(ambient.dim):
        if ba.hi[s] >= bb.lo[s] and bb.hi[s] >= ba.lo[s]:
            return False
    return True


def default_grid(sys: MapSystem, s: int, points: int = DEFAULT_GRID) -> tuple[float, ...]:
    lo, hi = sys.ambient.project(s)
    return tuple(float(v) for v in np.linspace(float(lo), float(hi), points))


def verify_bounds(
    sys: MapSystem,
    pair: NormalizedPair | tuple[Word, Word],
    *,
    s: int = 1,
    x_grid=None,
    ell_max: int = 6,
    exact: bool = False,
) -> OracleReport:
    """Full oracle sweep for a normalized witness pair.

    For each ell <= ell_max: enumerates the avoidance measure of the
    lower-measure word W once, then for each grid x the membership measure
    (which the avoidance measure must dominate), the injectivity of the
    block substitution W -> W' on the enumerated membership words, and the
    per-word measure growth under that substitution.  Also records the
    geometric decay bound (1 - rho0)^ell where rho0 is the minimum of the
    measure of W and inf_j q_{jW_0} q_{W_0 W_1} ... q_{W_{N-2} W_{N-1}}.

    The word roles are swapped if needed so that W is the one of lower
    inverse measure.  Raises HypothesisViolated when either word has zero
    inverse measure, their first symbols differ, or their image boxes fail
    the projection disjointness the substitution argument rests on.
    """
    if isinstance(pair, NormalizedPair):
        xi, eta = pair.xi, pair.eta
    else:
        xi, eta = pair
    xi = check_word(xi, sys.k, allow_empty=False)
    eta = check_word(eta, sys.k, allow_empty=False)
    if len(xi) != len(eta):
        raise LengthMismatch(f"pair lengths differ: {len(xi)} != {len(eta)}")
    if xi[0] != eta[0]:
        raise HypothesisViolated(
            f"pair must share the first symbol, got {xi[0]} and {eta[0]}"
        )
    if xi == eta:
        raise HypothesisViolated("pair words must differ")
    if not 1 <= s <= sys.dim:
        raise ValueError(f"coordinate {s} outside 1..{sys.dim}")
    if ell_max < 1:
        raise ValueError("ell_max must be >= 1")

    maps, ambient = _scalar_geometry(sys, exact)
    tables = _tables(sys.shift, exact)
    one = tables.one

    mu_xi = inverse_word_measure(tables, xi)
    mu_eta = inverse_word_measure(tables, eta)
    if mu_xi == 0 or mu_eta == 0:
        raise HypothesisViolated("both pair words need positive inverse measure")
    if not _reverse_boxes_disjoint(maps, ambient, xi, eta):
        raise HypothesisViolated(
            "image boxes of the pair overlap in some projection"
        )

    swapped = mu_xi > mu_eta
    if swapped:
        word, replacement = eta, xi
        mu_w, mu_r = mu_eta, mu_xi
    else:
        word, replacement = xi, eta
        mu_w, mu_r = mu_xi, mu_eta
    n_block = len(word)

    interior = one
    for a, b in zip(word, word[1:]):
        interior = interior * tables.q[a - 1][b - 1]
    rho = min(tables.q[j][word[0] - 1] for j in range(sys.k)) * interior
    rho0 = min(rho, mu_w)

    if x_grid is None:
        x_grid = default_grid(sys, s)
    xs = [Fraction(x) if exact else float(x) for x in x_grid]
    exact_enclosures = sys.dim == 1

    rows: list[BoundCheck] = []
    for ell in range(1, ell_max + 1):
        _check_budget(sys.k, ell * n_block)
        rhs, avoid_count = _enumerate_avoidance(tables, sys.k, word, ell)
        geometric_bound = (one - rho0) ** ell
        geometric_holds = rhs <= geometric_bound
        for x in xs:
            lhs, member_count, members = _enumerate_membership(
                maps, ambient, tables, x, s, ell * n_block, collect=True
            )
            images = [substitute_blocks(w, word, replacement) for w in members]
            injective = len(set(images)) == len(images)
            monotone = all(
                inverse_word_measure(tables, w) <= inverse_word_measure(tables, fw)
                for w, fw in zip(members, images)
            )
            rows.append(
                BoundCheck(
                    ell=ell,
                    x=x,
                    s=s,
                    lhs=lhs,
                    rhs=rhs,
                    bound_holds=lhs <= rhs,
                    injective=injective,
                    measure_monotone=monotone,
                    geometric_bound=geometric_bound,
                    geometric_holds=geometric_holds,
                    membership_words=member_count,
                    avoidance_words=avoid_count,
                    enumerated=sys.k ** (ell * n_block),
                    exact_enclosures=exact_enclosures,
                )
            )
    return OracleReport(
        word=word,
        replacement=replacement,
        block_length=n_block,
        s=s,
        swapped=swapped,
        word_measure=mu_w,
        replacement_measure=mu_r,
        decay_floor=rho0,
        exact=exact,
        rows=tuple(rows),
    )
