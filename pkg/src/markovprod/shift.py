"""Finite-state Markov shift algebra.

Provides:
- validation and classification of row-stochastic transition matrices
  (primitive / irreducible-not-primitive / reducible)
- stationary vectors by direct linear solve, with damped power iteration
  retained as an independent cross-check
- the time-reversed transition matrix q_ij = (p_j / p_i) * p_ji
- cylinder measures of the forward and inverse Markov measures
- admissibility tests and seeded word sampling

Symbols are 1-based integers throughout; a word is a tuple of symbols.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    InadmissibleWord,
    InvalidMatrix,
    NotIrreducible,
    ZeroStationaryEntry,
)

Word = tuple[int, ...]

ROW_SUM_TOL = 1e-12
STATIONARY_TOL = 1e-12

PRIMITIVE = "primitive"
IRREDUCIBLE = "irreducible-not-primitive"
REDUCIBLE = "reducible"


def as_transition_matrix(matrix) -> np.ndarray:
    """Validate and return a row-stochastic matrix as a read-only float array.

    Entries must lie in [0, 1] and every row must sum to 1 within 1e-12.
    Error messages name offending rows 1-based.
    """
    P = np.array(matrix, dtype=float)
    if P.ndim != 2 or P.shape[0] != P.shape[1] or P.shape[0] == 0:
        raise InvalidMatrix(f"expected a nonempty square matrix, got shape {P.shape}")
    for i, row in enumerate(P):
        if np.any(row < 0.0) or np.any(row > 1.0):
            raise InvalidMatrix(f"row {i + 1} has an entry outside [0, 1]")
        s = float(row.sum())
        if abs(s - 1.0) > ROW_SUM_TOL:
            raise InvalidMatrix(f"row {i + 1} sums to {s!r}, expected 1 within {ROW_SUM_TOL}")
    P.setflags(write=False)
    return P


def _positive_digraph(P: np.ndarray) -> np.ndarray:
    return P > 0.0


def _strongly_connected(A: np.ndarray) -> bool:
    """Strong connectivity of a boolean adjacency matrix via two BFS passes."""

    def reaches_all(adj: np.ndarray) -> bool:
        k = adj.shape[0]
        seen = np.zeros(k, dtype=bool)
        seen[0] = True
        frontier = [0]
        while frontier:
            nxt = []
            for v in frontier:
                for w in np.flatnonzero(adj[v]):
                    if not seen[w]:
                        seen[w] = True
                        nxt.append(int(w))
            frontier = nxt
        return bool(seen.all())

    return reaches_all(A) and reaches_all(A.T)


def wielandt_bound(k: int) -> int:
    """Power cap used by the primitivity test."""
    return (k - 1) * k * k + 1


def classify_matrix(matrix) -> str:
    """Classify a row-stochastic matrix.

    Returns "primitive" when some power P^n (n <= (k-1)k^2 + 1) is entrywise
    positive, "irreducible-not-primitive" when the positive-entry digraph is
    strongly connected but no such power exists, and "reducible" otherwise.
    Positivity of boolean powers is monotone once rows and columns are
    nonempty, so testing the squares A, A^2, A^4, ... up to the cap decides.
    """
    P = as_transition_matrix(matrix)
    A = _positive_digraph(P)
    if not _strongly_connected(A):
        return REDUCIBLE
    bound = wielandt_bound(P.shape[0])
    B = A.copy()
    exponent = 1
    while True:
        if B.all():
            return PRIMITIVE
        if exponent >= bound:
            return IRREDUCIBLE
        B = B @ B
        exponent *= 2


def stationary_vector(matrix) -> np.ndarray:
    """Solve p P = p, sum(p) = 1 for an irreducible row-stochastic P.

    Direct solve of the transposed balance equations with the normalization
    replacing one redundant row.  The residual max|pP - p| is checked against
    1e-12 before returning.
    """
    P = as_transition_matrix(matrix)
    if not _strongly_connected(_positive_digraph(P)):
        raise NotIrreducible("stationary vector requires an irreducible matrix")
    k = P.shape[0]
    A = P.T - np.eye(k)
    A[-1, :] = 1.0
    rhs = np.zeros(k)
    rhs[-1] = 1.0
    p = np.linalg.solve(A, rhs)
    residual = float(np.max(np.abs(p @ P - p)))
    if residual > STATIONARY_TOL:
        raise ArithmeticError(f"stationary solve residual {residual!r} exceeds {STATIONARY_TOL}")
    if np.any(p <= 0.0):
        raise ArithmeticError("stationary vector of an irreducible matrix must be positive")
    p.setflags(write=False)
    return p


def stationary_vector_power(matrix, tol: float = 1e-14, max_iter: int = 200_000) -> np.ndarray:
    """Stationary vector by damped power iteration; independent of the solver.

    Iterates p <- p (P + I)/2, which has the same stationary vector and
    converges for every irreducible matrix, periodic ones included.
    """
    P = as_transition_matrix(matrix)
    if not _strongly_connected(_positive_digraph(P)):
        raise NotIrreducible("stationary vector requires an irreducible matrix")
    k = P.shape[0]
    lazy = 0.5 * (P + np.eye(k))
    p = np.full(k, 1.0 / k)
    for _ in range(max_iter):
        q = p @ lazy
        q /= q.sum()
        if np.max(np.abs(q - p)) < tol:
            return q
        p = q
    raise ArithmeticError(f"power iteration did not converge within {max_iter} steps")


def inverse_transition(matrix, p=None) -> np.ndarray:
    """Time-reversed matrix q_ij = (p_j / p_i) p_ji for stationary p.

    Row-stochasticity of the result is equivalent to stationarity of p, so it
    is checked and certified here.  Applying the operation twice gives back
    the original matrix.
    """
    P = as_transition_matrix(matrix)
    p = stationary_vector(P) if p is None else np.asarray(p, dtype=float)
    if p.shape != (P.shape[0],):
        raise InvalidMatrix(f"stationary vector shape {p.shape} does not match matrix {P.shape}")
    if np.any(p <= 0.0):
        raise ZeroStationaryEntry("time reversal requires a strictly positive stationary vector")
    Q = (P.T * p[None, :]) / p[:, None]
    row_err = float(np.max(np.abs(Q.sum(axis=1) - 1.0)))
    if row_err > 1e-10:
        raise InvalidMatrix(f"p is not stationary for the matrix (row defect {row_err!r})")
    # Rounding can overshoot the unit interval by an ulp; clamp so the result
    # revalidates as a transition matrix.
    Q = np.clip(Q, 0.0, 1.0)
    Q.setflags(write=False)
    return Q


@dataclass(frozen=True)
class MarkovShiftSpec:
    """Immutable bundle of a validated chain: P, stationary p, reversal Q.

    Only irreducible matrices get a spec, so p is strictly positive and both
    forward and inverse Markov measures are defined.
    """

    P: np.ndarray
    p: np.ndarray
    Q: np.ndarray
    classification: str

    @property
    def k(self) -> int:
        return self.P.shape[0]

    def matrix(self, inverse: bool = False) -> np.ndarray:
        return self.Q if inverse else self.P


def build_shift(matrix) -> MarkovShiftSpec:
    """Validate, classify, and close a transition matrix under time reversal."""
    P = as_transition_matrix(matrix)
    classification = classify_matrix(P)
    if classification == REDUCIBLE:
        raise NotIrreducible("shift spec requires an irreducible matrix")
    p = stationary_vector(P)
    Q = inverse_transition(P, p)
    return MarkovShiftSpec(P=P, p=p, Q=Q, classification=classification)


def check_word(word: Word, k: int, allow_empty: bool = True) -> Word:
    word = tuple(int(a) for a in word)
    if not word and not allow_empty:
        raise InadmissibleWord("word must be nonempty")
    for a in word:
        if not 1 <= a <= k:
            raise InadmissibleWord(f"symbol {a} outside 1..{k}")
    return word


def is_admissible(shift: MarkovShiftSpec, word: Word, inverse: bool = False) -> bool:
    """True when every consecutive transition of the word has positive probability."""
    word = check_word(word, shift.k)
    M = shift.matrix(inverse)
    return all(M[a - 1, b - 1] > 0.0 for a, b in zip(word, word[1:]))


def cylinder_measure(shift: MarkovShiftSpec, word: Word, inverse: bool = False) -> float:
    """Measure of the cylinder [a_0 ... a_l]: p_{a_0} prod_i M_{a_i a_{i+1}}.

    M is P for the forward measure and Q for the inverse one; the empty word
    denotes the whole space and has measure 1.
    """
    word = check_word(word, shift.k)
    if not word:
        return 1.0
    M = shift.matrix(inverse)
    out = float(shift.p[word[0] - 1])
    for a, b in zip(word, word[1:]):
        out *= float(M[a - 1, b - 1])
        if out == 0.0:
            return 0.0
    return out


def sample_word(
    shift: MarkovShiftSpec,
    length: int,
    *,
    start: int | None = None,
    inverse: bool = False,
    seed: int = 0,
) -> Word:
    """Draw one word of the given length from the chain.

    The first symbol is `start` when given, otherwise drawn from the
    stationary vector; transitions follow P or, with inverse=True, Q.
    Identical (parameters, seed) give identical words.
    """
    if length < 0:
        raise ValueError("length must be >= 0")
    if length == 0:
        return ()
    M = shift.matrix(inverse)
    cum = np.cumsum(M, axis=1)
    rng = np.random.default_rng(seed)
    u = rng.random(length)
    if start is None:
        cur = 1 + int(np.searchsorted(np.cumsum(shift.p), u[0], side="right"))
        cur = min(cur, shift.k)
    else:
        cur = int(start)
        if not 1 <= cur <= shift.k:
            raise InadmissibleWord(f"start state {cur} outside 1..{shift.k}")
    out = [cur]
    for t in range(1, length):
        row = cum[cur - 1]
        cur = 1 + min(int(np.searchsorted(row, u[t], side="right")), shift.k - 1)
        out.append(cur)
    return tuple(out)


def sample_words(
    shift: MarkovShiftSpec,
    count: int,
    length: int,
    *,
    inverse: bool = False,
    seed: int = 0,
) -> np.ndarray:
    """Vectorised batch of `count` words (rows) of the given length.

    Starts are stationary draws.  Used by the particle experiments, where the
    per-column loop keeps the cost at length * k array operations.
    """
    if length <= 0 or count <= 0:
        raise ValueError("count and length must be positive")
    M = shift.matrix(inverse)
    k = shift.k
    cum = np.cumsum(M, axis=1)
    rng = np.random.default_rng(seed)
    words = np.empty((count, length), dtype=np.int64)
    u = rng.random(count)
    start = 1 + np.minimum(np.searchsorted(np.cumsum(shift.p), u, side="right"), k - 1)
    words[:, 0] = start
    for t in range(1, length):
        u = rng.random(count)
        rows = cum[words[:, t - 1] - 1]
        words[:, t] = 1 + np.minimum((rows <= u[:, None]).sum(axis=1), k - 1)
    return words
