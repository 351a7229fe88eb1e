"""Admissible cuts and level profiles of semantic trees.

Profiles are indexed from the root; the level formulas of `exact_counts`
count i from the leaves (`LevelProfile.from_leaves`).
"""
import logging
import math
from fractions import Fraction
from itertools import product
from typing import Iterator, Optional, Sequence
import mpmath
from config import Config
from app.exact_counts import (RecurrenceCache, catalan, hook_count,
                              mean_level_width, mean_size)
from app.exceptions import DomainError, LimitExceededError
from app.models import AdmissibleCut, ApproxReal, LevelProfile, SyntaxTree
from app.process_core import map_trees
from app.run_sampling import Rng, uniform_random_tree

logger = logging.getLogger(__name__)


def count_admissible_cuts(tree: SyntaxTree) -> int:
    # a cut keeps the root and, below each child, nothing or a cut of it
    cuts = [1] * tree.size
    for node in range(tree.size, 0, -1):
        for child in tree.children(node):
            cuts[node - 1] *= 1 + cuts[child - 1]
    return cuts[0]


def _cut_shape(tree: SyntaxTree, kept: Sequence[int]) -> SyntaxTree:
    members = set(kept)
    degrees = [sum(1 for c in tree.children(v) if c in members) for v in kept]
    return SyntaxTree.from_degrees(degrees, [tree.label(v) for v in kept])


def enumerate_admissible_cuts(tree: SyntaxTree,
                              limit: Optional[int] = None
                              ) -> Iterator[AdmissibleCut]:
    """Every admissible cut of `tree` once.

    Ordered by size (largest first), then by label-free shape, then by the
    kept preorder ids.
    """
    if limit is None:
        limit = Config.CUT_ORACLE_LIMIT
    if tree.size > limit:
        predicted = count_admissible_cuts(tree)
        logger.warning('cut enumeration of a size-%d tree refused (%d cuts)',
                       tree.size, predicted)
        raise LimitExceededError(
            f'tree of size {tree.size} is above the cut-oracle limit {limit} '
            f'({predicted} cuts)', predicted)
    # kept-id tuples per node, built from the leaves up
    below: list[list[tuple[int, ...]]] = [[] for _ in range(tree.size)]
    for node in range(tree.size, 0, -1):
        options = [[()] + below[child - 1] for child in tree.children(node)]
        below[node - 1] = [
            (node,) + tuple(v for part in choice for v in part)
            for choice in product(*options)]
    cuts = []
    for kept in below[0]:
        shape = _cut_shape(tree, kept)
        cuts.append(AdmissibleCut(shape, kept, hook_count(shape)))
    cuts.sort(key=lambda c: (-c.size, c.shape.structure(), c.source_ids))
    return iter(cuts)


def _binomial_convolution(a: list[int], b: list[int]) -> list[int]:
    # c[m] = sum_j C(m, j) a[j] b[m-j]
    out = []
    for m in range(len(a) + len(b) - 1):
        low = max(0, m - len(b) + 1)
        high = min(m, len(a) - 1)
        coeff = math.comb(m, low)
        total = 0
        for j in range(low, high + 1):
            total += coeff * a[j] * b[m - j]
            coeff = coeff * (m - j) // (j + 1)
        out.append(total)
    return out


def _prefix_counts(tree: SyntaxTree) -> list[int]:
    """counts[k] = run prefixes of length k, k = 0..n (counts[0] = 1)."""
    counts: list[list[int]] = [[] for _ in range(tree.size)]
    for node in range(tree.size, 0, -1):
        merged = [1]
        for child in tree.children(node):
            merged = _binomial_convolution(merged, counts[child - 1])
            counts[child - 1] = []
        counts[node - 1] = [1] + merged
    return counts[0]


def level_profile(tree: SyntaxTree, method: str = 'fast',
                  limit: Optional[int] = None) -> LevelProfile:
    if method == 'oracle':
        counts = [0] * tree.size
        for cut in enumerate_admissible_cuts(tree, limit):
            counts[cut.size - 1] += cut.labellings
        return LevelProfile(tuple(counts))
    if method != 'fast':
        raise DomainError(f'unknown profile method {method!r}')
    if limit is None:
        limit = Config.FAST_PROFILE_LIMIT
    if tree.size > limit:
        raise LimitExceededError(
            f'tree of size {tree.size} is above the profile limit {limit}')
    return LevelProfile(tuple(_prefix_counts(tree)[1:]))


def semantic_size(tree: SyntaxTree) -> int:
    """Node count of Shuf(tree), without building it."""
    return level_profile(tree).total


def _cut_coefficients(k: int) -> tuple[int, int, int, int, int]:
    return (-500*k + 2000*k**3,
            120 - 220*k - 1380*k**2 - 920*k**3,
            -(1488 + 1626*k + 387*k**2 - 21*k**3),
            1104 + 1088*k + 351*k**2 + 37*k**3,
            -(168 + 146*k + 42*k**2 + 4*k**3))


CUT_TERMS = RecurrenceCache('cut count', (0, 1, 2, 7), _cut_coefficients,
                            integral=True)


def cut_count_sequence(N: int, method: str = 'recurrence',
                       workers: Optional[int] = None) -> list[int]:
    """m_0 .. m_N: total number of admissible cuts over all trees of size n.

    `brute` sums the per-tree counts over the enumeration, `recurrence`
    runs the order-4 relation forward and `series` expands the functional
    equation M = z + M^2 + M C of the generating function.
    """
    if N < 0:
        raise DomainError('N must be non-negative')
    if method == 'recurrence':
        return [int(x) for x in CUT_TERMS.terms(N)]
    if method == 'series':
        m = [0] * (N + 1)
        for n in range(1, N + 1):
            m[n] = (1 if n == 1 else 0) + sum(
                m[k] * (m[n - k] + catalan(n - k)) for k in range(1, n))
        return m
    if method != 'brute':
        raise DomainError(f'unknown method {method!r}')
    if N > Config.CUT_BRUTE_LIMIT:
        raise LimitExceededError(
            f'brute cut counts stop at N = {Config.CUT_BRUTE_LIMIT}')
    return [0] + [sum(map_trees(n, count_admissible_cuts, workers))
                  for n in range(1, N + 1)]


def mean_profile(n: int) -> tuple[Fraction, ...]:
    """Mean level profile over all trees of size n, root level first."""
    return tuple(mean_level_width(n, n - 1 - level) for level in range(n))


def profile_experiment(
        n: int, trees: int, rng: Rng,
        long_run: bool = False) -> list[tuple[int, Fraction, Fraction]]:
    """Average the profiles of `trees` uniform random trees of size n.

    Returns (level, sample mean, mean_level_width) rows, root level first.
    Sizes above EXPERIMENT_SIZE_LIMIT need `long_run`.
    """
    limit = Config.LONG_RUN_SIZE_LIMIT if long_run \
        else Config.EXPERIMENT_SIZE_LIMIT
    if n < 1 or trees < 1:
        raise DomainError('the experiment needs n >= 1 and at least one tree')
    if n > limit:
        raise LimitExceededError(
            f'experiment size {n} is above {limit}'
            + ('' if long_run else '; pass long_run for larger sizes'), n)
    totals = [0] * n
    for _ in range(trees):
        profile = level_profile(uniform_random_tree(n, rng))
        for level, count in enumerate(profile):
            totals[level] += count
    logger.info('profile experiment: n=%d, %d trees', n, trees)
    return [(level, Fraction(total, trees), expected)
            for level, (total, expected)
            in enumerate(zip(totals, mean_profile(n)))]


def tail_mass_fraction(n: int, levels: int) -> Fraction:
    """Share of the mean semantic size held by the `levels` deepest levels."""
    if not 1 <= levels <= n:
        raise DomainError(f'levels must lie in 1..{n}')
    return sum((mean_level_width(n, i) for i in range(levels)),
               Fraction(0)) / mean_size(n)


# At integer c*n the residual of limit_profile is the first dropped Stirling
# term, |S(c)|/(12 n) with S(c) = 2 - 1/c - 1/(2(1-c)) - 1/(2-c), so it stays
# below LIMIT_PROFILE_K / (c(1-c)n). K(c) = |S(c)| c(1-c)/12 is 0.0347 at
# c = 1/2, 0.0461 at c = 0.3 and tends to 1/12 as c -> 0.
LIMIT_PROFILE_K = 1 / 12


def limit_profile(c: float, n: int) -> ApproxReal:
    """Second-order approximation of log mean_level_width(n, floor(c n)).

    Valid for c away from both ends; the error field is 1/(c(1-c)n), the
    order of the Stirling remainders.
    """
    if n < 4 or not 2 / n <= c <= 1 - 2 / n:
        raise DomainError(f'c = {c} is outside [2/n, 1 - 2/n] for n = {n}')
    with mpmath.workdps(30):
        c = mpmath.mpf(c)
        x = mpmath.mpf(n)
        value = (1 - c) * x * mpmath.log(x) \
            + (c - 1 + (1 - c) * mpmath.log(2 - 2*c) - c * mpmath.log(c)
               - (2 - c) * mpmath.log(2 - c)) * x \
            + mpmath.log(mpmath.sqrt(4 - 2*c) / mpmath.sqrt(c))
        return ApproxReal(value, 1 / (c * (1 - c) * x))


def log10_count(count: int) -> float:
    """log10 of an arbitrarily large positive integer."""
    if count <= 0:
        raise DomainError('log10 of a non-positive count')
    shift = max(0, count.bit_length() - 64)
    return math.log10(count >> shift) + shift * math.log10(2)
