"""Uniform sampling of runs and of syntax trees."""
import hashlib
import logging
import random
from collections import Counter
from fractions import Fraction
from typing import Iterable, Optional, Sequence, Union
from config import Config
from app.exact_counts import balanced_product
from app.exceptions import (DomainError, EmptyMultisetError,
                            LimitExceededError, RecurrenceError,
                            UnknownElementError)
from app.models import Run, RunPrefix, SyntaxTree, WeightedTree
from app.process_core import annotate_weights, check_run_prefix

logger = logging.getLogger(__name__)


class Rng:
    """Seeded generator with bias-free integer draws.

    Bits come from Python's Mersenne Twister; an integer in a range of size
    W is drawn by rejection over W.bit_length() fresh bits, so arbitrarily
    large ranges stay exactly uniform.
    """

    ALGORITHM = 'mt19937-getrandbits-rejection/1'

    def __init__(self, seed: Optional[int] = None) -> None:
        self.seed = Config.DEFAULT_SEED if seed is None else seed
        self._random = random.Random(self.seed)

    def __repr__(self) -> str:
        return f'<Rng {self.ALGORITHM} seed={self.seed}>'

    def getrandbits(self, bits: int) -> int:
        return self._random.getrandbits(bits)

    def randint(self, low: int, high: int) -> int:
        """Uniform integer in [low, high]."""
        span = high - low + 1
        if span < 1:
            raise DomainError(f'empty range [{low}, {high}]')
        bits = span.bit_length()
        while True:
            r = self._random.getrandbits(bits)
            if r < span:
                return low + r

    def shuffle(self, items: list) -> None:
        for i in range(len(items) - 1, 0, -1):
            j = self.randint(0, i)
            items[i], items[j] = items[j], items[i]

    def spawn(self, worker_index: int) -> 'Rng':
        """Independent stream for a worker: seed = sha256("<seed>:<index>")."""
        digest = hashlib.sha256(f'{self.seed}:{worker_index}'.encode()).digest()
        return Rng(int.from_bytes(digest[:8], 'big'))


class PartialSumTree:
    """Weighted multiset stored as a complete binary tree.

    Entry k of the insertion order sits at heap position k (children 2k+1
    and 2k+2). Every position caches the total weight of its left and right
    subtrees, so that a uniform draw in [1, total] is routed to its entry
    along a single root path, and an update repairs a single path.
    Entries whose weight drops to 0 stay in place and are never drawn.
    """

    def __init__(self, entries: Iterable[tuple[int, int]] = ()) -> None:
        self.ids: list[int] = []
        self.weights: list[int] = []
        self.left: list[int] = []
        self.right: list[int] = []
        self.index: dict[int, int] = {}
        self.touched = 0
        for element, weight in entries:
            if element in self.index:
                raise DomainError(f'duplicate element {element}')
            if weight < 0:
                raise DomainError(f'negative weight for element {element}')
            self.index[element] = len(self.ids)
            self.ids.append(element)
            self.weights.append(weight)
        m = len(self.ids)
        self.left = [0] * m
        self.right = [0] * m
        subtotal = list(self.weights)
        for k in range(m - 1, 0, -1):
            parent = (k - 1) // 2
            if k % 2:
                self.left[parent] = subtotal[k]
            else:
                self.right[parent] = subtotal[k]
            subtotal[parent] += subtotal[k]

    def __len__(self) -> int:
        return len(self.ids)

    def __contains__(self, element: int) -> bool:
        return element in self.index

    def __repr__(self) -> str:
        return f'<PartialSumTree entries={len(self)} total={self.total_weight}>'

    @property
    def total_weight(self) -> int:
        if not self.ids:
            return 0
        return self.left[0] + self.weights[0] + self.right[0]

    @property
    def depth(self) -> int:
        return len(self.ids).bit_length()

    def weight(self, element: int) -> int:
        try:
            return self.weights[self.index[element]]
        except KeyError:
            raise UnknownElementError(f'no element {element}') from None

    def support(self) -> list[int]:
        return sorted(e for e, w in zip(self.ids, self.weights) if w > 0)

    def dispatch(self, rho: int) -> int:
        """The element owning position rho of the weight line, 1 <= rho <= total."""
        if not 1 <= rho <= self.total_weight:
            raise DomainError(f'rho = {rho} is outside 1..{self.total_weight}')
        k = 0
        while True:
            if rho <= self.left[k]:
                k = 2 * k + 1
            elif rho <= self.left[k] + self.weights[k]:
                return self.ids[k]
            else:
                rho -= self.left[k] + self.weights[k]
                k = 2 * k + 2

    def sample(self, rng: Rng) -> int:
        total = self.total_weight
        if total == 0:
            raise EmptyMultisetError('cannot sample from an empty multiset')
        return self.dispatch(rng.randint(1, total))

    def update(self, element: int, weight: int) -> 'PartialSumTree':
        if weight < 0:
            raise DomainError(f'negative weight for element {element}')
        try:
            k = self.index[element]
        except KeyError:
            raise UnknownElementError(f'no element {element}') from None
        delta = weight - self.weights[k]
        self.weights[k] = weight
        touched = 1
        while k > 0:
            parent = (k - 1) // 2
            if k % 2:
                self.left[parent] += delta
            else:
                self.right[parent] += delta
            k = parent
            touched += 1
        self.touched = touched
        return self

    def audit(self) -> bool:
        """True when every cached sum equals the recomputed subtree total."""
        m = len(self.ids)
        subtotal = list(self.weights)
        for k in range(m - 1, 0, -1):
            subtotal[(k - 1) // 2] += subtotal[k]
        for k in range(m):
            left = subtotal[2*k + 1] if 2*k + 1 < m else 0
            right = subtotal[2*k + 2] if 2*k + 2 < m else 0
            if self.left[k] != left or self.right[k] != right:
                logger.error('partial sums broken at position %d', k)
                return False
        return True


def pst_build(entries: Iterable[tuple[int, int]]) -> PartialSumTree:
    return PartialSumTree(entries)


def pst_sample(pst: PartialSumTree, rng: Rng) -> int:
    return pst.sample(rng)


def pst_update(pst: PartialSumTree, element: int, weight: int) -> PartialSumTree:
    return pst.update(element, weight)


def naive_sample(entries: Sequence[tuple[int, int]], rng: Rng,
                 limit: Optional[int] = None) -> int:
    """Draw from a flat array holding each element once per unit of weight."""
    if limit is None:
        limit = Config.NAIVE_ARRAY_LIMIT
    total = sum(w for _, w in entries)
    if total == 0:
        raise EmptyMultisetError('cannot sample from an empty multiset')
    if total > limit:
        raise LimitExceededError(
            f'flat array of {total} cells is above the limit {limit}', total)
    cells = [element for element, weight in entries for _ in range(weight)]
    return cells[rng.randint(1, total) - 1]


def _weighted(tree: Union[WeightedTree, SyntaxTree]) -> WeightedTree:
    return tree if isinstance(tree, WeightedTree) else annotate_weights(tree)


def run_step_probabilities(tree: Union[WeightedTree, SyntaxTree],
                           prefix: Union[RunPrefix, Sequence[int]]
                           ) -> list[Fraction]:
    """Probability of each step of `prefix` given the steps before it.

    The first step always runs the root, with probability 1.
    """
    weighted = _weighted(tree)
    nodes = tuple(prefix)
    check_run_prefix(weighted, nodes)
    n = weighted.size
    return [Fraction(1)] + [Fraction(weighted.weight(nodes[k]), n - k)
                            for k in range(1, len(nodes))]


def prefix_probability(tree: Union[WeightedTree, SyntaxTree],
                       prefix: Union[RunPrefix, Sequence[int]],
                       steps: Optional[list[Fraction]] = None) -> Fraction:
    """Probability that a uniform run starts with `prefix`.

    One multiply-divide step per action after the root; the factors are
    appended to `steps` when given.
    """
    weighted = _weighted(tree)
    nodes = tuple(prefix)
    check_run_prefix(weighted, nodes)
    n = weighted.size
    rho = Fraction(1)
    for k in range(1, len(nodes)):
        factor = Fraction(weighted.weight(nodes[k]), n - k)
        rho *= factor
        if steps is not None:
            steps.append(factor)
    return rho


def _smallest_prime_factors(n: int) -> list[int]:
    spf = list(range(n + 1))
    for p in range(2, int(n ** 0.5) + 1):
        if spf[p] == p:
            for multiple in range(p * p, n + 1, p):
                if spf[multiple] == multiple:
                    spf[multiple] = p
    return spf


def count_runs_via_probability(tree: Union[WeightedTree, SyntaxTree]) -> int:
    """Run count as the inverse probability of the prefix-order run.

    That probability is the product of w(v)/(n-k+1) over the non-root
    nodes, so its inverse is (n-1)! over the product of the non-root
    weights. The quotient is formed on prime exponents, which keeps the
    pass linear and avoids dividing huge integers.
    """
    weighted = _weighted(tree)
    n = weighted.size
    if n <= 2:
        return 1
    spf = _smallest_prime_factors(n)
    exponents = [0] * (n + 1)

    def add(k: int, sign: int) -> None:
        while k > 1:
            p = spf[k]
            exponents[p] += sign
            k //= p

    for k in range(2, n):
        add(k, 1)
    for w in weighted.weights[1:]:
        add(w, -1)
    if any(e < 0 for e in exponents):
        raise RecurrenceError('run probability has a non-unit numerator', n)
    return balanced_product([p ** e for p, e in enumerate(exponents) if e])


def sample_run(tree: Union[WeightedTree, SyntaxTree], rng: Rng,
               trace: Optional[list[tuple[int, list[int]]]] = None) -> Run:
    """A uniformly random run of `tree`.

    The multiset starts with the root at weight n. Each round draws an
    enabled action, zeroes it and enables its children at their subtree
    sizes. After n-1 rounds a single unit of weight remains and the last
    action is read off without a draw. With `trace`, the total weight and
    the support after every round are recorded.
    """
    weighted = _weighted(tree)
    n = weighted.size
    pst = PartialSumTree((v, 0) for v in range(1, n + 1))
    pst.update(weighted.base.root, n)
    run = []
    for _ in range(n - 1):
        action = pst.sample(rng)
        run.append(action)
        pst.update(action, 0)
        for child in weighted.children(action):
            pst.update(child, weighted.weight(child))
        if trace is not None:
            trace.append((pst.total_weight, pst.support()))
    run.append(pst.dispatch(1))
    return Run(tuple(run))


def sample_runs(tree: Union[WeightedTree, SyntaxTree], samples: int,
                rng: Rng) -> list[Run]:
    if not 1 <= samples <= Config.MAX_SAMPLES:
        raise DomainError(f'samples must lie in 1..{Config.MAX_SAMPLES}')
    weighted = _weighted(tree)
    return [sample_run(weighted, rng) for _ in range(samples)]


def run_frequencies(runs: Iterable[Run]) -> list[tuple[tuple[int, ...], int]]:
    """Occurrences of each distinct run, sorted by run."""
    return sorted(Counter(run.nodes for run in runs).items())


def uniform_random_tree(n: int, rng: Rng) -> SyntaxTree:
    """A plane tree drawn uniformly among the catalan(n) trees of size n.

    n-1 stars and n-1 bars shuffled give a uniform composition of n-1 into
    n parts; exactly one of its n rotations is a degree word, the one
    starting right after the first minimum of the partial sums of d-1.
    """
    if n < 1:
        raise DomainError('tree size must be at least 1')
    symbols = [True] * (n - 1) + [False] * (n - 1)
    rng.shuffle(symbols)
    degrees = [0]
    for star in symbols:
        if star:
            degrees[-1] += 1
        else:
            degrees.append(0)
    walk = 0
    lowest, cut = 1, 0
    for k, d in enumerate(degrees):
        walk += d - 1
        if walk < lowest:
            lowest, cut = walk, k
    return SyntaxTree.from_degrees(degrees[cut + 1:] + degrees[:cut + 1])
