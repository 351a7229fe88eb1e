"""Syntax trees of prefixed processes and their interleaving semantics."""
import logging
from concurrent.futures import ThreadPoolExecutor
from itertools import islice
from typing import Callable, Iterator, Optional, Sequence, TypeVar, Union
from config import Config
from app.exact_counts import catalan
from app.exceptions import (DomainError, InvalidDegreeSequenceError,
                            InvalidPrefixError, InvalidTreeError,
                            LimitExceededError)
from app.models import (DegreeSequence, RunPrefix, SemanticTree,
                        SuspendedView, SyntaxTree, WeightedTree,
                        default_label)
from app.parser import parse_process, to_term

__all__ = [
    'parse_process', 'to_term', 'annotate_weights', 'contract',
    'build_semantic_tree', 'degree_sequence_of_tree',
    'tree_from_degree_sequence', 'enumerate_trees', 'suspended_view',
    'tree_to_poset', 'check_run_prefix', 'parse_prefix', 'path_tree',
    'star_tree', 'partition_range', 'map_trees', 'branch_degree_sequence',
    'default_label',
]

logger = logging.getLogger(__name__)
T = TypeVar('T')


def annotate_weights(tree: SyntaxTree) -> WeightedTree:
    return WeightedTree(tree, tree.subtree_sizes)


def path_tree(n: int) -> SyntaxTree:
    if n < 1:
        raise DomainError('a tree has at least one node')
    return SyntaxTree.from_degrees([1] * (n - 1) + [0])


def star_tree(n: int) -> SyntaxTree:
    """Root with n-1 leaf children."""
    if n < 1:
        raise DomainError('a tree has at least one node')
    return SyntaxTree.from_degrees([n - 1] + [0] * (n - 1))


def contract(tree: SyntaxTree, i: int) -> SyntaxTree:
    """The i-contraction of `tree` (1 <= i <= number of root children).

    The i-th child of the root becomes the root; its own children are
    spliced in its place among the other root children.
    """
    roots = tree.children(tree.root)
    if not roots:
        raise DomainError('a single leaf cannot be contracted')
    if not 1 <= i <= len(roots):
        raise DomainError(f'child index {i} is outside 1..{len(roots)}')
    chosen = roots[i - 1]
    labels = [tree.label(chosen)]
    children: list[list[int]] = [[]]
    # old id -> new id; copy in preorder so ids stay prefix-ordered
    new_ids: dict[int, int] = {}
    order = list(roots[:i - 1]) + list(tree.children(chosen)) + list(roots[i:])
    for top in order:
        stack = [top]
        while stack:
            node = stack.pop()
            labels.append(tree.label(node))
            children.append([])
            new_ids[node] = len(labels)
            parent = tree.parent(node)
            if node == top:
                children[0].append(new_ids[node])
            else:
                children[new_ids[parent] - 1].append(new_ids[node])
            stack.extend(reversed(tree.children(node)))
    return SyntaxTree(tuple(labels), tuple(tuple(c) for c in children))


def _frontier_after(tree: SyntaxTree, frontier: Sequence[int],
                    i: int) -> list[int]:
    # root children of the i-contraction, as ids of the original tree
    chosen = frontier[i]
    return list(frontier[:i]) + list(tree.children(chosen)) + \
        list(frontier[i + 1:])


def build_semantic_tree(tree: SyntaxTree,
                        node_budget: Optional[int] = None) -> SemanticTree:
    """Expand Shuf(tree) explicitly.

    Each semantic node keeps the list of root children of the contracted
    tree it stands for; its i-th child is the i-contraction. The expansion
    is refused when the predicted node count exceeds `node_budget`.
    """
    from app.cuts_profiles import semantic_size

    if node_budget is None:
        node_budget = Config.SEMANTIC_NODE_BUDGET
    predicted = semantic_size(tree)
    if predicted > node_budget:
        logger.warning('semantic expansion refused: %d nodes over budget %d',
                       predicted, node_budget)
        raise LimitExceededError(
            f'semantic tree would have {predicted} nodes '
            f'(budget {node_budget})', predicted)
    actions: list[int] = []
    children: list[list[int]] = []
    levels: list[int] = []
    stack: list[tuple[int, list[int], int, int]] = \
        [(tree.root, list(tree.children(tree.root)), 0, 0)]
    while stack:
        action, frontier, level, parent = stack.pop()
        actions.append(action)
        children.append([])
        levels.append(level)
        node = len(actions)
        if parent:
            children[parent - 1].append(node)
        for i in range(len(frontier) - 1, -1, -1):
            stack.append((frontier[i], _frontier_after(tree, frontier, i),
                          level + 1, node))
    return SemanticTree(tree, tuple(actions),
                        tuple(tuple(c) for c in children), tuple(levels))


def degree_sequence_of_tree(tree: SyntaxTree) -> DegreeSequence:
    """Degrees along the leftmost branch of Shuf(tree).

    The leftmost branch runs the actions in prefix order, so after the p-th
    action the number of enabled actions is u_{p-1} - 1 + deg(p).
    """
    u: list[int] = []
    enabled = 1
    for degree in tree.degrees:
        enabled += degree - 1
        u.append(enabled)
    return DegreeSequence(tuple(u))


def tree_from_degree_sequence(u: Union[DegreeSequence, Sequence[int]],
                              labels: Optional[Sequence[str]] = None
                              ) -> SyntaxTree:
    if not isinstance(u, DegreeSequence):
        u = DegreeSequence(tuple(u))
    try:
        return SyntaxTree.from_degrees(u.prefix_degrees(), labels)
    except InvalidTreeError as exc:
        raise InvalidDegreeSequenceError(str(exc), len(u.u)) from exc


def branch_degree_sequence(semantic: SemanticTree,
                           branch: Sequence[int]) -> tuple[int, ...]:
    """Degrees of the semantic nodes met along `branch` (an action order)."""
    node = 1
    degrees = []
    for action in branch[1:]:
        kids = semantic.children(node)
        degrees.append(len(kids))
        node = next(k for k in kids if semantic.actions[k - 1] == action)
    degrees.append(len(semantic.children(node)))
    return tuple(degrees)


def _degree_words(n: int) -> Iterator[tuple[int, ...]]:
    # Lukasiewicz words of length n in lexicographic order
    word: list[int] = []

    def extend(open_slots: int) -> Iterator[tuple[int, ...]]:
        position = len(word) + 1
        if position == n:
            if open_slots == 1:
                yield tuple(word) + (0,)
            return
        remaining = n - position
        for degree in range(0, remaining + 1):
            slots = open_slots - 1 + degree
            if slots < 1 or slots > remaining:
                continue
            word.append(degree)
            yield from extend(slots)
            word.pop()

    if n == 1:
        yield (0,)
        return
    yield from extend(1)


def enumerate_trees(n: int, limit: Optional[int] = None, start: int = 0,
                    stop: Optional[int] = None) -> Iterator[SyntaxTree]:
    """Every plane tree of size n once, ordered by degree word.

    `start`/`stop` select a slice of that order so that sweeps can be split
    across workers and merged back deterministically.
    """
    if limit is None:
        limit = Config.ORACLE_TREE_LIMIT
    if n < 1:
        raise DomainError('tree size must be at least 1')
    if n > limit:
        logger.warning('enumeration of size %d refused (limit %d)', n, limit)
        raise LimitExceededError(
            f'enumeration of size {n} is above the oracle limit {limit}')
    return (SyntaxTree.from_degrees(degrees)
            for degrees in islice(_degree_words(n), start, stop))


def partition_range(total: int, parts: int) -> list[tuple[int, int]]:
    parts = max(1, min(parts, total)) if total else 1
    step, extra = divmod(total, parts)
    ranges = []
    start = 0
    for k in range(parts):
        stop = start + step + (1 if k < extra else 0)
        ranges.append((start, stop))
        start = stop
    return ranges


def map_trees(n: int, func: Callable[[SyntaxTree], T],
              workers: Optional[int] = None,
              limit: Optional[int] = None) -> list[T]:
    """`func` applied to every tree of size n, in enumeration order.

    The enumeration is cut into contiguous slices, one per worker; results
    are concatenated slice by slice, so the output does not depend on the
    worker count.
    """
    if workers is None:
        workers = Config.SWEEP_WORKERS
    if limit is None:
        limit = Config.ORACLE_TREE_LIMIT
    if n > limit:
        logger.warning('sweep over size %d refused (limit %d)', n, limit)
        raise LimitExceededError(
            f'enumeration of size {n} is above the oracle limit {limit}',
            catalan(n))
    ranges = partition_range(catalan(n), workers)

    def run(bounds: tuple[int, int]) -> list[T]:
        return [func(t) for t in enumerate_trees(n, limit, *bounds)]

    if len(ranges) == 1:
        return run(ranges[0])
    logger.debug('sweeping %d trees of size %d on %d workers',
                 ranges[-1][1], n, len(ranges))
    with ThreadPoolExecutor(max_workers=len(ranges)) as pool:
        chunks = list(pool.map(run, ranges))
    return [item for chunk in chunks for item in chunk]


def check_run_prefix(tree: Union[SyntaxTree, WeightedTree],
                     prefix: Union[RunPrefix, Sequence[int]]) -> list[int]:
    """Validate a run prefix and return the enabled actions after it."""
    base = tree.base if isinstance(tree, WeightedTree) else tree
    nodes = tuple(prefix)
    if not nodes:
        raise InvalidPrefixError('a run prefix has at least one action', 1)
    if len(nodes) > base.size:
        raise InvalidPrefixError('prefix is longer than the tree',
                                 base.size + 1)
    enabled = {base.root}
    done: set[int] = set()
    for index, node in enumerate(nodes, start=1):
        if node in done:
            raise InvalidPrefixError(f'action {node} repeats', index, node)
        if node not in enabled:
            raise InvalidPrefixError(
                f'action {node} is not enabled', index, node)
        enabled.discard(node)
        done.add(node)
        enabled.update(base.children(node))
    return sorted(enabled)


def suspended_view(tree: WeightedTree,
                   prefix: Union[RunPrefix, Sequence[int]]) -> SuspendedView:
    if not isinstance(prefix, RunPrefix):
        prefix = RunPrefix(tuple(prefix))
    frontier = check_run_prefix(tree, prefix)
    return SuspendedView(tree, prefix, tuple(frontier))


def tree_to_poset(tree: SyntaxTree) -> list[tuple[int, int]]:
    return [(tree.parent(child), child) for child in tree.nodes()
            if child != tree.root]


def parse_prefix(tree: SyntaxTree, text: str) -> RunPrefix:
    """Resolve `a,b,d` or `a#1,b#2` into preorder ids."""
    nodes = []
    for index, item in enumerate(text.split(','), start=1):
        item = item.strip()
        if '#' in item:
            label, _, ident = item.partition('#')
            if not ident.isdigit() or not 1 <= int(ident) <= tree.size \
                    or tree.label(int(ident)) != label:
                raise InvalidPrefixError(f'no action {item!r}', index)
            nodes.append(int(ident))
        else:
            try:
                nodes.append(tree.node_by_label(item))
            except InvalidTreeError as exc:
                raise InvalidPrefixError(str(exc), index) from exc
    return RunPrefix(tuple(nodes))
