"""Immutable value types; trees are stored flat in preorder, ids 1-based."""
from dataclasses import dataclass
from functools import cached_property
from typing import Any, Iterator, Optional, Sequence, Union
import re
import mpmath
from config import Config
from app.exceptions import (InvalidTreeError, InvalidDegreeSequenceError,
                            LimitExceededError)

ROOT_LABEL = '#root'
IDENTIFIER = re.compile(r'[A-Za-z_][A-Za-z0-9_]*')


def default_label(k: int) -> str:
    """Canonical label of the k-th node (1-based): a, b, ..., z, aa, ab, ..."""
    letters = ''
    while k > 0:
        k, r = divmod(k - 1, 26)
        letters = chr(ord('a') + r) + letters
    return letters


@dataclass(frozen=True)
class SyntaxTree:
    labels: tuple[str, ...]
    child_ids: tuple[tuple[int, ...], ...]

    def __post_init__(self) -> None:
        n = len(self.labels)
        if n == 0:
            raise InvalidTreeError('a syntax tree has at least one node')
        if len(self.child_ids) != n:
            raise InvalidTreeError('one child list is needed per node')
        expected = 1
        stack = [1]
        while stack:
            node = stack.pop()
            if node != expected:
                raise InvalidTreeError(
                    f'node {node} is out of prefix-traversal order')
            expected += 1
            for child in reversed(self.child_ids[node - 1]):
                if not 1 <= child <= n:
                    raise InvalidTreeError(f'unknown child id {child}')
                stack.append(child)
        if expected != n + 1:
            raise InvalidTreeError('the nodes do not form a single rooted tree')

    def __repr__(self) -> str:
        return f'<SyntaxTree size={self.size} {self.structure()}>'

    @classmethod
    def from_degrees(cls, degrees: Sequence[int],
                     labels: Optional[Sequence[str]] = None) -> 'SyntaxTree':
        """Build the tree whose prefix-traversal degrees are `degrees`."""
        n = len(degrees)
        if n == 0:
            raise InvalidTreeError('empty degree word')
        if labels is None:
            labels = [default_label(k) for k in range(1, n + 1)]
        elif len(labels) != n:
            raise InvalidTreeError('one label is needed per degree')
        children: list[list[int]] = [[] for _ in range(n)]
        open_nodes: list[list[int]] = []
        for node, degree in enumerate(degrees, start=1):
            if degree < 0:
                raise InvalidTreeError(f'negative degree at node {node}')
            if node > 1:
                if not open_nodes:
                    raise InvalidTreeError(
                        f'degree word closes before node {node}')
                slot = open_nodes[-1]
                children[slot[0] - 1].append(node)
                slot[1] -= 1
                if slot[1] == 0:
                    open_nodes.pop()
            if degree:
                open_nodes.append([node, degree])
        if open_nodes:
            raise InvalidTreeError('degree word leaves children unfilled')
        return cls(tuple(labels), tuple(tuple(c) for c in children))

    @classmethod
    def from_record(cls, record: dict[str, Any]) -> 'SyntaxTree':
        """Import the nested `{"label": ..., "children": [...]}` format."""
        limit = Config.RECORD_DEPTH_LIMIT
        labels: list[str] = []
        children: list[list[int]] = []
        stack: list[tuple[Any, int, int]] = [(record, 0, 0)]
        while stack:
            item, parent, depth = stack.pop()
            if depth > limit:
                raise LimitExceededError(
                    f'tree record nests deeper than {limit} levels')
            if not isinstance(item, dict) or 'label' not in item:
                raise InvalidTreeError('each record needs a "label" field')
            label = item['label']
            reserved = label == ROOT_LABEL and parent == 0
            if not isinstance(label, str) or \
                    not (reserved or IDENTIFIER.fullmatch(label)):
                raise InvalidTreeError(f'invalid action label {label!r}')
            labels.append(label)
            children.append([])
            node = len(labels)
            if parent:
                children[parent - 1].append(node)
            kids = item.get('children', [])
            if not isinstance(kids, list):
                raise InvalidTreeError('"children" must be a list')
            for kid in reversed(kids):
                stack.append((kid, node, depth + 1))
        return cls(tuple(labels), tuple(tuple(c) for c in children))

    def to_record(self) -> dict[str, Any]:
        """Export the nested record format; JSON codecs recurse on it."""
        limit = Config.RECORD_DEPTH_LIMIT
        if self.height > limit:
            raise LimitExceededError(
                f'tree of height {self.height} is too deep for a nested '
                f'record (limit {limit})', self.height)
        records = [{'label': label, 'children': []} for label in self.labels]
        for node in self.nodes():
            for child in self.children(node):
                records[node - 1]['children'].append(records[child - 1])
        return records[0]

    @property
    def size(self) -> int:
        return len(self.labels)

    @property
    def root(self) -> int:
        return 1

    def nodes(self) -> range:
        return range(1, self.size + 1)

    def label(self, node: int) -> str:
        return self.labels[node - 1]

    def children(self, node: int) -> tuple[int, ...]:
        return self.child_ids[node - 1]

    def degree(self, node: int) -> int:
        return len(self.child_ids[node - 1])

    def is_leaf(self, node: int) -> bool:
        return not self.child_ids[node - 1]

    @cached_property
    def degrees(self) -> tuple[int, ...]:
        return tuple(len(c) for c in self.child_ids)

    @cached_property
    def parents(self) -> tuple[int, ...]:
        parents = [0] * self.size
        for node in self.nodes():
            for child in self.children(node):
                parents[child - 1] = node
        return tuple(parents)

    @cached_property
    def height(self) -> int:
        depths = [0] * self.size
        for node in self.nodes():
            for child in self.children(node):
                depths[child - 1] = depths[node - 1] + 1
        return max(depths)

    @cached_property
    def subtree_sizes(self) -> tuple[int, ...]:
        # children carry larger ids than their parent
        sizes = [1] * self.size
        for node in range(self.size, 0, -1):
            for child in self.children(node):
                sizes[node - 1] += sizes[child - 1]
        return tuple(sizes)

    def parent(self, node: int) -> int:
        """Parent id, 0 for the root."""
        return self.parents[node - 1]

    def subtree(self, node: int) -> 'SyntaxTree':
        """T(node), re-indexed; a subtree is a contiguous preorder range."""
        offset = node - 1
        stop = offset + self.subtree_sizes[offset]
        return SyntaxTree(
            self.labels[offset:stop],
            tuple(tuple(c - offset for c in kids)
                  for kids in self.child_ids[offset:stop]))

    def node_by_label(self, label: str) -> int:
        matches = [v for v in self.nodes() if self.label(v) == label]
        if not matches:
            raise InvalidTreeError(f'no action labelled {label!r}')
        if len(matches) > 1:
            raise InvalidTreeError(
                f'label {label!r} is ambiguous: use one of '
                + ', '.join(f'{label}#{v}' for v in matches))
        return matches[0]

    def structure(self) -> str:
        """Label-free canonical form, e.g. `(()(()))`."""
        out: list[str] = []
        remaining: list[int] = []
        for degree in self.degrees:
            out.append('(')
            if degree:
                remaining.append(degree)
                continue
            out.append(')')
            while remaining:
                remaining[-1] -= 1
                if remaining[-1]:
                    break
                remaining.pop()
                out.append(')')
        return ''.join(out)

    def same_shape(self, other: 'SyntaxTree') -> bool:
        return self.degrees == other.degrees


@dataclass(frozen=True)
class WeightedTree:
    """A syntax tree whose nodes carry the size of their subtree."""

    base: SyntaxTree
    weights: tuple[int, ...]

    def __post_init__(self) -> None:
        if len(self.weights) != self.base.size:
            raise InvalidTreeError('one weight is needed per node')

    @property
    def size(self) -> int:
        return self.base.size

    def weight(self, node: int) -> int:
        return self.weights[node - 1]

    def children(self, node: int) -> tuple[int, ...]:
        return self.base.children(node)

    def label(self, node: int) -> str:
        return self.base.label(node)


@dataclass(frozen=True)
class DegreeSequence:
    u: tuple[int, ...]

    def __post_init__(self) -> None:
        u = self.u
        n = len(u)
        if n == 0:
            raise InvalidDegreeSequenceError('empty degree sequence', 0)
        for p, value in enumerate(u, start=1):
            if value < 0:
                raise InvalidDegreeSequenceError('negative term', p)
        if n == 1:
            if u[0] != 0:
                raise InvalidDegreeSequenceError(
                    'a sequence of length 1 must be (0)', 1)
            return
        if u[0] <= 0:
            raise InvalidDegreeSequenceError('first term must be positive', 1)
        for p in range(2, n + 1):
            if u[p - 1] < u[p - 2] - 1:
                raise InvalidDegreeSequenceError(
                    f'term drops by more than one after prefix {u[:p - 1]}', p)
            if p < n and u[p - 1] == 0:
                raise InvalidDegreeSequenceError(
                    f'prefix {u[:p]} closes before the end', p)
        if u[-1] != 0:
            raise InvalidDegreeSequenceError('last term must be 0', n)

    def prefix_degrees(self) -> tuple[int, ...]:
        u = self.u
        return (u[0],) + tuple(u[p] - u[p - 1] + 1 for p in range(1, len(u)))


@dataclass(frozen=True)
class RunPrefix:
    """Preorder ids of the actions executed so far, in execution order."""

    nodes: tuple[int, ...]

    def __len__(self) -> int:
        return len(self.nodes)

    def __iter__(self) -> Iterator[int]:
        return iter(self.nodes)


class Run(RunPrefix):
    """A run prefix covering the whole syntax tree."""


@dataclass(frozen=True)
class SuspendedView:
    source: WeightedTree
    prefix: RunPrefix
    frontier: tuple[int, ...]

    @property
    def root(self) -> int:
        return self.prefix.nodes[-1]

    @property
    def degree(self) -> int:
        return len(self.frontier)


@dataclass(frozen=True)
class SemanticTree:
    """Explicit interleaving tree; node `k` runs action `actions[k - 1]`."""

    source: SyntaxTree
    actions: tuple[int, ...]
    child_ids: tuple[tuple[int, ...], ...]
    levels: tuple[int, ...]

    @property
    def size(self) -> int:
        return len(self.actions)

    @property
    def height(self) -> int:
        return max(self.levels)

    def label(self, node: int) -> str:
        return self.source.label(self.actions[node - 1])

    def children(self, node: int) -> tuple[int, ...]:
        return self.child_ids[node - 1]

    @cached_property
    def leaf_count(self) -> int:
        return sum(1 for kids in self.child_ids if not kids)

    def level_counts(self) -> tuple[int, ...]:
        counts = [0] * (self.height + 1)
        for level in self.levels:
            counts[level] += 1
        return tuple(counts)

    def is_balanced(self) -> bool:
        depth = self.source.size - 1
        return all(self.levels[k] == depth
                   for k, kids in enumerate(self.child_ids) if not kids)

    def runs(self) -> Iterator[tuple[int, ...]]:
        """Branches from left to right, as sequences of syntax-tree ids."""
        path: list[int] = []
        stack: list[tuple[int, int]] = [(1, 0)]
        while stack:
            node, level = stack.pop()
            del path[level:]
            path.append(self.actions[node - 1])
            kids = self.children(node)
            if not kids:
                yield tuple(path)
            for child in reversed(kids):
                stack.append((child, level + 1))


@dataclass(frozen=True)
class AdmissibleCut:
    """Prefix-closed part of a syntax tree sharing its root."""

    shape: SyntaxTree
    source_ids: tuple[int, ...]
    labellings: int

    @property
    def size(self) -> int:
        return self.shape.size


@dataclass(frozen=True)
class LevelProfile:
    """Node counts of a semantic tree per depth; index 0 is the root."""

    counts: tuple[int, ...]

    def __len__(self) -> int:
        return len(self.counts)

    def __getitem__(self, level: int) -> int:
        return self.counts[level]

    def __iter__(self) -> Iterator[int]:
        return iter(self.counts)

    @property
    def total(self) -> int:
        return sum(self.counts)

    def from_leaves(self, i: int) -> int:
        """Count at level n-1-i, the indexing used by the level formulas."""
        return self.counts[len(self.counts) - 1 - i]


@dataclass(frozen=True)
class ApproxReal:
    """A high-precision value with an error bound.

    `certified` tells whether `error` is a proven enclosure or only an
    estimate of the truncation error.
    """

    value: mpmath.mpf
    error: mpmath.mpf
    certified: bool = False

    def __float__(self) -> float:
        return float(self.value)

    @property
    def lower(self) -> mpmath.mpf:
        return self.value - self.error

    @property
    def upper(self) -> mpmath.mpf:
        return self.value + self.error

    def contains(self, x: Union[float, mpmath.mpf]) -> bool:
        return self.lower <= x <= self.upper
