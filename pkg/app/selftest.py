"""Invariant checks run by the `selftest` command."""
import logging
import math
from fractions import Fraction
from typing import Callable, Optional
from app.cuts_profiles import (cut_count_sequence, level_profile,
                               semantic_size)
from app.exact_counts import (catalan, hook_count, increasing_count,
                              mean_level_width, mean_size, r_sequence)
from app.models import SyntaxTree
from app.process_core import (annotate_weights, build_semantic_tree,
                              degree_sequence_of_tree, map_trees,
                              parse_process, star_tree, suspended_view,
                              tree_from_degree_sequence)
from app.run_sampling import count_runs_via_probability, prefix_probability

logger = logging.getLogger(__name__)

FIGURE_TERM = 'a.b.(c || d.(e || f))'


def check_figure() -> bool:
    tree = parse_process(FIGURE_TERM)
    weighted = annotate_weights(tree)
    return (hook_count(weighted) == 8
            and tuple(level_profile(tree)) == (1, 1, 2, 4, 8, 8)
            and semantic_size(tree) == 24
            and prefix_probability(weighted, (1, 2, 4)) == Fraction(3, 4)
            and suspended_view(weighted, (1, 2, 4)).frontier == (3, 5, 6))


def _oracle_agrees(tree: SyntaxTree) -> bool:
    semantic = build_semantic_tree(tree)
    runs = hook_count(tree)
    return (semantic.leaf_count == runs == count_runs_via_probability(tree)
            and semantic.is_balanced()
            and semantic.level_counts() == tuple(level_profile(tree))
            == tuple(level_profile(tree, 'oracle')))


def check_oracles(max_n: int, workers: Optional[int] = None) -> bool:
    return all(all(map_trees(n, _oracle_agrees, workers))
               for n in range(1, max_n + 1))


def check_sequences(max_n: int, workers: Optional[int] = None) -> bool:
    for n in range(1, max_n + 1):
        profiles = map_trees(n, lambda t: tuple(level_profile(t)), workers)
        if sum(p[-1] for p in profiles) != increasing_count(n):
            return False
        if sum(sum(p) for p in profiles) != mean_size(n) * catalan(n):
            return False
        for i in range(n):
            level = sum(p[n - 1 - i] for p in profiles)
            if level != mean_level_width(n, i) * catalan(n):
                return False
    return True


def check_recurrences(max_n: int = 20, max_cuts: int = 8) -> bool:
    same = all(mean_size(n, 'recurrence') == mean_size(n, 'exact_sum')
               for n in range(max_n + 1))
    scaled = all(r * Fraction(1, 2 ** (n - 1)) * math.factorial(n)
                 == mean_size(n)
                 for n, r in enumerate(r_sequence(max_n)) if n >= 1)
    cuts = cut_count_sequence(max_cuts, 'brute') == \
        cut_count_sequence(max_cuts, 'recurrence') == \
        cut_count_sequence(max_cuts, 'series')
    return same and scaled and cuts


def check_round_trip(max_n: int, workers: Optional[int] = None) -> bool:
    def same(tree: SyntaxTree) -> bool:
        back = tree_from_degree_sequence(degree_sequence_of_tree(tree))
        return back == tree

    return all(all(map_trees(n, same, workers)) for n in range(1, max_n + 1))


def check_magnitude() -> bool:
    return semantic_size(star_tree(40)) > 203 * 10 ** 44


def run_selftest(max_n: int = 6,
                 workers: Optional[int] = None) -> list[tuple[str, bool]]:
    """Run every check and report each one; failures are logged, not raised."""
    checks: list[tuple[str, Callable[[], bool]]] = [
        ('figure tree anchors', check_figure),
        ('semantic oracle agreement', lambda: check_oracles(max_n, workers)),
        ('sequence identities', lambda: check_sequences(max_n + 1, workers)),
        ('recurrences', check_recurrences),
        ('degree-sequence round trip',
         lambda: check_round_trip(max_n + 1, workers)),
        ('star magnitude', check_magnitude),
    ]
    results = []
    for name, check in checks:
        passed = check()
        logger.info('selftest %s: %s', name, 'ok' if passed else 'FAILED')
        results.append((name, passed))
    failures = [name for name, passed in results if not passed]
    if failures:
        logger.error('selftest failed: %s', ', '.join(failures))
    return results
