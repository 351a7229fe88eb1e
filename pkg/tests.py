#!/usr/bin/env python
import contextlib
import io
import json
import math
import os
import tempfile
import time
import unittest
from collections import Counter
from fractions import Fraction
from unittest import mock

import mpmath
from click.testing import CliRunner
from hypothesis import given, settings
from hypothesis.strategies import integers, lists, tuples
from scipy.stats import chi2_contingency, chisquare

from app import create_app
from app.cli import cli, main
from app.cuts_profiles import (count_admissible_cuts, cut_count_sequence,
                               enumerate_admissible_cuts, level_profile,
                               limit_profile, log10_count, mean_profile,
                               profile_experiment, semantic_size,
                               tail_mass_fraction, LIMIT_PROFILE_K)
from app.exact_counts import (asymptotic_size, catalan, catalan_power_coeff,
                              cumulative_level_width, cumulative_size,
                              estimate_eta, geometric_mean_asymptotic,
                              geometric_mean_width, hook_count,
                              increasing_count, level_bounds_check,
                              log_constant_L, mean_level_width, mean_size,
                              mean_size_leading, mean_width, nonplane_asymptotic_width,
                              nonplane_count, nonplane_mean_width, r_sequence,
                              stirling_mean_width)
from app.exceptions import (DomainError, EmptyMultisetError,
                            InvalidDegreeSequenceError, InvalidPrefixError,
                            LimitExceededError, PrecisionError,
                            ProcessSyntaxError, UnknownElementError)
from app.exports import (format_count, sequence_csv, sequence_records,
                         sequence_rows)
from app.models import DegreeSequence, SyntaxTree
from app.process_core import (annotate_weights, branch_degree_sequence,
                              build_semantic_tree, check_run_prefix, contract,
                              degree_sequence_of_tree, enumerate_trees,
                              map_trees, parse_prefix, parse_process,
                              partition_range, path_tree, star_tree,
                              suspended_view, to_term,
                              tree_from_degree_sequence, tree_to_poset)
from app.run_sampling import (PartialSumTree, Rng, count_runs_via_probability,
                              naive_sample, prefix_probability,
                              run_frequencies, run_step_probabilities,
                              sample_run, sample_runs, uniform_random_tree)
from app.selftest import run_selftest
from config import Config

FIGURE = 'a.b.(c || d.(e || f))'


class TestConfig(Config):
    TESTING = True


def as_mpf(value):
    value = Fraction(value)
    return mpmath.mpf(value.numerator) / value.denominator


def nonplane_key(tree):
    keys = {}
    for node in range(tree.size, 0, -1):
        keys[node] = '(' + ''.join(sorted(keys[c] for c in tree.children(node))) + ')'
    return keys[1]


class ParserCase(unittest.TestCase):
    def test_figure_tree(self):
        tree = parse_process(FIGURE)
        self.assertEqual(tree.labels, ('a', 'b', 'c', 'd', 'e', 'f'))
        self.assertEqual(tree.degrees, (1, 2, 0, 2, 0, 0))
        self.assertEqual(to_term(tree), FIGURE)

    def test_single_action(self):
        tree = parse_process('  go  ')
        self.assertEqual(tree.size, 1)
        self.assertEqual(to_term(tree), 'go')

    def test_error_positions(self):
        cases = {'': 0, 'a.(b': 4, 'a..b': 2, 'a || b': 2, '#root': 0,
                 'a.(b || )': 8, 'a b': 2}
        for text, position in cases.items():
            with self.assertRaises(ProcessSyntaxError) as ctx:
                parse_process(text)
            self.assertEqual(ctx.exception.position, position, text)

    def test_forest(self):
        tree = parse_process('a || b.c', allow_forest=True)
        self.assertEqual(tree.label(1), '#root')
        self.assertEqual(tree.children(1), (2, 3))
        self.assertEqual(to_term(tree), 'a || b.c')
        self.assertEqual(parse_process('a.b', allow_forest=True).size, 2)

    def test_long_chain_does_not_recurse(self):
        term = '.'.join(f'x{k}' for k in range(5000))
        tree = parse_process(term)
        self.assertEqual(tree.size, 5000)
        self.assertEqual(to_term(tree), term)

    def test_deep_nesting_does_not_recurse(self):
        depth = 5000
        term = ''.join(f'a{k}.(b{k} || ' for k in range(depth)) + 'z' \
            + ')' * depth
        tree = parse_process(term)
        self.assertEqual(tree.size, 2 * depth + 1)
        self.assertEqual(tree.height, depth)
        self.assertEqual(to_term(tree), term)

    def test_groups_close_in_order(self):
        tree = parse_process('a.(b.(c || d) || e.f)')
        self.assertEqual(tree.degrees, (2, 2, 0, 0, 1, 0))
        self.assertEqual(tree.label(5), 'e')
        with self.assertRaises(ProcessSyntaxError) as ctx:
            parse_process('a.(b.(c || d) || e')
        self.assertEqual(ctx.exception.position, 18)

    @settings(max_examples=60, deadline=None)
    @given(integers(1, 40), integers(0, 2 ** 32))
    def test_print_then_parse(self, n, seed):
        tree = uniform_random_tree(n, Rng(seed))
        self.assertEqual(parse_process(to_term(tree)), tree)

    def test_record_round_trip(self):
        tree = parse_process(FIGURE)
        self.assertEqual(SyntaxTree.from_record(tree.to_record()), tree)

    def test_deep_records_are_refused(self):
        with self.assertRaises(LimitExceededError) as ctx:
            path_tree(2000).to_record()
        self.assertEqual(ctx.exception.predicted, 1999)
        record = {'label': 'a'}
        for _ in range(Config.RECORD_DEPTH_LIMIT + 1):
            record = {'label': 'a', 'children': [record]}
        with self.assertRaises(LimitExceededError):
            SyntaxTree.from_record(record)
        deepest = path_tree(Config.RECORD_DEPTH_LIMIT + 1)
        self.assertEqual(SyntaxTree.from_record(deepest.to_record()), deepest)


class ProcessCoreCase(unittest.TestCase):
    def setUp(self):
        self.tree = parse_process(FIGURE)
        self.weighted = annotate_weights(self.tree)

    def test_weights(self):
        self.assertEqual(self.weighted.weights, (6, 5, 1, 3, 1, 1))

    def test_contract(self):
        tree = parse_process('a.(b || c.(e || f) || d)')
        contracted = contract(tree, 2)
        self.assertEqual(contracted.label(1), 'c')
        self.assertEqual([contracted.label(v) for v in contracted.children(1)],
                         ['b', 'e', 'f', 'd'])
        self.assertEqual(to_term(contracted), 'c.(b || e || f || d)')
        self.assertEqual(to_term(contract(self.tree, 1)), 'b.(c || d.(e || f))')
        self.assertEqual(to_term(contract(parse_process('a.b'), 1)), 'b')

    def test_contract_drops_one_node(self):
        for n in range(2, 8):
            for tree in enumerate_trees(n):
                for i in range(1, tree.degree(1) + 1):
                    contracted = contract(tree, i)
                    self.assertEqual(contracted.size, n - 1)
                    self.assertEqual(contracted.label(1),
                                     tree.label(tree.children(1)[i - 1]))

    def test_contract_errors(self):
        with self.assertRaises(DomainError):
            contract(parse_process('a'), 1)
        with self.assertRaises(DomainError):
            contract(self.tree, 0)
        with self.assertRaises(DomainError):
            contract(self.tree, 2)

    def test_semantic_tree(self):
        semantic = build_semantic_tree(self.tree)
        self.assertEqual(semantic.size, 24)
        self.assertEqual(semantic.level_counts(), (1, 1, 2, 4, 8, 8))
        self.assertEqual(semantic.leaf_count, 8)
        self.assertEqual(semantic.height, 5)
        self.assertTrue(semantic.is_balanced())

    def test_semantic_budget(self):
        with self.assertLogs('app.process_core', 'WARNING'):
            with self.assertRaises(LimitExceededError) as ctx:
                build_semantic_tree(self.tree, node_budget=10)
        self.assertEqual(ctx.exception.predicted, 24)

    def test_runs_are_linear_extensions(self):
        for n in range(1, 8):
            for tree in enumerate_trees(n):
                runs = list(build_semantic_tree(tree).runs())
                self.assertEqual(len(set(runs)), hook_count(tree))
                for run in runs:
                    position = {v: k for k, v in enumerate(run)}
                    self.assertEqual(sorted(run), list(tree.nodes()))
                    for parent, child in tree_to_poset(tree):
                        self.assertLess(position[parent], position[child])

    def test_run_sets_determine_the_tree(self):
        for n in range(1, 7):
            keys = {frozenset(build_semantic_tree(t).runs())
                    for t in enumerate_trees(n)}
            self.assertEqual(len(keys), catalan(n))

    def test_degree_sequences(self):
        self.assertEqual(degree_sequence_of_tree(self.tree).u,
                         (1, 2, 1, 2, 1, 0))
        self.assertEqual(degree_sequence_of_tree(parse_process('a')).u, (0,))
        self.assertEqual(degree_sequence_of_tree(path_tree(3)).u, (1, 1, 0))
        self.assertEqual(tree_from_degree_sequence((2, 1, 1, 0)).degrees,
                         (2, 0, 1, 0))
        self.assertEqual(tree_from_degree_sequence((1, 2, 1, 2, 1, 0)).degrees,
                         self.tree.degrees)

    def test_invalid_degree_sequences(self):
        cases = {(1, 0, 1, 0): 2, (1, 3, 0): 3, (0, 0): 1, (2, 1): 2,
                 (1,): 1, (): 0}
        for u, index in cases.items():
            with self.assertRaises(InvalidDegreeSequenceError) as ctx:
                DegreeSequence(u)
            self.assertEqual(ctx.exception.index, index, u)

    def test_leftmost_branch_degrees(self):
        for tree in enumerate_trees(6):
            semantic = build_semantic_tree(tree)
            self.assertEqual(
                branch_degree_sequence(semantic, next(semantic.runs())),
                degree_sequence_of_tree(tree).u)

    def test_degree_round_trip_exhaustive(self):
        for n in range(1, 10):
            for tree in enumerate_trees(n):
                u = degree_sequence_of_tree(tree)
                self.assertEqual(tree_from_degree_sequence(u), tree)
                self.assertEqual(u.prefix_degrees(), tree.degrees)

    @settings(max_examples=60, deadline=None)
    @given(integers(1, 60), integers(0, 2 ** 32))
    def test_degree_round_trip(self, n, seed):
        tree = uniform_random_tree(n, Rng(seed))
        u = degree_sequence_of_tree(tree)
        self.assertEqual(tree_from_degree_sequence(u), tree)

    def test_enumeration(self):
        self.assertEqual(len(list(enumerate_trees(3))), 2)
        for n in range(1, 11):
            shapes = {t.structure() for t in enumerate_trees(n)}
            self.assertEqual(len(shapes), catalan(n))
        with self.assertRaises(LimitExceededError):
            enumerate_trees(13)
        with self.assertRaises(DomainError):
            enumerate_trees(0)

    def test_sweep_does_not_depend_on_workers(self):
        self.assertEqual(partition_range(10, 3), [(0, 4), (4, 7), (7, 10)])
        serial = map_trees(6, hook_count, workers=1)
        self.assertEqual(map_trees(6, hook_count, workers=3), serial)
        self.assertEqual(sum(serial), increasing_count(6))

    def test_suspended_view(self):
        self.assertEqual(suspended_view(self.weighted, (1, 2, 4)).frontier,
                         (3, 5, 6))
        self.assertEqual(suspended_view(self.weighted, (1,)).frontier, (2,))
        self.assertEqual(suspended_view(self.weighted, (1, 2, 3, 4, 5, 6)).frontier,
                         ())

    def test_invalid_prefix(self):
        with self.assertRaises(InvalidPrefixError) as ctx:
            check_run_prefix(self.tree, (1, 3))
        self.assertEqual((ctx.exception.index, ctx.exception.node), (2, 3))
        with self.assertRaises(InvalidPrefixError):
            check_run_prefix(self.tree, (1, 2, 2))
        with self.assertRaises(InvalidPrefixError):
            check_run_prefix(self.tree, ())

    def test_poset(self):
        self.assertEqual(tree_to_poset(self.tree),
                         [(1, 2), (2, 3), (2, 4), (4, 5), (4, 6)])

    def test_parse_prefix(self):
        self.assertEqual(parse_prefix(self.tree, 'a, b, d').nodes, (1, 2, 4))
        twins = parse_process('a.(b || b)')
        self.assertEqual(parse_prefix(twins, 'a,b#3').nodes, (1, 3))
        with self.assertRaises(InvalidPrefixError):
            parse_prefix(twins, 'a,b')
        with self.assertRaises(InvalidPrefixError):
            parse_prefix(twins, 'a,b#1')


class ExactCountsCase(unittest.TestCase):
    def test_catalan(self):
        self.assertEqual([catalan(n) for n in range(1, 7)], [1, 1, 2, 5, 14, 42])
        with self.assertRaises(DomainError):
            catalan(0)
        with mpmath.workdps(30):
            scaled = catalan(20) * mpmath.sqrt(mpmath.pi * 20 ** 3) / \
                mpmath.mpf(4) ** 19
        self.assertAlmostEqual(float(scaled), 1 + 3 / 160, delta=1e-3)

    def test_hook_count(self):
        self.assertEqual(hook_count(parse_process(FIGURE)), 8)
        self.assertEqual(hook_count(path_tree(7)), 1)
        self.assertEqual(hook_count(star_tree(5)), 24)
        self.assertEqual([increasing_count(n) for n in (1, 3, 5)], [1, 3, 105])
        for n in range(1, 10):
            self.assertEqual(sum(map_trees(n, hook_count)), increasing_count(n))

    def test_mean_width(self):
        self.assertEqual(mean_width(3), Fraction(3, 2))
        self.assertEqual(mean_width(6), Fraction(45, 2))
        for n in range(1, 31):
            self.assertEqual(mean_width(n),
                             Fraction(increasing_count(n), catalan(n)))
        with mpmath.workdps(30):
            ratio = as_mpf(mean_width(40)) / stirling_mean_width(40).value
        self.assertLess(abs(ratio - 1), 0.01)

    def test_mean_level_width(self):
        self.assertEqual(mean_level_width(6, 2), Fraction(25, 2))
        self.assertEqual(mean_level_width(6, 0), mean_width(6))
        self.assertEqual(mean_level_width(6, 5), 1)
        with self.assertRaises(DomainError):
            mean_level_width(6, 6)
        for n in range(1, 10):
            profiles = map_trees(n, level_profile)
            for i in range(n):
                level = sum(p.from_leaves(i) for p in profiles)
                self.assertEqual(level, mean_level_width(n, i) * catalan(n))
                self.assertEqual(level, cumulative_level_width(n, i))

    def test_cumulative_level_width(self):
        for n in range(1, 13):
            for i in range(n):
                self.assertEqual(cumulative_level_width(n, i),
                                 mean_level_width(n, i) * catalan(n))

    def test_catalan_power_coeff(self):
        self.assertEqual(catalan_power_coeff(1, 1), 1)
        self.assertEqual(catalan_power_coeff(3, 2), 14)
        for n in range(1, 21):
            self.assertEqual(catalan_power_coeff(n, 1), catalan(n + 1))
        with self.assertRaises(DomainError):
            catalan_power_coeff(0, 1)

    def test_level_bounds(self):
        self.assertTrue(level_bounds_check(50, 3))
        for i in range(15):
            self.assertTrue(level_bounds_check(100, i))
        with self.assertRaises(DomainError):
            level_bounds_check(8, 4)

    def test_mean_size(self):
        self.assertEqual([mean_size(n) for n in range(4)], [0, 1, 2, 4])
        for n in range(31):
            self.assertEqual(mean_size(n), mean_size(n, 'exact_sum'))
        for n in range(1, 10):
            self.assertEqual(sum(map_trees(n, semantic_size)), cumulative_size(n))
        with self.assertRaises(DomainError):
            mean_size(-1)

    def test_normalised_size(self):
        r = r_sequence(60)
        self.assertEqual(r[:4], [0, 1, 2, Fraction(8, 3)])
        for n in range(1, 31):
            self.assertEqual(r[n] * math.factorial(n) / 2 ** (n - 1),
                             mean_size(n))
        e = mpmath.e
        self.assertTrue(e < as_mpf(r[30]) < e + 0.05)
        self.assertLess(abs(as_mpf(r[60]) - e), abs(as_mpf(r[30]) - e))

    def test_size_asymptotics(self):
        with mpmath.workdps(40):
            def deviation(n):
                return abs(as_mpf(mean_size(n)) / asymptotic_size(n).value - 1)

            self.assertLess(deviation(30), 1e-3)
            self.assertLess(deviation(60), deviation(30))
            leading = as_mpf(mean_size(30)) / mean_size_leading(30).value - 1
        self.assertTrue(0.5 / 90 <= leading <= 2 / 90)

    def test_geometric_mean(self):
        self.assertEqual(float(geometric_mean_width(2)), 1.0)
        self.assertAlmostEqual(float(geometric_mean_width(3)), math.sqrt(2),
                               places=12)
        for n in range(3, 10):
            logs = map_trees(n, lambda t: math.log(hook_count(t)))
            brute = math.exp(math.fsum(logs) / catalan(n))
            self.assertAlmostEqual(float(geometric_mean_width(n)) / brute, 1,
                                   delta=1e-9)

    def test_geometric_mean_asymptotic_trend(self):
        def deviation(n):
            exact = mpmath.log(geometric_mean_width(n).value)
            return abs(mpmath.log(geometric_mean_asymptotic(n).value) / exact - 1)

        self.assertLess(deviation(400), deviation(100))

    def test_log_constant(self):
        L = log_constant_L()
        self.assertTrue(L.certified)
        self.assertLessEqual(L.error, 1e-6)
        self.assertTrue(L.contains(0.5790439217))
        self.assertLess(abs(L.value - 0.5790439217), 1e-8)
        direct = log_constant_L(direct_terms=10 ** 5)
        self.assertLess(direct.value, L.value)
        self.assertLessEqual(L.value - direct.value, direct.error + L.error)
        self.assertLess(log_constant_L(direct_terms=1000).value, L.value)
        with self.assertRaises(DomainError):
            log_constant_L(1e-9)

    def test_log_constant_direct_sum(self):
        direct = log_constant_L(direct_terms=3 * 10 ** 7)
        L = log_constant_L()
        self.assertLess(abs(direct.value - L.value), 2e-3)
        self.assertLessEqual(L.value - direct.value, direct.error + L.error)
        with self.assertRaises(DomainError):
            log_constant_L(direct_terms=Config.L_DIRECT_LIMIT + 1)

    def test_log_constant_term_limit(self):
        with mock.patch.object(Config, 'L_TERM_LIMIT', 1024):
            with self.assertRaises(PrecisionError):
                log_constant_L(2e-7)

    def test_nonplane(self):
        self.assertEqual([nonplane_count(n) for n in range(1, 10)],
                         [1, 1, 2, 4, 9, 20, 48, 115, 286])
        for n in range(1, 9):
            shapes = {nonplane_key(t) for t in enumerate_trees(n)}
            self.assertEqual(len(shapes), nonplane_count(n))
        self.assertEqual(nonplane_mean_width(4), Fraction(3, 2))
        self.assertEqual(nonplane_mean_width(1), 1)

    def test_nonplane_asymptotics(self):
        eta = estimate_eta(400)
        self.assertAlmostEqual(float(eta), 0.3383218, delta=1e-3)
        with mpmath.workdps(40):
            def deviation(n):
                return abs(as_mpf(nonplane_mean_width(n))
                           / nonplane_asymptotic_width(n).value - 1)

            self.assertLess(deviation(200), deviation(50))


class CutsProfilesCase(unittest.TestCase):
    def setUp(self):
        self.tree = parse_process(FIGURE)

    def test_figure_cuts(self):
        cuts = list(enumerate_admissible_cuts(self.tree))
        self.assertEqual(len(cuts), 11)
        self.assertEqual(count_admissible_cuts(self.tree), 11)
        self.assertEqual(cuts[0].size, 6)
        self.assertEqual(cuts[-1].source_ids, (1,))
        by_size = Counter()
        for cut in cuts:
            by_size[cut.size] += cut.labellings
        self.assertEqual([by_size[k] for k in range(1, 7)], [1, 1, 2, 4, 8, 8])

    def test_cut_counts(self):
        self.assertEqual(count_admissible_cuts(parse_process('a')), 1)
        self.assertEqual(count_admissible_cuts(path_tree(5)), 5)
        self.assertEqual(len(list(enumerate_admissible_cuts(star_tree(6)))), 32)
        with self.assertRaises(LimitExceededError) as ctx:
            enumerate_admissible_cuts(star_tree(19))
        self.assertEqual(ctx.exception.predicted, 2 ** 18)

    def test_profiles(self):
        self.assertEqual(tuple(level_profile(self.tree)), (1, 1, 2, 4, 8, 8))
        self.assertEqual(tuple(level_profile(self.tree, 'oracle')),
                         (1, 1, 2, 4, 8, 8))
        self.assertEqual(tuple(level_profile(path_tree(5))), (1,) * 5)
        self.assertEqual(tuple(level_profile(star_tree(4))), (1, 3, 6, 6))
        with self.assertRaises(DomainError):
            level_profile(self.tree, 'guess')

    def test_profile_methods_agree(self):
        for n in range(1, 8):
            for tree in enumerate_trees(n):
                fast = level_profile(tree)
                self.assertEqual(fast, level_profile(tree, 'oracle'))
                self.assertEqual(tuple(fast),
                                 build_semantic_tree(tree).level_counts())
                self.assertEqual(fast[0], 1)
                self.assertEqual(fast[-1], hook_count(tree))
                self.assertEqual(list(fast), sorted(fast))

    def test_semantic_size(self):
        self.assertEqual(semantic_size(self.tree), 24)
        self.assertEqual(semantic_size(parse_process('a')), 1)
        star = semantic_size(star_tree(40))
        self.assertGreater(star, 203 * 10 ** 44)
        self.assertGreater(log10_count(star), 46.3)
        self.assertTrue(format_count(star).endswith('e+46)'))

    def test_cut_count_sequence(self):
        self.assertEqual(cut_count_sequence(5), [0, 1, 2, 7, 29, 131])
        brute = cut_count_sequence(10, 'brute')
        self.assertEqual(brute, cut_count_sequence(10, 'recurrence'))
        self.assertEqual(brute, cut_count_sequence(10, 'series'))
        self.assertEqual(cut_count_sequence(20, 'recurrence'),
                         cut_count_sequence(20, 'series'))
        with self.assertRaises(LimitExceededError):
            cut_count_sequence(11, 'brute')

    def test_mean_profile(self):
        profile = mean_profile(6)
        self.assertEqual(profile[0], 1)
        self.assertEqual(profile[-1], mean_width(6))
        self.assertEqual(sum(profile), mean_size(6))

    def test_tail_mass(self):
        self.assertEqual(tail_mass_fraction(12, 12), 1)
        self.assertGreater(tail_mass_fraction(30, 4), tail_mass_fraction(10, 3))
        with self.assertRaises(DomainError):
            tail_mass_fraction(10, 0)

    def test_limit_profile(self):
        def exact_log(n, i):
            return mpmath.log(as_mpf(mean_level_width(n, i)))

        with mpmath.workdps(30):
            for c, n in ((0.5, 200), (0.3, 400), (0.2, 500)):
                residual = abs(limit_profile(c, n).value
                               - exact_log(n, round(c * n)))
                self.assertLess(residual, LIMIT_PROFILE_K / (c * (1 - c) * n))
            coarse = abs(limit_profile(0.3, 100).value - exact_log(100, 30))
            fine = abs(limit_profile(0.3, 400).value - exact_log(400, 120))
            self.assertLess(fine, coarse)
            values = [limit_profile(c / 10, 1000).value for c in range(1, 10)]
        self.assertEqual(values, sorted(values, reverse=True))
        with self.assertRaises(DomainError):
            limit_profile(0.001, 100)


    def test_profile_experiment(self):
        rows = profile_experiment(6, 2000, Rng(5))
        self.assertEqual([level for level, _, _ in rows], list(range(6)))
        self.assertEqual(tuple(expected for _, _, expected in rows),
                         mean_profile(6))
        self.assertEqual(rows[0][1], 1)
        for _, sample, expected in rows:
            self.assertAlmostEqual(float(sample / expected), 1, delta=0.15)
        self.assertEqual(rows, profile_experiment(6, 2000, Rng(5)))

    def test_profile_experiment_sizes(self):
        with self.assertRaises(LimitExceededError):
            profile_experiment(Config.EXPERIMENT_SIZE_LIMIT + 1, 1, Rng(1))
        rows = profile_experiment(Config.LONG_RUN_SIZE_LIMIT, 2, Rng(1),
                                  long_run=True)
        self.assertEqual(len(rows), Config.LONG_RUN_SIZE_LIMIT)
        with self.assertRaises(LimitExceededError):
            profile_experiment(Config.LONG_RUN_SIZE_LIMIT + 1, 1, Rng(1),
                               long_run=True)
        with self.assertRaises(DomainError):
            profile_experiment(5, 0, Rng(1))


class PartialSumTreeCase(unittest.TestCase):
    def test_root_sums(self):
        pst = PartialSumTree([('a', 8), ('b', 4), ('c', 9), ('d', 4),
                              ('f', 1), ('e', 8)])
        self.assertEqual((pst.left[0], pst.weights[0], pst.right[0]),
                         (9, 8, 17))
        self.assertEqual(pst.total_weight, 34)
        self.assertEqual(pst.depth, 3)
        self.assertTrue(pst.audit())

    def test_exact_dispatch(self):
        pst = PartialSumTree([('a', 2), ('b', 3), ('c', 1)])
        hits = Counter(pst.dispatch(rho) for rho in range(1, 7))
        self.assertEqual(hits, {'a': 2, 'b': 3, 'c': 1})
        pst.update('a', 0)
        hits = Counter(pst.dispatch(rho) for rho in range(1, 5))
        self.assertEqual(hits, {'b': 3, 'c': 1})
        self.assertEqual(pst.support(), ['b', 'c'])
        with self.assertRaises(DomainError):
            pst.dispatch(5)

    def test_sampling_frequencies(self):
        pst = PartialSumTree([('a', 2), ('b', 3), ('c', 1)])
        rng = Rng(11)
        draws = 100000
        hits = Counter(pst.sample(rng) for _ in range(draws))
        for element, weight in (('a', 2), ('b', 3), ('c', 1)):
            self.assertAlmostEqual(hits[element] / draws, weight / 6, delta=0.01)
        pst.update('a', 0)
        hits = Counter(pst.sample(rng) for _ in range(draws))
        self.assertNotIn('a', hits)

    def test_edge_cases(self):
        empty = PartialSumTree()
        self.assertEqual(empty.total_weight, 0)
        with self.assertRaises(EmptyMultisetError):
            empty.sample(Rng(1))
        single = PartialSumTree([('x', 5)])
        self.assertEqual((single.total_weight, single.depth), (5, 1))
        self.assertEqual(single.sample(Rng(1)), 'x')
        with self.assertRaises(DomainError):
            PartialSumTree([('x', 1), ('x', 2)])
        with self.assertRaises(DomainError):
            PartialSumTree([('x', -1)])
        with self.assertRaises(UnknownElementError):
            single.update('y', 1)
        with self.assertRaises(KeyError):
            single.weight('y')

    def test_update_touches_one_path(self):
        pst = PartialSumTree((k, 1) for k in range(1024))
        for k in range(1024):
            pst.update(k, 2)
            self.assertLessEqual(pst.touched, 11)
        self.assertEqual(pst.total_weight, 2048)

    def test_audit_after_random_operations(self):
        rng = Rng(3)
        pst = PartialSumTree((k, rng.randint(0, 9)) for k in range(100))
        for _ in range(10000):
            if pst.total_weight and rng.randint(0, 1):
                pst.sample(rng)
            else:
                pst.update(rng.randint(0, 99), rng.randint(0, 50))
        self.assertTrue(pst.audit())
        self.assertEqual(pst.total_weight, sum(pst.weights))

    @settings(max_examples=50, deadline=None)
    @given(lists(tuples(integers(0, 15), integers(0, 50)), max_size=200))
    def test_updates_keep_sums(self, operations):
        pst = PartialSumTree((k, 1) for k in range(16))
        for element, weight in operations:
            pst.update(element, weight)
        self.assertTrue(pst.audit())
        self.assertEqual(pst.total_weight, sum(pst.weights))

    def test_naive_sampler_agrees(self):
        entries = [(1, 5), (2, 1), (3, 7), (4, 3)]
        pst = PartialSumTree(entries)
        draws = 40000
        tree_rng, flat_rng = Rng(21), Rng(22)
        tree_hits = Counter(pst.sample(tree_rng) for _ in range(draws))
        flat_hits = Counter(naive_sample(entries, flat_rng) for _ in range(draws))
        table = [[tree_hits[e] for e, _ in entries],
                 [flat_hits[e] for e, _ in entries]]
        self.assertGreater(chi2_contingency(table)[1], 0.001)

    def test_naive_limits(self):
        with self.assertRaises(EmptyMultisetError):
            naive_sample([(1, 0)], Rng(1))
        with self.assertRaises(LimitExceededError):
            naive_sample([(1, 6), (2, 5)], Rng(1), limit=10)


class RngCase(unittest.TestCase):
    def test_reproducible(self):
        first = [Rng(5).randint(1, 100) for _ in range(3)]
        rng_a, rng_b = Rng(5), Rng(5)
        self.assertEqual([rng_a.randint(1, 10 ** 30) for _ in range(20)],
                         [rng_b.randint(1, 10 ** 30) for _ in range(20)])
        self.assertEqual(len(set(first)), 1)
        self.assertEqual(Rng().seed, Config.DEFAULT_SEED)

    def test_bounds(self):
        rng = Rng(9)
        values = [rng.randint(3, 5) for _ in range(1000)]
        self.assertEqual(set(values), {3, 4, 5})
        big = 2 ** 200
        self.assertTrue(all(0 <= rng.randint(0, big) <= big for _ in range(100)))
        with self.assertRaises(DomainError):
            rng.randint(3, 2)

    def test_spawn(self):
        self.assertEqual(Rng(5).spawn(1).seed, Rng(5).spawn(1).seed)
        self.assertNotEqual(Rng(5).spawn(0).seed, Rng(5).spawn(1).seed)
        self.assertIn('rejection', Rng.ALGORITHM)


class RunSamplingCase(unittest.TestCase):
    def setUp(self):
        self.tree = parse_process(FIGURE)
        self.weighted = annotate_weights(self.tree)

    def test_prefix_probability(self):
        self.assertEqual(prefix_probability(self.tree, (1,)), 1)
        self.assertEqual(prefix_probability(self.tree, (1, 2, 4)),
                         Fraction(3, 4))
        self.assertEqual(prefix_probability(self.tree, (1, 2, 3, 4, 5, 6)),
                         Fraction(1, 8))
        self.assertEqual(run_step_probabilities(self.tree, (1, 2, 4)),
                         [1, 1, Fraction(3, 4)])
        with self.assertRaises(InvalidPrefixError) as ctx:
            prefix_probability(self.tree, (1, 3))
        self.assertEqual(ctx.exception.index, 2)

    def test_children_probabilities_sum_to_parent(self):
        for run in build_semantic_tree(self.tree).runs():
            for p in range(1, len(run)):
                prefix = run[:p]
                parent = prefix_probability(self.weighted, prefix)
                frontier = suspended_view(self.weighted, prefix).frontier
                total = sum(prefix_probability(self.weighted, prefix + (x,))
                            for x in frontier)
                self.assertEqual(total, parent)

    def test_every_run_equally_likely(self):
        for n in range(1, 7):
            for tree in enumerate_trees(n):
                expected = Fraction(1, hook_count(tree))
                for run in build_semantic_tree(tree).runs():
                    self.assertEqual(math.prod(run_step_probabilities(tree, run)),
                                     expected)

    def test_one_step_per_action(self):
        tree = uniform_random_tree(50, Rng(7))
        run = sample_run(tree, Rng(8))
        for p in range(1, 51):
            steps = []
            prefix_probability(tree, run.nodes[:p], steps)
            self.assertEqual(len(steps), p - 1)

    def test_inverse_probability_count(self):
        for n in range(1, 10):
            for tree in enumerate_trees(n):
                self.assertEqual(count_runs_via_probability(tree),
                                 hook_count(tree))
        medium = uniform_random_tree(300, Rng(4))
        self.assertEqual(count_runs_via_probability(medium), hook_count(medium))

    def test_inverse_probability_count_large_tree(self):
        tree = uniform_random_tree(10 ** 5, Rng(1))
        started = time.perf_counter()
        count = count_runs_via_probability(tree)
        self.assertLess(time.perf_counter() - started, 10)
        self.assertGreater(count, 1)

    def test_sampled_runs_are_uniform(self):
        samples = 80000
        runs = sample_runs(self.tree, samples, Rng(2012))
        frequencies = run_frequencies(runs)
        self.assertEqual(len(frequencies), 8)
        for run, hits in frequencies:
            self.assertEqual(prefix_probability(self.tree, run), Fraction(1, 8))
            self.assertAlmostEqual(hits / samples, 1 / 8, delta=0.01)
        observed = [hits for _, hits in frequencies]
        self.assertGreater(chisquare(observed)[1], 0.001)

    def test_sampling_is_reproducible(self):
        self.assertEqual(sample_runs(self.tree, 20, Rng(5)),
                         sample_runs(self.tree, 20, Rng(5)))
        with self.assertRaises(DomainError):
            sample_runs(self.tree, 0, Rng(5))

    def test_trace(self):
        trace = []
        run = sample_run(self.tree, Rng(6), trace)
        self.assertEqual(len(trace), self.tree.size - 1)
        for p, (total, support) in enumerate(trace, start=1):
            self.assertEqual(total, self.tree.size - p)
            self.assertEqual(support, check_run_prefix(self.tree, run.nodes[:p]))

    def test_path_has_one_run(self):
        self.assertEqual(sample_run(path_tree(5), Rng(1)).nodes, (1, 2, 3, 4, 5))
        self.assertEqual(sample_run(parse_process('a'), Rng(1)).nodes, (1,))

    def test_uniform_random_tree(self):
        self.assertEqual(uniform_random_tree(1, Rng(1)).size, 1)
        with self.assertRaises(DomainError):
            uniform_random_tree(0, Rng(1))
        rng = Rng(14)
        draws = 140000
        hits = Counter(uniform_random_tree(5, rng).degrees for _ in range(draws))
        self.assertEqual(set(hits), {t.degrees for t in enumerate_trees(5)})
        for count in hits.values():
            self.assertAlmostEqual(count / draws, 1 / 14, delta=0.01)
        self.assertGreater(chisquare(list(hits.values()))[1], 0.001)


class SequenceExportCase(unittest.TestCase):
    def test_rows(self):
        rows = sequence_rows('catalan', 5)
        self.assertEqual([r['value'] for r in rows], [1, 1, 2, 5, 14])
        self.assertTrue(all('ratio' in r for r in rows))
        self.assertEqual([r['value'] for r in sequence_rows('mean_size', 3)],
                         [0, 1, 2, 4])
        with self.assertRaises(DomainError):
            sequence_rows('nope', 3)
        with self.assertRaises(DomainError):
            sequence_rows('geomean', 1)

    def test_approximate_sequence_exports_decimals(self):
        rows = sequence_rows('geomean', 4)
        self.assertEqual(sequence_csv(rows).splitlines()[0],
                         'n,value_decimal,ratio')
        records = sequence_records(rows)
        self.assertNotIn('numerator', records[1])
        self.assertAlmostEqual(float(records[1]['decimal']),
                               float(rows[1]['value']), places=12)
        exact = sequence_csv(sequence_rows('catalan', 3)).splitlines()
        self.assertEqual(exact[0], 'n,value_numerator,value_denominator,ratio')
        self.assertTrue(exact[-1].startswith('3,2,1,'))

    def test_format_count(self):
        self.assertEqual(format_count(999999), '999999')
        self.assertEqual(format_count(10 ** 6), '1000000 (~1.0e+6)')


class CliCase(unittest.TestCase):
    def setUp(self):
        self.runner = CliRunner()

    def invoke(self, *args):
        result = self.runner.invoke(cli, list(args))
        self.assertEqual(result.exit_code, 0, result.output)
        return result.stdout.splitlines()

    def run_main(self, *args):
        out, err = io.StringIO(), io.StringIO()
        with contextlib.redirect_stdout(out), contextlib.redirect_stderr(err):
            status = main(list(args))
        return status, out.getvalue(), err.getvalue()

    def test_count(self):
        self.assertEqual(self.invoke('count', FIGURE),
                         ['8', 'inverse probability: 8'])
        record = json.loads(self.invoke('count', FIGURE, '--format', 'json')[0])
        self.assertEqual(record['hook_length'], 8)

    def test_count_from_file(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, 'tree.json')
            with open(path, 'w', encoding='utf-8') as f:
                json.dump(parse_process(FIGURE).to_record(), f)
            self.assertEqual(self.invoke('count', '--input', path)[0], '8')

    def test_prob(self):
        self.assertEqual(self.invoke('prob', FIGURE, '--prefix', 'a,b,d'),
                         ['3/4', '0.75'])

    def test_seq(self):
        lines = self.invoke('seq', 'mean_size', '--to', '2')
        self.assertEqual([line.split()[1] for line in lines], ['0', '1', '2'])
        csv_lines = self.invoke('seq', 'catalan', '--to', '3', '--format', 'csv')
        self.assertEqual(csv_lines[0], 'n,value_numerator,value_denominator,ratio')

    def test_profile(self):
        lines = self.invoke('profile', FIGURE)
        self.assertEqual(lines[-1], 'total 24')
        csv_lines = self.invoke('profile', FIGURE, '--oracle', '--format', 'csv')
        self.assertEqual(csv_lines[0], 'level,count')
        self.assertEqual(csv_lines[-1], '5,8')

    def test_sample_and_gen_are_reproducible(self):
        first = self.invoke('sample', FIGURE, '--samples', '5', '--seed', '3')
        self.assertEqual(len(first), 5)
        self.assertEqual(first, self.invoke('sample', FIGURE, '--samples', '5',
                                            '--seed', '3'))
        term = self.invoke('gen', '--size', '7', '--seed', '3')[0]
        self.assertEqual(parse_process(term).size, 7)

    def test_json_output_is_reproducible(self):
        args = ['sample', FIGURE, '--samples', '20', '--seed', '11',
                '--format', 'json']
        first = self.runner.invoke(cli, args)
        self.assertEqual(first.exit_code, 0, first.output)
        self.assertEqual(first.stdout, self.runner.invoke(cli, args).stdout)
        self.assertEqual(len(json.loads(first.stdout)['runs']), 20)
        gen = ['gen', '--size', '30', '--seed', '4', '--format', 'json']
        record = json.loads(self.runner.invoke(cli, gen).stdout)
        self.assertEqual(self.runner.invoke(cli, gen).stdout,
                         json.dumps(record) + '\n')
        self.assertEqual(SyntaxTree.from_record(record['tree']),
                         parse_process(record['term']))

    def test_deep_trees_exit_with_limit_status(self):
        with mock.patch.object(Config, 'RECORD_DEPTH_LIMIT', 10):
            status, out, err = self.run_main('gen', '--size', '2000',
                                             '--seed', '1', '--format', 'json')
        self.assertEqual(status, 2)
        self.assertIn('too deep', err)
        depth = 3000
        text = '{"label": "a", "children": [' * depth + '{"label": "a"}' \
            + ']}' * depth
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, 'deep.json')
            with open(path, 'w', encoding='utf-8') as f:
                f.write(text)
            self.assertEqual(self.run_main('count', '--input', path)[0], 2)

    def test_experiment(self):
        lines = self.invoke('experiment', '--size', '5', '--trees', '20',
                            '--seed', '2')
        self.assertEqual(len(lines), 5)
        self.assertEqual(lines[0], '0 1.0 1.0 ratio=1.0000')
        csv_lines = self.invoke('experiment', '--size', '5', '--trees', '3',
                                '--format', 'csv')
        self.assertEqual(csv_lines[0], 'level,sample_mean,expected,ratio')
        self.assertEqual(self.run_main('experiment', '--size', '30')[0], 2)
        self.assertEqual(self.run_main('experiment', '--size', '30',
                                       '--trees', '1', '--long-run')[0], 0)

    def test_semantic(self):
        lines = self.invoke('semantic', FIGURE)
        self.assertEqual(lines[0], 'digraph shuf {')

    def test_exit_codes(self):
        self.assertEqual(self.run_main('count', FIGURE)[0], 0)
        self.assertEqual(self.run_main('count', 'a ||')[0], 1)
        self.assertEqual(self.run_main('count')[0], 1)
        self.assertEqual(self.run_main('seq', 'nope')[0], 1)
        status, _, err = self.run_main('semantic', FIGURE, '--budget', '10')
        self.assertEqual(status, 2)
        self.assertIn('24', err)
        status, out, _ = self.run_main('--version')
        self.assertEqual(status, 0)
        self.assertIn(Rng.ALGORITHM, out)

    def test_selftest(self):
        status, out, _ = self.run_main('selftest', '--max-n', '4')
        self.assertEqual(status, 0)
        self.assertTrue(all(line.startswith('ok ') for line in out.splitlines()))
        results = [('figure tree anchors', True), ('recurrences', False),
                   ('star magnitude', True)]
        with mock.patch('app.cli.run_selftest', return_value=results):
            status, out, err = self.run_main('selftest')
        self.assertEqual(status, 3)
        self.assertEqual(out.splitlines(), ['ok figure tree anchors',
                                            'FAILED recurrences',
                                            'ok star magnitude'])
        self.assertIn('recurrences', err)

    def test_selftest_function(self):
        results = run_selftest(max_n=4)
        self.assertTrue(all(passed for _, passed in results))


class ApiCase(unittest.TestCase):
    def setUp(self):
        self.app = create_app(TestConfig)
        self.app_context = self.app.app_context()
        self.app_context.push()
        self.client = self.app.test_client()

    def tearDown(self):
        self.app_context.pop()

    def test_count(self):
        response = self.client.get('/api/count', query_string={'term': FIGURE})
        self.assertEqual(response.status_code, 200)
        self.assertEqual(response.get_json()['hook_length'], 8)

    def test_probability(self):
        response = self.client.get('/api/probability',
                                   query_string={'term': FIGURE,
                                                 'prefix': 'a,b,d'})
        data = response.get_json()
        self.assertEqual(data['fraction'], '3/4')
        self.assertEqual(data['prefix'], [1, 2, 4])

    def test_profile(self):
        response = self.client.get('/api/profile',
                                   query_string={'term': FIGURE,
                                                 'method': 'oracle'})
        data = response.get_json()
        self.assertEqual([row['count'] for row in data['levels']],
                         [1, 1, 2, 4, 8, 8])
        self.assertEqual(data['total'], 24)

    def test_sequence(self):
        response = self.client.get('/api/sequence/catalan?to=5')
        terms = response.get_json()['terms']
        self.assertEqual([t['numerator'] for t in terms], [1, 1, 2, 5, 14])

    def test_sample_and_generate(self):
        query = {'term': FIGURE, 'samples': 3, 'seed': 4}
        first = self.client.get('/api/sample', query_string=query).get_json()
        second = self.client.get('/api/sample', query_string=query).get_json()
        self.assertEqual(first, second)
        self.assertEqual(len(first['runs']), 3)
        data = self.client.get('/api/generate?size=9&seed=2').get_json()
        self.assertEqual(parse_process(data['term']).size, 9)

    def test_errors(self):
        response = self.client.get('/api/semantic',
                                   query_string={'term': FIGURE, 'budget': 10})
        self.assertEqual(response.status_code, 413)
        self.assertEqual(response.get_json()['error'], 'limit')
        self.assertEqual(response.headers['X-Predicted-Size'], '24')
        response = self.client.get('/api/count', query_string={'term': 'a ||'})
        self.assertEqual(response.status_code, 400)
        self.assertEqual(response.get_json()['error'], 'syntax')
        response = self.client.get('/api/generate')
        self.assertEqual(response.status_code, 400)
        response = self.client.get('/api/nowhere')
        self.assertEqual(response.status_code, 404)
        self.assertEqual(response.get_json()['error'], 'not-found')

    def test_semantic_dot(self):
        response = self.client.get('/api/semantic', query_string={'term': FIGURE})
        self.assertEqual(response.mimetype, 'text/vnd.graphviz')
        self.assertTrue(response.get_data(as_text=True).startswith('digraph'))


if __name__ == '__main__':
    unittest.main(verbosity=2)
