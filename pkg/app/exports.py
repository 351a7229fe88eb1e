"""Output formats shared by the command line and the HTTP blueprint."""
import csv
import io
import json
from fractions import Fraction
from typing import Any, Callable, Iterable, Optional, Sequence, Union
import mpmath
from app.cuts_profiles import cut_count_sequence, log10_count
from app.exact_counts import (asymptotic_size, catalan, geometric_mean_asymptotic,
                              geometric_mean_width, increasing_count,
                              mean_size, mean_width, nonplane_count,
                              r_sequence, stirling_mean_width)
from app.exceptions import DomainError
from app.models import (ApproxReal, LevelProfile, Run, SemanticTree,
                        SyntaxTree)
from app.run_sampling import run_step_probabilities


def format_count(count: int) -> str:
    """Full decimal, followed by a scientific form for long numbers."""
    if count < 10 ** 6:
        return str(count)
    return f'{count} (~{mpmath.nstr(mpmath.mpf(count), 4)})'


def format_ratio(value: Fraction) -> str:
    return str(value.numerator) if value.denominator == 1 else str(value)


def action_ref(tree: SyntaxTree, node: int) -> str:
    return f'{tree.label(node)}#{node}'


def _dot_escape(text: str) -> str:
    return text.replace('\\', '\\\\').replace('"', '\\"')


def tree_to_dot(tree: SyntaxTree, name: str = 'syntax') -> str:
    lines = [f'digraph {name} {{']
    for node in tree.nodes():
        lines.append(f'  {node} [label="{_dot_escape(tree.label(node))}"];')
    for node in tree.nodes():
        for child in tree.children(node):
            lines.append(f'  {node} -> {child};')
    lines.append('}')
    return '\n'.join(lines) + '\n'


def semantic_to_dot(semantic: SemanticTree, name: str = 'shuf') -> str:
    """DOT text of an explicit semantic tree; nodes are numbered in
    preorder, labels name the action together with its syntax-tree id."""
    lines = [f'digraph {name} {{']
    for node in range(1, semantic.size + 1):
        action = semantic.actions[node - 1]
        label = _dot_escape(action_ref(semantic.source, action))
        lines.append(f'  {node} [label="{label}"];')
    for node in range(1, semantic.size + 1):
        for child in semantic.children(node):
            lines.append(f'  {node} -> {child};')
    lines.append('}')
    return '\n'.join(lines) + '\n'


def profile_rows(profile: LevelProfile) -> list[dict[str, Any]]:
    return [{'level': level, 'count': count, 'log10': log10_count(count)}
            for level, count in enumerate(profile)]


def profile_csv(profile: LevelProfile) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator='\n')
    writer.writerow(['level', 'count'])
    for level, count in enumerate(profile):
        writer.writerow([level, count])
    return out.getvalue()


def profile_json(profile: LevelProfile) -> str:
    return json.dumps({'levels': profile_rows(profile),
                       'total': profile.total}, indent=2) + '\n'


def experiment_records(rows: Iterable[tuple[int, Fraction, Fraction]]
                       ) -> list[dict[str, Any]]:
    return [{'level': level, 'sample_mean': _decimal(sample, 12),
             'expected': _decimal(expected, 12),
             'ratio': float(sample / expected)}
            for level, sample, expected in rows]


def experiment_csv(rows: Iterable[tuple[int, Fraction, Fraction]]) -> str:
    out = io.StringIO()
    writer = csv.DictWriter(
        out, ['level', 'sample_mean', 'expected', 'ratio'],
        lineterminator='\n')
    writer.writeheader()
    writer.writerows(experiment_records(rows))
    return out.getvalue()


def _is_exact(value: Any) -> bool:
    return isinstance(value, (int, Fraction))


def _decimal(value: Union[Fraction, int, mpmath.mpf], digits: int = 20) -> str:
    if not _is_exact(value):
        return mpmath.nstr(value, digits)
    value = Fraction(value)
    with mpmath.workdps(digits + 10):
        return mpmath.nstr(mpmath.mpf(value.numerator) / value.denominator,
                           digits)


def sequence_csv(rows: Sequence[dict[str, Any]]) -> str:
    """Columns n, value_numerator, value_denominator, plus an asymptotic
    ratio column when the rows carry one. Approximate sequences get a
    single value_decimal column instead of the fraction."""
    with_ratio = any('ratio' in row for row in rows)
    exact = all(_is_exact(row['value']) for row in rows)
    out = io.StringIO()
    writer = csv.writer(out, lineterminator='\n')
    header = ['n', 'value_numerator', 'value_denominator'] if exact \
        else ['n', 'value_decimal']
    writer.writerow(header + ['ratio'] if with_ratio else header)
    for row in rows:
        if exact:
            value = Fraction(row['value'])
            line = [row['n'], value.numerator, value.denominator]
        else:
            line = [row['n'], _decimal(row['value'])]
        if with_ratio:
            line.append(row.get('ratio', ''))
        writer.writerow(line)
    return out.getvalue()


def sequence_records(rows: Iterable[dict[str, Any]]) -> list[dict[str, Any]]:
    records = []
    for row in rows:
        if _is_exact(row['value']):
            value = Fraction(row['value'])
            record = {'n': row['n'], 'numerator': value.numerator,
                      'denominator': value.denominator}
        else:
            record = {'n': row['n'], 'decimal': _decimal(row['value'])}
        if 'ratio' in row:
            record['ratio'] = row['ratio']
        records.append(record)
    return records


def sequence_json(name: str, rows: Sequence[dict[str, Any]]) -> str:
    return json.dumps({'sequence': name, 'terms': sequence_records(rows)},
                      indent=2) + '\n'


def run_line(tree: SyntaxTree, run: Union[Run, Sequence[int]]) -> str:
    return ' '.join(action_ref(tree, node) for node in run)


def run_record(tree: SyntaxTree, run: Union[Run, Sequence[int]]) -> dict[str, Any]:
    steps = run_step_probabilities(tree, tuple(run))
    return {'run': [action_ref(tree, node) for node in run],
            'steps': [[s.numerator, s.denominator] for s in steps]}


def run_json(tree: SyntaxTree, runs: Iterable[Run]) -> str:
    return json.dumps({'runs': [run_record(tree, run) for run in runs]},
                      indent=2) + '\n'


def _ratio(value: Union[Fraction, int, mpmath.mpf],
           approx: ApproxReal) -> float:
    with mpmath.workdps(30):
        if not _is_exact(value):
            return float(value / approx.value)
        value = Fraction(value)
        return float(mpmath.mpf(value.numerator) / value.denominator
                     / approx.value)


def _catalan_leading(n: int) -> ApproxReal:
    with mpmath.workdps(30):
        return ApproxReal(mpmath.mpf(4) ** (n - 1)
                          / mpmath.sqrt(mpmath.pi * n ** 3), mpmath.mpf(0))


def _geomean(n: int) -> mpmath.mpf:
    return geometric_mean_width(n).value


# name -> (first index, term, asymptotic form or None)
SEQUENCES: dict[str, tuple[int, Callable[[int], Any],
                           Optional[Callable[[int], ApproxReal]]]] = {
    'catalan': (1, catalan, _catalan_leading),
    'increasing': (1, increasing_count, None),
    'mean_width': (1, mean_width, stirling_mean_width),
    'mean_size': (0, mean_size, asymptotic_size),
    'm_cuts': (0, lambda n: cut_count_sequence(n)[n], None),
    'r_seq': (0, lambda n: r_sequence(n)[n], None),
    'nonplane': (1, nonplane_count, None),
    'geomean': (2, _geomean, geometric_mean_asymptotic),
}


def sequence_rows(name: str, to: int) -> list[dict[str, Any]]:
    """Terms of a named sequence from its first index up to `to`."""
    try:
        first, term, asymptotic = SEQUENCES[name]
    except KeyError:
        raise DomainError(f'unknown sequence {name!r}; choose from '
                          + ', '.join(sorted(SEQUENCES))) from None
    if to < first:
        raise DomainError(f'{name} starts at n = {first}')
    rows = []
    for n in range(first, to + 1):
        row: dict[str, Any] = {'n': n, 'value': term(n)}
        if asymptotic is not None and n >= 1:
            row['ratio'] = _ratio(row['value'], asymptotic(n))
        rows.append(row)
    return rows


def sequence_text(rows: Sequence[dict[str, Any]]) -> str:
    lines = []
    for row in rows:
        if not _is_exact(row['value']):
            line = f"{row['n']} {_decimal(row['value'])}"
        else:
            value = Fraction(row['value'])
            line = f"{row['n']} {format_ratio(value)}"
            if value.denominator != 1:
                line += f" (~{_decimal(value, 12)})"
        if 'ratio' in row:
            line += f" ratio={row['ratio']:.9f}"
        lines.append(line)
    return '\n'.join(lines) + '\n'
