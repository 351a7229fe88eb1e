"""Command-line interface.

Every command reads a process term either as an argument or from a file
given with --input. Exit status: 0 on success, 1 on usage or input errors,
2 when a limit or budget would be exceeded, 3 when the self-test fails.
"""
import json
import sys
from typing import Optional, Sequence
import click
import mpmath
from config import Config
from app import __version__, configure_logging
from app.cuts_profiles import level_profile, profile_experiment
from app.exact_counts import hook_count
from app.exceptions import (InterleaveError, InvalidTreeError,
                            LimitExceededError, SelfTestFailure)
from app.exports import (experiment_csv, experiment_records,
                         format_count, format_ratio, profile_csv,
                         profile_json, run_json, run_line, semantic_to_dot,
                         sequence_csv, sequence_json, sequence_rows,
                         sequence_text, tree_to_dot)
from app.models import SyntaxTree
from app.process_core import (annotate_weights, build_semantic_tree,
                              parse_prefix, parse_process, to_term)
from app.run_sampling import (Rng, count_runs_via_probability,
                              prefix_probability, run_frequencies,
                              sample_runs, uniform_random_tree)
from app.selftest import run_selftest


def _read_tree(term: Optional[str], input_path: Optional[str],
               forest: bool) -> SyntaxTree:
    if (term is None) == (input_path is None):
        raise click.UsageError('give a TERM or --input, not both')
    if input_path is not None:
        with open(input_path, encoding='utf-8') as f:
            text = f.read()
        if text.lstrip().startswith('{'):
            try:
                return SyntaxTree.from_record(json.loads(text))
            except json.JSONDecodeError as exc:
                raise InvalidTreeError(f'malformed tree record: {exc}') from exc
            except RecursionError as exc:
                raise LimitExceededError(
                    'tree record nests too deeply to decode') from exc
        term = text
    return parse_process(term, allow_forest=forest)


def term_options(func):
    func = click.option('--forest', is_flag=True,
                        help='Accept a top-level parallel composition.')(func)
    func = click.option('--input', 'input_path',
                        type=click.Path(exists=True, dir_okay=False),
                        help='Read the term (or a JSON tree record) from a file.'
                        )(func)
    return click.argument('term', required=False)(func)


def _format_option(*choices: str):
    return click.option('--format', 'fmt', type=click.Choice(choices),
                        default=choices[0], show_default=True)


@click.group()
@click.version_option(__version__, prog_name='interleave',
                      message=f'%(prog)s %(version)s (rng {Rng.ALGORITHM})')
@click.option('--log-level', default=None,
              help='Logging level of the diagnostic stream.')
def cli(log_level):
    """Count, profile and sample the runs of prefixed processes."""
    configure_logging(log_level or Config.LOG_LEVEL, Config.LOG_TO_FILE,
                      Config.LOG_DIR)


@cli.command()
@term_options
@_format_option('text', 'json', 'dot')
def count(term, input_path, forest, fmt):
    """Number of runs, by the hook-length formula and by 1/probability."""
    tree = _read_tree(term, input_path, forest)
    weighted = annotate_weights(tree)
    hook = hook_count(weighted)
    inverse = count_runs_via_probability(weighted)
    if hook != inverse:
        raise InterleaveError(f'run counts disagree: {hook} != {inverse}')
    if fmt == 'json':
        click.echo(json.dumps({'size': tree.size, 'hook_length': hook,
                               'inverse_probability': inverse}))
    elif fmt == 'dot':
        click.echo(tree_to_dot(tree), nl=False)
    else:
        click.echo(format_count(hook))
        click.echo(f'inverse probability: {format_count(inverse)}')


@cli.command()
@term_options
@click.option('--prefix', required=True,
              help='Comma-separated actions, as labels or label#id.')
@_format_option('text', 'json')
def prob(term, input_path, forest, prefix, fmt):
    """Probability that a uniform run starts with a prefix."""
    tree = _read_tree(term, input_path, forest)
    nodes = parse_prefix(tree, prefix)
    value = prefix_probability(tree, nodes)
    with mpmath.workdps(20):
        decimal = mpmath.nstr(mpmath.mpf(value.numerator) / value.denominator,
                              15)
    if fmt == 'json':
        click.echo(json.dumps({'numerator': value.numerator,
                               'denominator': value.denominator,
                               'decimal': decimal}))
    else:
        click.echo(format_ratio(value))
        click.echo(decimal)


@cli.command()
@term_options
@click.option('--samples', default=1, show_default=True, type=int)
@click.option('--seed', default=Config.DEFAULT_SEED, show_default=True,
              type=int)
@click.option('--frequencies', is_flag=True,
              help='Print a table of run frequencies instead of the runs.')
@_format_option('text', 'json')
def sample(term, input_path, forest, samples, seed, frequencies, fmt):
    """Uniformly random runs."""
    tree = _read_tree(term, input_path, forest)
    runs = sample_runs(tree, samples, Rng(seed))
    if fmt == 'json':
        click.echo(run_json(tree, runs), nl=False)
    elif frequencies:
        for run, hits in run_frequencies(runs):
            click.echo(f'{hits} {hits / samples:.6f} {run_line(tree, run)}')
    else:
        for run in runs:
            click.echo(run_line(tree, run))


@cli.command()
@term_options
@click.option('--oracle', is_flag=True,
              help='Count through the admissible-cut enumeration.')
@_format_option('text', 'csv', 'json')
def profile(term, input_path, forest, oracle, fmt):
    """Number of semantic-tree nodes per level, root first."""
    tree = _read_tree(term, input_path, forest)
    result = level_profile(tree, 'oracle' if oracle else 'fast')
    if fmt == 'csv':
        click.echo(profile_csv(result), nl=False)
    elif fmt == 'json':
        click.echo(profile_json(result), nl=False)
    else:
        for level, nodes in enumerate(result):
            click.echo(f'{level} {format_count(nodes)}')
        click.echo(f'total {format_count(result.total)}')


@cli.command()
@click.option('--size', required=True, type=int)
@click.option('--trees', default=50, show_default=True, type=int)
@click.option('--seed', default=Config.DEFAULT_SEED, show_default=True,
              type=int)
@click.option('--long-run', is_flag=True,
              help=f'Allow sizes up to {Config.LONG_RUN_SIZE_LIMIT}.')
@_format_option('text', 'csv', 'json')
def experiment(size, trees, seed, long_run, fmt):
    """Average profile of random trees against the exact mean profile."""
    rows = profile_experiment(size, trees, Rng(seed), long_run)
    if fmt == 'csv':
        click.echo(experiment_csv(rows), nl=False)
    elif fmt == 'json':
        click.echo(json.dumps({'size': size, 'trees': trees, 'seed': seed,
                               'levels': experiment_records(rows)},
                              indent=2))
    else:
        for record in experiment_records(rows):
            click.echo(f"{record['level']} {record['sample_mean']} "
                       f"{record['expected']} ratio={record['ratio']:.4f}")


@cli.command()
@term_options
@click.option('--budget', default=Config.SEMANTIC_NODE_BUDGET,
              show_default=True, type=int)
def semantic(term, input_path, forest, budget):
    """DOT export of the explicit semantic tree."""
    tree = _read_tree(term, input_path, forest)
    click.echo(semantic_to_dot(build_semantic_tree(tree, budget)), nl=False)


@cli.command()
@click.argument('name')
@click.option('--to', 'upto', default=10, show_default=True, type=int)
@_format_option('text', 'csv', 'json')
def seq(name, upto, fmt):
    """Terms of a named sequence: catalan, increasing, mean_width,
    mean_size, m_cuts, r_seq, nonplane or geomean."""
    rows = sequence_rows(name, upto)
    if fmt == 'csv':
        click.echo(sequence_csv(rows), nl=False)
    elif fmt == 'json':
        click.echo(sequence_json(name, rows), nl=False)
    else:
        click.echo(sequence_text(rows), nl=False)


@cli.command()
@click.option('--size', required=True, type=int)
@click.option('--seed', default=Config.DEFAULT_SEED, show_default=True,
              type=int)
@_format_option('text', 'json')
def gen(size, seed, fmt):
    """Uniformly random syntax tree, printed as a term."""
    tree = uniform_random_tree(size, Rng(seed))
    if fmt == 'json':
        click.echo(json.dumps({'size': size, 'seed': seed,
                               'term': to_term(tree),
                               'tree': tree.to_record()}))
    else:
        click.echo(to_term(tree))


@cli.command()
@click.option('--max-n', default=6, show_default=True, type=int)
@click.option('--workers', default=Config.SWEEP_WORKERS, show_default=True,
              type=int)
def selftest(max_n, workers):
    """Run the invariant checks at desk scale."""
    results = run_selftest(max_n, workers)
    for name, passed in results:
        click.echo(f"{'ok' if passed else 'FAILED'} {name}")
    failures = [name for name, passed in results if not passed]
    if failures:
        raise SelfTestFailure(failures)


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        status = cli.main(args=list(argv) if argv is not None else None,
                          prog_name='interleave', standalone_mode=False)
    except click.ClickException as exc:
        exc.show()
        return 1
    except click.Abort:
        return 1
    except LimitExceededError as exc:
        click.echo(f'error: {exc}', err=True)
        return 2
    except RecursionError:
        click.echo('error: input nests too deeply', err=True)
        return 2
    except SelfTestFailure as exc:
        click.echo(f'error: {exc}: {", ".join(exc.failures)}', err=True)
        return 3
    except InterleaveError as exc:
        click.echo(f'error: {exc}', err=True)
        return 1
    except OSError as exc:
        click.echo(f'error: {exc}', err=True)
        return 1
    return status if isinstance(status, int) else 0


if __name__ == '__main__':
    sys.exit(main())
