from typing import Optional
from flask import Response, current_app, jsonify, request
from app.api import bp
from app.cuts_profiles import level_profile
from app.exact_counts import hook_count
from app.exceptions import DomainError
from app.exports import (format_ratio, profile_rows, run_record,
                         semantic_to_dot, sequence_records, sequence_rows)
from app.models import SyntaxTree
from app.process_core import (annotate_weights, build_semantic_tree,
                              parse_prefix, parse_process, to_term)
from app.run_sampling import (Rng, count_runs_via_probability,
                              prefix_probability, sample_runs,
                              uniform_random_tree)


def _term() -> SyntaxTree:
    text = request.args.get('term', '')
    forest = request.args.get('forest', '0') in ('1', 'true', 'yes')
    return parse_process(text, allow_forest=forest)


def _int_arg(name: str, default: Optional[int] = None) -> int:
    value = request.args.get(name, default, type=int)
    if value is None:
        raise DomainError(f'missing integer parameter {name!r}')
    return value


@bp.route('/count', methods=['GET'])
def count():
    tree = annotate_weights(_term())
    hook = hook_count(tree)
    inverse = count_runs_via_probability(tree)
    return jsonify({'size': tree.size, 'hook_length': hook,
                    'inverse_probability': inverse})


@bp.route('/probability', methods=['GET'])
def probability():
    tree = _term()
    prefix = parse_prefix(tree, request.args.get('prefix', ''))
    value = prefix_probability(tree, prefix)
    return jsonify({'prefix': list(prefix.nodes), 'fraction': format_ratio(value),
                    'numerator': value.numerator,
                    'denominator': value.denominator,
                    'decimal': float(value)})


@bp.route('/profile', methods=['GET'])
def profile():
    tree = _term()
    method = request.args.get('method', 'fast')
    limit = current_app.config['CUT_ORACLE_LIMIT'] if method == 'oracle' \
        else current_app.config['FAST_PROFILE_LIMIT']
    result = level_profile(tree, method, limit)
    return jsonify({'levels': profile_rows(result), 'total': result.total})


@bp.route('/sequence/<name>', methods=['GET'])
def sequence(name):
    rows = sequence_rows(name, _int_arg('to', 10))
    return jsonify({'sequence': name, 'terms': sequence_records(rows)})


@bp.route('/sample', methods=['GET'])
def sample():
    tree = _term()
    samples = _int_arg('samples', 1)
    if samples > current_app.config['MAX_SAMPLES']:
        raise DomainError(
            f"at most {current_app.config['MAX_SAMPLES']} samples per request")
    rng = Rng(_int_arg('seed', current_app.config['DEFAULT_SEED']))
    runs = sample_runs(tree, samples, rng)
    return jsonify({'seed': rng.seed, 'algorithm': Rng.ALGORITHM,
                    'runs': [run_record(tree, run) for run in runs]})


@bp.route('/generate', methods=['GET'])
def generate():
    size = _int_arg('size')
    rng = Rng(_int_arg('seed', current_app.config['DEFAULT_SEED']))
    tree = uniform_random_tree(size, rng)
    return jsonify({'size': size, 'seed': rng.seed, 'term': to_term(tree)})


@bp.route('/semantic', methods=['GET'])
def semantic():
    tree = _term()
    budget = _int_arg('budget', current_app.config['SEMANTIC_NODE_BUDGET'])
    dot = semantic_to_dot(build_semantic_tree(tree, budget))
    return Response(dot, mimetype='text/vnd.graphviz')
