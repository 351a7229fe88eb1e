import os
from dotenv import load_dotenv

basedir = os.path.abspath(os.path.dirname(__file__))
load_dotenv(os.path.join(basedir, '.env'))


def _int_env(name: str, default: int) -> int:
    value = os.environ.get(name)
    return int(value) if value else default


class Config:
    SECRET_KEY = os.environ.get('SECRET_KEY') or 'this-is-a-test-secret-key'

    ORACLE_TREE_LIMIT = _int_env('ORACLE_TREE_LIMIT', 12)
    SEMANTIC_NODE_BUDGET = _int_env('SEMANTIC_NODE_BUDGET', 10 ** 6)
    CUT_ORACLE_LIMIT = _int_env('CUT_ORACLE_LIMIT', 18)
    CUT_BRUTE_LIMIT = _int_env('CUT_BRUTE_LIMIT', 10)
    FAST_PROFILE_LIMIT = _int_env('FAST_PROFILE_LIMIT', 5000)
    NAIVE_ARRAY_LIMIT = _int_env('NAIVE_ARRAY_LIMIT', 10 ** 7)
    L_TERM_LIMIT = _int_env('L_TERM_LIMIT', 2 ** 22)
    L_DIRECT_LIMIT = _int_env('L_DIRECT_LIMIT', 5 * 10 ** 7)
    # json encodes and decodes nested records recursively
    RECORD_DEPTH_LIMIT = _int_env('RECORD_DEPTH_LIMIT', 400)
    EXPERIMENT_SIZE_LIMIT = _int_env('EXPERIMENT_SIZE_LIMIT', 25)
    LONG_RUN_SIZE_LIMIT = _int_env('LONG_RUN_SIZE_LIMIT', 40)

    DEFAULT_SEED = _int_env('DEFAULT_SEED', 20120901)
    SWEEP_WORKERS = _int_env('SWEEP_WORKERS', 1)
    MAX_SAMPLES = _int_env('MAX_SAMPLES', 10 ** 6)

    LOG_LEVEL = os.environ.get('LOG_LEVEL') or 'INFO'
    LOG_TO_FILE = os.environ.get('LOG_TO_FILE') is not None
    LOG_DIR = os.environ.get('LOG_DIR') or 'logs'
