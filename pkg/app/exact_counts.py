"""Exact counting of runs, sizes and widths of semantic trees.

`catalan(n)` counts plane trees with n nodes: catalan(1) = catalan(2) = 1.
"""
import logging
import math
import threading
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Optional, Sequence, Union
import mpmath
from config import Config
from app.exceptions import DomainError, PrecisionError, RecurrenceError
from app.models import ApproxReal, SyntaxTree, WeightedTree

logger = logging.getLogger(__name__)

# growth constants of unlabelled non-plane rooted trees
ETA = mpmath.mpf('0.3383218')
GAMMA = mpmath.mpf('1.559490')

Coefficients = Callable[[int], Sequence[int]]


class RecurrenceCache:
    """Terms of a linear recurrence with polynomial coefficients.

    `coefficients(k)` returns `(c_0, ..., c_r)` with
    `c_0 x_k + ... + c_r x_{k+r} = 0`; terms are produced forward from the
    initial values and kept. Extension is guarded by a lock so that readers
    on other threads always see a consistent prefix.
    """

    def __init__(self, name: str, initial: Sequence[Union[int, Fraction]],
                 coefficients: Coefficients, integral: bool = False) -> None:
        self.name = name
        self.coefficients = coefficients
        self.integral = integral
        self._values = [Fraction(x) for x in initial]
        self._lock = threading.Lock()

    def __repr__(self) -> str:
        return f'<RecurrenceCache {self.name} known={len(self._values)}>'

    def _step(self) -> Fraction:
        order = len(self.coefficients(0)) - 1
        k = len(self._values) - order
        coeffs = self.coefficients(k)
        if coeffs[-1] == 0:
            raise RecurrenceError(
                f'{self.name}: leading coefficient vanishes', k + order)
        total = sum(c * x for c, x in zip(coeffs, self._values[k:]))
        value = Fraction(-total, coeffs[-1])
        if self.integral and value.denominator != 1:
            raise RecurrenceError(
                f'{self.name}: non-integral term {value}', k + order)
        return value

    def terms(self, n: int) -> list[Fraction]:
        """x_0 .. x_n."""
        if n < 0:
            raise DomainError('sequence index must be non-negative')
        with self._lock:
            while len(self._values) <= n:
                self._values.append(self._step())
            return self._values[:n + 1]

    def __getitem__(self, n: int) -> Fraction:
        return self.terms(n)[n]


def _mean_size_coefficients(k: int) -> tuple[int, int, int, int]:
    return (2*k**4 + 12*k**3 + 22*k**2 + 12*k,
            -(4*k**4 + 32*k**3 + 87*k**2 + 87*k + 18),
            2*k**4 + 24*k**3 + 85*k**2 + 106*k + 39,
            -(4*k**3 + 20*k**2 + 31*k + 15))


def _r_coefficients(k: int) -> tuple[int, int, int, int]:
    return (-16*k,
            4 * (4*k**2 + 12*k + 3),
            -2 * (2*k**3 + 18*k**2 + 31*k + 13),
            4*k**3 + 20*k**2 + 31*k + 15)


MEAN_SIZE_TERMS = RecurrenceCache('mean size', (0, 1, 2),
                                  _mean_size_coefficients)
R_TERMS = RecurrenceCache('normalised mean size', (0, 1, 2), _r_coefficients)


def balanced_product(values: Sequence[int]) -> int:
    """Product of many integers, multiplied pairwise to keep operands even."""
    items = list(values)
    if not items:
        return 1
    while len(items) > 1:
        paired = [items[k] * items[k + 1] for k in range(0, len(items) - 1, 2)]
        if len(items) % 2:
            paired.append(items[-1])
        items = paired
    return items[0]


def _require_positive(n: int) -> None:
    if n < 1:
        raise DomainError(f'n must be at least 1, got {n}')


@lru_cache(maxsize=None)
def catalan(n: int) -> int:
    _require_positive(n)
    return math.comb(2 * n - 2, n - 1) // n


def increasing_count(n: int) -> int:
    """Increasing plane trees of size n: 1 * 3 * ... * (2n - 3)."""
    _require_positive(n)
    return math.factorial(2 * n - 2) // (2 ** (n - 1) * math.factorial(n - 1))


def hook_count(tree: Union[WeightedTree, SyntaxTree]) -> int:
    """Number of runs of `tree`: n! over the product of subtree sizes."""
    weights = tree.weights if isinstance(tree, WeightedTree) \
        else tree.subtree_sizes
    return math.factorial(len(weights)) // balanced_product(weights)


def mean_width(n: int) -> Fraction:
    _require_positive(n)
    return Fraction(math.factorial(n), 2 ** (n - 1))


def _check_level(n: int, i: int) -> None:
    _require_positive(n)
    if not 0 <= i <= n - 1:
        raise DomainError(f'level {i} is outside 0..{n - 1}')


def _level_factor(n: int, i: int) -> Fraction:
    # mean level width divided by n!/(2^(n-1) i!)
    f = math.factorial
    return Fraction(2 ** i * f(2*n - 2*i - 1) * f(n - 1),
                    f(2*n - i - 1) * f(n - i - 1))


def mean_level_width(n: int, i: int) -> Fraction:
    """Mean number of semantic-tree nodes at level n-1-i (i counted from
    the leaves), over all plane trees of size n."""
    _check_level(n, i)
    return _level_factor(n, i) * Fraction(
        math.factorial(n), 2 ** (n - 1) * math.factorial(i))


def catalan_power_coeff(n: int, k: int) -> int:
    """[z^n] (C(z)/z)^k, where C(z) is the plane-tree generating function."""
    if n < 1 or k < 1:
        raise DomainError('catalan_power_coeff needs n >= 1 and k >= 1')
    return k * math.comb(k + 2 * n - 1, n - 1) // n


def cumulative_level_width(n: int, i: int) -> int:
    """Total number of level-(n-1-i) semantic nodes over all trees of size n.

    Counted independently of `mean_level_width`: an increasing tree of size
    n-i with 2n-2i-1 slots where plane forests totalling i nodes are hung.
    """
    _check_level(n, i)
    if i == 0:
        return increasing_count(n)
    return increasing_count(n - i) * catalan_power_coeff(i, 2*n - 2*i - 1)


def level_bounds_check(n: int, i: int) -> bool:
    _check_level(n, i)
    if i * i >= 2 * n:
        raise DomainError(f'the upper bound needs i^2 < 2n (n={n}, i={i})')
    scaled = _level_factor(n, i)
    return 1 <= scaled <= 1 / (1 - Fraction(i * i, 2 * n))


def mean_size(n: int, method: str = 'recurrence') -> Fraction:
    """Mean number of nodes of the semantic tree of a size-n syntax tree."""
    if n < 0:
        raise DomainError('n must be non-negative')
    if method == 'exact_sum':
        return sum((mean_level_width(n, i) for i in range(n)), Fraction(0))
    if method == 'recurrence':
        return MEAN_SIZE_TERMS[n]
    raise DomainError(f'unknown method {method!r}')


def mean_size_sequence(N: int, method: str = 'recurrence') -> list[Fraction]:
    if method == 'recurrence':
        return MEAN_SIZE_TERMS.terms(N)
    return [mean_size(n, method) for n in range(N + 1)]


def cumulative_size(n: int) -> int:
    """Total semantic-tree size over all plane trees of size n."""
    if n == 0:
        return 0
    total = mean_size(n) * catalan(n)
    if total.denominator != 1:
        raise RecurrenceError('cumulative size is not integral', n)
    return total.numerator


def r_sequence(N: int) -> list[Fraction]:
    """R_0 .. R_N, where R_n = mean_size(n) 2^(n-1) / n!."""
    return R_TERMS.terms(N)


def _approx(value: mpmath.mpf, relative: mpmath.mpf) -> ApproxReal:
    return ApproxReal(+value, abs(value) * relative)


def stirling_mean_width(n: int) -> ApproxReal:
    _require_positive(n)
    with mpmath.workdps(40):
        value = 2 * mpmath.sqrt(2 * mpmath.pi * n) * (n / (2 * mpmath.e)) ** n
        return _approx(value, mpmath.mpf(1) / (12 * n))


def mean_size_leading(n: int) -> ApproxReal:
    _require_positive(n)
    with mpmath.workdps(40):
        value = mpmath.e * mpmath.factorial(n) / mpmath.mpf(2) ** (n - 1)
        return _approx(value, mpmath.mpf(1) / n)


def asymptotic_size(n: int) -> ApproxReal:
    """Four-term asymptotic expansion of the mean semantic-tree size.

    The error field is the order of the first omitted term; it is an
    estimate, not a bound.
    """
    _require_positive(n)
    with mpmath.workdps(40):
        x = mpmath.mpf(n)
        series = (2 + mpmath.mpf(2) / (3 * x) + mpmath.mpf(49) / (36 * x**2)
                  + mpmath.mpf(27449) / (6480 * x**3))
        value = mpmath.e * mpmath.sqrt(2 * mpmath.pi * x) * \
            (x / (2 * mpmath.e)) ** n * series
        return _approx(value, 1 / x**4)


def geometric_mean_width(n: int, precision: int = 64) -> ApproxReal:
    """Geometric mean of the run counts over all plane trees of size n.

    Each k in 2..n-1 enters with an exact rational exponent; only the final
    exponential is evaluated in floating point, at `precision` bits.
    """
    if n < 2:
        raise DomainError('the geometric mean needs n >= 2')
    cn = catalan(n)
    exponents = [(k, 1 - Fraction((n + 1 - k) * catalan(k)
                                  * catalan(n - k + 1), 2 * cn))
                 for k in range(2, n)]
    with mpmath.workprec(precision + 16):
        log_total = mpmath.fsum(
            mpmath.mpf(e.numerator) / e.denominator * mpmath.log(k)
            for k, e in exponents)
        value = mpmath.exp(log_total)
        return ApproxReal(value, value * mpmath.ldexp(1, -precision))


def _log_term_base(x: mpmath.mpf) -> mpmath.mpf:
    # log(x) catalan(x) 4^-x = base * Gamma(x - 1/2) / Gamma(x)
    return mpmath.log(x) / (4 * x * mpmath.sqrt(mpmath.pi))


def _log_term_bounds(x: mpmath.mpf) -> tuple[mpmath.mpf, mpmath.mpf]:
    # Watson, y = x - 1: y + 1/4 < (Gamma(y + 1) / Gamma(y + 1/2))^2 <= y + 1/pi
    base = _log_term_base(x)
    return (base / mpmath.sqrt(x - 1 + 1 / mpmath.pi),
            base / mpmath.sqrt(x - 0.75))


def _log_term_estimate(x: mpmath.mpf) -> mpmath.mpf:
    # next term of the same expansion: y + 1/4 + 1/(32 y)
    return _log_term_base(x) / mpmath.sqrt(x - 0.75 + 1 / (32 * (x - 1)))


def _partial_sums(start: int, stop: int, term: float,
                  chunk: int = 1 << 16) -> tuple[float, float]:
    """Sum of log(n) C_n 4^-n for start <= n < stop, given the start term."""
    sums = []
    terms = []
    for n in range(start, stop):
        terms.append(math.log(n) * term)
        term = term * (2 * n - 1) / (2 * n + 2)
        if len(terms) == chunk:
            sums.append(math.fsum(terms))
            terms.clear()
    sums.append(math.fsum(terms))
    return math.fsum(sums), term


@lru_cache(maxsize=16)
def log_constant_L(target_abs_error: float = 1e-6,
                   direct_terms: Optional[int] = None) -> ApproxReal:
    """The constant sum over n >= 2 of log(n) C_n / 4^n.

    The partial sum up to N is completed by a tail enclosure: each term lies
    between two convex decreasing functions of n, whose sums are bounded by
    integrals (trapezoid from below, midpoint from above). The value itself
    takes the tail from the next term of the gamma-ratio expansion, which
    falls inside the enclosure. N doubles until the enclosure is narrower
    than the target.

    With `direct_terms`, only the partial sum up to that index is returned;
    its error field then bounds the omitted tail from above.
    """
    if direct_terms is not None:
        direct_limit = Config.L_DIRECT_LIMIT
        if not 2 <= direct_terms <= direct_limit:
            raise DomainError(f'direct_terms must lie in 2..{direct_limit}')
        partial, _ = _partial_sums(2, direct_terms + 1, 1 / 16)
        with mpmath.workdps(30):
            upper = mpmath.quad(lambda x: _log_term_bounds(x)[1],
                                [direct_terms + 0.5, mpmath.inf])
            return ApproxReal(mpmath.mpf(partial), upper)
    if target_abs_error < 1e-7:
        raise DomainError('target error must be at least 1e-7')
    limit = Config.L_TERM_LIMIT
    N = 1024
    partial, term = _partial_sums(2, N + 1, 1 / 16)
    with mpmath.workdps(30):
        while True:
            lower = mpmath.quad(lambda x: _log_term_bounds(x)[0],
                                [N + 1, mpmath.inf]) \
                + _log_term_bounds(mpmath.mpf(N + 1))[0] / 2
            upper = mpmath.quad(lambda x: _log_term_bounds(x)[1],
                                [N + 0.5, mpmath.inf])
            tail = mpmath.quad(_log_term_estimate, [N + 0.5, mpmath.inf])
            tail = min(max(tail, lower), upper)
            rounding = mpmath.mpf(4 * N) * 2 ** -53 * partial
            error = max(upper - tail, tail - lower) + rounding
            logger.debug('L: N=%d tail %s in [%s, %s]', N,
                         mpmath.nstr(tail, 12), mpmath.nstr(lower, 12),
                         mpmath.nstr(upper, 12))
            if error <= target_abs_error:
                return ApproxReal(partial + tail, error, certified=True)
            if 2 * N > limit:
                raise PrecisionError(
                    f'cannot reach {target_abs_error} within {limit} terms')
            more, term = _partial_sums(N + 1, 2 * N + 1, term)
            partial = math.fsum((partial, more))
            N *= 2


class _NonplaneCounts:
    """T_1, T_2, ... through the Euler-transform recurrence."""

    def __init__(self) -> None:
        self._values = [0, 1]
        self._divisor_sums = [0, 1]
        self._lock = threading.Lock()

    def upto(self, n: int) -> list[int]:
        with self._lock:
            values, sums = self._values, self._divisor_sums
            while len(values) <= n:
                m = len(values) - 1
                total = sum(sums[k] * values[m - k + 1] for k in range(1, m + 1))
                values.append(total // m)
                k = m + 1
                sums.append(sum(d * values[d] for d in range(1, k + 1)
                                if k % d == 0))
            return values[:n + 1]


_NONPLANE = _NonplaneCounts()


def nonplane_count(n: int) -> int:
    _require_positive(n)
    return _NONPLANE.upto(n)[n]


def nonplane_mean_width(n: int) -> Fraction:
    """Mean run count over non-plane trees: (n-1)! increasing labellings
    shared among T_n shapes."""
    _require_positive(n)
    return Fraction(math.factorial(n - 1), nonplane_count(n))


def nonplane_asymptotic_width(n: int) -> ApproxReal:
    _require_positive(n)
    with mpmath.workdps(40):
        value = 2 * mpmath.sqrt(2) * mpmath.pi * n / GAMMA * \
            (n * ETA / mpmath.e) ** n
        return _approx(value, mpmath.mpf(1) / n)


def estimate_eta(N: int = 400) -> ApproxReal:
    """Radius of convergence of the non-plane tree series.

    The ratios T_{n+1}/T_n tend to 1/eta with a 1/n correction, which one
    Richardson step removes. The error field is the change between the last
    two extrapolants.
    """
    if N < 4:
        raise DomainError('estimate_eta needs N >= 4')
    values = _NONPLANE.upto(N + 1)
    with mpmath.workdps(40):
        def ratio(n: int) -> mpmath.mpf:
            return mpmath.mpf(values[n + 1]) / values[n]

        def extrapolated(n: int) -> mpmath.mpf:
            return n * ratio(n) - (n - 1) * ratio(n - 1)

        last = 1 / extrapolated(N)
        previous = 1 / extrapolated(N - 1)
        return ApproxReal(last, abs(last - previous))


def geometric_mean_asymptotic(n: int) -> ApproxReal:
    """Asymptotic form of `geometric_mean_width` through the constant L."""
    if n < 2:
        raise DomainError('the geometric mean needs n >= 2')
    L = log_constant_L().value
    with mpmath.workdps(40):
        value = mpmath.sqrt(2 * mpmath.pi) * \
            mpmath.exp(mpmath.sqrt(mpmath.pi * n) + L) / n * \
            (n / mpmath.exp(1 + 2 * L)) ** n
        return _approx(value, 1 / mpmath.sqrt(n))
