"""Special functions and seeded random variates.

Everything here is implemented in-repo (no external math dependency).
Scalar special functions and variate kernels live in the backend modules
under ``_kernels``; this module adds the public names, the stream-capable
``RngState`` wrapper, and an independently computed lower incomplete
gamma used to cross-check the upper one.
"""

from __future__ import annotations

from math import exp, log

from pathorder import _kernels as _k
from pathorder.errors import DomainError, NumericError
from pathorder._kernels._pyfallback import mix64

backend_name = _k.backend_name

_M64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_EPS = 1e-12
_LN_EPS = -27.631021115928547  # ln(1e-12)
_ITMAX = 1000000


def derive_seed(master: int, *keys: int) -> int:
    """Deterministically derive a child seed from a master seed.

    Chains a 64-bit mix over the keys, so distinct key tuples give
    effectively independent streams.
    """
    s = master & _M64
    for key in keys:
        s = mix64((s + _GOLDEN) & _M64)
        s = mix64(s ^ (key & _M64))
    return s


class RngState:
    """Deterministic 64-bit generator (splitmix64) with stream support.

    The same ``(seed, stream)`` pair always yields the same sequence.
    """

    __slots__ = ("seed", "stream", "state")

    def __init__(self, seed: int, stream: int = 0):
        self.seed = seed
        self.stream = stream
        self.state = derive_seed(seed, stream)

    def clone(self) -> "RngState":
        other = RngState.__new__(RngState)
        other.seed = self.seed
        other.stream = self.stream
        other.state = self.state
        return other

    def next_u64(self) -> int:
        value, self.state = _k.rng_next(self.state)
        return value

    def uniform(self) -> float:
        value, self.state = _k.rng_uniform(self.state)
        return value

    def below(self, span: int) -> int:
        """Unbiased integer in [0, span)."""
        value, self.state = _k.rng_below(self.state, span)
        return value

    def randint(self, lo: int, hi: int) -> int:
        """Inclusive integer range."""
        if hi < lo:
            raise DomainError("empty integer range")
        return lo + self.below(hi - lo + 1)

    def normal(self) -> float:
        value, self.state = _k.rng_normal(self.state)
        return value

    def shuffle(self, items: list) -> None:
        """In-place Fisher-Yates shuffle."""
        for i in range(len(items) - 1, 0, -1):
            j = self.below(i + 1)
            items[i], items[j] = items[j], items[i]


def log_gamma(x: float) -> float:
    """Natural logarithm of the gamma function, x > 0."""
    return _k.log_gamma(x)


def log_multivariate_beta(v) -> float:
    """log B(v) = sum log_gamma(v_i) - log_gamma(sum v_i)."""
    if len(v) == 0:
        raise DomainError("log_multivariate_beta requires a nonempty vector")
    total = 0.0
    acc = 0.0
    for a in v:
        af = float(a)
        if af <= 0.0:
            raise DomainError("log_multivariate_beta requires positive components")
        acc += _k.log_gamma(af)
        total += af
    return acc - _k.log_gamma(total)


def regularized_upper_incomplete_gamma(a: float, x: float) -> float:
    """Q(a, x): series branch for x < a+1, continued fraction otherwise."""
    return _k.reg_upper_gamma(a, x)


def regularized_lower_incomplete_gamma(a: float, x: float) -> float:
    """P(a, x) by a log-domain series, independent of the Q routines.

    Slower than the complement but free of overflow for large x, which
    makes it usable as a cross-check over the whole domain.
    """
    if a <= 0.0:
        raise DomainError("shape parameter must be positive")
    if x < 0.0:
        raise DomainError("argument must be nonnegative")
    if x == 0.0:
        return 0.0
    log_x = log(x)
    # terms t_n = x^n / (a (a+1) ... (a+n)), accumulated as logs
    lt = -log(a)
    acc = lt
    for n in range(1, _ITMAX + 1):
        lt += log_x - log(a + n)
        if lt <= acc:
            acc += log(1.0 + exp(lt - acc))
        else:
            acc = lt + log(1.0 + exp(acc - lt))
        if a + n > x and lt - acc < _LN_EPS:
            break
    else:
        raise NumericError("lower incomplete gamma series did not converge")
    value = exp(a * log_x - x - _k.log_gamma(a) + acc)
    return value if value < 1.0 else 1.0


def gamma_variate(alpha: float, rng: RngState) -> float:
    """Gamma(alpha, 1) draw."""
    value, rng.state = _k.rng_gamma(rng.state, alpha)
    return value


def dirichlet_variate(alpha, rng: RngState) -> list:
    """Dirichlet draw: normalized independent Gamma(alpha_i, 1) variates."""
    if len(alpha) == 0:
        raise DomainError("dirichlet_variate requires a nonempty vector")
    for a in alpha:
        if a <= 0.0:
            raise DomainError("dirichlet_variate requires positive components")
    value, rng.state = _k.rng_dirichlet(rng.state, alpha)
    return value


def categorical_draw(probs, rng: RngState) -> int:
    """Index draw from a probability vector (need not be normalized)."""
    if len(probs) == 0:
        raise DomainError("categorical_draw requires a nonempty vector")
    total = 0.0
    for p in probs:
        if p < 0.0:
            raise DomainError("categorical_draw requires nonnegative weights")
        total += p
    if total <= 0.0:
        raise DomainError("categorical_draw requires positive total weight")
    u = rng.uniform() * total
    acc = 0.0
    for i, p in enumerate(probs):
        acc += p
        if u < acc:
            return i
    return len(probs) - 1
