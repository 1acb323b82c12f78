"""Pure Python kernels: RNG, special functions, counting and scoring loops.

This module is the reference implementation.  The compiled extension in
``_native.pyx`` mirrors every floating point operation in the same order
so that both backends produce bit-identical results; any change here must
be applied there as well.

The generator is splitmix64.  State is carried as a plain Python int and
every drawing function returns ``(value, new_state)`` so that callers own
the stream position explicitly.
"""

from __future__ import annotations

from array import array
from math import cos, exp, log, sqrt

from pathorder.errors import DomainError, NumericError

BACKEND_NAME = "python"

_M64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_INV53 = 1.0 / 9007199254740992.0  # 2**-53
_TWO_PI = 6.283185307179586

# Lanczos approximation, g = 7, 9 coefficients.
_LANCZOS = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)
_LN_SQRT_2PI = 0.9189385332046727

_EPS = 1e-12
_ITMAX = 1000000
_FPMIN = 1e-300


def mix64(z: int) -> int:
    """Finalizer of splitmix64; also used to derive child seeds."""
    z &= _M64
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9 & _M64
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB & _M64
    return z ^ (z >> 31)


def rng_next(state: int):
    state = (state + _GOLDEN) & _M64
    return mix64(state), state


def rng_uniform(state: int):
    """Uniform double in [0, 1) with 53 random bits."""
    r, state = rng_next(state)
    return (r >> 11) * _INV53, state


def _uniform_nz(state: int):
    # Strictly positive variant, safe as a log() argument.
    while True:
        r, state = rng_next(state)
        r >>= 11
        if r:
            return r * _INV53, state


def rng_below(state: int, span: int):
    """Unbiased integer in [0, span) by rejection."""
    if span <= 0:
        raise DomainError("span must be positive")
    if span > _M64:
        raise DomainError("span exceeds the generator range")
    threshold = (1 << 64) % span
    while True:
        r, state = rng_next(state)
        if r >= threshold:
            return r % span, state


def rng_normal(state: int):
    """Standard normal via Box-Muller, cosine branch only (no caching)."""
    u1, state = _uniform_nz(state)
    u2, state = rng_uniform(state)
    return sqrt(-2.0 * log(u1)) * cos(_TWO_PI * u2), state


def rng_gamma(state: int, alpha: float):
    """Gamma(alpha, 1) variate, Marsaglia-Tsang for alpha >= 1."""
    if alpha <= 0.0:
        raise DomainError("gamma shape must be positive")
    if alpha < 1.0:
        g, state = _gamma_ge1(state, alpha + 1.0)
        u, state = _uniform_nz(state)
        return g * u ** (1.0 / alpha), state
    return _gamma_ge1(state, alpha)


def _gamma_ge1(state: int, alpha: float):
    d = alpha - 1.0 / 3.0
    c = 1.0 / sqrt(9.0 * d)
    while True:
        x, state = rng_normal(state)
        v = 1.0 + c * x
        if v <= 0.0:
            continue
        v = v * v * v
        u, state = _uniform_nz(state)
        x2 = x * x
        if u < 1.0 - 0.0331 * x2 * x2:
            return d * v, state
        if log(u) < 0.5 * x2 + d - d * v + d * log(v):
            return d * v, state


def rng_dirichlet(state: int, alphas):
    out = [0.0] * len(alphas)
    total = 0.0
    for i, a in enumerate(alphas):
        g, state = rng_gamma(state, a)
        out[i] = g
        total += g
    for i in range(len(out)):
        out[i] = out[i] / total
    return out, state


def fill_dirichlet_rows(row_len, alpha0: float, out, state: int) -> int:
    """Fill concatenated probability rows with symmetric Dirichlet draws.

    ``out`` holds sum(row_len) slots.  One gamma variate is consumed per
    slot, rows normalized independently, in row order.
    """
    pos = 0
    for ln in row_len:
        total = 0.0
        for i in range(ln):
            g, state = rng_gamma(state, alpha0)
            out[pos + i] = g
            total += g
        for i in range(ln):
            out[pos + i] = out[pos + i] / total
        pos += ln
    return state


def log_gamma(x: float) -> float:
    """Natural log of the gamma function for x > 0 (Lanczos, g = 7)."""
    if x <= 0.0:
        raise DomainError("log_gamma requires x > 0")
    if x < 0.5:
        return log_gamma(x + 1.0) - log(x)
    z = x - 1.0
    a = _LANCZOS[0]
    for i in range(1, 9):
        a += _LANCZOS[i] / (z + i)
    t = z + 7.5
    return _LN_SQRT_2PI + (z + 0.5) * log(t) - t + log(a)


def _gamma_prefactor(a: float, x: float) -> float:
    # exp(-x + a ln x - ln Gamma(a)); the exponent is <= 0 for every a, x
    # so this can underflow to zero but never overflow.
    return exp(-x + a * log(x) - log_gamma(a))


def _lower_series(a: float, x: float) -> float:
    ap = a
    delt = 1.0 / a
    total = delt
    for _ in range(_ITMAX):
        ap += 1.0
        delt *= x / ap
        total += delt
        if abs(delt) < abs(total) * _EPS:
            return total * _gamma_prefactor(a, x)
    raise NumericError("lower incomplete gamma series did not converge")


def _upper_cf(a: float, x: float) -> float:
    # Lentz continued fraction for the upper tail.
    b = x + 1.0 - a
    c = 1.0 / _FPMIN
    d = 1.0 / b
    h = d
    for i in range(1, _ITMAX + 1):
        fi = float(i)
        an = -fi * (fi - a)
        b += 2.0
        d = an * d + b
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = b + an / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        delt = d * c
        h *= delt
        if abs(delt - 1.0) < _EPS:
            return _gamma_prefactor(a, x) * h
    raise NumericError("upper incomplete gamma fraction did not converge")


def reg_upper_gamma(a: float, x: float) -> float:
    """Regularized upper incomplete gamma Q(a, x) = 1 - P(a, x)."""
    if a <= 0.0:
        raise DomainError("shape parameter must be positive")
    if x < 0.0:
        raise DomainError("argument must be nonnegative")
    if x == 0.0:
        return 1.0
    if x < a + 1.0:
        return 1.0 - _lower_series(a, x)
    return _upper_cf(a, x)


def generate_paths(row_off, row_len, cum, succ_node, succ_next,
                   law_kind: int, law_a: int, law_b: int,
                   target: int, state: int):
    """Sample paths from a layered transition automaton.

    State 0 is the empty-history start state.  Paths are drawn until the
    total number of emitted nodes reaches ``target`` (the last path may
    overshoot).  ``law_kind`` 0 draws constant length ``law_a``, 1 draws
    uniformly from [law_a, law_b].  Returns (nodes, lengths, state).
    """
    nodes = array("i")
    lens = array("i")
    total = 0
    while total < target:
        if law_kind == 0:
            want = law_a
        else:
            r, state = rng_below(state, law_b - law_a + 1)
            want = law_a + r
        st = 0
        plen = 0
        for _ in range(want):
            ln = row_len[st]
            if ln == 0:
                break
            off = row_off[st]
            u, state = rng_uniform(state)
            lo = off
            hi = off + ln
            while lo < hi:
                mid = (lo + hi) >> 1
                if u < cum[mid]:
                    hi = mid
                else:
                    lo = mid + 1
            if lo == off + ln:
                lo -= 1
            nodes.append(succ_node[lo])
            st = succ_next[lo]
            plen += 1
        if plen == 0:
            raise DomainError("start state has no successors")
        lens.append(plen)
        total += plen
    return nodes, lens, state


def count_transitions(nodes, lens, freqs, n_labels: int, k_max: int):
    """Count transitions for every history length 0..k_max in one pass.

    Histories are encoded as base-``n_labels`` integers, oldest node in
    the highest digit, so numeric order equals lexicographic tuple order.
    Returns four lists indexed by k: prefix keys/counts (history length
    exactly k) and window keys/counts (last-k windows, length >= k).
    Keys hold ``code * n_labels + successor``.
    """
    prefix = [dict() for _ in range(k_max + 1)]
    window = [dict() for _ in range(k_max + 1)]
    pow_prev = [n_labels ** k for k in range(k_max)]
    pos = 0
    for ip in range(len(lens)):
        plen = lens[ip]
        f = freqs[ip]
        codes = [0] * (k_max + 1)
        for t in range(plen):
            v = nodes[pos + t]
            hl = t
            top = hl if hl < k_max else k_max
            for k in range(top + 1):
                key = codes[k] * n_labels + v
                w = window[k]
                w[key] = w.get(key, 0) + f
                if k == hl:
                    p = prefix[k]
                    p[key] = p.get(key, 0) + f
            for k in range(1, k_max + 1):
                codes[k] = (codes[k] % pow_prev[k - 1]) * n_labels + v
        pos += plen
    return ([_export(prefix[k]) for k in range(k_max + 1)],
            [_export(window[k]) for k in range(k_max + 1)])


def _export(counts: dict):
    items = sorted(counts.items())
    try:
        keys = array("q", (kv[0] for kv in items))
    except OverflowError:
        # History codes beyond 64 bits: keep plain Python ints.
        return [kv[0] for kv in items], [kv[1] for kv in items]
    return keys, array("q", (kv[1] for kv in items))


def score_count_map(keys, cnts, n_labels: int, outdeg, k: int,
                    n_nodes: int, alpha0: float):
    """Log-likelihood and log marginal likelihood of one count map.

    Rows are contiguous runs sharing a history code.  The maximum
    likelihood term is sum c ln(c/T); the marginal term is the Dirichlet
    evidence of the row under a symmetric alpha0 prior over the history's
    feasible successor set (out-degree of the last node, or n_nodes for
    the empty history).
    """
    ll = 0.0
    lm = 0.0
    lg_a0 = log_gamma(alpha0)
    n = len(keys)
    i = 0
    while i < n:
        hist = keys[i] // n_labels
        t_int = 0
        ll_row = 0.0
        lm_row = 0.0
        j = i
        while j < n and keys[j] // n_labels == hist:
            c = cnts[j]
            t_int += c
            cf = float(c)
            ll_row += cf * log(cf)
            lm_row += log_gamma(alpha0 + cf) - lg_a0
            j += 1
        tf = float(t_int)
        ll_row -= tf * log(tf)
        if k == 0:
            support = n_nodes
        else:
            support = outdeg[hist % n_labels]
        a_sum = alpha0 * support
        lm_row += log_gamma(a_sum) - log_gamma(a_sum + tf)
        ll += ll_row
        lm += lm_row
        i = j
    return ll, lm
