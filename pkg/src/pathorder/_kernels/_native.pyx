# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels, an exact mirror of ``_pyfallback.py``.

Every floating point expression keeps the operation order and
association of the pure Python reference, and all transcendental calls
go to the same libm functions CPython's ``math`` module wraps, so both
backends produce bit-identical values.  Compiled with
``-ffp-contract=off`` to keep multiply-add sequences unfused.
"""

from cpython.array cimport array as c_array, clone
from libc.math cimport cos, exp, fabs, log, pow, sqrt
from libc.stdint cimport int64_t, uint64_t
from libc.string cimport memcpy
from libcpp.algorithm cimport sort
from libcpp.pair cimport pair
from libcpp.vector cimport vector

from array import array

from pathorder.errors import DomainError, NumericError

BACKEND_NAME = "native"

_M64 = (1 << 64) - 1

cdef uint64_t GOLDEN = 0x9E3779B97F4A7C15ULL
cdef double INV53 = 1.0 / 9007199254740992.0  # 2**-53
cdef double TWO_PI = 6.283185307179586

# Lanczos approximation, g = 7, 9 coefficients.
cdef double[9] LANCZOS
LANCZOS[0] = 0.99999999999980993
LANCZOS[1] = 676.5203681218851
LANCZOS[2] = -1259.1392167224028
LANCZOS[3] = 771.32342877765313
LANCZOS[4] = -176.61502916214059
LANCZOS[5] = 12.507343278686905
LANCZOS[6] = -0.13857109526572012
LANCZOS[7] = 9.9843695780195716e-6
LANCZOS[8] = 1.5056327351493116e-7
cdef double LN_SQRT_2PI = 0.9189385332046727

cdef double EPS = 1e-12
cdef int ITMAX = 1000000
cdef double FPMIN = 1e-300

cdef c_array _ARR_I = array("i")
cdef c_array _ARR_Q = array("q")


cdef inline uint64_t c_mix64(uint64_t z) nogil:
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return z ^ (z >> 31)


cdef inline uint64_t c_next(uint64_t* state) nogil:
    state[0] = state[0] + GOLDEN
    return c_mix64(state[0])


cdef inline double c_uniform(uint64_t* state) nogil:
    return <double>(c_next(state) >> 11) * INV53


cdef inline double c_uniform_nz(uint64_t* state) nogil:
    cdef uint64_t r
    while True:
        r = c_next(state) >> 11
        if r:
            return <double>r * INV53


cdef inline uint64_t c_below(uint64_t* state, uint64_t span) nogil:
    # (2**64 - span) % span == 2**64 % span for span >= 1
    cdef uint64_t threshold = (<uint64_t>0 - span) % span
    cdef uint64_t r
    while True:
        r = c_next(state)
        if r >= threshold:
            return r % span


cdef inline double c_normal(uint64_t* state) nogil:
    cdef double u1 = c_uniform_nz(state)
    cdef double u2 = c_uniform(state)
    return sqrt(-2.0 * log(u1)) * cos(TWO_PI * u2)


cdef double c_gamma_ge1(uint64_t* state, double alpha) nogil:
    cdef double d = alpha - 1.0 / 3.0
    cdef double c = 1.0 / sqrt(9.0 * d)
    cdef double x, v, u, x2
    while True:
        x = c_normal(state)
        v = 1.0 + c * x
        if v <= 0.0:
            continue
        v = v * v * v
        u = c_uniform_nz(state)
        x2 = x * x
        if u < 1.0 - 0.0331 * x2 * x2:
            return d * v
        if log(u) < 0.5 * x2 + d - d * v + d * log(v):
            return d * v


cdef double c_gamma(uint64_t* state, double alpha) except? -1.0:
    cdef double g, u
    if alpha <= 0.0:
        raise DomainError("gamma shape must be positive")
    if alpha < 1.0:
        g = c_gamma_ge1(state, alpha + 1.0)
        u = c_uniform_nz(state)
        return g * pow(u, 1.0 / alpha)
    return c_gamma_ge1(state, alpha)


cdef double c_log_gamma(double x) except? -1.0:
    cdef double z, a, t
    cdef int i
    if x <= 0.0:
        raise DomainError("log_gamma requires x > 0")
    if x < 0.5:
        return c_log_gamma(x + 1.0) - log(x)
    z = x - 1.0
    a = LANCZOS[0]
    for i in range(1, 9):
        a += LANCZOS[i] / (z + i)
    t = z + 7.5
    return LN_SQRT_2PI + (z + 0.5) * log(t) - t + log(a)


cdef inline double c_gamma_prefactor(double a, double x) except? -1.0:
    # exponent <= 0 for every a, x: may underflow, never overflows
    return exp(-x + a * log(x) - c_log_gamma(a))


cdef double c_lower_series(double a, double x) except? -1.0:
    cdef double ap = a
    cdef double delt = 1.0 / a
    cdef double total = delt
    cdef int it
    for it in range(ITMAX):
        ap += 1.0
        delt *= x / ap
        total += delt
        if fabs(delt) < fabs(total) * EPS:
            return total * c_gamma_prefactor(a, x)
    raise NumericError("lower incomplete gamma series did not converge")


cdef double c_upper_cf(double a, double x) except? -1.0:
    cdef double b = x + 1.0 - a
    cdef double c = 1.0 / FPMIN
    cdef double d = 1.0 / b
    cdef double h = d
    cdef double fi, an, delt
    cdef int i
    for i in range(1, ITMAX + 1):
        fi = <double>i
        an = -fi * (fi - a)
        b += 2.0
        d = an * d + b
        if fabs(d) < FPMIN:
            d = FPMIN
        c = b + an / c
        if fabs(c) < FPMIN:
            c = FPMIN
        d = 1.0 / d
        delt = d * c
        h *= delt
        if fabs(delt - 1.0) < EPS:
            return c_gamma_prefactor(a, x) * h
    raise NumericError("upper incomplete gamma fraction did not converge")


cdef double c_reg_upper(double a, double x) except? -1.0:
    if a <= 0.0:
        raise DomainError("shape parameter must be positive")
    if x < 0.0:
        raise DomainError("argument must be nonnegative")
    if x == 0.0:
        return 1.0
    if x < a + 1.0:
        return 1.0 - c_lower_series(a, x)
    return c_upper_cf(a, x)


def mix64(z):
    """Finalizer of splitmix64; also used to derive child seeds."""
    return c_mix64(<uint64_t>(z & _M64))


def rng_next(state):
    cdef uint64_t st = <uint64_t>(state & _M64)
    cdef uint64_t r = c_next(&st)
    return r, st


def rng_uniform(state):
    """Uniform double in [0, 1) with 53 random bits."""
    cdef uint64_t st = <uint64_t>(state & _M64)
    cdef double u = c_uniform(&st)
    return u, st


def rng_below(state, span):
    """Unbiased integer in [0, span) by rejection."""
    if span <= 0:
        raise DomainError("span must be positive")
    if span > _M64:
        raise DomainError("span exceeds the generator range")
    cdef uint64_t st = <uint64_t>(state & _M64)
    cdef uint64_t r = c_below(&st, <uint64_t>span)
    return r, st


def rng_normal(state):
    """Standard normal via Box-Muller, cosine branch only (no caching)."""
    cdef uint64_t st = <uint64_t>(state & _M64)
    cdef double value = c_normal(&st)
    return value, st


def rng_gamma(state, alpha):
    """Gamma(alpha, 1) variate, Marsaglia-Tsang for alpha >= 1."""
    cdef uint64_t st = <uint64_t>(state & _M64)
    cdef double value = c_gamma(&st, <double>alpha)
    return value, st


def rng_dirichlet(state, alphas):
    cdef uint64_t st = <uint64_t>(state & _M64)
    cdef Py_ssize_t n = len(alphas)
    cdef vector[double] buf
    cdef double total = 0.0
    cdef double g
    cdef Py_ssize_t i
    buf.resize(n)
    for i in range(n):
        g = c_gamma(&st, <double>alphas[i])
        buf[i] = g
        total += g
    out = [0.0] * n
    for i in range(n):
        out[i] = buf[i] / total
    return out, st


def fill_dirichlet_rows(row_len, double alpha0, out, state):
    """Fill concatenated probability rows with symmetric Dirichlet draws.

    ``out`` holds sum(row_len) slots.  One gamma variate is consumed per
    slot, rows normalized independently, in row order.
    """
    cdef long long[:] rl = row_len
    cdef double[:] o = out
    cdef uint64_t st = <uint64_t>(state & _M64)
    cdef Py_ssize_t pos = 0
    cdef Py_ssize_t r, i
    cdef int64_t ln
    cdef double total, g
    for r in range(rl.shape[0]):
        ln = rl[r]
        total = 0.0
        for i in range(ln):
            g = c_gamma(&st, alpha0)
            o[pos + i] = g
            total += g
        for i in range(ln):
            o[pos + i] = o[pos + i] / total
        pos += ln
    return st


def log_gamma(x):
    """Natural log of the gamma function for x > 0 (Lanczos, g = 7)."""
    return c_log_gamma(<double>x)


def reg_upper_gamma(a, x):
    """Regularized upper incomplete gamma Q(a, x) = 1 - P(a, x)."""
    return c_reg_upper(<double>a, <double>x)


def generate_paths(row_off, row_len, cum, succ_node, succ_next,
                   int law_kind, int64_t law_a, int64_t law_b,
                   int64_t target, state):
    """Sample paths from a layered transition automaton.

    State 0 is the empty-history start state.  Paths are drawn until the
    total number of emitted nodes reaches ``target`` (the last path may
    overshoot).  ``law_kind`` 0 draws constant length ``law_a``, 1 draws
    uniformly from [law_a, law_b].  Returns (nodes, lengths, state).
    """
    cdef long long[:] roff = row_off
    cdef long long[:] rlen = row_len
    cdef double[:] cdf = cum
    cdef int[:] snode = succ_node
    cdef int[:] snext = succ_next
    if rlen.shape[0] == 0:
        raise DomainError("start state has no successors")
    cdef uint64_t st = <uint64_t>(state & _M64)
    cdef vector[int] nodes_v
    cdef vector[int] lens_v
    cdef int64_t total = 0
    cdef int64_t want, plen, step
    cdef int64_t cur, off, ln, lo, hi, mid
    cdef double u
    while total < target:
        if law_kind == 0:
            want = law_a
        else:
            want = law_a + <int64_t>c_below(&st, <uint64_t>(law_b - law_a + 1))
        cur = 0
        plen = 0
        for step in range(want):
            ln = rlen[cur]
            if ln == 0:
                break
            off = roff[cur]
            u = c_uniform(&st)
            lo = off
            hi = off + ln
            while lo < hi:
                mid = (lo + hi) >> 1
                if u < cdf[mid]:
                    hi = mid
                else:
                    lo = mid + 1
            if lo == off + ln:
                lo -= 1
            nodes_v.push_back(snode[lo])
            cur = snext[lo]
            plen += 1
        if plen == 0:
            raise DomainError("start state has no successors")
        lens_v.push_back(<int>plen)
        total += plen
    cdef c_array nodes = clone(_ARR_I, nodes_v.size(), False)
    cdef c_array lens_out = clone(_ARR_I, lens_v.size(), False)
    if nodes_v.size():
        memcpy(nodes.data.as_ints, nodes_v.data(), nodes_v.size() * sizeof(int))
    if lens_v.size():
        memcpy(lens_out.data.as_ints, lens_v.data(),
               lens_v.size() * sizeof(int))
    return nodes, lens_out, st


cdef _export(vector[pair[int64_t, int64_t]]& items):
    # sort by key, then collapse equal keys by exact integer summation
    sort(items.begin(), items.end())
    cdef size_t n = items.size()
    cdef size_t i = 0, w = 0
    cdef int64_t key, tot
    while i < n:
        key = items[i].first
        tot = 0
        while i < n and items[i].first == key:
            tot += items[i].second
            i += 1
        items[w].first = key
        items[w].second = tot
        w += 1
    cdef c_array keys = clone(_ARR_Q, w, False)
    cdef c_array cnts = clone(_ARR_Q, w, False)
    cdef size_t j
    for j in range(w):
        keys.data.as_longlongs[j] = items[j].first
        cnts.data.as_longlongs[j] = items[j].second
    return keys, cnts


def count_transitions(flat, lens, freqs, int64_t n_labels, int k_max):
    """Count transitions for every history length 0..k_max in one pass.

    Histories are encoded as base-``n_labels`` integers, oldest node in
    the highest digit, so numeric order equals lexicographic tuple order.
    Returns two lists indexed by k: prefix keys/counts (history length
    exactly k) and window keys/counts (last-k windows, length >= k).
    Keys hold ``code * n_labels + successor``; the caller guarantees
    they fit in 64 bits.
    """
    cdef int[:] nodes = flat
    cdef int[:] plens = lens
    cdef long long[:] fs = freqs
    cdef vector[vector[pair[int64_t, int64_t]]] prefix, window
    cdef vector[int64_t] codes, pow_prev
    cdef Py_ssize_t n_paths = plens.shape[0]
    cdef Py_ssize_t ip, pos = 0
    cdef int64_t f, key, code
    cdef int plen, t, v, hl, top, k
    prefix.resize(k_max + 1)
    window.resize(k_max + 1)
    codes.resize(k_max + 1)
    pow_prev.resize(k_max if k_max > 0 else 0)
    code = 1
    for k in range(k_max):
        pow_prev[k] = code
        code *= n_labels
    for ip in range(n_paths):
        plen = plens[ip]
        f = fs[ip]
        for k in range(k_max + 1):
            codes[k] = 0
        for t in range(plen):
            v = nodes[pos + t]
            hl = t
            top = hl if hl < k_max else k_max
            for k in range(top + 1):
                key = codes[k] * n_labels + v
                window[k].push_back(pair[int64_t, int64_t](key, f))
                if k == hl:
                    prefix[k].push_back(pair[int64_t, int64_t](key, f))
            for k in range(1, k_max + 1):
                codes[k] = (codes[k] % pow_prev[k - 1]) * n_labels + v
        pos += plen
    return ([_export(prefix[k]) for k in range(k_max + 1)],
            [_export(window[k]) for k in range(k_max + 1)])


def score_count_map(keys, cnts, int64_t n_labels, outdeg, int k,
                    int64_t n_nodes, double alpha0):
    """Log-likelihood and log marginal likelihood of one count map.

    Rows are contiguous runs sharing a history code.  The maximum
    likelihood term is sum c ln(c/T); the marginal term is the Dirichlet
    evidence of the row under a symmetric alpha0 prior over the history's
    feasible successor set (out-degree of the last node, or n_nodes for
    the empty history).
    """
    cdef long long[:] ks = keys
    cdef long long[:] cs = cnts
    cdef long long[:] od = outdeg
    cdef double ll = 0.0
    cdef double lm = 0.0
    cdef double lg_a0 = c_log_gamma(alpha0)
    cdef Py_ssize_t n = ks.shape[0]
    cdef Py_ssize_t i = 0, j
    cdef int64_t hist, t_int, c, support
    cdef double ll_row, lm_row, cf, tf, a_sum
    while i < n:
        hist = ks[i] // n_labels
        t_int = 0
        ll_row = 0.0
        lm_row = 0.0
        j = i
        while j < n and ks[j] // n_labels == hist:
            c = cs[j]
            t_int += c
            cf = <double>c
            ll_row += cf * log(cf)
            lm_row += c_log_gamma(alpha0 + cf) - lg_a0
            j += 1
        tf = <double>t_int
        ll_row -= tf * log(tf)
        if k == 0:
            support = n_nodes
        else:
            support = od[hist % n_labels]
        a_sum = alpha0 * <double>support
        lm_row += c_log_gamma(a_sum) - c_log_gamma(a_sum + tf)
        ll += ll_row
        lm += lm_row
        i = j
    return ll, lm
