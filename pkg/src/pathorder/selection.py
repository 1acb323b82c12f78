"""Order selection: Bayes factors, likelihood-ratio test, AIC, BIC, EDC.

Scores for all candidate maximum orders K in 0..K_max are assembled once
into a SelectionReport; the select_* functions then apply their decision
rules to the report.  Likelihoods and marginal likelihoods are reported
up to one additive dataset constant that cancels in every comparison.
"""

from __future__ import annotations

from array import array
from dataclasses import dataclass, field
from math import log, sqrt
from typing import Iterator, Sequence

from pathorder import _kernels as _k
from pathorder._kernels import _pyfallback
from pathorder.constraint import NetworkConstraint, degrees_of_freedom
from pathorder.errors import (
    DomainError,
    MethodUnavailableError,
    UsageError,
)
from pathorder.model import ModelScore
from pathorder.pathdata import TransitionCounts

_EVIDENCE_LEVELS = {"positive": 3.0, "very_strong": 150.0}


@dataclass(frozen=True)
class EvidenceThreshold:
    """Bayes-factor evidence level: 'positive' (3) or 'very_strong' (150)."""

    level: str
    value: float

    def __post_init__(self):
        if _EVIDENCE_LEVELS.get(self.level) != self.value:
            raise DomainError(
                f"unsupported evidence threshold {self.level!r}={self.value!r}")


def evidence_threshold(level: str) -> EvidenceThreshold:
    if level not in _EVIDENCE_LEVELS:
        raise DomainError(f"unknown evidence level {level!r}")
    return EvidenceThreshold(level, _EVIDENCE_LEVELS[level])


@dataclass(frozen=True)
class OrderPrior:
    """Prior over candidate orders: uniform, or penalizing e^{-df(K)}."""

    kind: str

    def __post_init__(self):
        if self.kind not in ("uniform", "exponential_df"):
            raise DomainError(f"unknown order prior {self.kind!r}")


@dataclass
class SelectionReport:
    """Per-order scores plus the decisions taken on them."""

    K_max: int
    n_total: int
    n_nodes: int
    alpha0: float
    scores: tuple[ModelScore, ...]
    aic: tuple[float, ...]
    bic: tuple[float, ...] | None
    edc: tuple[float, ...] | None
    chosen: dict = field(default_factory=dict)
    pvalues: dict = field(default_factory=dict)

    @property
    def log_likelihoods(self) -> tuple[float, ...]:
        return tuple(s.log_likelihood for s in self.scores)

    @property
    def log_marginals(self) -> tuple[float, ...]:
        return tuple(s.log_marginal_likelihood for s in self.scores)

    @property
    def dfs(self) -> tuple[int, ...]:
        return tuple(s.df for s in self.scores)


def _score_pair(pair, n_labels, outdeg, k, n_nodes, alpha0):
    keys, cnts = pair
    if isinstance(keys, array):
        return _k.score_count_map(keys, cnts, n_labels, outdeg, k,
                                  n_nodes, alpha0)
    # big-integer history codes: reference implementation handles them
    return _pyfallback.score_count_map(keys, cnts, n_labels, outdeg, k,
                                       n_nodes, alpha0)


def score_all(tc: TransitionCounts, g: NetworkConstraint, K_max: int,
              alpha0: float = 1.0) -> SelectionReport:
    """Score every candidate maximum order 0..K_max on shared counts.

    Per order K: MLE log-likelihood and flat-prior log marginal are sums
    of independent per-layer terms, so the layer scores are computed once
    (prefix maps for k < K_max, window maps for all k) and stacked.
    AIC = -2 LL + 2 df; BIC = -2 LL + df ln(n); EDC = -2 LL +
    df ln(ln n)/(|V|-1), with n the total transition count.  BIC and EDC
    are unavailable when n <= 1, EDC also when |V| < 2.
    """
    if K_max < 0:
        raise DomainError("K_max must be nonnegative")
    if K_max > tc.k_max:
        raise UsageError(f"K_max={K_max} exceeds counted k_max={tc.k_max}")
    if alpha0 <= 0.0:
        raise DomainError("prior concentration must be positive")
    if tc.labels != g.labels:
        raise UsageError("counts and constraint use different node tables")
    n_nodes = g.n_nodes
    outdeg = g.out_degrees
    prefix_scores = [
        _score_pair(tc.prefix_raw(k), tc.n_labels, outdeg, k, n_nodes, alpha0)
        for k in range(K_max)
    ]
    window_scores = [
        _score_pair(tc.window_raw(k), tc.n_labels, outdeg, k, n_nodes, alpha0)
        for k in range(K_max + 1)
    ]
    dfs = degrees_of_freedom(g, K_max).cumulative
    nt = tc.n_total
    scores = []
    aic = []
    bic = [] if nt > 1 else None
    edc = [] if nt > 1 and n_nodes > 1 else None
    ll_acc = 0.0
    lm_acc = 0.0
    for K in range(K_max + 1):
        if K > 0:
            ll_acc += prefix_scores[K - 1][0]
            lm_acc += prefix_scores[K - 1][1]
        ll = ll_acc + window_scores[K][0]
        lm = lm_acc + window_scores[K][1]
        df = dfs[K]
        scores.append(ModelScore(ll, lm, df))
        aic.append(-2.0 * ll + 2.0 * float(df))
        if bic is not None:
            bic.append(-2.0 * ll + float(df) * log(nt))
        if edc is not None:
            edc.append(-2.0 * ll + float(df) * log(log(nt)) / float(n_nodes - 1))
    return SelectionReport(
        K_max=K_max,
        n_total=nt,
        n_nodes=n_nodes,
        alpha0=alpha0,
        scores=tuple(scores),
        aic=tuple(aic),
        bic=None if bic is None else tuple(bic),
        edc=None if edc is None else tuple(edc),
    )


def select_ic(report: SelectionReport, method: str) -> int:
    """Argmin of an information criterion; ties go to the smaller order."""
    if method == "aic":
        values = report.aic
    elif method == "bic":
        values = report.bic
    elif method == "edc":
        values = report.edc
    else:
        raise UsageError(f"unknown information criterion {method!r}")
    if values is None:
        raise MethodUnavailableError(
            f"{method} is unavailable for this dataset "
            f"(n_total={report.n_total}, nodes={report.n_nodes})")
    best = 0
    for K in range(1, report.K_max + 1):
        if values[K] < values[best]:
            best = K
    report.chosen[method] = best
    return best


def lr_test(report: SelectionReport, K: int, K_prime: int) -> float:
    """p-value of the nested likelihood-ratio test of order K vs K_prime.

    The statistic x = -2(LL_K - LL_K') is referred to a chi-square
    distribution with the difference in degrees of freedom; the survival
    probability is the regularized upper incomplete gamma Q(xi/2, x/2).
    """
    if not 0 <= K < K_prime <= report.K_max:
        raise UsageError(f"need 0 <= K < K' <= {report.K_max}")
    dfs = report.dfs
    xi = dfs[K_prime] - dfs[K]
    if xi == 0:
        raise UsageError(
            f"degenerate test: orders {K} and {K_prime} have equal "
            f"degrees of freedom")
    lls = report.log_likelihoods
    x = -2.0 * (lls[K] - lls[K_prime])
    if x < 0.0:
        x = 0.0
    p = _k.reg_upper_gamma(float(xi) / 2.0, x / 2.0)
    report.pvalues[(K, K_prime)] = (x, xi, p)
    return p


def _significant(report: SelectionReport, K: int, K_prime: int,
                 p_thres: float) -> bool:
    # equal-df pairs add no parameters; never significant
    if report.dfs[K_prime] - report.dfs[K] == 0:
        return False
    return lr_test(report, K, K_prime) < p_thres


def select_lr(report: SelectionReport, p_thres: float,
              mode: str = "all") -> int:
    """Maximal order that beats smaller ones in likelihood-ratio tests.

    Mode 'all' requires every K < K' to be rejected at p_thres; mode
    'adjacent' requires every consecutive step j vs j+1 up to K' to be
    rejected.  Returns 0 when no order qualifies.
    """
    if not 0.0 < p_thres < 1.0:
        raise DomainError("significance threshold must be in (0, 1)")
    if mode not in ("all", "adjacent"):
        raise UsageError(f"unknown lr mode {mode!r}")
    best = 0
    if mode == "all":
        for K_prime in range(report.K_max, 0, -1):
            if all(_significant(report, K, K_prime, p_thres)
                   for K in range(K_prime)):
                best = K_prime
                break
    else:
        while (best < report.K_max
               and _significant(report, best, best + 1, p_thres)):
            best += 1
    report.chosen["lr"] = best
    return best


def _log_posteriors(report: SelectionReport, prior: OrderPrior) -> list[float]:
    lms = report.log_marginals
    if prior.kind == "uniform":
        return list(lms)
    return [lm - float(df) for lm, df in zip(lms, report.dfs)]


def select_bf(report: SelectionReport, prior: OrderPrior,
              threshold: EvidenceThreshold) -> int:
    """Maximal order more likely than every smaller one by the threshold.

    Posterior odds are marginal-likelihood ratios times the order-prior
    ratio; comparisons happen in log space, so the uniform prior drops
    out and the exponential-df prior subtracts df(K).
    """
    ln_thr = log(threshold.value)
    post = _log_posteriors(report, prior)
    best = 0
    for K_prime in range(report.K_max, 0, -1):
        if all(post[K_prime] - post[K] > ln_thr for K in range(K_prime)):
            best = K_prime
            break
    report.chosen["bf"] = best
    return best


def wilson_interval(successes: int, trials: int,
                    z: float = 1.959964) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion, clamped to [0,1]."""
    if trials < 1:
        raise UsageError("wilson_interval requires at least one trial")
    if not 0 <= successes <= trials:
        raise DomainError("successes must lie in [0, trials]")
    n = float(trials)
    p = successes / n
    z2 = z * z
    denom = 1.0 + z2 / n
    center = (p + z2 / (2.0 * n)) / denom
    half = z * sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom
    lo = center - half
    hi = center + half
    if successes == 0:
        lo = 0.0
    if successes == trials:
        hi = 1.0
    return (max(lo, 0.0), min(hi, 1.0))


def report_csv_lines(report: SelectionReport) -> Iterator[str]:
    """Serialize per-order scores as CSV (shortest round-trip floats)."""
    yield "K,df,log_likelihood,log_marginal,aic,bic,edc"
    for K in range(report.K_max + 1):
        s = report.scores[K]
        bic = "" if report.bic is None else repr(report.bic[K])
        edc = "" if report.edc is None else repr(report.edc[K])
        yield (f"{K},{s.df},{s.log_likelihood!r},"
               f"{s.log_marginal_likelihood!r},{report.aic[K]!r},{bic},{edc}")


def pvalue_csv_lines(report: SelectionReport, mode: str = "all") -> Iterator[str]:
    """All pairwise (or adjacent) tests as CSV; equal-df pairs are skipped."""
    if mode not in ("all", "adjacent"):
        raise UsageError(f"unknown lr mode {mode!r}")
    yield "K,K_prime,x,xi,p_value"
    for K_prime in range(1, report.K_max + 1):
        lows = range(K_prime) if mode == "all" else (K_prime - 1,)
        for K in lows:
            if report.dfs[K_prime] - report.dfs[K] == 0:
                continue
            p = lr_test(report, K, K_prime)
            x, xi, _ = report.pvalues[(K, K_prime)]
            yield f"{K},{K_prime},{x!r},{xi},{p!r}"


def chosen_lines(report: SelectionReport) -> Iterator[str]:
    for method in sorted(report.chosen):
        yield f"{method}={report.chosen[method]}"
