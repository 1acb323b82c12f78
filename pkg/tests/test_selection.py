import math

import pytest

from pathorder.errors import DomainError, MethodUnavailableError, UsageError
from pathorder.model import ModelScore
from pathorder.pathdata import count
from pathorder.selection import (
    EvidenceThreshold,
    OrderPrior,
    SelectionReport,
    chosen_lines,
    evidence_threshold,
    lr_test,
    pvalue_csv_lines,
    report_csv_lines,
    score_all,
    select_bf,
    select_ic,
    select_lr,
    wilson_interval,
)

from conftest import make_graph, make_paths


@pytest.fixture
def star_report(star, star_data):
    return score_all(count(star_data, star, 1), star, 1)


@pytest.fixture
def empty_report(star):
    return score_all(count(make_paths("", star), star, 1), star, 1)


def fake_report(lls, dfs, lms=None, n_total=100, n_nodes=5):
    """Hand-built report for exercising decision rules in isolation."""
    if lms is None:
        lms = tuple(0.0 for _ in lls)
    scores = tuple(ModelScore(ll, lm, df)
                   for ll, lm, df in zip(lls, lms, dfs))
    aic = tuple(-2.0 * ll + 2.0 * df for ll, df in zip(lls, dfs))
    return SelectionReport(
        K_max=len(lls) - 1, n_total=n_total, n_nodes=n_nodes, alpha0=1.0,
        scores=scores, aic=aic, bic=None, edc=None)


def test_star_report_values(star_report):
    r = star_report
    assert r.n_total == 6
    assert r.dfs == (2, 3)
    assert r.log_likelihoods == pytest.approx(
        (-6.068425588244111, -1.9095425048844386), rel=1e-12)
    assert r.log_marginals == pytest.approx(
        (-7.426549072397302, -4.787491742782042), rel=1e-12)
    assert r.aic == pytest.approx(
        (16.13685117648822, 9.819085009768877), abs=1e-6)
    assert r.bic == pytest.approx(
        (15.72037011494433, 9.194363417453042), abs=1e-6)
    # EDC restates the penalty with ln(ln n) / (|V| - 1)
    pen = math.log(math.log(6.0)) / 2.0
    want_edc = tuple(-2.0 * ll + df * pen
                     for ll, df in zip(r.log_likelihoods, r.dfs))
    assert r.edc == pytest.approx(want_edc, rel=1e-12)


def test_star_ic_choices(star_report):
    assert select_ic(star_report, "aic") == 1
    assert select_ic(star_report, "bic") == 1
    assert select_ic(star_report, "edc") == 1
    assert star_report.chosen == {"aic": 1, "bic": 1, "edc": 1}


def test_select_ic_tie_goes_to_smaller_order():
    r = fake_report((0.0, 2.0), (0, 2))  # aic (0, -2+4) = (0, 0)
    assert r.aic == (0.0, 0.0)
    assert select_ic(r, "aic") == 0
    r2 = fake_report((0.0, 2.0, 4.5), (0, 2, 4))  # aic (0, 0, -1)
    assert select_ic(r2, "aic") == 2


def test_select_ic_validation(star_report):
    with pytest.raises(UsageError):
        select_ic(star_report, "hqc")


def test_ic_unavailable_on_tiny_data(star):
    r = score_all(count(make_paths("a,b\n", star), star, 1), star, 1)
    assert r.n_total == 2  # two transitions: start plus one hop
    one = score_all(count(make_paths("a\n", star), star, 1), star, 1)
    assert one.n_total == 1
    assert one.bic is None and one.edc is None
    with pytest.raises(MethodUnavailableError):
        select_ic(one, "bic")
    with pytest.raises(MethodUnavailableError):
        select_ic(one, "edc")
    assert select_ic(one, "aic") == 0


def test_edc_unavailable_on_single_node():
    g = make_graph("z,z\n", allow_self_loops=True)
    d = make_paths("z,z,z\n", g)
    r = score_all(count(d, g, 1), g, 1)
    assert r.n_total == 3 and r.n_nodes == 1
    assert r.bic is not None
    assert r.edc is None
    with pytest.raises(MethodUnavailableError):
        select_ic(r, "edc")


def test_score_all_validation(star, star_counts, star_data):
    with pytest.raises(UsageError):
        score_all(star_counts, star, 2)  # beyond counted k_max
    with pytest.raises(DomainError):
        score_all(star_counts, star, -1)
    with pytest.raises(DomainError):
        score_all(star_counts, star, 1, alpha0=0.0)
    other = make_graph("x,y\n")
    with pytest.raises(UsageError):
        score_all(star_counts, other, 1)


def test_lr_test_star(star_report):
    p = lr_test(star_report, 0, 1)
    assert p == pytest.approx(0.003925917093602241, rel=1e-10)
    x, xi, p2 = star_report.pvalues[(0, 1)]
    assert xi == 1
    assert x == pytest.approx(8.317766166719345, rel=1e-12)
    assert p2 == p


def test_lr_test_validation(star_report):
    with pytest.raises(UsageError):
        lr_test(star_report, 1, 1)
    with pytest.raises(UsageError):
        lr_test(star_report, 0, 2)
    with pytest.raises(UsageError):
        lr_test(star_report, -1, 1)
    degenerate = fake_report((0.0, 0.0), (3, 3))
    with pytest.raises(UsageError):
        lr_test(degenerate, 0, 1)


def test_lr_statistic_clamped_nonnegative():
    # rounding can make nested fits look worse; x is clamped to 0, p = 1
    r = fake_report((-5.0, -5.0 - 1e-13), (0, 2))
    assert lr_test(r, 0, 1) == 1.0
    assert r.pvalues[(0, 1)][0] == 0.0


def test_select_lr_star(star_report):
    assert select_lr(star_report, 0.05) == 1
    assert star_report.chosen["lr"] == 1
    assert select_lr(star_report, 0.001) == 0


def test_select_lr_modes_disagree_on_skipped_step():
    # step 0->1 is not significant but 1->2 and 0->2 are, so the
    # all-pairs rule still accepts order 2 while the adjacent chain
    # stops at the first failure
    a, b = 0.5, 8.5
    r = fake_report((0.0, a, b), (0, 2, 4))
    assert math.exp(-a) > 0.05 > math.exp(-(b - a))
    assert math.exp(-b) * (1.0 + b) < 0.05  # xi=4 pair
    assert select_lr(r, 0.05, mode="all") == 2
    r2 = fake_report((0.0, a, b), (0, 2, 4))
    assert select_lr(r2, 0.05, mode="adjacent") == 0


def test_select_lr_falls_back_to_largest_qualifying():
    # 2 fails against 1, so both modes settle on order 1
    a, b = 4.0, 4.5
    r = fake_report((0.0, a, b), (0, 2, 4))
    assert select_lr(r, 0.05, mode="all") == 1
    r2 = fake_report((0.0, a, b), (0, 2, 4))
    assert select_lr(r2, 0.05, mode="adjacent") == 1


def test_select_lr_equal_df_pair_never_significant():
    # orders 0 and 1 share a df; that pair cannot reject, so the
    # all-pairs rule can never accept K'=1
    r = fake_report((0.0, 10.0, 20.0), (2, 2, 4))
    assert select_lr(r, 0.05, mode="all") == 2
    r2 = fake_report((0.0, 10.0, 20.0), (2, 2, 4))
    assert select_lr(r2, 0.05, mode="adjacent") == 0


def test_select_lr_validation(star_report):
    with pytest.raises(DomainError):
        select_lr(star_report, 0.0)
    with pytest.raises(DomainError):
        select_lr(star_report, 1.0)
    with pytest.raises(UsageError):
        select_lr(star_report, 0.05, mode="pairwise")


def test_evidence_threshold_values():
    assert evidence_threshold("positive").value == 3.0
    assert evidence_threshold("very_strong").value == 150.0
    with pytest.raises(DomainError):
        evidence_threshold("decisive")
    with pytest.raises(DomainError):
        EvidenceThreshold("positive", 4.0)
    with pytest.raises(DomainError):
        OrderPrior("jeffreys")


def test_select_bf_star(star_report):
    uni = OrderPrior("uniform")
    b10 = math.exp(star_report.log_marginals[1] - star_report.log_marginals[0])
    assert b10 == pytest.approx(14.0, abs=0.01)
    assert select_bf(star_report, uni, evidence_threshold("positive")) == 1
    assert star_report.chosen["bf"] == 1
    assert select_bf(star_report, uni, evidence_threshold("very_strong")) == 0


def test_select_bf_ignores_additive_constants():
    uni = OrderPrior("uniform")
    thr = evidence_threshold("positive")
    lms = (-3.0, -1.5, -1.0)
    base = select_bf(fake_report((0.0,) * 3, (0, 1, 2), lms=lms), uni, thr)
    shifted = tuple(lm - 1234.5 for lm in lms)
    assert select_bf(fake_report((0.0,) * 3, (0, 1, 2), lms=shifted),
                     uni, thr) == base


def test_select_bf_exponential_df_prior_is_conservative():
    thr = evidence_threshold("positive")
    # odds 2.0 beat ln 3 under the uniform prior but not once the
    # 5-parameter penalty is subtracted
    r = fake_report((0.0, 0.0), (0, 5), lms=(0.0, 2.0))
    assert select_bf(r, OrderPrior("uniform"), thr) == 1
    r2 = fake_report((0.0, 0.0), (0, 5), lms=(0.0, 2.0))
    assert select_bf(r2, OrderPrior("exponential_df"), thr) == 0


def test_select_bf_requires_beating_every_smaller_order():
    thr = evidence_threshold("positive")
    # order 2 crushes order 1 but barely beats order 0
    lms = (0.0, -10.0, 1.0)
    r = fake_report((0.0,) * 3, (0, 1, 2), lms=lms)
    assert select_bf(r, OrderPrior("uniform"), thr) == 0


def test_empty_data_selects_zero(empty_report):
    assert empty_report.n_total == 0
    assert empty_report.log_likelihoods == (0.0, 0.0)
    assert empty_report.log_marginals == (0.0, 0.0)
    assert empty_report.bic is None and empty_report.edc is None
    assert select_lr(empty_report, 0.05) == 0
    assert select_bf(empty_report, OrderPrior("uniform"),
                     evidence_threshold("positive")) == 0
    assert select_ic(empty_report, "aic") == 0


def test_bic_penalty_exceeds_aic_on_larger_samples(star):
    d = make_paths("a,b,5\na,c,3\n", star, freq_column=True)
    r = score_all(count(d, star, 1), star, 1)
    assert r.n_total == 16  # ln 16 > 2, so the BIC penalty dominates
    diff = [b - a for a, b in zip(r.aic, r.bic)]
    assert all(x > 0 for x in diff)
    assert diff == pytest.approx(
        [df * (math.log(16) - 2.0) for df in r.dfs], rel=1e-12)


def test_wilson_interval_values():
    assert wilson_interval(0, 500) == pytest.approx(
        (0.0, 0.007624340580914839), abs=1e-12)
    assert wilson_interval(50, 100) == pytest.approx(
        (0.40383152963549296, 0.596168470364507), abs=1e-12)
    assert wilson_interval(500, 500) == pytest.approx(
        (0.9923756594190853, 1.0), abs=1e-12)
    lo, hi = wilson_interval(1, 3, z=1.0)
    assert 0.0 < lo < 1.0 / 3.0 < hi < 1.0


def test_wilson_interval_validation():
    with pytest.raises(UsageError):
        wilson_interval(0, 0)
    with pytest.raises(DomainError):
        wilson_interval(5, 3)
    with pytest.raises(DomainError):
        wilson_interval(-1, 3)


def test_report_csv_round_trip(star_report):
    lines = list(report_csv_lines(star_report))
    assert lines[0] == "K,df,log_likelihood,log_marginal,aic,bic,edc"
    assert len(lines) == 3
    for K, line in enumerate(lines[1:]):
        f = line.split(",")
        assert int(f[0]) == K
        assert int(f[1]) == star_report.dfs[K]
        assert float(f[2]) == star_report.log_likelihoods[K]
        assert float(f[3]) == star_report.log_marginals[K]
        assert float(f[4]) == star_report.aic[K]
        assert float(f[5]) == star_report.bic[K]
        assert float(f[6]) == star_report.edc[K]


def test_report_csv_blank_columns_when_unavailable(empty_report):
    line = list(report_csv_lines(empty_report))[1]
    assert line.endswith(",,")


def test_pvalue_csv_lines(star_report):
    lines = list(pvalue_csv_lines(star_report))
    assert lines[0] == "K,K_prime,x,xi,p_value"
    assert len(lines) == 2
    f = lines[1].split(",")
    assert (int(f[0]), int(f[1]), int(f[3])) == (0, 1, 1)
    assert float(f[2]) == pytest.approx(8.317766166719345, rel=1e-12)
    assert float(f[4]) == pytest.approx(0.003925917093602241, rel=1e-10)


def test_pvalue_csv_skips_equal_df_pairs():
    r = fake_report((0.0, 10.0, 20.0), (2, 2, 4))
    rows = list(pvalue_csv_lines(r))[1:]
    pairs = [(int(l.split(",")[0]), int(l.split(",")[1])) for l in rows]
    assert pairs == [(0, 2), (1, 2)]
    adj = list(pvalue_csv_lines(fake_report((0.0, 10.0, 20.0), (2, 2, 4)),
                                mode="adjacent"))[1:]
    assert [(int(l.split(",")[0]), int(l.split(",")[1])) for l in adj] == [
        (1, 2)]
    with pytest.raises(UsageError):
        list(pvalue_csv_lines(r, mode="forward"))


def test_chosen_lines_sorted(star_report):
    select_lr(star_report, 0.05)
    select_ic(star_report, "aic")
    select_bf(star_report, OrderPrior("uniform"),
              evidence_threshold("positive"))
    assert list(chosen_lines(star_report)) == ["aic=1", "bf=1", "lr=1"]
