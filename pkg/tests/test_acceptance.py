"""Release-gate checks for the whole pipeline.

Each test prints one `[PASS]`/`[FAIL]` verdict line (visible with
`pytest -s` or in failure output).  The slow ones share a module-scoped
synthetic order-recovery experiment: random 100-node, 350-edge
constraint graphs, ground-truth maximum order 2, fifty replications per
data size.  The fast ones compare the analytic marginal likelihood,
the walk-count degrees of freedom, and the numeric kernels against
independent oracles (Monte Carlo averaging, brute-force enumeration,
scipy / mpmath / statsmodels reference implementations).
"""

import itertools
import math
import random

import mpmath
import numpy as np
import pytest
from scipy.special import gammaincc
from statsmodels.stats.proportion import proportion_confint

from conftest import make_graph, make_paths
from pathorder.constraint import (
    complete_digraph,
    degrees_of_freedom,
    successors_of,
)
from pathorder.experiment import (
    aggregate,
    config_from_dict,
    records_csv_lines,
    results_csv_lines,
    run,
)
from pathorder.numerics import regularized_upper_incomplete_gamma
from pathorder.pathdata import count
from pathorder.selection import lr_test, score_all, wilson_interval
from pathorder.synth import random_gnm

MASTER_SEED = 20260815
GRID = (1000, 3000, 10000, 30000, 100000, 300000, 1000000)
K_GT = 2


def _verdict(tag, ok, detail):
    print(f"[{'PASS' if ok else 'FAIL'}] {tag}: {detail}")
    assert ok, f"{tag}: {detail}"


def _by_cell(records):
    cells = {}
    for r in records:
        cells.setdefault((r.method, r.data_size), []).append(r.selected_K)
    return cells


def _min_data(cells, method):
    """Smallest grid size at which every replication selects the truth."""
    for size in GRID:
        sel = cells.get((method, size), [])
        if sel and all(k == K_GT for k in sel):
            return size
    return math.inf


def _freq(cells, method, size, pred):
    sel = cells[(method, size)]
    return sum(1 for k in sel if pred(k)) / len(sel)


@pytest.fixture(scope="module")
def recovery_true():
    cfg = config_from_dict(dict(
        n=100, m=350, k_gt=K_GT, k_max=4, data_sizes=list(GRID),
        replications=50, master_seed=MASTER_SEED,
        methods=["aic", "bic", "edc", "lr:0.05", "bf:very_strong",
                 "bf:very_strong:exponential_df"]))
    records = run(cfg)
    assert all(r.ok for r in records)
    return _by_cell(records)


@pytest.fixture(scope="module")
def recovery_complete():
    cfg = config_from_dict(dict(
        n=100, m=350, k_gt=K_GT, k_max=4, data_sizes=list(GRID),
        replications=50, master_seed=MASTER_SEED,
        methods=["bf:very_strong"], constraint_mode="complete"))
    records = run(cfg)
    assert all(r.ok for r in records)
    return _by_cell(records)


# ------------------------------------------------------------ oracles


def _random_walk(g, rng, length):
    walk = [rng.randrange(g.n_nodes)]
    while len(walk) < length:
        walk.append(rng.choice(g.successors[walk[-1]]))
    return tuple(g.labels[v] for v in walk)


def test_01_marginal_likelihood_matches_monte_carlo_average():
    # exp(log marginal) must equal the prior-average of the likelihood;
    # estimate the average row by row (rows are independent under the
    # flat Dirichlet prior) with one million draws each
    rng = random.Random(1234)
    np_rng = np.random.default_rng(20240612)
    graphs = [
        make_graph("a,b\nb,c\nc,a\n"),
        make_graph("a,b\nb,c\n", undirected=True),
        complete_digraph(["a", "b", "c"], self_loops=False),
    ]
    checked = 0
    worst = 0.0
    while checked < 20:
        g = rng.choice(graphs)
        K = rng.choice((0, 1))
        n_paths = 1 if K == 1 else rng.randint(1, 3)
        lines = [",".join(_random_walk(g, rng, 3 if K == 1 else rng.randint(2, 4)))
                 for _ in range(n_paths)]
        if sum(line.count(",") + 1 for line in lines) > 10:
            continue
        d = make_paths("".join(line + "\n" for line in lines), g)
        tc = count(d, g, K)
        rows = list(tc.window_rows(0) if K == 0 else
                    itertools.chain(tc.prefix_rows(0), tc.window_rows(1)))
        if len(rows) > 3:
            continue
        lm = score_all(tc, g, K, 1.0).scores[K].log_marginal_likelihood
        estimate = 1.0
        for hist, pairs in rows:
            n_succ = len(successors_of(g, hist))
            counts = np.array([c for _, c in pairs], dtype=float)
            draws = np_rng.dirichlet(np.ones(n_succ), size=1_000_000)
            estimate *= float(
                np.mean(np.prod(draws[:, :len(counts)] ** counts, axis=1)))
        worst = max(worst, abs(math.exp(lm) - estimate) / math.exp(lm))
        checked += 1
    _verdict("acceptance 1", worst < 0.02,
             f"worst relative error over {checked} instances: {worst:.4f}")


def _brute_force_df(g, K):
    edges = {(u, v) for u in range(g.n_nodes) for v in g.successors[u]}
    layers = [max(g.n_nodes - 1, 0)]
    for k in range(1, K + 1):
        total = 0
        for hist in itertools.product(range(g.n_nodes), repeat=k):
            if all(pair in edges for pair in zip(hist, hist[1:])):
                total += max(len(g.successors[hist[-1]]) - 1, 0)
        layers.append(total)
    return tuple(layers)


def test_02_degrees_of_freedom_match_brute_force_enumeration():
    rng = random.Random(4321)
    for _ in range(100):
        n = rng.randint(2, 10)
        m = rng.randint(0, min(20, n * (n - 1) // 2))
        g = random_gnm(n, m, rng.getrandbits(32))
        K = rng.randint(0, 4)
        assert degrees_of_freedom(g, K).per_layer == _brute_force_df(g, K)
    for n in range(2, 6):
        g = complete_digraph([f"v{i}" for i in range(n)], self_loops=True)
        assert degrees_of_freedom(g, 4).per_layer == tuple(
            n ** k * (n - 1) for k in range(5))
    _verdict("acceptance 2", True,
             "walk-count df equals enumeration on 100 random graphs "
             "and n^k(n-1) on complete digraphs")


def test_03_star_dataset_closed_forms():
    g = make_graph("a,b\na,c\n", undirected=True)
    d = make_paths("a,b\na,c\na,b\n", g)
    report = score_all(count(d, g, 1), g, 1, 1.0)
    ll0, ll1 = report.log_likelihoods
    lm0, lm1 = report.log_marginals
    x = -2.0 * (ll0 - ll1)
    p = lr_test(report, 0, 1)
    bayes = math.exp(lm1 - lm0)
    checks = [
        ("LL K=1", abs(ll1 - (2 * math.log(2 / 3) + math.log(1 / 3))), 1e-9),
        ("LL K=0", abs(ll0 - (3 * math.log(1 / 2) + 2 * math.log(1 / 3)
                              + math.log(1 / 6))), 1e-9),
        ("LM K=1", abs(lm1 - math.log(1 / 120)), 1e-9),
        ("LM K=0", abs(lm0 - math.log(1 / 1680)), 1e-9),
        ("AIC K=1", abs(report.aic[1] - 9.819086), 1e-6),
        ("AIC K=0", abs(report.aic[0] - 16.136852), 1e-6),
        ("LR x", abs(x - 8.317766), 1e-5),
        ("LR p", abs(p - 0.003927), 1e-5),
        ("Bayes factor", abs(bayes - 14.0), 0.01),
    ]
    bad = [name for name, err, tol in checks if not err <= tol]
    _verdict("acceptance 3", not bad,
             "all nine closed-form values reproduced" if not bad
             else f"out of tolerance: {bad}")


# ------------------------------------------- scaled order recovery


def test_04_order_recovery_grid_bf_aic_bic(recovery_true):
    md = {m: _min_data(recovery_true, m)
          for m in ("bf:very_strong", "aic", "bic")}
    underfit = _freq(recovery_true, "bic", GRID[0], lambda k: k < K_GT)
    ok = (all(v != math.inf for v in md.values())
          and md["bf:very_strong"] <= md["aic"] <= md["bic"]
          and underfit > 0.5)
    _verdict("acceptance 4", ok,
             f"min-data bf={md['bf:very_strong']} <= aic={md['aic']} "
             f"<= bic={md['bic']}; bic underfit frequency at "
             f"{GRID[0]}: {underfit:.2f}")


def test_05_lr_overfit_frequency_within_grid(recovery_true):
    freqs = {size: _freq(recovery_true, "lr:0.05", size, lambda k: k == 3)
             for size in GRID if size >= 100_000}
    ok = any(f > 0.05 for f in freqs.values())
    _verdict(
        "acceptance 5", ok,
        f"frequency of selecting order 3 at sizes >= 1e5: {freqs}. "
        "Known red: with symmetrized 350-pair random graphs the order-3 "
        "layer has ~38k degrees of freedom and the chi-square statistic "
        "stays ~4% below its degrees of freedom at 1e6 transitions "
        "(unobserved feasible cells), so the type-I onset falls near "
        "3e6 transitions, beyond this grid. The companion test below "
        "shows the overfitting direction does reproduce there. "
        "See README, Known limitations.")


def test_05b_lr_overfit_direction_beyond_grid():
    # same pipeline, one larger data size: the type-I rate of the
    # 5%-level ratio test must exceed its nominal level
    cfg = config_from_dict(dict(
        n=100, m=350, k_gt=K_GT, k_max=4, data_sizes=[3_000_000],
        replications=50, master_seed=MASTER_SEED, methods=["lr:0.05"]))
    records = run(cfg)
    assert all(r.ok for r in records)
    freq = sum(1 for r in records if r.selected_K == 3) / len(records)
    _verdict("acceptance 5 (directional)", freq > 0.05,
             f"frequency of selecting order 3 at 3e6 transitions: {freq:.2f}")


def test_06_edc_overfits_with_data(recovery_true):
    small = recovery_true[("edc", GRID[0])]
    big = recovery_true[("edc", GRID[-1])]
    top = _freq(recovery_true, "edc", GRID[-1], lambda k: k == 4)
    ok = (sum(big) / len(big) >= sum(small) / len(small)) and top > 0.5
    _verdict("acceptance 6", ok,
             f"mean edc order {sum(small) / len(small):.2f} at {GRID[0]} vs "
             f"{sum(big) / len(big):.2f} at {GRID[-1]}; "
             f"order-4 frequency at {GRID[-1]}: {top:.2f}")


def test_07_exponential_prior_needs_more_data(recovery_true):
    md_uniform = _min_data(recovery_true, "bf:very_strong")
    md_exp = _min_data(recovery_true, "bf:very_strong:exponential_df")
    _verdict("acceptance 7", md_exp > md_uniform,
             f"min-data {md_exp} under the exponential-df prior vs "
             f"{md_uniform} under the uniform prior")


def test_08_complete_constraint_needs_more_data(recovery_true,
                                                recovery_complete):
    md_true = _min_data(recovery_true, "bf:very_strong")
    md_complete = _min_data(recovery_complete, "bf:very_strong")
    _verdict("acceptance 8", md_complete > md_true,
             f"min-data {md_complete} fitting on the complete graph vs "
             f"{md_true} on the true constraint")


# ----------------------------------------------------- numeric layer


def test_09_numeric_kernels_match_reference_oracles():
    worst = 0.0
    for a in np.logspace(-2, math.log10(5000.0), 40):
        fractions = np.concatenate(
            [np.logspace(-2, 1, 15), [0.999, 1.0, 1.001]])
        for x in [0.0] + [float(a * f) for f in fractions]:
            ours = regularized_upper_incomplete_gamma(float(a), x)
            if x == 0.0:
                assert ours == 1.0
                continue
            oracle = float(gammaincc(a, x))
            if oracle < 1e-300:
                assert ours <= 1e-300
                continue
            worst = max(worst, abs(ours - oracle) / oracle)
    assert worst <= 1e-8

    mpmath.mp.dps = 50
    for a, x in [(0.5, 1.920729), (1.0, 1.0), (3.0, 0.5), (100.0, 100.0),
                 (2.5, 30.0), (1.0, 700.0)]:
        exact = float(mpmath.gammainc(a, x) / mpmath.gamma(a))
        ours = regularized_upper_incomplete_gamma(a, x)
        assert abs(ours - exact) / exact <= 1e-8

    rng = random.Random(7)
    z = 1.959964
    for _ in range(200):
        n = rng.randint(1, 2000)
        c = rng.randint(0, n)
        lo, hi = wilson_interval(c, n, z)
        p = c / n
        denom = 1.0 + z * z / n
        center = (p + z * z / (2 * n)) / denom
        half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
        assert abs(lo - (center - half)) <= 1e-6
        assert abs(hi - (center + half)) <= 1e-6
        ref_lo, ref_hi = proportion_confint(c, n, alpha=0.05, method="wilson")
        assert abs(lo - float(ref_lo)) <= 1e-6
        assert abs(hi - float(ref_hi)) <= 1e-6

    _verdict("acceptance 9", True,
             f"chi-square survival within {worst:.2e} relative of scipy; "
             "Wilson bounds match direct formula and statsmodels")


def test_10_worker_count_invariance():
    cfg = config_from_dict(dict(
        n=12, m=25, k_gt=1, k_max=2, data_sizes=[50, 200], replications=3,
        methods=["aic", "lr:0.05", "bf:positive"], master_seed=7))
    outputs = []
    for workers in (1, 2):
        records = run(cfg, workers=workers)
        results = "\n".join(results_csv_lines(aggregate(records, cfg.k_max,
                                                        cfg.z))) + "\n"
        raw = "\n".join(records_csv_lines(records)) + "\n"
        outputs.append((results.encode(), raw.encode()))
    ok = outputs[0] == outputs[1]
    _verdict("acceptance 10", ok,
             "results.csv and records.csv byte-identical across "
             "worker counts 1 and 2")
