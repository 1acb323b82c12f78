"""Compare the compiled kernel backend against the pure Python fallback.

Runs the hot kernels (Dirichlet row sampling, path generation,
transition counting, count-map scoring) on one shared workload and
reports the best wall time per backend.  Outputs are compared along the
way, so a run doubles as a quick bit-identity check.
"""

import argparse
import sys
import time
from array import array

from pathorder._kernels import _pyfallback
from pathorder.synth import _compile_automaton, random_gnm, sample_ground_truth

try:
    from pathorder._kernels import _native
except ImportError:
    _native = None


def best_of(repeat, fn):
    best = float("inf")
    result = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        result = fn()
        best = min(best, time.perf_counter() - t0)
    return best, result


def as_bytes(value):
    if isinstance(value, tuple):
        return b"".join(as_bytes(v) for v in value)
    if isinstance(value, array):
        return value.tobytes()
    if isinstance(value, list):
        return repr(value).encode()
    return repr(value).encode()


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--target", type=int, default=100_000,
                    help="transitions to generate (default 100000)")
    ap.add_argument("--k-max", type=int, default=4,
                    help="deepest counted history length (default 4)")
    ap.add_argument("--repeat", type=int, default=3,
                    help="timing repetitions, best is kept (default 3)")
    ap.add_argument("--seed", type=int, default=2026)
    args = ap.parse_args(argv)

    if _native is None:
        print("compiled backend not available; nothing to compare",
              file=sys.stderr)
        return 1

    g = random_gnm(100, 350, args.seed)
    gt = sample_ground_truth(g, 2, args.seed + 1)
    machine = _compile_automaton(gt)
    row_len = machine[1]
    outdeg = array("q", g.out_degrees)
    law = (0, 5, 0)  # constant path length of five nodes

    print(f"workload: {g.n_nodes} nodes, {sum(outdeg) // 2} symmetric edges, "
          f"ground truth order 2, {args.target} transitions, "
          f"k_max {args.k_max}")
    print()
    print(f"{'kernel':<24}{'native':>12}{'python':>12}{'speedup':>10}")

    identical = True

    def stage(name, run):
        nonlocal identical
        t_n, out_n = best_of(args.repeat, lambda: run(_native))
        t_p, out_p = best_of(args.repeat, lambda: run(_pyfallback))
        identical = identical and as_bytes(out_n) == as_bytes(out_p)
        print(f"{name:<24}{t_n:>11.4f}s{t_p:>11.4f}s{t_p / t_n:>9.1f}x")
        return out_n

    total = sum(row_len)
    stage("dirichlet rows",
          lambda k: k.fill_dirichlet_rows(row_len, 1.0,
                                          array("d", bytes(8 * total)), 7))

    nodes, lens, _ = stage(
        "path generation",
        lambda k: k.generate_paths(*machine, *law, args.target, 77))

    freqs = array("q", [1]) * len(lens)
    prefix, window = stage(
        "transition counting",
        lambda k: k.count_transitions(nodes, lens, freqs, g.n_nodes,
                                      args.k_max))

    def score_everything(k):
        out = []
        for depth in range(args.k_max + 1):
            for keys, cnts in (prefix[depth], window[depth]):
                out.append(k.score_count_map(keys, cnts, g.n_nodes, outdeg,
                                             depth, g.n_nodes, 1.0))
        return tuple(out)

    stage("count-map scoring", score_everything)

    print()
    print("all outputs bit-identical across backends" if identical
          else "BACKEND OUTPUTS DIFFER")
    return 0 if identical else 1


if __name__ == "__main__":
    sys.exit(main())
