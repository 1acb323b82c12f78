"""Synthetic ground truth: random graphs, random models, generated paths.

The generator behind experiments: draw an undirected G(n,m) graph, prune
dead ends, sample a maximum-order-K ground-truth model uniformly from
its parameter space (flat Dirichlet on every history row), then emit
constrained paths from a layered automaton compiled from the model.

Everything is a pure function of its seed.  Replications derive child
seeds by 64-bit mixing, so they can run in any order or in parallel.
"""

from __future__ import annotations

from array import array
from dataclasses import dataclass

from pathorder import _kernels as _k
from pathorder.constraint import (
    NetworkConstraint,
    build,
    enumerate_histories,
    prune_dead_ends,
    successors_of,
)
from pathorder.errors import CapacityError, DomainError, ParseError, UsageError
from pathorder.model import MultiOrderParams
from pathorder.numerics import RngState
from pathorder.pathdata import PathDataset

_MAX_AUTOMATON_STATES = 5_000_000


@dataclass(frozen=True)
class PathLengthLaw:
    """Distribution of path lengths in nodes: constant or uniform [a, b]."""

    kind: str
    a: int
    b: int = 0

    def __post_init__(self):
        if self.kind == "constant":
            if self.a < 1:
                raise DomainError("constant path length must be >= 1")
        elif self.kind == "uniform":
            if not 1 <= self.a <= self.b:
                raise DomainError("uniform length law needs 1 <= a <= b")
        else:
            raise DomainError(f"unknown length law {self.kind!r}")

    @classmethod
    def parse(cls, text: str) -> "PathLengthLaw":
        parts = text.split(":")
        try:
            if parts[0] == "constant" and len(parts) == 2:
                return cls("constant", int(parts[1]))
            if parts[0] == "uniform" and len(parts) == 3:
                return cls("uniform", int(parts[1]), int(parts[2]))
        except ValueError:
            raise ParseError(f"bad length law {text!r}") from None
        raise ParseError(f"bad length law {text!r}")

    def format(self) -> str:
        if self.kind == "constant":
            return f"constant:{self.a}"
        return f"uniform:{self.a}:{self.b}"


@dataclass(frozen=True)
class GroundTruth:
    """A generating model: graph, maximum order, parameters, and its seed."""

    graph: NetworkConstraint
    K_gt: int
    params: MultiOrderParams
    seed: int


@dataclass(frozen=True)
class PerturbedConstraint:
    """A true graph plus spurious extra edges; fitting sees the union."""

    base: NetworkConstraint
    extra_edges: tuple[tuple[int, int], ...]
    union: NetworkConstraint


def _index_label(i: int, width: int) -> str:
    return f"n{i:0{width}d}"


def random_gnm(n: int, m: int, seed: int) -> NetworkConstraint:
    """Undirected G(n, m), symmetrized to directed edges, then pruned.

    Pairs are drawn uniformly without replacement; labels are zero-padded
    so canonical label order matches numeric node order.  Nodes left
    without successors by the draw are removed (to a fixpoint), so the
    result may have fewer than n nodes, or none at all.
    """
    if n < 0:
        raise UsageError("node count must be nonnegative")
    max_m = n * (n - 1) // 2
    if not 0 <= m <= max_m:
        raise UsageError(f"edge count {m} outside 0..{max_m}")
    width = len(str(n - 1)) if n > 1 else 1
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    rng = RngState(seed)
    size = len(pairs)
    for i in range(m):
        j = i + rng.below(size - i)
        pairs[i], pairs[j] = pairs[j], pairs[i]
    edges = [(_index_label(i, width), _index_label(j, width))
             for i, j in pairs[:m]]
    g = build(edges, undirected=True)
    return prune_dead_ends(g)


def _automaton_states(g: NetworkConstraint, K_gt: int):
    """All feasible walks of 0..K_gt nodes, in (layer, lexicographic) order."""
    states: list[tuple[int, ...]] = []
    total = 0
    for k in range(K_gt + 1):
        for hist in enumerate_histories(g, k):
            states.append(hist)
            total += 1
            if total > _MAX_AUTOMATON_STATES:
                raise CapacityError(
                    f"history space exceeds {_MAX_AUTOMATON_STATES} states")
    return states


def sample_ground_truth(g: NetworkConstraint, K_gt: int, seed: int) -> GroundTruth:
    """Draw a model uniformly from the parameter space of order K_gt on g.

    Every feasible history row (all layers 0..K_gt) receives an
    independent flat-Dirichlet draw over its successor set, consumed in
    canonical row order.
    """
    if g.n_nodes == 0:
        raise DomainError("cannot sample a model on an empty graph")
    if K_gt < 0:
        raise DomainError("ground-truth order must be nonnegative")
    states = _automaton_states(g, K_gt)
    row_len = array("q", (len(successors_of(g, h)) for h in states))
    slots = sum(row_len)
    probs = array("d", bytes(8 * slots))
    rng = RngState(seed)
    rng.state = _k.fill_dirichlet_rows(row_len, 1.0, probs, rng.state)
    layers: list[dict] = [dict() for _ in range(K_gt + 1)]
    pos = 0
    for h, ln in zip(states, row_len):
        layers[len(h)][h] = tuple(probs[pos:pos + ln])
        pos += ln
    params = MultiOrderParams(K_gt, g, layers)
    return GroundTruth(graph=g, K_gt=K_gt, params=params, seed=seed)


def _compile_automaton(gt: GroundTruth):
    """Flat-array transition machine over the ground-truth history states."""
    g = gt.graph
    K = gt.K_gt
    states = _automaton_states(g, K)
    index = {h: i for i, h in enumerate(states)}
    row_off = array("q")
    row_len = array("q")
    succ_node = array("i")
    succ_next = array("i")
    cum = array("d")
    off = 0
    for h in states:
        succ = successors_of(g, h)
        vec = gt.params.vector_for(len(h), h)
        row_off.append(off)
        row_len.append(len(succ))
        acc = 0.0
        for v, p in zip(succ, vec):
            acc += p
            succ_node.append(v)
            cum.append(acc)
            nxt = h + (v,) if len(h) < K else (h + (v,))[1:]
            succ_next.append(index[nxt])
        off += len(succ)
    return row_off, row_len, cum, succ_node, succ_next


def generate_paths(gt: GroundTruth, n_total_target: int,
                   length_law: PathLengthLaw, seed: int) -> PathDataset:
    """Sample paths until the transition total reaches the target.

    Each path draws its node count from the length law, starts from the
    empty history (layer 0) and steps through the layered model; the last
    path may overshoot the target by at most its own length.  A history
    without successors ends the path early (cannot happen on pruned
    graphs).
    """
    if n_total_target < 1:
        raise DomainError("target transition count must be >= 1")
    row_off, row_len, cum, succ_node, succ_next = _compile_automaton(gt)
    if gt.graph.n_nodes == 0 or (len(row_len) and row_len[0] == 0):
        raise DomainError("layer-0 support is empty")
    law_kind = 0 if length_law.kind == "constant" else 1
    rng = RngState(seed)
    flat, lens, rng.state = _k.generate_paths(
        row_off, row_len, cum, succ_node, succ_next,
        law_kind, length_law.a, length_law.b, n_total_target, rng.state)
    freqs = array("q", [1]) * len(lens)
    return PathDataset(gt.graph.labels, flat, lens, freqs)


def perturb_constraint(g: NetworkConstraint, extra_m: int,
                       seed: int) -> PerturbedConstraint:
    """Add random absent directed edges (no self-loops) for partial knowledge.

    The union graph is what fitting sees; generation keeps using the
    base graph only.
    """
    n = g.n_nodes
    absent = [(u, v) for u in range(n) for v in range(n)
              if u != v and not g.has_edge(u, v)]
    if not 0 <= extra_m <= len(absent):
        raise UsageError(
            f"extra edge count {extra_m} outside 0..{len(absent)}")
    rng = RngState(seed)
    size = len(absent)
    for i in range(extra_m):
        j = i + rng.below(size - i)
        absent[i], absent[j] = absent[j], absent[i]
    extra = tuple(sorted(absent[:extra_m]))
    merged = [sorted(set(g.successors[u])) for u in range(n)]
    for u, v in extra:
        merged[u].append(v)
    union = NetworkConstraint(g.labels, [sorted(set(s)) for s in merged])
    return PerturbedConstraint(base=g, extra_edges=extra, union=union)
