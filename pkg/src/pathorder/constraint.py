"""Network constraints: the directed graph that paths must respect.

Nodes carry two identities: the external string label and a dense
internal index.  Labels are sorted once at construction, indices follow
that order, so ascending index order is the canonical label order used
everywhere (successor lists, history enumeration, serialization).
Histories are tuples of node indices; the empty tuple is the empty
history whose successor set is the whole node set.
"""

from __future__ import annotations

from array import array
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

from pathorder.errors import (
    CapacityError,
    ConstraintViolationError,
    DomainError,
    ParseError,
)

_I63MAX = (1 << 63) - 1


class NetworkConstraint:
    """Immutable directed graph with canonical node ordering."""

    __slots__ = ("labels", "successors", "_index", "_succ_sets", "_outdeg")

    def __init__(self, labels: Sequence[str], successors: Sequence[Sequence[int]]):
        if len(labels) != len(successors):
            raise DomainError("labels and successor table sizes differ")
        self.labels: tuple[str, ...] = tuple(labels)
        self.successors: tuple[tuple[int, ...], ...] = tuple(
            tuple(s) for s in successors
        )
        # labels travel through comma-separated text formats
        for lab in self.labels:
            if not lab or "," in lab or lab != lab.strip():
                raise DomainError(f"invalid node label {lab!r}")
        self._index = {lab: i for i, lab in enumerate(self.labels)}
        if len(self._index) != len(self.labels):
            raise DomainError("duplicate node labels")
        n = len(self.labels)
        for succ in self.successors:
            prev = -1
            for v in succ:
                if not 0 <= v < n:
                    raise DomainError(f"successor index {v} out of range")
                if v <= prev:
                    raise DomainError("successor lists must be sorted and unique")
                prev = v
        self._succ_sets = tuple(frozenset(s) for s in self.successors)
        self._outdeg = array("q", (len(s) for s in self.successors))

    @property
    def n_nodes(self) -> int:
        return len(self.labels)

    @property
    def n_edges(self) -> int:
        return sum(len(s) for s in self.successors)

    @property
    def out_degrees(self) -> array:
        return self._outdeg

    def index_of(self, label: str) -> int:
        try:
            return self._index[label]
        except KeyError:
            raise DomainError(f"unknown node label {label!r}") from None

    def label_of(self, index: int) -> str:
        return self.labels[index]

    def has_edge(self, u: int, v: int) -> bool:
        return v in self._succ_sets[u]

    def edges(self) -> Iterator[tuple[int, int]]:
        for u, succ in enumerate(self.successors):
            for v in succ:
                yield (u, v)

    def history_from_labels(self, labels: Iterable[str]) -> tuple[int, ...]:
        return tuple(self.index_of(lab) for lab in labels)

    def history_labels(self, history: Sequence[int]) -> tuple[str, ...]:
        return tuple(self.labels[v] for v in history)

    def __eq__(self, other) -> bool:
        if not isinstance(other, NetworkConstraint):
            return NotImplemented
        return self.labels == other.labels and self.successors == other.successors

    def __hash__(self):
        return hash((self.labels, self.successors))

    def __repr__(self) -> str:
        return (f"NetworkConstraint(n_nodes={self.n_nodes}, "
                f"n_edges={self.n_edges})")


@dataclass(frozen=True)
class DegreesOfFreedom:
    """Free-parameter counts of the layered model, one entry per order."""

    per_layer: tuple[int, ...]

    def total(self, K: int) -> int:
        if not 0 <= K < len(self.per_layer):
            raise DomainError(f"order {K} outside computed range")
        return sum(self.per_layer[: K + 1])

    @property
    def cumulative(self) -> tuple[int, ...]:
        out = []
        acc = 0
        for value in self.per_layer:
            acc += value
            out.append(acc)
        return tuple(out)


def build(edges: Iterable[tuple[str, str]], undirected: bool = False,
          allow_self_loops: bool = False) -> NetworkConstraint:
    """Construct a constraint from labeled edges.

    Duplicate edges collapse; with ``undirected`` both directions are
    inserted.  Self-loops are rejected unless explicitly allowed.
    """
    seen: dict[str, set[str]] = {}
    for item in edges:
        try:
            src, dst = item
        except (TypeError, ValueError):
            raise ParseError(f"malformed edge {item!r}") from None
        if not src or not dst:
            raise ParseError(f"empty node label in edge {item!r}")
        if src == dst and not allow_self_loops:
            raise DomainError(f"self-loop {src!r}->{dst!r} not allowed")
        seen.setdefault(src, set()).add(dst)
        seen.setdefault(dst, set())
        if undirected:
            seen[dst].add(src)
    labels = sorted(seen)
    index = {lab: i for i, lab in enumerate(labels)}
    succ = [sorted(index[d] for d in seen[lab]) for lab in labels]
    return NetworkConstraint(labels, succ)


def parse_edge_lines(lines: Iterable[str], undirected: bool = False,
                     allow_self_loops: bool = False) -> NetworkConstraint:
    """Parse the edge-list text format: `source,target`, `#` comments."""
    edges = []
    for lineno, raw in enumerate(lines, start=1):
        text = raw.strip()
        if not text or text.startswith("#"):
            continue
        parts = [p.strip() for p in text.split(",")]
        if len(parts) != 2 or not parts[0] or not parts[1]:
            raise ParseError("expected `source,target`", line=lineno)
        if parts[0] == parts[1] and not allow_self_loops:
            raise ParseError(f"self-loop on {parts[0]!r} not allowed",
                             line=lineno)
        edges.append((parts[0], parts[1]))
    # self-loops were already rejected line-wise above when disallowed
    return build(edges, undirected=undirected, allow_self_loops=True)


def edge_lines(g: NetworkConstraint) -> Iterator[str]:
    """Serialize as directed `source,target` lines in canonical order."""
    for u, v in g.edges():
        yield f"{g.labels[u]},{g.labels[v]}"


def complete_digraph(labels: Sequence[str], self_loops: bool = True) -> NetworkConstraint:
    """Complete directed graph on the given labels."""
    ordered = sorted(set(labels))
    if len(ordered) != len(labels):
        raise DomainError("duplicate node labels")
    n = len(ordered)
    everyone = tuple(range(n))
    if self_loops:
        succ = [everyone] * n
    else:
        succ = [tuple(v for v in everyone if v != u) for u in range(n)]
    return NetworkConstraint(ordered, succ)


def prune_dead_ends(g: NetworkConstraint) -> NetworkConstraint:
    """Iteratively remove nodes without successors until a fixpoint.

    The result may be empty.  Every surviving node has out-degree >= 1.
    """
    n = g.n_nodes
    alive = [True] * n
    changed = True
    while changed:
        changed = False
        for u in range(n):
            if alive[u] and not any(alive[v] for v in g.successors[u]):
                alive[u] = False
                changed = True
    keep = [u for u in range(n) if alive[u]]
    remap = {u: i for i, u in enumerate(keep)}
    labels = [g.labels[u] for u in keep]
    succ = [[remap[v] for v in g.successors[u] if alive[v]] for u in keep]
    return NetworkConstraint(labels, succ)


def successors_of(g: NetworkConstraint, history: Sequence[int]) -> tuple[int, ...]:
    """Feasible successor set of a history; all nodes for the empty one."""
    n = g.n_nodes
    for v in history:
        if not 0 <= v < n:
            raise DomainError(f"unknown node index {v}")
    for u, v in zip(history, history[1:]):
        if not g.has_edge(u, v):
            raise ConstraintViolationError(
                f"history step {g.labels[u]}->{g.labels[v]} is not an edge")
    if not history:
        return tuple(range(n))
    return g.successors[history[-1]]


def _walk_counts(g: NetworkConstraint, k: int) -> list[int]:
    """Number of k-node walks ending at each node (exact integers)."""
    n = g.n_nodes
    if k == 0:
        return [0] * n
    wc = [1] * n
    for _ in range(k - 1):
        nxt = [0] * n
        for u in range(n):
            w = wc[u]
            if w:
                for v in g.successors[u]:
                    nxt[v] += w
        for value in nxt:
            if value > _I63MAX:
                raise CapacityError("walk count exceeds 64-bit range")
        wc = nxt
    return wc


def enumerate_histories(g: NetworkConstraint, k: int) -> Iterator[tuple[int, ...]]:
    """All feasible k-node histories in lexicographic order.

    k=0 yields exactly the empty history.  Raises a capacity error up
    front if the result count would exceed 2^63 - 1.
    """
    if k < 0:
        raise DomainError("history length must be nonnegative")
    total = sum(_walk_counts(g, k)) if k else 1
    if total > _I63MAX:
        raise CapacityError("history count exceeds 64-bit range")
    return _history_generator(g, k)


def _history_generator(g: NetworkConstraint, k: int) -> Iterator[tuple[int, ...]]:
    if k == 0:
        yield ()
        return
    prefix: list[int] = []

    def rec() -> Iterator[tuple[int, ...]]:
        if len(prefix) == k:
            yield tuple(prefix)
            return
        candidates = g.successors[prefix[-1]] if prefix else range(g.n_nodes)
        for v in candidates:
            prefix.append(v)
            yield from rec()
            prefix.pop()

    yield from rec()


def degrees_of_freedom(g: NetworkConstraint, K: int) -> DegreesOfFreedom:
    """Free parameters per layer up to maximum order K.

    Layer k sums max(out_degree(last node) - 1, 0) over all feasible
    k-node histories, computed from walk-count vectors rather than
    explicit enumeration.  Layer 0 has max(|V| - 1, 0) parameters.
    """
    if K < 0:
        raise DomainError("maximum order must be nonnegative")
    n = g.n_nodes
    contrib = [max(len(g.successors[v]) - 1, 0) for v in range(n)]
    per_layer = [max(n - 1, 0)]
    if K >= 1:
        wc = [1] * n
        for k in range(1, K + 1):
            layer = 0
            for v in range(n):
                layer += wc[v] * contrib[v]
            if layer > _I63MAX:
                raise CapacityError("degrees of freedom exceed 64-bit range")
            per_layer.append(layer)
            if k < K:
                nxt = [0] * n
                for u in range(n):
                    w = wc[u]
                    if w:
                        for v in g.successors[u]:
                            nxt[v] += w
                for value in nxt:
                    if value > _I63MAX:
                        raise CapacityError("walk count exceeds 64-bit range")
                wc = nxt
    total = 0
    for value in per_layer:
        total += value
        if total > _I63MAX:
            raise CapacityError("degrees of freedom exceed 64-bit range")
    return DegreesOfFreedom(tuple(per_layer))
