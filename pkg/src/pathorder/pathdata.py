"""Path collections and transition counting.

Counting convention: a path of L nodes contributes exactly L transitions,
one per node, including the start transition from the empty history to
the first node.  Two families of counts are kept for every history
length k up to k_max:

* prefix counts: transitions whose full history has length exactly k,
* window counts: transitions with history length >= k, keyed by the last
  k nodes.

Histories are encoded as base-n integers (oldest node in the highest
digit) so the natural integer order is the lexicographic tuple order.
A stored key combines history code and successor: ``code * n + v``.
"""

from __future__ import annotations

from array import array
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

from pathorder import _kernels as _k
from pathorder.constraint import NetworkConstraint, successors_of
from pathorder.errors import (
    CapacityError,
    ConstraintViolationError,
    DomainError,
    ParseError,
    UsageError,
)

_I63MAX = (1 << 63) - 1


@dataclass(frozen=True)
class Path:
    """A node sequence with a multiset multiplicity."""

    nodes: tuple[int, ...]
    frequency: int = 1


class PathDataset:
    """Immutable path collection stored as flat arrays."""

    __slots__ = ("labels", "flat", "lens", "freqs", "n_total", "l_max")

    def __init__(self, labels: Sequence[str], flat, lens, freqs):
        self.labels = tuple(labels)
        self.flat = flat
        self.lens = lens
        self.freqs = freqs
        n_total = 0
        l_max = 0
        for i in range(len(lens)):
            ln = lens[i]
            f = freqs[i]
            if ln < 1:
                raise DomainError("paths must contain at least one node")
            if f < 1:
                raise DomainError("path frequency must be positive")
            n_total += ln * f
            if ln > l_max:
                l_max = ln
        if n_total > _I63MAX:
            raise CapacityError("total transition count exceeds 64-bit range")
        self.n_total = n_total
        self.l_max = l_max

    @classmethod
    def from_paths(cls, paths: Iterable[Path], labels: Sequence[str]) -> "PathDataset":
        flat = array("i")
        lens = array("i")
        freqs = array("q")
        for p in paths:
            flat.extend(p.nodes)
            lens.append(len(p.nodes))
            freqs.append(p.frequency)
        return cls(labels, flat, lens, freqs)

    @property
    def n_paths(self) -> int:
        return len(self.lens)

    def paths(self) -> Iterator[Path]:
        pos = 0
        for i in range(len(self.lens)):
            ln = self.lens[i]
            yield Path(tuple(self.flat[pos:pos + ln]), self.freqs[i])
            pos += ln

    def path_lines(self, freq_column: bool = False) -> Iterator[str]:
        """Serialize as comma-separated label lines."""
        for p in self.paths():
            labs = ",".join(self.labels[v] for v in p.nodes)
            if freq_column:
                yield f"{labs},{p.frequency}"
            elif p.frequency != 1:
                raise UsageError(
                    "dataset has multiplicities; serialize with freq_column")
            else:
                yield labs


def ingest(lines: Iterable[str], g: NetworkConstraint,
           freq_column: bool = False) -> PathDataset:
    """Parse and validate a path file against a constraint.

    One path per line, comma-separated labels, optional trailing integer
    frequency when ``freq_column`` is set, `#` comments allowed.
    """
    flat = array("i")
    lens = array("i")
    freqs = array("q")
    for lineno, raw in enumerate(lines, start=1):
        text = raw.strip()
        if not text or text.startswith("#"):
            continue
        parts = [p.strip() for p in text.split(",")]
        freq = 1
        if freq_column:
            if len(parts) < 2:
                raise ParseError("expected node labels plus a frequency column",
                                 line=lineno)
            try:
                freq = int(parts[-1])
            except ValueError:
                raise ParseError(f"bad frequency {parts[-1]!r}",
                                 line=lineno) from None
            if freq <= 0:
                raise ParseError(f"non-positive frequency {freq}", line=lineno)
            parts = parts[:-1]
        indices = []
        for lab in parts:
            if not lab:
                raise ParseError("empty node label", line=lineno)
            try:
                indices.append(g.index_of(lab))
            except DomainError:
                raise DomainError(
                    f"line {lineno}: unknown node label {lab!r}") from None
        for u, v in zip(indices, indices[1:]):
            if not g.has_edge(u, v):
                raise ConstraintViolationError(
                    f"line {lineno}: transition "
                    f"{g.labels[u]}->{g.labels[v]} is not an edge")
        flat.extend(indices)
        lens.append(len(indices))
        freqs.append(freq)
    return PathDataset(g.labels, flat, lens, freqs)


class TransitionCounts:
    """Prefix and window transition counts for history lengths 0..k_max.

    Rows are stored as parallel sorted arrays of combined keys and
    counts, which gives canonical iteration order for free.
    """

    __slots__ = ("k_max", "n_labels", "labels", "n_total",
                 "_prefix", "_window")

    def __init__(self, k_max, labels, n_total, prefix, window):
        self.k_max = k_max
        self.labels = tuple(labels)
        self.n_labels = len(self.labels)
        self.n_total = n_total
        self._prefix = prefix
        self._window = window

    def prefix_raw(self, k: int):
        """(keys, counts) arrays for exact history length k."""
        self._check_k(k)
        return self._prefix[k]

    def window_raw(self, k: int):
        """(keys, counts) arrays for the last-k window."""
        self._check_k(k)
        return self._window[k]

    def prefix_rows(self, k: int):
        keys, cnts = self.prefix_raw(k)
        return _iter_rows(keys, cnts, self.n_labels, k)

    def window_rows(self, k: int):
        keys, cnts = self.window_raw(k)
        return _iter_rows(keys, cnts, self.n_labels, k)

    def _check_k(self, k: int):
        if not 0 <= k <= self.k_max:
            raise UsageError(f"history length {k} outside 0..{self.k_max}")


def _decode_history(code: int, n: int, k: int) -> tuple[int, ...]:
    out = [0] * k
    for i in range(k - 1, -1, -1):
        out[i] = code % n
        code //= n
    return tuple(out)


def _iter_rows(keys, cnts, n: int, k: int):
    """Group sorted combined keys into (history, ((succ, count), ...)) rows."""
    i = 0
    size = len(keys)
    while i < size:
        hist = keys[i] // n
        row = []
        while i < size and keys[i] // n == hist:
            row.append((keys[i] % n, cnts[i]))
            i += 1
        yield _decode_history(hist, n, k), tuple(row)


def count(d: PathDataset, g: NetworkConstraint, k_max: int) -> TransitionCounts:
    """Count transitions for all history lengths 0..k_max in one pass."""
    if k_max < 0:
        raise DomainError("k_max must be nonnegative")
    if d.labels != g.labels:
        raise UsageError("dataset and constraint use different node tables")
    n = g.n_nodes
    if d.n_paths == 0:
        prefix = [(array("q"), array("q")) for _ in range(k_max + 1)]
        window = [(array("q"), array("q")) for _ in range(k_max + 1)]
        return TransitionCounts(k_max, g.labels, 0, prefix, window)
    kernel = _k.count_transitions
    if n ** (k_max + 1) > _I63MAX:
        # combined keys would overflow 64 bits; use the big-int path
        from pathorder._kernels import _pyfallback
        kernel = _pyfallback.count_transitions
    prefix, window = kernel(d.flat, d.lens, d.freqs, n, k_max)
    return TransitionCounts(k_max, g.labels, d.n_total, prefix, window)


class LayerCounts:
    """Counts assembled for a specific maximum order K.

    Layer k < K uses prefix counts (full history length exactly k); the
    top layer K uses window counts (all longer histories aggregated onto
    their last-K suffix).
    """

    __slots__ = ("K", "g", "tc")

    def __init__(self, tc: TransitionCounts, g: NetworkConstraint, K: int):
        self.K = K
        self.g = g
        self.tc = tc

    @property
    def n_total(self) -> int:
        return self.tc.n_total

    def layer_raw(self, k: int):
        if not 0 <= k <= self.K:
            raise UsageError(f"layer {k} outside 0..{self.K}")
        if k < self.K:
            return self.tc.prefix_raw(k)
        return self.tc.window_raw(k)

    def rows(self, k: int):
        """Iterate (history, ((succ, count), ...)) rows of one layer."""
        keys, cnts = self.layer_raw(k)
        return _iter_rows(keys, cnts, self.tc.n_labels, k)

    def aligned_rows(self, k: int):
        """Rows as count vectors aligned to the canonical successor order."""
        for hist, pairs in self.rows(k):
            succ = successors_of(self.g, hist)
            pos = {v: i for i, v in enumerate(succ)}
            vec = [0] * len(succ)
            for v, c in pairs:
                vec[pos[v]] = c
            yield hist, succ, vec


def layer_counts(tc: TransitionCounts, g: NetworkConstraint, K: int) -> LayerCounts:
    """Assemble per-layer counts for maximum order K (requires K <= k_max)."""
    if K < 0:
        raise DomainError("maximum order must be nonnegative")
    if K > tc.k_max:
        raise UsageError(f"K={K} exceeds counted k_max={tc.k_max}")
    if tc.labels != g.labels:
        raise UsageError("counts and constraint use different node tables")
    return LayerCounts(tc, g, K)
