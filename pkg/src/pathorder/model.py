"""Layered Markov models of fixed maximum order: MLE and Bayesian fits.

A model of maximum order K stacks K+1 transition layers.  Layer k < K
conditions on full histories of exactly k nodes; layer K conditions on
the last K nodes of all longer histories.  Every probability vector
lives on the simplex over the feasible successors of its history.

All scores omit the dataset permutation constant: it is identical for
every order and every parameter value on a fixed dataset, so likelihoods
and marginal likelihoods are reported up to one additive constant that
cancels in every comparison.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from math import log
from typing import Sequence

from pathorder import numerics
from pathorder.constraint import (
    NetworkConstraint,
    enumerate_histories,
    successors_of,
)
from pathorder.errors import DomainError, ParseError, UsageError
from pathorder.pathdata import LayerCounts

_SIMPLEX_TOL = 1e-12


@dataclass(frozen=True)
class ModelScore:
    """Fit summary for one maximum order."""

    log_likelihood: float
    log_marginal_likelihood: float
    df: int


class MultiOrderParams:
    """Transition probabilities for layers 0..K.

    Only explicitly fitted histories are stored; any other feasible
    history implicitly carries the uniform vector over its successors.
    """

    __slots__ = ("K", "g", "layers")

    def __init__(self, K: int, g: NetworkConstraint,
                 layers: Sequence[dict]):
        if K < 0:
            raise DomainError("maximum order must be nonnegative")
        if len(layers) != K + 1:
            raise DomainError("expected one layer per order 0..K")
        for k, layer in enumerate(layers):
            for hist, vec in layer.items():
                succ = successors_of(g, hist)
                if len(hist) != k:
                    raise DomainError(f"history {hist} in wrong layer {k}")
                if len(vec) != len(succ):
                    raise DomainError(
                        f"probability vector length {len(vec)} != "
                        f"{len(succ)} successors for history {hist}")
                total = 0.0
                for p in vec:
                    if p < 0.0:
                        raise DomainError("negative probability")
                    total += p
                if abs(total - 1.0) > _SIMPLEX_TOL:
                    raise DomainError(
                        f"probabilities for history {hist} sum to {total!r}")
        self.K = K
        self.g = g
        self.layers = tuple(dict(layer) for layer in layers)

    def vector_for(self, k: int, hist: tuple[int, ...]) -> tuple[float, ...]:
        """Stored probability vector, or uniform for unobserved histories."""
        if not 0 <= k <= self.K:
            raise UsageError(f"layer {k} outside 0..{self.K}")
        stored = self.layers[k].get(hist)
        if stored is not None:
            return stored
        succ = successors_of(self.g, hist)
        if not succ:
            return ()
        u = 1.0 / len(succ)
        return (u,) * len(succ)

    def prob(self, k: int, hist: tuple[int, ...], v: int) -> float:
        succ = successors_of(self.g, hist)
        vec = self.vector_for(k, hist)
        for i, s in enumerate(succ):
            if s == v:
                return vec[i]
        return 0.0


class DirichletPosterior:
    """Per-history Dirichlet hyperparameters for layers 0..K.

    Histories never observed are represented implicitly by the symmetric
    all-alpha0 vector.
    """

    __slots__ = ("K", "g", "alpha0", "layers")

    def __init__(self, K: int, g: NetworkConstraint, alpha0: float,
                 layers: Sequence[dict]):
        if K < 0:
            raise DomainError("maximum order must be nonnegative")
        if alpha0 <= 0.0:
            raise DomainError("prior concentration must be positive")
        if len(layers) != K + 1:
            raise DomainError("expected one layer per order 0..K")
        for k, layer in enumerate(layers):
            for hist, vec in layer.items():
                if len(hist) != k:
                    raise DomainError(f"history {hist} in wrong layer {k}")
                succ = successors_of(g, hist)
                if len(vec) != len(succ):
                    raise DomainError(
                        f"hyperparameter vector length {len(vec)} != "
                        f"{len(succ)} successors for history {hist}")
                for a in vec:
                    if a <= 0.0:
                        raise DomainError("hyperparameters must be positive")
        self.K = K
        self.g = g
        self.alpha0 = alpha0
        self.layers = tuple(dict(layer) for layer in layers)

    def vector_for(self, k: int, hist: tuple[int, ...]) -> tuple[float, ...]:
        if not 0 <= k <= self.K:
            raise UsageError(f"layer {k} outside 0..{self.K}")
        stored = self.layers[k].get(hist)
        if stored is not None:
            return stored
        succ = successors_of(self.g, hist)
        return (self.alpha0,) * len(succ)


def flat_prior(g: NetworkConstraint, K: int, alpha0: float = 1.0) -> DirichletPosterior:
    """Symmetric Dirichlet prior with concentration alpha0 on every row."""
    return DirichletPosterior(K, g, alpha0, [dict() for _ in range(K + 1)])


def _check_match(a_K: int, a_g: NetworkConstraint, lc: LayerCounts):
    if a_K != lc.K:
        raise UsageError(f"model order {a_K} != counts order {lc.K}")
    if a_g.labels != lc.g.labels:
        raise UsageError("model and counts use different node tables")


def mle_fit(lc: LayerCounts, g: NetworkConstraint) -> MultiOrderParams:
    """Maximum likelihood fit: counts divided by row totals.

    Feasible histories with zero transitions are left implicit and read
    back as uniform vectors, the canonical representative of the MLE set
    (any vector is optimal when nothing was observed).
    """
    if g.labels != lc.g.labels:
        raise UsageError("constraint and counts use different node tables")
    layers = []
    for k in range(lc.K + 1):
        layer = {}
        for hist, succ, vec in lc.aligned_rows(k):
            total = float(sum(vec))
            layer[hist] = tuple(c / total for c in vec)
        layers.append(layer)
    return MultiOrderParams(lc.K, g, layers)


def log_likelihood(params: MultiOrderParams, lc: LayerCounts) -> float:
    """Sum of c * ln p over all layers, up to the dataset constant.

    Zero counts contribute nothing even where p = 0; a positive count on
    a zero-probability transition yields -inf.
    """
    _check_match(params.K, params.g, lc)
    acc = 0.0
    for k in range(lc.K + 1):
        for hist, succ, vec in lc.aligned_rows(k):
            probs = params.vector_for(k, hist)
            for c, p in zip(vec, probs):
                if c:
                    if p == 0.0:
                        return float("-inf")
                    acc += c * log(p)
    return acc


def posterior_update(prior: DirichletPosterior, lc: LayerCounts) -> DirichletPosterior:
    """Conjugate update: add observed counts to the hyperparameters."""
    _check_match(prior.K, prior.g, lc)
    layers = []
    for k in range(lc.K + 1):
        layer = dict(prior.layers[k])
        for hist, succ, vec in lc.aligned_rows(k):
            alpha = prior.vector_for(k, hist)
            layer[hist] = tuple(a + c for a, c in zip(alpha, vec))
        layers.append(layer)
    return DirichletPosterior(prior.K, prior.g, prior.alpha0, layers)


def log_marginal_likelihood(prior: DirichletPosterior, lc: LayerCounts) -> float:
    """Closed-form log evidence under the Dirichlet prior.

    Sum over observed rows of ln B(alpha + c) - ln B(alpha), with B the
    multivariate Beta; rows without observations contribute exactly 0.
    Reported up to the same additive dataset constant as log_likelihood.
    """
    _check_match(prior.K, prior.g, lc)
    acc = 0.0
    for k in range(lc.K + 1):
        for hist, succ, vec in lc.aligned_rows(k):
            alpha = prior.vector_for(k, hist)
            updated = [a + c for a, c in zip(alpha, vec)]
            acc += (numerics.log_multivariate_beta(updated)
                    - numerics.log_multivariate_beta(alpha))
    return acc


def sequence_log_probability(params: MultiOrderParams,
                             nodes: Sequence[int]) -> float:
    """Log-probability of one node sequence under the layered model.

    Position i uses layer min(i, K): the full prefix while it is shorter
    than K, the last-K window afterwards.
    """
    g = params.g
    seq = tuple(nodes)
    for v in seq:
        if not 0 <= v < g.n_nodes:
            raise DomainError(f"unknown node index {v}")
    for u, v in zip(seq, seq[1:]):
        if not g.has_edge(u, v):
            raise DomainError(
                f"transition {g.labels[u]}->{g.labels[v]} is not an edge")
    K = params.K
    acc = 0.0
    for i, v in enumerate(seq):
        k = i if i < K else K
        hist = seq[i - k:i]
        p = params.prob(k, hist, v)
        if p == 0.0:
            return float("-inf")
        acc += log(p)
    return acc


def sample_params(posterior: DirichletPosterior,
                  rng: numerics.RngState) -> MultiOrderParams:
    """Draw transition probabilities from the posterior, layer by layer.

    Enumerates every feasible history (capacity-checked), so this is
    meant for graphs whose history space is small enough to materialize.
    Rows are drawn in canonical order, one Dirichlet draw per history.
    """
    g = posterior.g
    layers = []
    for k in range(posterior.K + 1):
        layer = {}
        for hist in enumerate_histories(g, k):
            alpha = posterior.vector_for(k, hist)
            if not alpha:
                continue
            layer[hist] = tuple(numerics.dirichlet_variate(alpha, rng))
        layers.append(layer)
    return MultiOrderParams(posterior.K, g, layers)


def _history_key(g: NetworkConstraint, hist: tuple[int, ...]) -> str:
    return ",".join(g.labels[v] for v in hist)


def _parse_history_key(g: NetworkConstraint, key: str, k: int) -> tuple[int, ...]:
    if key == "":
        hist: tuple[int, ...] = ()
    else:
        hist = tuple(g.index_of(lab) for lab in key.split(","))
    if len(hist) != k:
        raise ParseError(f"history key {key!r} has wrong length for layer {k}")
    return hist


def to_json_dict(obj) -> dict:
    """JSON-compatible form; layer maps keyed by comma-joined labels.

    Only explicitly stored rows are written.  Unlisted feasible
    histories mean "uniform" for params and "all alpha0" for posteriors.
    """
    if isinstance(obj, MultiOrderParams):
        head = {"type": "multi_order_params"}
    elif isinstance(obj, DirichletPosterior):
        head = {"type": "dirichlet_posterior", "alpha0": obj.alpha0}
    else:
        raise UsageError(f"cannot serialize {type(obj).__name__}")
    layers = []
    for k, layer in enumerate(obj.layers):
        out = {}
        for hist in sorted(layer):
            out[_history_key(obj.g, hist)] = list(layer[hist])
        layers.append(out)
    head.update({"K": obj.K, "nodes": list(obj.g.labels), "layers": layers})
    return head


def from_json_dict(data: dict, g: NetworkConstraint):
    """Rebuild a serialized model against the given constraint."""
    try:
        kind = data["type"]
        K = data["K"]
        nodes = data["nodes"]
        raw_layers = data["layers"]
    except (KeyError, TypeError):
        raise ParseError("missing model fields") from None
    if tuple(nodes) != g.labels:
        raise UsageError("model node table does not match the constraint")
    if not isinstance(K, int) or len(raw_layers) != K + 1:
        raise ParseError("layer list inconsistent with K")
    layers = []
    for k, raw in enumerate(raw_layers):
        layer = {}
        for key, vec in raw.items():
            hist = _parse_history_key(g, key, k)
            layer[hist] = tuple(float(x) for x in vec)
        layers.append(layer)
    if kind == "multi_order_params":
        return MultiOrderParams(K, g, layers)
    if kind == "dirichlet_posterior":
        return DirichletPosterior(K, g, float(data["alpha0"]), layers)
    raise ParseError(f"unknown model type {kind!r}")


def save_model(obj, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(to_json_dict(obj), fh, indent=1)
        fh.write("\n")


def load_model(path: str, g: NetworkConstraint):
    with open(path, "r", encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid model file: {exc}") from None
    return from_json_dict(data, g)
