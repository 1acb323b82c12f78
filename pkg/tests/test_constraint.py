import io

import pytest

from pathorder.constraint import (
    NetworkConstraint,
    build,
    complete_digraph,
    degrees_of_freedom,
    edge_lines,
    enumerate_histories,
    parse_edge_lines,
    prune_dead_ends,
    successors_of,
)
from pathorder.errors import (
    CapacityError,
    ConstraintViolationError,
    DomainError,
    ParseError,
)
from pathorder.numerics import RngState


def test_build_sorts_labels_and_successors():
    g = build([("z", "a"), ("a", "m"), ("z", "m")])
    assert g.labels == ("a", "m", "z")
    assert g.successors[g.index_of("z")] == (0, 1)
    assert g.n_nodes == 3
    assert g.n_edges == 3


def test_build_collapses_duplicate_edges():
    g = build([("a", "b"), ("a", "b")])
    assert g.n_edges == 1


def test_undirected_inserts_both_directions():
    g = build([("a", "b")], undirected=True)
    assert g.has_edge(0, 1) and g.has_edge(1, 0)


def test_self_loop_rejected_by_default():
    with pytest.raises(DomainError):
        build([("a", "a")])
    g = build([("a", "a"), ("a", "b")], allow_self_loops=True)
    assert g.has_edge(0, 0)


def test_labels_with_commas_or_whitespace_rejected():
    for bad in ("a,b", "", " a", "a "):
        with pytest.raises(DomainError):
            NetworkConstraint([bad, "ok"], [[], []])


def test_duplicate_labels_rejected():
    with pytest.raises(DomainError):
        NetworkConstraint(["a", "a"], [[], []])


def test_successor_lists_must_be_sorted_unique():
    with pytest.raises(DomainError):
        NetworkConstraint(["a", "b"], [[1, 0], []])
    with pytest.raises(DomainError):
        NetworkConstraint(["a", "b"], [[1, 1], []])
    with pytest.raises(DomainError):
        NetworkConstraint(["a", "b"], [[2], []])


def test_parse_edge_lines_reports_line_numbers():
    with pytest.raises(ParseError) as exc:
        parse_edge_lines(io.StringIO("a,b\nbogus line\n"))
    assert "line 2" in str(exc.value)


def test_parse_edge_lines_skips_comments_and_blanks():
    g = parse_edge_lines(io.StringIO("# comment\n\na,b\n  b,c  \n"))
    assert g.n_edges == 2


def test_parse_edge_lines_self_loop_line_number():
    with pytest.raises(ParseError) as exc:
        parse_edge_lines(io.StringIO("a,b\nc,c\n"))
    assert "line 2" in str(exc.value)


def test_edge_lines_round_trip(cycle3):
    again = parse_edge_lines(iter(edge_lines(cycle3)))
    assert again == cycle3


def test_successors_of_cycle(cycle3):
    a, b, c = range(3)
    assert successors_of(cycle3, (a,)) == (b,)
    assert successors_of(cycle3, ()) == (a, b, c)
    with pytest.raises(ConstraintViolationError):
        successors_of(cycle3, (a, c))
    with pytest.raises(DomainError):
        successors_of(cycle3, (7,))


def test_successors_of_star_uses_last_node(star):
    a, b, c = range(3)
    assert successors_of(star, (b, a)) == (b, c)


def test_enumerate_histories_lexicographic(cycle3):
    assert list(enumerate_histories(cycle3, 0)) == [()]
    assert list(enumerate_histories(cycle3, 1)) == [(0,), (1,), (2,)]
    assert list(enumerate_histories(cycle3, 2)) == [(0, 1), (1, 2), (2, 0)]
    with pytest.raises(DomainError):
        enumerate_histories(cycle3, -1)


def test_dof_cycle_layers(cycle3):
    dof = degrees_of_freedom(cycle3, 2)
    assert dof.per_layer == (2, 0, 0)
    assert dof.cumulative == (2, 2, 2)
    assert dof.total(2) == 2
    with pytest.raises(DomainError):
        dof.total(3)


def test_dof_complete_digraph_closed_form():
    # with self-loops every layer k has n^k histories of out-degree n
    g = complete_digraph(["a", "b", "c"], self_loops=True)
    dof = degrees_of_freedom(g, 3)
    assert dof.per_layer == (2, 6, 18, 54)
    assert dof.total(1) == 8


def test_complete_digraph_without_self_loops():
    g = complete_digraph(["a", "b", "c"], self_loops=False)
    assert g.successors == ((1, 2), (0, 2), (0, 1))
    with pytest.raises(DomainError):
        complete_digraph(["a", "a"])


def brute_force_dof(g, K):
    per_layer = []
    for k in range(K + 1):
        layer = 0
        for hist in enumerate_histories(g, k):
            layer += max(len(successors_of(g, hist)) - 1, 0)
        per_layer.append(layer)
    return tuple(per_layer)


def test_dof_matches_brute_force_on_random_graphs():
    rng = RngState(909, stream=5)
    for trial in range(25):
        n = 2 + rng.below(6)
        labels = [f"v{i}" for i in range(n)]
        succ = [sorted({rng.below(n) for _ in range(rng.below(4))})
                for _ in range(n)]
        g = NetworkConstraint(labels, succ)
        K = rng.below(4)
        assert degrees_of_freedom(g, K).per_layer == brute_force_dof(g, K)


def test_dof_negative_order_rejected(cycle3):
    with pytest.raises(DomainError):
        degrees_of_freedom(cycle3, -1)


def test_dof_overflow_raises_capacity_error():
    g = complete_digraph([f"x{i:02d}" for i in range(10)], self_loops=True)
    # per-layer df is 9*10^k; the K=17 total is 10^18-1, still in range
    assert degrees_of_freedom(g, 17).total(17) == 10 ** 18 - 1
    with pytest.raises(CapacityError):
        degrees_of_freedom(g, 18)


def test_enumerate_histories_capacity_guard():
    g = complete_digraph([f"x{i:02d}" for i in range(10)], self_loops=True)
    with pytest.raises(CapacityError):
        enumerate_histories(g, 20)


def test_prune_dead_ends_to_fixpoint():
    # a -> b -> c: removing c leaves b dead, then a; nothing survives
    g = parse_edge_lines(io.StringIO("a,b\nb,c\n"))
    assert prune_dead_ends(g).n_nodes == 0
    # cycle with a pendant: pendant goes, cycle stays
    g2 = parse_edge_lines(io.StringIO("a,b\nb,c\nc,a\nc,d\n"))
    pruned = prune_dead_ends(g2)
    assert pruned.labels == ("a", "b", "c")
    assert pruned.n_edges == 3


def test_empty_history_successors_after_prune():
    g = prune_dead_ends(parse_edge_lines(io.StringIO("a,b\nb,a\nb,c\n")))
    assert successors_of(g, ()) == tuple(range(g.n_nodes))


def test_history_label_round_trip(star):
    hist = star.history_from_labels(["b", "a"])
    assert hist == (1, 0)
    assert star.history_labels(hist) == ("b", "a")
    with pytest.raises(DomainError):
        star.history_from_labels(["nope"])
