from collections import defaultdict
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mahc.errors import CycleError
from mahc.graph import (
    BIDIRECTED,
    DIRECTED,
    UNDIRECTED,
    Dag,
    MixedGraph,
    Move,
    MoveKind,
    apply_move,
    is_acyclic,
    read_dag,
    read_mixed,
    to_cpdag,
    valid_neighbors,
    write_dag,
    write_mixed,
)
from mahc.oracles import all_dags, dfs_acyclic, equivalence_key, oracle_neighbors

ADD, DELETE, REVERSE = MoveKind.ADD, MoveKind.DELETE, MoveKind.REVERSE


def test_apply_move_examples():
    g = apply_move(Dag(3), Move(ADD, 0, 1))
    assert g.arcs == {(0, 1)}
    chain = Dag(3, [(0, 1), (1, 2)])
    assert apply_move(chain, Move(REVERSE, 0, 1)).arcs == {(1, 0), (1, 2)}
    with pytest.raises(CycleError):
        apply_move(chain, Move(ADD, 2, 0))


def test_apply_move_rejects_inapplicable():
    with pytest.raises(ValueError):
        apply_move(Dag(2), Move(DELETE, 0, 1))
    with pytest.raises(ValueError):
        apply_move(Dag(2, [(0, 1)]), Move(ADD, 0, 1))


def test_reverse_with_alternative_path_is_cyclic():
    g = Dag(3, [(0, 1), (1, 2), (0, 2)])
    with pytest.raises(CycleError):
        apply_move(g, Move(REVERSE, 0, 2))


def test_valid_neighbors_two_nodes():
    assert [m for m, _ in valid_neighbors(Dag(2), (), 8)] == [Move(ADD, 0, 1), Move(ADD, 1, 0)]
    assert [m for m, _ in valid_neighbors(Dag(2), {(1, 0)}, 8)] == [Move(ADD, 0, 1)]


def test_valid_neighbors_order():
    g = Dag(3, [(0, 1)])
    moves = [m for m, _ in valid_neighbors(g)]
    assert moves == sorted(moves)
    assert [m.kind for m in moves] == [ADD] * 4 + [DELETE] + [REVERSE]


def test_in_degree_cap():
    g = Dag(3, [(0, 2)])
    moves = [m for m, _ in valid_neighbors(g, (), max_in_degree=1)]
    assert Move(ADD, 1, 2) not in moves
    assert Move(ADD, 1, 0) in moves


def arc_sets(max_nodes=6):
    return st.integers(2, max_nodes).flatmap(
        lambda n: st.tuples(
            st.just(n),
            st.sets(st.tuples(st.integers(0, n - 1), st.integers(0, n - 1)).filter(lambda a: a[0] != a[1]), max_size=10),
        )
    )


@settings(max_examples=200, deadline=None)
@given(arc_sets(8))
def test_is_acyclic_agrees_with_dfs(case):
    n, arcs = case
    assert is_acyclic(arcs, n) == dfs_acyclic(arcs, n)


def test_is_acyclic_examples():
    assert is_acyclic({(0, 1), (1, 2)})
    assert not is_acyclic({(0, 1), (1, 0)})


def random_dag(seed, n, p=0.4):
    rng = np.random.Generator(np.random.PCG64(seed))
    order = rng.permutation(n)
    arcs = [(int(order[i]), int(order[j])) for i in range(n) for j in range(i + 1, n) if rng.random() < p]
    return Dag(n, arcs)


@settings(max_examples=80, deadline=None)
@given(seed=st.integers(0, 100_000), n=st.integers(2, 6), cap=st.integers(1, 4), data=st.data())
def test_valid_neighbors_match_brute_force(seed, n, cap, data):
    g = random_dag(seed, n)
    if max((g.in_degree(v) for v in range(n)), default=0) > cap:
        cap = n
    pairs = [(a, b) for a in range(n) for b in range(n) if a != b]
    forbidden = set(data.draw(st.sets(st.sampled_from(pairs), max_size=len(pairs))))
    forbidden -= g.arcs  # the current graph must respect the forbidden set
    fast = valid_neighbors(g, forbidden, cap)
    brute = oracle_neighbors(g.arcs, n, forbidden, cap)
    assert sorted(sorted(h.arcs) for _, h in fast) == sorted(sorted(h) for h in brute)
    for _, h in fast:
        assert is_acyclic(h.arcs, n)
        assert not (h.arcs - g.arcs) & forbidden
        assert all(h.in_degree(v) <= cap for v in range(n))


def test_cpdag_examples():
    collider = to_cpdag(Dag(3, [(0, 1), (2, 1)]))
    assert collider.edges() == [(0, 1, DIRECTED), (2, 1, DIRECTED)]
    chain = to_cpdag(Dag(3, [(0, 1), (1, 2)]))
    assert chain.edges() == [(0, 1, UNDIRECTED), (1, 2, UNDIRECTED)]


def test_cpdag_asia(asia_net):
    cp = to_cpdag(asia_net.dag)
    names = asia_net.names
    marks = {(names[a], names[b]): m for a, b, m in cp.edges()}
    assert marks == {
        ("asia", "tub"): UNDIRECTED,
        ("smoke", "lung"): UNDIRECTED,
        ("smoke", "bronc"): UNDIRECTED,
        ("tub", "either"): DIRECTED,
        ("lung", "either"): DIRECTED,
        ("either", "xray"): DIRECTED,
        ("either", "dysp"): DIRECTED,
        ("bronc", "dysp"): DIRECTED,
    }


@pytest.fixture(scope="module")
def four_node_classes():
    classes = defaultdict(list)
    for arcs in all_dags(4):
        classes[equivalence_key(arcs)].append(Dag(4, arcs))
    return classes


def test_543_dags(four_node_classes):
    assert sum(len(v) for v in four_node_classes.values()) == 543


def test_cpdag_identifies_equivalence_classes(four_node_classes):
    seen = {}
    for key, members in four_node_classes.items():
        cps = {to_cpdag(g) for g in members}
        assert len(cps) == 1
        cp = cps.pop()
        assert cp not in seen.values()  # different classes never share a CPDAG
        seen[key] = cp
        for g in members:
            assert {frozenset((a, b)) for a, b, _ in cp.edges()} == g.skeleton()
            for a, c, b in g.v_structures():
                assert cp.mark(a, c) == DIRECTED and cp.mark(b, c) == DIRECTED


def test_cpdag_of_5_node_random_dags_is_equivalence_invariant():
    for seed in range(30):
        g = random_dag(seed, 5, 0.5)
        # any covered-arc reversal stays in the class
        for a, b in g.arcs:
            if g.parents(b) == g.parents(a) | {a}:
                h = apply_move(g, Move(REVERSE, a, b))
                assert to_cpdag(h) == to_cpdag(g)


def test_mixed_graph_marks():
    g = MixedGraph(3, [(2, 0, DIRECTED), (1, 2, BIDIRECTED)])
    assert g.mark(2, 0) == DIRECTED and g.mark(0, 2) == "<-"
    assert g.mark(2, 1) == BIDIRECTED
    assert g.mark(0, 1) is None
    with pytest.raises(ValueError):
        g.add_edge(0, 2, UNDIRECTED)


def test_graph_files_round_trip(tmp_path: Path):
    names = ["a", "b", "c"]
    g = Dag(3, [(0, 1), (2, 1)])
    write_dag(g, names, tmp_path / "g.csv")
    assert (tmp_path / "g.csv").read_text() == "parent,child\na,b\nc,b\n"
    assert read_dag(tmp_path / "g.csv", names) == g
    m = MixedGraph(3, [(1, 0, DIRECTED), (1, 2, UNDIRECTED), (0, 2, BIDIRECTED)])
    write_mixed(m, names, tmp_path / "m.csv")
    assert read_mixed(tmp_path / "m.csv", names) == m
