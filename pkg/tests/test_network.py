import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from stergm.network import (
    Network,
    NetworkError,
    TransitionDecomposition,
    all_dyads,
    apply_transition,
    decompose_transition,
    n_dyads,
)

from conftest import random_network


def test_basic_construction():
    net = Network.from_edges(4, True, [(1, 2), (2, 1), (3, 4)])
    assert net.edge_count == 3
    assert net.has(1, 2) and net.has(2, 1) and not net.has(1, 3)


def test_undirected_canonicalization():
    net = Network.from_edges(4, False, [(3, 1), (2, 4)])
    assert (1, 3) in net.ties and (2, 4) in net.ties
    assert net.has(3, 1) and net.has(1, 3)


def test_rejects_self_loop_and_range():
    with pytest.raises(NetworkError):
        Network.from_edges(3, True, [(2, 2)])
    with pytest.raises(NetworkError):
        Network.from_edges(3, True, [(1, 4)])
    with pytest.raises(NetworkError):
        Network.from_edges(3, False, [(1, 2), (2, 1)])  # duplicate after canonicalization


def test_incompatible_operands():
    a = Network.empty(3, True)
    b = Network.empty(3, False)
    with pytest.raises(NetworkError):
        a.union(b)
    with pytest.raises(NetworkError):
        decompose_transition(a, Network.empty(4, True))


def test_decompose_examples():
    y0 = Network.from_edges(3, True, [(1, 2)])
    y1 = Network.from_edges(3, True, [(1, 2), (2, 3)])
    d = decompose_transition(y0, y1)
    assert d.y_plus.ties == {(1, 2), (2, 3)}
    assert d.y_minus.ties == {(1, 2)}
    # pure dissolution
    d2 = decompose_transition(y0, Network.empty(3, True))
    assert d2.y_plus.ties == {(1, 2)} and d2.y_minus.ties == set()


def test_single_tie_transition_table():
    # the four legal per-dyad trajectories: y_prev -> (y+, y-) -> y_next
    cases = [(0, (0, 0), 0), (0, (1, 0), 1), (1, (1, 0), 0), (1, (1, 1), 1)]
    for prev, (plus, minus), nxt in cases:
        y_prev = Network.from_edges(2, True, [(1, 2)] if prev else [])
        y_next = Network.from_edges(2, True, [(1, 2)] if nxt else [])
        d = decompose_transition(y_prev, y_next)
        assert ((1, 2) in d.y_plus.ties) == bool(plus)
        assert ((1, 2) in d.y_minus.ties) == bool(minus)
        assert apply_transition(y_prev, d).ties == y_next.ties


def test_apply_examples():
    y_prev = Network.from_edges(4, True, [(1, 2), (3, 4)])
    d = TransitionDecomposition(
        y_plus=Network.from_edges(4, True, [(1, 2), (3, 4), (2, 3)]),
        y_minus=Network.from_edges(4, True, [(1, 2)]),
    )
    assert apply_transition(y_prev, d).ties == {(1, 2), (2, 3)}
    ident = TransitionDecomposition(y_plus=y_prev, y_minus=y_prev)
    assert apply_transition(y_prev, ident).ties == y_prev.ties


def test_apply_containment_violation():
    y_prev = Network.from_edges(3, True, [(1, 2)])
    bad = TransitionDecomposition(
        y_plus=Network.from_edges(3, True, [(2, 3)]),
        y_minus=Network.empty(3, True),
    )
    with pytest.raises(NetworkError):
        apply_transition(y_prev, bad)


@pytest.mark.parametrize("n,directed", [(3, True), (3, False), (10, True), (10, False)])
def test_roundtrip_random(n, directed, rng):
    for _ in range(200):
        y_prev = random_network(n, directed, rng)
        y_next = random_network(n, directed, rng)
        d = decompose_transition(y_prev, y_next)
        assert apply_transition(y_prev, d).ties == y_next.ties
        assert d.y_minus.issubset(y_prev) and y_prev.issubset(d.y_plus)
        assert d.y_minus.issubset(y_next) and y_next.issubset(d.y_plus)


@given(
    data=st.data(),
    n=st.integers(min_value=2, max_value=8),
    directed=st.booleans(),
)
@settings(max_examples=100, deadline=None)
def test_permutation_equivariance(data, n, directed):
    dyads = list(all_dyads(n, directed))
    prev_ties = data.draw(st.sets(st.sampled_from(dyads)))
    next_ties = data.draw(st.sets(st.sampled_from(dyads)))
    perm_list = data.draw(st.permutations(list(range(1, n + 1))))
    perm = {i + 1: perm_list[i] for i in range(n)}
    y_prev = Network.from_edges(n, directed, prev_ties)
    y_next = Network.from_edges(n, directed, next_ties)
    d = decompose_transition(y_prev, y_next)
    d_perm = decompose_transition(y_prev.relabel(perm), y_next.relabel(perm))
    assert d_perm.y_plus.ties == d.y_plus.relabel(perm).ties
    assert d_perm.y_minus.ties == d.y_minus.relabel(perm).ties


def test_n_dyads():
    assert n_dyads(5, True) == 20
    assert n_dyads(5, False) == 10
    assert len(list(all_dyads(5, True))) == 20
