import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from gtepattern.netgen import Domain, NetworkParams, WireSet, generate_network
from gtepattern.topology import (
    Electrode,
    JunctionState,
    build_graph,
    components,
    connectivity,
    find_junctions,
    percolates,
    spanning_count,
)
from oracles import all_pairs_junctions


def wireset(segments, diameter=50.0, domain=Domain(10.0, 10.0)):
    p = np.array(segments, float)
    return WireSet(p[:, 0], p[:, 1], np.full(len(p), diameter), domain)


def test_cross_gives_one_junction():
    j = find_junctions(wireset([[(0, 0), (2, 2)], [(0, 2), (2, 0)]]))
    assert len(j) == 1
    assert np.allclose(j.position[0], (1.0, 1.0))
    assert np.allclose([j.t_a[0], j.t_b[0]], 0.5)


def test_parallel_segments_do_not_meet():
    assert len(find_junctions(wireset([[(0, 0), (5, 0)], [(0, 1), (5, 1)]]))) == 0


def test_collinear_overlap_at_midpoint():
    j = find_junctions(wireset([[(0, 1), (4, 1)], [(2, 1), (6, 1)]]))
    assert len(j) == 1
    assert np.allclose(j.position[0], (3.0, 1.0))


@pytest.mark.parametrize("seed", range(15))
def test_binning_matches_all_pairs(seed):
    w = generate_network(NetworkParams(50.0, 50.0, areal_density=0.08 + 0.008 * seed, seed=seed))
    j = find_junctions(w)
    oracle = all_pairs_junctions(w.p0, w.p1)
    got = list(zip(j.wire_a.tolist(), j.wire_b.tolist()))
    assert got == [(a, b) for a, b, _, _ in oracle]
    pos = np.array([(x, y) for _, _, x, y in oracle]).reshape(-1, 2)
    assert np.max(np.abs(pos - j.position), initial=0.0) < 1e-9


def test_cell_size_does_not_change_result():
    w = generate_network(NetworkParams(40.0, 40.0, areal_density=0.2, seed=1))
    ref = find_junctions(w)
    for cell in (0.7, 3.0, 40.0):
        j = find_junctions(w, cell)
        assert np.array_equal(j.wire_a, ref.wire_a) and np.array_equal(j.wire_b, ref.wire_b)


def test_single_wire_graph_is_one_edge():
    w = wireset([[(2, 3), (7, 6)]])
    g = build_graph(w, find_junctions(w))
    assert g.n_segments == 1
    assert g.seg_length[0] == pytest.approx(w.lengths[0], rel=1e-15)


def test_junction_splits_wire_into_additive_edges():
    w = wireset([[(1, 1), (9, 9)], [(1, 9), (9, 1)]])
    g = build_graph(w, find_junctions(w))
    for k in range(2):
        seg = g.seg_length[g.seg_wire == k]
        assert len(seg) == 2
        assert seg.sum() == pytest.approx(w.lengths[k], rel=1e-12)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32), density=st.floats(0.05, 0.6))
def test_graph_invariants(seed, density):
    w = generate_network(NetworkParams(30.0, 20.0, areal_density=density, length_mean=6.0, seed=seed))
    j = find_junctions(w)
    g = build_graph(w, j)
    # segments of each wire add up to the wire
    per_wire = np.bincount(g.seg_wire, g.seg_length, minlength=len(w))
    assert np.allclose(per_wire, w.lengths, rtol=1e-12, atol=1e-12)
    assert np.all(g.seg_length >= 0)
    # segments join consecutive nodes of one wire
    assert np.all(g.node_wire[g.seg_u] == g.node_wire[g.seg_v])
    # junction nodes sit on their wires at the junction position
    assert np.all(g.node_wire[g.junc_u] == j.wire_a)
    assert np.all(g.node_wire[g.junc_v] == j.wire_b)
    assert np.allclose(g.node_pos[g.junc_u], j.position, atol=1e-9)
    assert np.allclose(g.node_pos[g.junc_v], j.position, atol=1e-9)
    # contact nodes touch their bus bar
    x = g.node_pos[:, 0]
    assert np.allclose(x[g.node_electrode == 0], 0.0)
    assert np.allclose(x[g.node_electrode == 1], 30.0)


def test_empty_network_does_not_percolate():
    w = WireSet(np.empty((0, 2)), np.empty((0, 2)), np.empty(0), Domain(10.0, 10.0))
    assert not percolates(build_graph(w, find_junctions(w)))


def test_spanning_wire_percolates():
    w = wireset([[(0, 5), (10, 5)]])
    assert percolates(build_graph(w, find_junctions(w)))


def test_broken_junction_cuts_series_path():
    w = wireset([[(0, 2), (6, 2)], [(4, 0), (10, 9)]])
    j = find_junctions(w)
    g = build_graph(w, j)
    assert percolates(g, j.state)
    assert not percolates(g, np.full(len(j), JunctionState.BROKEN, np.int8))


def test_electrodes_outside_domain_rejected():
    w = wireset([[(0, 5), (10, 5)]])
    with pytest.raises(ValueError):
        build_graph(w, find_junctions(w), (Electrode(-1, 0, 0, 10), Electrode(10, 0, 10, 10)))
    with pytest.raises(ValueError):
        build_graph(w, find_junctions(w), (Electrode(0, 0, 6, 10), Electrode(5, 0, 10, 10)))


@settings(max_examples=30, deadline=None)
@given(n=st.integers(1, 200), m=st.integers(0, 400), seed=st.integers(0, 2**32))
def test_components_match_scipy(n, m, seed):
    gen = np.random.default_rng(seed)
    u = gen.integers(0, n, m)
    v = gen.integers(0, n, m)
    labels = components(n, u, v)
    ncomp, ref = connected_components(coo_matrix((np.ones(m), (u, v)), shape=(n, n)), directed=False)
    # same partition: labels agree pairwise
    assert len(np.unique(labels)) == ncomp
    assert np.array_equal(labels[:, None] == labels[None, :], ref[:, None] == ref[None, :])


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**32), frac=st.floats(0.0, 1.0))
def test_breaking_never_increases_connectivity(seed, frac):
    w = generate_network(NetworkParams(25.0, 25.0, areal_density=0.25, length_mean=6.0, seed=seed))
    j = find_junctions(w)
    g = build_graph(w, j)
    gen = np.random.default_rng(seed)
    state = np.where(gen.random(len(j)) < frac, JunctionState.BROKEN, JunctionState.PRISTINE).astype(np.int8)
    labels, n, _ = connectivity(g, state)
    before = len(np.unique(labels[: g.n_nodes]))
    if len(j):
        k = gen.integers(len(j))
        more = state.copy()
        more[k] = JunctionState.BROKEN
        labels2, _, _ = connectivity(g, more)
        # nodes of the original graph: breaking can only split components
        assert len(np.unique(labels2[: g.n_nodes])) >= before
        assert percolates(g, more) <= percolates(g, state)


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**32))
def test_percolation_invariant_under_relabeling(seed):
    w = generate_network(NetworkParams(30.0, 30.0, areal_density=0.12, length_mean=8.0, seed=seed))
    perm = np.random.default_rng(seed).permutation(len(w))
    w2 = WireSet(w.p0[perm], w.p1[perm], w.diameter[perm], w.domain)
    g1 = build_graph(w, find_junctions(w))
    g2 = build_graph(w2, find_junctions(w2))
    assert percolates(g1) == percolates(g2)


def test_spanning_count_agrees_with_graph():
    for seed in range(10):
        w = generate_network(NetworkParams(12.0, 12.0, areal_density=9.0, length_mean=1.0, length_cv=0.0, seed=seed))
        j = find_junctions(w)
        n = spanning_count(w, j)
        assert n is not None
        sub = w.subset(np.arange(n))
        assert percolates(build_graph(sub, find_junctions(sub)))
        sub = w.subset(np.arange(n - 1))
        assert not percolates(build_graph(sub, find_junctions(sub)))
