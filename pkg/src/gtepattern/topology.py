"""Junction detection, electrical graph construction and connectivity queries."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from . import rng
from .netgen import Domain, WireSet, clip_segments

POSITION_TOL = 1e-9  # um; node merge distance along a wire


class JunctionState(enum.IntEnum):
    PRISTINE = 0
    DA_DECORATED = 1
    WELDED = 2
    BROKEN = 3


class JunctionSet:
    """Wire-wire crossings in canonical order.

    Junction ``k`` joins wires ``wire_a[k] < wire_b[k]`` at ``position[k]``,
    which sits at parameter ``t_a[k]`` along wire a and ``t_b[k]`` along wire b.
    Geometry is shared between copies; only ``state`` is per-copy.
    """

    def __init__(self, wire_a, wire_b, position, t_a, t_b, state=None):
        self.wire_a = np.asarray(wire_a, dtype=np.int64)
        self.wire_b = np.asarray(wire_b, dtype=np.int64)
        self.position = np.asarray(position, dtype=np.float64).reshape(-1, 2)
        self.t_a = np.asarray(t_a, dtype=np.float64)
        self.t_b = np.asarray(t_b, dtype=np.float64)
        if state is None:
            state = np.full(len(self.wire_a), JunctionState.PRISTINE, dtype=np.int8)
        self.state = np.asarray(state, dtype=np.int8)

    def __len__(self) -> int:
        return len(self.wire_a)

    @property
    def ids(self) -> np.ndarray:
        return np.arange(len(self), dtype=np.int64)

    def with_state(self, state) -> "JunctionSet":
        return JunctionSet(self.wire_a, self.wire_b, self.position, self.t_a, self.t_b, state)

    def census(self) -> dict[str, int]:
        counts = np.bincount(self.state, minlength=len(JunctionState))
        return {s.name.lower(): int(counts[s]) for s in JunctionState}


# ---------------------------------------------------------------------------
# segment intersection


def intersect_pairs(p0, p1, a, b):
    """Intersections of segments ``a[k]`` and ``b[k]``.

    Returns ``(hit, t_a, t_b, position)``.  Collinear overlaps yield one point
    at the overlap midpoint.
    """
    P = p0[a]
    r = p1[a] - P
    Q = p0[b]
    s = p1[b] - Q
    qp = Q - P
    denom = r[:, 0] * s[:, 1] - r[:, 1] * s[:, 0]
    rr = np.einsum("ij,ij->i", r, r)
    ss = np.einsum("ij,ij->i", s, s)
    scale = np.sqrt(rr * ss)
    transversal = np.abs(denom) > 1e-12 * scale

    with np.errstate(divide="ignore", invalid="ignore"):
        t = (qp[:, 0] * s[:, 1] - qp[:, 1] * s[:, 0]) / denom
        u = (qp[:, 0] * r[:, 1] - qp[:, 1] * r[:, 0]) / denom
    hit = transversal & (t >= 0) & (t <= 1) & (u >= 0) & (u <= 1)

    # collinear overlaps
    cross_qr = qp[:, 0] * r[:, 1] - qp[:, 1] * r[:, 0]
    collinear = ~transversal & (np.abs(cross_qr) <= 1e-12 * np.sqrt(rr) * (np.sqrt(rr) + np.sqrt(ss)))
    if collinear.any():
        i = np.flatnonzero(collinear)
        tb0 = np.einsum("ij,ij->i", qp[i], r[i]) / rr[i]
        tb1 = np.einsum("ij,ij->i", qp[i] + s[i], r[i]) / rr[i]
        lo = np.maximum(0.0, np.minimum(tb0, tb1))
        hi = np.minimum(1.0, np.maximum(tb0, tb1))
        ok = lo <= hi
        tm = 0.5 * (lo + hi)
        pos = P[i] + tm[:, None] * r[i]
        um = np.einsum("ij,ij->i", pos - Q[i], s[i]) / ss[i]
        t[i] = np.where(ok, tm, t[i])
        u[i] = np.where(ok, np.clip(um, 0.0, 1.0), u[i])
        hit[i] = ok
    with np.errstate(invalid="ignore"):
        position = P + t[:, None] * r
    return hit, t, u, position


def _candidate_pairs(p0, p1, cell_size, domain: Domain):
    n = len(p0)
    nx = max(1, min(4096, int(math.ceil(domain.width / cell_size))))
    ny = max(1, min(4096, int(math.ceil(domain.height / cell_size))))
    cx = domain.width / nx
    cy = domain.height / ny
    lo = np.minimum(p0, p1)
    hi = np.maximum(p0, p1)
    ix0 = np.clip((lo[:, 0] / cx).astype(np.int64), 0, nx - 1)
    ix1 = np.clip((hi[:, 0] / cx).astype(np.int64), 0, nx - 1)
    iy0 = np.clip((lo[:, 1] / cy).astype(np.int64), 0, ny - 1)
    iy1 = np.clip((hi[:, 1] / cy).astype(np.int64), 0, ny - 1)
    wx = ix1 - ix0 + 1
    wy = iy1 - iy0 + 1
    counts = wx * wy

    # one (cell, wire) entry per bounding-box cell of each wire
    wire = np.repeat(np.arange(n), counts)
    local = np.arange(counts.sum()) - np.repeat(np.cumsum(counts) - counts, counts)
    ex = ix0[wire] + local % wx[wire]
    ey = iy0[wire] + local // wx[wire]
    cell = ey * nx + ex

    order = np.lexsort((wire, cell))
    cell = cell[order]
    wire = wire[order]
    starts = np.flatnonzero(np.r_[True, cell[1:] != cell[:-1]])
    sizes = np.diff(np.r_[starts, len(cell)])
    # for each entry, pair with the later entries of the same cell
    group_end = np.repeat(starts + sizes, sizes)
    pos = np.arange(len(cell))
    partners = group_end - pos - 1
    first = np.repeat(pos, partners)
    offset = np.arange(partners.sum()) - np.repeat(np.cumsum(partners) - partners, partners)
    second = first + offset + 1
    a = wire[first]
    b = wire[second]
    key = np.unique(np.minimum(a, b) * n + np.maximum(a, b))
    return key // n, key % n


def find_junctions(wires: WireSet, cell_size: float | None = None) -> JunctionSet:
    """All pairwise wire crossings, found with a uniform spatial grid.

    ``cell_size`` defaults to the mean wire length.  Junctions are ordered by
    ``(wire_a, wire_b, x, y)`` and numbered in that order.
    """
    n = len(wires)
    if n < 2:
        return JunctionSet(np.empty(0), np.empty(0), np.empty((0, 2)), np.empty(0), np.empty(0))
    if cell_size is None:
        cell_size = float(wires.lengths.mean())
    a, b = _candidate_pairs(wires.p0, wires.p1, max(cell_size, 1e-9), wires.domain)
    hit, t, u, pos = intersect_pairs(wires.p0, wires.p1, a, b)
    a, b, t, u, pos = a[hit], b[hit], t[hit], u[hit], pos[hit]
    order = np.lexsort((pos[:, 1], pos[:, 0], b, a))
    return JunctionSet(a[order], b[order], pos[order], t[order], u[order])


# ---------------------------------------------------------------------------
# electrical graph


@dataclass(frozen=True)
class Electrode:
    """Closed axis-aligned rectangle held at a fixed potential."""

    x0: float
    y0: float
    x1: float
    y1: float


def bus_bars(domain: Domain) -> tuple[Electrode, Electrode]:
    """Full-height bars on the left (x = 0) and right (x = width) edges."""
    return (
        Electrode(0.0, 0.0, 0.0, domain.height),
        Electrode(domain.width, 0.0, domain.width, domain.height),
    )


@dataclass
class NetworkGraph:
    """Wires subdivided at junctions and electrode contacts.

    Every node lies on exactly one wire.  A junction couples its two nodes
    (``junc_u[k]`` on wire a, ``junc_v[k]`` on wire b) through a contact
    resistance.  ``node_electrode`` is -1 for free nodes, otherwise the index of
    the electrode the node touches.
    """

    n_nodes: int
    node_pos: np.ndarray
    node_wire: np.ndarray
    node_electrode: np.ndarray
    seg_u: np.ndarray
    seg_v: np.ndarray
    seg_length: np.ndarray
    seg_diameter: np.ndarray
    seg_wire: np.ndarray
    junc_u: np.ndarray
    junc_v: np.ndarray
    out_seg: np.ndarray
    electrodes: tuple[Electrode, Electrode]
    domain: Domain

    @property
    def n_segments(self) -> int:
        return len(self.seg_u)

    @property
    def n_junctions(self) -> int:
        return len(self.junc_u)

    def degree(self) -> np.ndarray:
        deg = np.bincount(self.seg_u, minlength=self.n_nodes)
        deg += np.bincount(self.seg_v, minlength=self.n_nodes)
        deg += np.bincount(self.junc_u, minlength=self.n_nodes)
        deg += np.bincount(self.junc_v, minlength=self.n_nodes)
        return deg

    def conduction_edges(self, state):
        """Edges that conduct for the given junction states.

        A BROKEN junction has no contact and also severs both of its wires at
        the crossing point: the segment leaving each junction node is moved to
        a fresh node.  Returns ``(seg_u, seg_v, junc_u, junc_v, junc_index,
        n_nodes)``.
        """
        state = np.asarray(state)
        broken = state == JunctionState.BROKEN
        seg_u = self.seg_u
        n = self.n_nodes
        if broken.any():
            cut = self.out_seg[np.r_[self.junc_u[broken], self.junc_v[broken]]]
            cut = np.unique(cut[cut >= 0])
            seg_u = seg_u.copy()
            seg_u[cut] = n + np.arange(len(cut))
            n += len(cut)
        keep = np.flatnonzero(~broken)
        return seg_u, self.seg_v, self.junc_u[keep], self.junc_v[keep], keep, n


def _check_electrode(e: Electrode, domain: Domain):
    tol = 1e-9 * max(domain.width, domain.height)
    if not (e.x0 <= e.x1 and e.y0 <= e.y1):
        raise ValueError(f"electrode {e} has inverted corners")
    if e.x0 < -tol or e.y0 < -tol or e.x1 > domain.width + tol or e.y1 > domain.height + tol:
        raise ValueError(f"electrode {e} lies outside the domain {domain}")


def build_graph(wires: WireSet, junctions: JunctionSet, electrodes=None) -> NetworkGraph:
    """Subdivide wires at junctions and contacts.

    ``electrodes`` is a pair of :class:`Electrode`; the default is the two
    bus bars of :func:`bus_bars`.  A wire that touches an electrode gains a
    contact node at the middle of its portion inside the electrode.
    """
    domain = wires.domain
    if electrodes is None:
        electrodes = bus_bars(domain)
    electrodes = tuple(electrodes)
    if len(electrodes) != 2:
        raise ValueError("exactly two electrodes are required")
    for e in electrodes:
        _check_electrode(e, domain)
    a, b = electrodes
    if a.x0 <= b.x1 and b.x0 <= a.x1 and a.y0 <= b.y1 and b.y0 <= a.y1:
        raise ValueError(f"electrodes {a} and {b} overlap")

    n = len(wires)
    nj = len(junctions)
    # event kinds: 0 = endpoint, 1 = junction side a, 2 = junction side b, 3 = contact
    ev_wire = [np.repeat(np.arange(n), 2), junctions.wire_a, junctions.wire_b]
    ev_t = [np.tile([0.0, 1.0], n), junctions.t_a, junctions.t_b]
    ev_kind = [np.zeros(2 * n, np.int64), np.ones(nj, np.int64), np.full(nj, 2, np.int64)]
    ev_ref = [np.full(2 * n, -1, np.int64), junctions.ids, junctions.ids]
    for k, e in enumerate(electrodes):
        t0, t1, keep = clip_segments(wires.p0, wires.p1, e.x0, e.y0, e.x1, e.y1)
        idx = np.flatnonzero(keep)
        ev_wire.append(idx)
        ev_t.append(0.5 * (t0[idx] + t1[idx]))
        ev_kind.append(np.full(len(idx), 3, np.int64))
        ev_ref.append(np.full(len(idx), k, np.int64))
    ev_wire = np.concatenate(ev_wire).astype(np.int64)
    ev_t = np.concatenate(ev_t)
    ev_kind = np.concatenate(ev_kind)
    ev_ref = np.concatenate(ev_ref)

    order = np.lexsort((ev_kind, ev_t, ev_wire))
    ev_wire, ev_t, ev_kind, ev_ref = ev_wire[order], ev_t[order], ev_kind[order], ev_ref[order]
    lengths = wires.lengths
    same_wire = np.r_[False, ev_wire[1:] == ev_wire[:-1]]
    gap = np.r_[np.inf, np.diff(ev_t)] * lengths[ev_wire]
    new_node = ~same_wire | (gap > POSITION_TOL)
    node_of_event = np.cumsum(new_node) - 1
    n_nodes = int(node_of_event[-1] + 1) if len(node_of_event) else 0

    first = np.flatnonzero(new_node)
    node_wire = ev_wire[first]
    node_t = ev_t[first]
    d = wires.p1 - wires.p0
    node_pos = wires.p0[node_wire] + node_t[:, None] * d[node_wire]

    node_electrode = np.full(n_nodes, -1, np.int8)
    contact = ev_kind == 3
    for k in range(2):
        nodes = node_of_event[contact & (ev_ref == k)]
        if k == 1 and (node_electrode[nodes] == 0).any():
            raise ValueError("electrodes overlap on a wire node")
        node_electrode[nodes] = k

    # consecutive nodes on a wire
    nxt = np.r_[node_wire[1:] == node_wire[:-1], False]
    seg_u = np.flatnonzero(nxt)
    seg_v = seg_u + 1
    seg_wire = node_wire[seg_u]
    seg_length = (node_t[seg_v] - node_t[seg_u]) * lengths[seg_wire]
    out_seg = np.full(n_nodes, -1, np.int64)
    out_seg[seg_u] = np.arange(len(seg_u))

    junc_u = np.empty(nj, np.int64)
    junc_v = np.empty(nj, np.int64)
    sel = ev_kind == 1
    junc_u[ev_ref[sel]] = node_of_event[sel]
    sel = ev_kind == 2
    junc_v[ev_ref[sel]] = node_of_event[sel]

    return NetworkGraph(
        n_nodes=n_nodes,
        node_pos=node_pos,
        node_wire=node_wire,
        node_electrode=node_electrode,
        seg_u=seg_u,
        seg_v=seg_v,
        seg_length=seg_length,
        seg_diameter=wires.diameter[seg_wire],
        seg_wire=seg_wire,
        junc_u=junc_u,
        junc_v=junc_v,
        out_seg=out_seg,
        electrodes=electrodes,
        domain=domain,
    )


# ---------------------------------------------------------------------------
# connectivity


def components(n: int, u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Root label of every node, by vectorized union-find.

    Roots are hooked onto the smaller root of each edge and the forest is then
    fully path-compressed; the loop ends when every edge joins equal roots.
    The root of a component is its smallest node index.
    """
    parent = np.arange(n)
    u = np.asarray(u, dtype=np.int64)
    v = np.asarray(v, dtype=np.int64)
    while True:
        pu = parent[u]
        pv = parent[v]
        diff = pu != pv
        if not diff.any():
            return parent
        lo = np.minimum(pu[diff], pv[diff])
        hi = np.maximum(pu[diff], pv[diff])
        np.minimum.at(parent, hi, lo)
        while True:
            grand = parent[parent]
            if np.array_equal(grand, parent):
                break
            parent = grand


def connectivity(graph: NetworkGraph, state):
    """``(labels, n_nodes, edges)`` for the conducting part of the graph."""
    seg_u, seg_v, junc_u, junc_v, keep, n = graph.conduction_edges(state)
    u = np.concatenate([seg_u, junc_u])
    v = np.concatenate([seg_v, junc_v])
    return components(n, u, v), n, (seg_u, seg_v, junc_u, junc_v, keep)


def percolates(graph: NetworkGraph, state=None) -> bool:
    """True iff conducting segments and non-BROKEN junctions join the electrodes."""
    if state is None:
        state = np.zeros(graph.n_junctions, np.int8)
    labels, _, _ = connectivity(graph, state)
    elec = graph.node_electrode
    left = labels[: graph.n_nodes][elec == 0]
    right = labels[: graph.n_nodes][elec == 1]
    if len(left) == 0 or len(right) == 0:
        return False
    return bool(np.intersect1d(left, right).size)


class DisjointSet:
    """Incremental union-find with path halving and union by size."""

    def __init__(self, n: int):
        self.parent = list(range(n))
        self.size = [1] * n

    def find(self, x: int) -> int:
        parent = self.parent
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(self, a: int, b: int) -> int:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return ra
        if self.size[ra] < self.size[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        self.size[ra] += self.size[rb]
        return ra


def spanning_count(wires: WireSet, junctions: JunctionSet) -> int | None:
    """Smallest ``N`` such that wires ``0..N-1`` connect the left and right edges.

    Wires are added in id order and merged with a :class:`DisjointSet`; the
    edges are two virtual nodes.  Returns ``None`` if even the full set does
    not span.
    """
    n = len(wires)
    left, right = n, n + 1
    dsu = DisjointSet(n + 2)
    xmin = np.minimum(wires.p0[:, 0], wires.p1[:, 0])
    xmax = np.maximum(wires.p0[:, 0], wires.p1[:, 0])
    touches_left = (xmin <= 0.0).tolist()
    touches_right = (xmax >= wires.domain.width).tolist()
    # a junction becomes active once its later wire (wire_b) is present
    order = np.argsort(junctions.wire_b, kind="stable")
    jb = junctions.wire_b[order].tolist()
    ja = junctions.wire_a[order].tolist()
    k = 0
    for i in range(n):
        if touches_left[i]:
            dsu.union(i, left)
        if touches_right[i]:
            dsu.union(i, right)
        while k < len(jb) and jb[k] == i:
            dsu.union(ja[k], i)
            k += 1
        if dsu.find(left) == dsu.find(right):
            return i + 1
    return None


def critical_density(
    length: float = 1.0,
    box_lengths: float = 12.0,
    replicas: int = 1000,
    seed: int = 0,
    max_nl2: float = 9.0,
):
    """Monte Carlo estimate of the stick-percolation threshold ``N_c l^2``.

    Each replica is a square box of side ``box_lengths * length`` filled with
    ``max_nl2`` sticks per ``l^2`` of fixed length.  The spanning count of every
    replica is found once; the threshold is the density at which half the
    replicas span, located by bisection on the shared replica set.

    Returns ``(nc_l2, spanning_counts)``.
    """
    from .netgen import NetworkParams, generate_network

    side = box_lengths * length
    area = side * side
    n_max = int(round(max_nl2 * area / length**2))
    counts = np.empty(replicas)
    for r in range(replicas):
        params = NetworkParams(
            domain_width=side,
            domain_height=side,
            areal_density=n_max / area,
            length_mean=length,
            length_cv=0.0,
            seed=int(rng.derive_seed(seed, "percolation", r)),
        )
        wires = generate_network(params)
        c = spanning_count(wires, find_junctions(wires))
        counts[r] = np.inf if c is None else c

    def spanning_fraction(n):
        return np.mean(counts <= n)

    lo, hi = 0, n_max
    if spanning_fraction(hi) < 0.5:
        raise RuntimeError("max_nl2 too small: fewer than half the replicas span")
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if spanning_fraction(mid) >= 0.5:
            hi = mid
        else:
            lo = mid
    return hi * length**2 / area, counts
