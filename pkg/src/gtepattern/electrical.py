"""Sheet resistance of a wire network by nodal analysis.

Wire segments are ohmic cylinders; junctions are lumped contact resistances
that depend on the junction state.  The two electrodes are held at 1 V and
0 V, the reduced Laplacian is solved by preconditioned conjugate gradients,
and the current follows from the dissipated power, which is
second-order accurate in the potential error.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import dijkstra
from scipy.sparse.linalg import splu

from .topology import JunctionState, NetworkGraph, components


class SolverError(RuntimeError):
    """Conjugate gradients failed to reach the requested residual."""


@dataclass(frozen=True)
class ElectricalParams:
    resistivity_eff: float = 22e-9  # ohm m
    r_contact_pristine: float = 2000.0
    r_contact_da: float = 2000.0
    r_contact_welded: float = 200.0
    solver_tolerance: float = 1e-10
    max_iterations: int = 20000
    preconditioner: str = "wire"

    def __post_init__(self):
        for name in ("resistivity_eff", "r_contact_pristine", "r_contact_da", "r_contact_welded"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be finite and > 0, got {value}")
        if not self.r_contact_welded < self.r_contact_pristine:
            raise ValueError("r_contact_welded must be below r_contact_pristine")
        if not (0 < self.solver_tolerance <= 1e-4):
            raise ValueError("solver_tolerance must lie in (0, 1e-4]")
        if self.preconditioner not in ("wire", "jacobi"):
            raise ValueError("preconditioner must be 'wire' or 'jacobi'")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")

    def contact_resistance(self, state) -> np.ndarray:
        """Contact resistance per junction state; BROKEN maps to +inf."""
        table = np.array(
            [self.r_contact_pristine, self.r_contact_da, self.r_contact_welded, np.inf]
        )
        return table[np.asarray(state, dtype=np.int64)]


@dataclass(frozen=True)
class SheetResistanceResult:
    rs: float
    r0: float
    ratio: float
    solver_iterations: int


def segment_resistance(length, diameter, resistivity_eff):
    """``4 rho L / (pi d^2)`` for L in um, d in nm and rho in ohm m."""
    length = np.asarray(length, float)
    diameter = np.asarray(diameter, float)
    if np.any(length <= 0) or np.any(diameter <= 0) or resistivity_eff <= 0:
        raise ValueError("length, diameter and resistivity must be > 0")
    r = 4.0 * resistivity_eff * (length * 1e-6) / (math.pi * (diameter * 1e-9) ** 2)
    return float(r) if r.ndim == 0 else r


def tridiagonal_preconditioner(A):
    """Exact inverse of the tridiagonal part of ``A``, as a callable.

    With nodes numbered along each wire, the tridiagonal part holds every
    wire segment, so the stiff couplings of very short segments are inverted
    exactly and CG only iterates on the junction couplings.
    """
    n = A.shape[0]
    T = sp.diags(
        [A.diagonal(-1), A.diagonal(), A.diagonal(1)], [-1, 0, 1], shape=(n, n), format="csc"
    )
    return splu(T, permc_spec="NATURAL").solve


def conjugate_gradient(A, b, tol: float, max_iterations: int, preconditioner: str = "wire", scale=None):
    """Preconditioned CG for a symmetric positive definite ``A``.

    ``preconditioner`` is ``"jacobi"`` (diagonal) or ``"wire"`` (see
    :func:`tridiagonal_preconditioner`).  Stops when ``||r||_2 <= tol ||b||_2``,
    or, if ``scale`` is given, when ``max |r| <= tol * scale(x)``.  The test
    uses the recursively updated residual, which keeps shrinking below the
    rounding floor of ``b - A x``; the true residual therefore ends near
    ``max(tol * scale, eps * max|A| * max|x|)``.
    Returns ``(x, iterations)``; raises :class:`SolverError` if
    ``max_iterations`` is exhausted.
    """
    n = len(b)
    x = np.zeros(n)
    bnorm = np.linalg.norm(b)
    if n == 0 or bnorm == 0:
        return x, 0
    if preconditioner == "jacobi":
        inv_diag = 1.0 / A.diagonal()

        def apply(res):
            return inv_diag * res

    elif preconditioner == "wire":
        apply = tridiagonal_preconditioner(A)
    else:
        raise ValueError(f"unknown preconditioner {preconditioner!r}")
    r = b.copy()
    z = apply(r)
    p = z.copy()
    rz = r @ z
    if scale is None:
        target = tol * bnorm

        def converged():
            return np.linalg.norm(r) <= target

    else:

        def converged():
            return np.max(np.abs(r)) <= tol * scale(x)

    for it in range(1, max_iterations + 1):
        Ap = A @ p
        alpha = rz / (p @ Ap)
        x += alpha * p
        r -= alpha * Ap
        if converged():
            return x, it
        z = apply(r)
        rz_new = r @ z
        p = z + (rz_new / rz) * p
        rz = rz_new
    achieved = np.linalg.norm(r) / bnorm if scale is None else np.max(np.abs(r)) / scale(x)
    raise SolverError(
        f"CG did not converge in {max_iterations} iterations "
        f"(relative residual {achieved:.3e}, target {tol:.1e})"
    )


@dataclass
class ReducedSystem:
    """Conducting edges restricted to the components touching both electrodes."""

    n_nodes: int
    u: np.ndarray
    v: np.ndarray
    g: np.ndarray
    potential: np.ndarray  # fixed potential per node, nan for unknowns
    active: np.ndarray  # node belongs to a spanning component
    order_key: np.ndarray  # sorts nodes along their wires


def _order_key(graph: NetworkGraph, seg_u, n):
    # Nodes created by severing sit just after the node they were split from.
    key = np.empty(n, np.int64)
    key[: graph.n_nodes] = 2 * np.arange(graph.n_nodes)
    new = seg_u >= graph.n_nodes
    key[seg_u[new]] = 2 * graph.seg_u[new] + 1
    return key


def edge_resistances(graph: NetworkGraph, params: ElectricalParams, state):
    """``(u, v, resistance, n_nodes)`` of all conducting edges, after severing.

    Segment edges come first, in the order of ``graph.seg_u``.
    """
    seg_u, seg_v, junc_u, junc_v, keep, n = graph.conduction_edges(state)
    r_seg = segment_resistance(np.maximum(graph.seg_length, 1e-300), graph.seg_diameter, params.resistivity_eff)
    r_junc = params.contact_resistance(np.asarray(state)[keep])
    u = np.concatenate([seg_u, junc_u])
    v = np.concatenate([seg_v, junc_v])
    return u, v, np.concatenate([np.atleast_1d(r_seg), r_junc]), n


def reduce_system(graph: NetworkGraph, params: ElectricalParams, state) -> ReducedSystem | None:
    """Assemble the spanning part of the network; ``None`` if it does not percolate."""
    u, v, r, n = edge_resistances(graph, params, state)
    labels = components(n, u, v)
    elec = np.full(n, -1, np.int8)
    elec[: graph.n_nodes] = graph.node_electrode
    spanning = np.intersect1d(labels[elec == 0], labels[elec == 1])
    if spanning.size == 0:
        return None
    active = np.isin(labels, spanning)
    keep = active[u]
    potential = np.full(n, np.nan)
    potential[active & (elec == 0)] = 1.0
    potential[active & (elec == 1)] = 0.0
    key = _order_key(graph, u[: graph.n_segments], n)
    return ReducedSystem(n, u[keep], v[keep], 1.0 / r[keep], potential, active, key)


def solve_potentials(system: ReducedSystem, params: ElectricalParams):
    """Node potentials of the reduced system and the CG iteration count."""
    fixed = ~np.isnan(system.potential)
    free = system.active & ~fixed
    index = np.full(system.n_nodes, -1, np.int64)
    free_nodes = np.flatnonzero(free)
    free_nodes = free_nodes[np.argsort(system.order_key[free_nodes], kind="stable")]
    index[free_nodes] = np.arange(len(free_nodes))
    u, v, g = system.u, system.v, system.g
    iu, iv = index[u], index[v]
    nf = int(free.sum())

    rows, cols, vals = [], [], []
    b = np.zeros(nf)
    # current leaving the 1 V electrode is i0 - w.x; it scales the stopping test
    w = np.zeros(nf)
    i0 = 0.0
    for a, c, ia, ic in ((u, v, iu, iv), (v, u, iv, iu)):
        src = system.potential[a] == 1.0
        i0 += float(np.sum(g[src] * (1.0 - np.nan_to_num(system.potential[c[src]], nan=0.0))))
        np.add.at(w, ic[src & (ic >= 0)], g[src & (ic >= 0)])
        sel = ia >= 0
        rows.append(ia[sel])
        cols.append(ia[sel])
        vals.append(g[sel])
        both = sel & (ic >= 0)
        rows.append(ia[both])
        cols.append(ic[both])
        vals.append(-g[both])
        bound = sel & (ic < 0)
        np.add.at(b, ia[bound], g[bound] * system.potential[c[bound]])
    A = sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(nf, nf)
    )
    x, iterations = conjugate_gradient(
        A, b, params.solver_tolerance, params.max_iterations, params.preconditioner, scale=lambda x: i0 - w @ x
    )
    phi = system.potential.copy()
    phi[free_nodes] = x
    return phi, iterations


def network_resistance(graph: NetworkGraph, params: ElectricalParams, state=None):
    """Two-terminal resistance between the electrodes and CG iterations.

    Returns ``(inf, 0)`` when no conducting path joins the electrodes.
    """
    if state is None:
        state = np.zeros(graph.n_junctions, np.int8)
    system = reduce_system(graph, params, state)
    if system is None:
        return math.inf, 0
    phi, iterations = solve_potentials(system, params)
    power = float(np.sum(system.g * (phi[system.u] - phi[system.v]) ** 2))
    return 1.0 / power, iterations


def solve_sheet_resistance(
    graph: NetworkGraph,
    params: ElectricalParams,
    state=None,
    r0: float | None = None,
    squares: float | None = None,
) -> SheetResistanceResult:
    """Sheet resistance between the electrodes of ``graph``.

    ``squares`` is the number of squares between the electrodes; for the
    default bus bars it is width / height, so ``Rs = R * height / width``.
    ``r0`` is the pre-process reference; it defaults to the computed value.
    A network that does not percolate gives ``rs = ratio = inf``.
    """
    if squares is None:
        squares = graph.domain.width / graph.domain.height
    resistance, iterations = network_resistance(graph, params, state)
    rs = resistance / squares
    if r0 is None:
        r0 = rs
    ratio = math.inf if math.isinf(rs) else rs / r0
    return SheetResistanceResult(rs, float(r0), ratio, iterations)


def path_resistance_bound(graph: NetworkGraph, params: ElectricalParams, state) -> float:
    """Resistance of the least-resistive single path between the electrodes.

    Removing every other edge cannot lower the resistance, so this is an
    upper bound on the network resistance; ``inf`` if no path exists.
    """
    u, v, r, n = edge_resistances(graph, params, state)
    elec = np.full(n, -1, np.int8)
    elec[: graph.n_nodes] = graph.node_electrode
    src = np.flatnonzero(elec == 0)
    dst = np.flatnonzero(elec == 1)
    if len(src) == 0 or len(dst) == 0:
        return math.inf
    # a virtual source node ties the first electrode together
    s = n
    tiny = 1e-300
    uu = np.concatenate([u, np.full(len(src), s)])
    vv = np.concatenate([v, src])
    ww = np.concatenate([r, np.full(len(src), tiny)])
    G = sp.coo_matrix((ww, (uu, vv)), shape=(n + 1, n + 1)).tocsr()
    dist = dijkstra(G, directed=False, indices=s)
    return float(dist[dst].min())
