"""Junction state kinetics: decoration, UV exposure and thermal annealing.

Junction fragmentation is driven by curvature-induced surface diffusion.  A
cylindrical wire of diameter d has mean curvature 2/d, while the concave neck
of a junction has negative curvature, so atoms flow toward the junction and
the contact pinches off.  The flux magnitude sets the prefactor of a
first-order break rate; the activation energy of surface diffusion sets its
temperature dependence, lowered at DA-decorated junctions.

Every random decision is a per-junction counter draw keyed by the step, so a
junction's fate does not depend on how many junctions exist, the order they are
processed in, or the temperature being simulated (common random numbers across
a temperature sweep).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import rng
from .netgen import WireSet
from .topology import JunctionSet, JunctionState, NetworkGraph, build_graph, find_junctions

BOLTZMANN_EV = 8.617333262e-5  # eV/K
BOLTZMANN_J = 1.380649e-23  # J/K
T_MIN = 290.0
T_MAX = 600.0
NECK_FACTOR = 2.0  # stub half-length in diameters
STUB_THICKENING = 1.1

PRISTINE = JunctionState.PRISTINE
DA = JunctionState.DA_DECORATED
WELDED = JunctionState.WELDED
BROKEN = JunctionState.BROKEN


@dataclass(frozen=True)
class GTEParams:
    """Surface-diffusion constants and the calibrated rate knobs.

    ``rate_scale`` converts the flux magnitude (atoms per metre per second) to
    a break rate (1/s).  ``weld_rate`` and ``weld_energy`` set the thermal
    welding of bare junctions during an anneal.
    """

    d_s0: float = 1.0e-6  # m^2/s
    e_a: float = 1.85  # eV
    gamma: float = 1.2  # J/m^2
    omega: float = 1.71e-29  # m^3
    nu: float = 1.2e19  # 1/m^2
    delta_ea_da: float = 0.46  # eV
    weld_protection: float = 0.05
    c_neck: float = 1.0
    rate_scale: float = 1.0e-18  # m/atom
    weld_rate: float = 1.0e9  # 1/s
    weld_energy: float = 0.6  # eV

    def __post_init__(self):
        for name in ("d_s0", "e_a", "gamma", "omega", "nu", "c_neck", "rate_scale", "weld_rate", "weld_energy"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be finite and > 0, got {value}")
        if not (math.isfinite(self.delta_ea_da) and 0 <= self.delta_ea_da < self.e_a):
            raise ValueError("delta_ea_da must lie in [0, e_a)")
        if not 0.0 <= self.weld_protection < 1.0:
            raise ValueError("weld_protection must lie in [0, 1)")


@dataclass(frozen=True)
class UVParams:
    """Plasmonic welding and DA photolysis knobs.

    ``eta`` is the weld yield per unit of effective dose (cm^2/mJ);
    ``chi_d`` and ``chi_da`` multiply it at bare junctions of additive-treated
    films and at DA-decorated junctions.  ``dose_full`` (mJ/cm^2) removes all DA.
    """

    eta: float = 1.0e-4
    chi_d: float = 5.0
    chi_da: float = 20.0
    dose_full: float = 10.74 * 480.0

    def __post_init__(self):
        if not (self.eta >= 0 and self.chi_d > 0 and self.chi_da > 0 and self.dose_full > 0):
            raise ValueError("UV parameters must be positive")


@dataclass(frozen=True)
class JunctionGeometry:
    kappa_j: float | np.ndarray  # 1/m, signed
    kappa_nw: float | np.ndarray  # 1/m
    axial_unit: tuple[float, float] = (1.0, 0.0)

    def __post_init__(self):
        if np.any(np.asarray(self.kappa_nw) <= 0):
            raise ValueError("kappa_nw must be > 0")
        if not math.isclose(math.hypot(*self.axial_unit), 1.0, rel_tol=1e-12):
            raise ValueError("axial_unit must have unit norm")

    @classmethod
    def for_diameter(cls, diameter_nm, c_neck: float = 1.0, axial_unit=(1.0, 0.0)) -> "JunctionGeometry":
        """Cylinder of diameter d meeting a neck of curvature ``-c_neck / d``."""
        d = np.asarray(diameter_nm, float) * 1e-9
        return cls(-c_neck / d, 2.0 / d, axial_unit)


@dataclass(frozen=True)
class AnnealStep:
    temperature: float  # K
    duration: float  # s

    def __post_init__(self):
        if not (self.temperature > 0 and self.duration > 0):
            raise ValueError("anneal temperature and duration must be > 0")


@dataclass(frozen=True)
class DecorateStep:
    coverage: float
    compound: str = "da"  # "da" or "dpin"

    def __post_init__(self):
        if not 0.0 <= self.coverage <= 1.0:
            raise ValueError("coverage must lie in [0, 1]")
        if self.compound not in ("da", "dpin"):
            raise ValueError("compound must be 'da' or 'dpin'")


@dataclass(frozen=True)
class ExposeStep:
    mask: object  # RegionMask
    intensity: float  # mW/cm^2
    duration: float  # s
    source_center: float = 350.0  # nm
    source_fwhm: float = 30.0  # nm

    def __post_init__(self):
        if not (self.intensity >= 0 and self.duration >= 0):
            raise ValueError("intensity and duration must be >= 0")

    @property
    def dose(self) -> float:
        """Radiant exposure in mJ/cm^2."""
        return self.intensity * self.duration


def diffusivity(T, d_s0: float, e_a):
    return d_s0 * np.exp(-np.asarray(e_a) / (BOLTZMANN_EV * np.asarray(T)))


def gibbs_thomson_flux(geom: JunctionGeometry, T, p: GTEParams, e_a=None, ds=None):
    """Surface flux toward the junction, ``-(Ds gamma Omega nu / kT)(kappa_j - kappa_nw) e``.

    Returns the flux vector (atoms per metre per second).  ``e_a`` overrides the
    activation energy used in Ds; ``ds`` (m^2/s) replaces Ds altogether.
    """
    kj = np.asarray(geom.kappa_j, float)
    kn = np.asarray(geom.kappa_nw, float)
    if not (np.all(np.isfinite(kj)) and np.all(np.isfinite(kn))):
        raise ValueError("curvatures must be finite")
    if np.any(np.asarray(T) <= 0):
        raise ValueError("temperature must be > 0")
    if ds is None:
        ds = diffusivity(T, p.d_s0, p.e_a if e_a is None else e_a)
    magnitude = -(ds * p.gamma * p.omega * p.nu / (BOLTZMANN_J * np.asarray(T))) * (kj - kn)
    return np.multiply.outer(magnitude, np.asarray(geom.axial_unit, float))


def break_rate(diameter_nm, T, p: GTEParams, decorated, welded):
    """First-order break rate (1/s) per junction."""
    geom = JunctionGeometry.for_diameter(diameter_nm, p.c_neck)
    e_eff = p.e_a - p.delta_ea_da * np.asarray(decorated, float)
    flux = gibbs_thomson_flux(geom, T, p, e_a=e_eff)[..., 0]
    rate = p.rate_scale * np.abs(flux)
    return np.where(welded, rate * p.weld_protection, rate)


def thermal_weld_rate(T, p: GTEParams):
    return p.weld_rate * np.exp(-p.weld_energy / (BOLTZMANN_EV * T))


def weld_probability(dose, overlap, chi, eta):
    """``1 - exp(-eta dose S chi)``."""
    return -np.expm1(-eta * np.asarray(dose) * np.asarray(overlap) * np.asarray(chi))


# ---------------------------------------------------------------------------
# network state


@dataclass
class NetworkState:
    """Wires, junction geometry and mutable junction states of one film."""

    wires: WireSet
    junctions: JunctionSet
    seed: int = 0
    additive: str = "none"  # "none", "dpin" or "da"
    step_index: int = 0
    _graph: NetworkGraph | None = field(default=None, repr=False)

    @classmethod
    def from_wires(cls, wires: WireSet, seed: int = 0) -> "NetworkState":
        return cls(wires, find_junctions(wires), seed)

    @property
    def state(self) -> np.ndarray:
        return self.junctions.state

    @property
    def graph(self) -> NetworkGraph:
        if self._graph is None:
            self._graph = build_graph(self.wires, self.junctions)
        return self._graph

    def junction_diameter(self) -> np.ndarray:
        d = self.wires.diameter
        return 0.5 * (d[self.junctions.wire_a] + d[self.junctions.wire_b])

    def evolve(self, new_state, **changes) -> "NetworkState":
        out = replace(self, junctions=self.junctions.with_state(new_state), **changes)
        out._graph = self._graph
        return out

    def census(self) -> dict[str, int]:
        return self.junctions.census()


def _draws(state: NetworkState, purpose: str) -> np.ndarray:
    key = rng.derive_seed(int(state.seed), "kinetics", state.step_index, purpose)
    return rng.counter_uniforms(key, state.junctions.ids)


def da_decoration(state: NetworkState, coverage: float, seed: int | None = None, compound: str = "da") -> NetworkState:
    """Decorate bare junctions.

    With ``compound="da"`` each PRISTINE junction becomes DA_DECORATED with
    probability ``coverage``.  ``"dpin"`` marks the film as DPIN-treated without
    changing junction states; the additive only modifies the UV weld yield.
    """
    DecorateStep(coverage, compound)
    if seed is not None:
        state = replace(state, seed=int(seed))
    s = state.state.copy()
    if compound == "da":
        hit = (s == PRISTINE) & (_draws(state, "decorate") < coverage)
        s[hit] = DA
    return state.evolve(s, additive=compound, step_index=state.step_index + 1)


def exposed_junctions(state: NetworkState, mask) -> np.ndarray:
    if mask is None:
        raise ValueError("expose step requires a mask")
    return mask.lookup(state.junctions.position)


def expose_step(state: NetworkState, step: ExposeStep, overlap: float, uv: UVParams) -> NetworkState:
    """UV exposure through a mask.

    ``overlap`` is the integral of the normalized source spectrum against the
    unit-peak heat-generation spectrum of the film.  Junctions in exposed
    pixels weld with probability ``1 - exp(-eta dose S chi)``; decorated
    junctions that do not weld lose their DA unless a residual draw below
    ``1 - dose / dose_full`` keeps it.  Shadowed junctions are untouched.
    """
    exposed = exposed_junctions(state, step.mask)
    s = state.state.copy()
    dose = step.dose
    if dose > 0:
        chi = np.where(s == DA, uv.chi_da, 1.0 if state.additive == "none" else uv.chi_d)
        p_weld = weld_probability(dose, overlap, chi, uv.eta)
        candidates = exposed & ((s == PRISTINE) | (s == DA))
        welded = candidates & (_draws(state, "uv-weld") < p_weld)
        residual = max(0.0, 1.0 - dose / uv.dose_full)
        lose_da = exposed & (s == DA) & ~welded & (_draws(state, "uv-photolysis") >= residual)
        s[welded] = WELDED
        s[lose_da] = PRISTINE
    return state.evolve(s, step_index=state.step_index + 1)


def anneal_step(state: NetworkState, step: AnnealStep, p: GTEParams, seed: int | None = None) -> NetworkState:
    """Hot-plate anneal: thermal welding of bare junctions, then fragmentation.

    Bare junctions weld with rate ``weld_rate exp(-weld_energy / kT)``.  Every
    unbroken junction then breaks with probability ``1 - exp(-k dt)`` where
    ``k`` follows :func:`break_rate`.
    """
    T = step.temperature
    if not T_MIN <= T <= T_MAX:
        raise ValueError(f"anneal temperature {T} K outside the model range [{T_MIN}, {T_MAX}] K")
    if seed is not None:
        state = replace(state, seed=int(seed))
    s = state.state.copy()
    p_tw = -np.expm1(-thermal_weld_rate(T, p) * step.duration)
    s[(s == PRISTINE) & (_draws(state, "thermal-weld") < p_tw)] = WELDED

    rate = break_rate(state.junction_diameter(), T, p, s == DA, s == WELDED)
    p_break = -np.expm1(-rate * step.duration)
    s[(s != BROKEN) & (_draws(state, "break") < p_break)] = BROKEN
    return state.evolve(s, step_index=state.step_index + 1)


def fragment_stubs(state: NetworkState, neck_factor: float = NECK_FACTOR):
    """Wire intervals next to broken junctions, reshaped into thicker stubs.

    Each broken junction marks ``neck_factor * d`` of both wires on either
    side of the crossing.  Overlapping intervals on one wire are merged.
    Returns ``(wire, t0, t1)`` arrays of merged intervals in wire parameter
    units; their optical diameter is the parent diameter times ``STUB_THICKENING``.
    """
    broken = state.state == BROKEN
    w = np.r_[state.junctions.wire_a[broken], state.junctions.wire_b[broken]]
    t = np.r_[state.junctions.t_a[broken], state.junctions.t_b[broken]]
    if len(w) == 0:
        return np.empty(0, np.int64), np.empty(0), np.empty(0)
    half = neck_factor * state.wires.diameter[w] * 1e-3 / state.wires.lengths[w]
    lo = np.clip(t - half, 0.0, 1.0)
    hi = np.clip(t + half, 0.0, 1.0)
    order = np.lexsort((lo, w))
    w, lo, hi = w[order], lo[order], hi[order]
    # merge overlapping intervals per wire
    starts = np.r_[True, w[1:] != w[:-1]]
    run_hi = _grouped_cummax(hi, np.cumsum(starts) - 1)
    new = starts | (lo > np.r_[-np.inf, run_hi[:-1]])
    seg = np.cumsum(new) - 1
    n = seg[-1] + 1
    out_w = w[new]
    out_lo = lo[new]
    out_hi = np.full(n, -np.inf)
    np.maximum.at(out_hi, seg, hi)
    return out_w, out_lo, out_hi


def _grouped_cummax(values, group):
    # cumulative max restarting at each group; groups are contiguous
    offset = (values.max() - values.min() + 1.0) * group
    return np.maximum.accumulate(values + offset) - offset
