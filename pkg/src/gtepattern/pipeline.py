"""End-to-end patterning experiments.

A recipe is a sequence of decorate, expose and anneal steps folded over a
:class:`~gtepattern.kinetics.NetworkState`.  On top of that this module builds
the measurements: pattern visibility between the exposed and shadowed
regions, fusing-temperature sweeps and the linewidth resolution test.
"""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np

from . import rng
from .calibration import Calibration
from .electrical import ElectricalParams, network_resistance, path_resistance_bound
from .kinetics import (
    STUB_THICKENING,
    AnnealStep,
    DecorateStep,
    ExposeStep,
    NetworkState,
    anneal_step,
    da_decoration,
    expose_step,
    fragment_stubs,
)
from .masks import RegionMask, line_mask, uniform_mask
from .netgen import Domain, NetworkParams, generate_network
from .optics import (
    REFERENCE_WAVELENGTH,
    Inventory,
    efficiency_table,
    heat_generation_spectrum,
    load_permittivity,
    region_transmittance_haze,
    spectral_overlap,
    uv_source_spectrum,
)
from .topology import Electrode, build_graph, percolates

FUSED_RATIO = 1e5
INSULATION_RATIO = 1e3
PAD_SIZE = 10.0  # um
PIECE_LENGTH = 0.5  # um, optical sampling of wires along their length
VARIANTS = ("raw", "d", "da", "uv_da")


class StepError(RuntimeError):
    """A recipe step failed; the message names the step index and kind."""


@dataclass(frozen=True)
class ProcessRecipe:
    steps: tuple

    def __post_init__(self):
        steps = tuple(self.steps)
        object.__setattr__(self, "steps", steps)
        if not steps:
            raise ValueError("recipe must contain at least one step")
        for s in steps:
            if not isinstance(s, (DecorateStep, ExposeStep, AnnealStep)):
                raise TypeError(f"unknown process step {s!r}")
        decorate = [i for i, s in enumerate(steps) if isinstance(s, DecorateStep)]
        if len(decorate) > 1:
            raise ValueError("recipe may contain at most one decoration step")
        expose = [i for i, s in enumerate(steps) if isinstance(s, ExposeStep)]
        if decorate and expose and decorate[0] > expose[0]:
            raise ValueError("decoration must precede every exposure")


def gte_recipe(mask: RegionMask, cal: Calibration, temperature: float = 348.15, duration: float = 180.0) -> ProcessRecipe:
    """Decorate, expose through ``mask`` at 10.74 mW/cm^2 for 480 s, anneal."""
    return ProcessRecipe(
        (
            DecorateStep(cal.da_coverage, "da"),
            ExposeStep(mask, 10.74, 480.0),
            AnnealStep(temperature, duration),
        )
    )


# ---------------------------------------------------------------------------
# networks and recipes


def network_params(cal: Calibration, domain: Domain, seed: int, diameter: float | None = None, **overrides) -> NetworkParams:
    kw = dict(
        domain_width=domain.width,
        domain_height=domain.height,
        areal_density=cal.areal_density,
        length_mean=cal.length_mean,
        diameter_mean=cal.diameter_mean if diameter is None else diameter,
        seed=int(seed),
    )
    kw.update(overrides)
    return NetworkParams(**kw)


def make_network(cal: Calibration, domain: Domain, seed: int, diameter: float | None = None, **overrides) -> NetworkState:
    wires = generate_network(network_params(cal, domain, seed, diameter, **overrides))
    return NetworkState.from_wires(wires, seed=int(seed))


@functools.lru_cache(maxsize=64)
def _overlap(diameter: float, center: float, fwhm: float, medium_index: float) -> float:
    grid = np.arange(250.0, 500.0 + 0.5, 1.0)
    hg = heat_generation_spectrum(diameter, load_permittivity(), grid, medium_index)
    return spectral_overlap(uv_source_spectrum(grid, center, fwhm), hg)


def uv_overlap(state: NetworkState, step: ExposeStep, cal: Calibration) -> float:
    """Spectral overlap of the lamp with the heat-generation spectrum of the film."""
    d = float(np.round(state.wires.diameter.mean(), 3)) if len(state.wires) else cal.diameter_mean
    return _overlap(d, float(step.source_center), float(step.source_fwhm), float(cal.medium_index))


def apply_step(state: NetworkState, step, cal: Calibration) -> NetworkState:
    if isinstance(step, DecorateStep):
        return da_decoration(state, step.coverage, compound=step.compound)
    if isinstance(step, ExposeStep):
        if step.mask is None:
            raise ValueError("expose step requires a mask")
        step.mask.check_domain(state.wires.domain)
        return expose_step(state, step, uv_overlap(state, step, cal), cal.uv)
    if isinstance(step, AnnealStep):
        return anneal_step(state, step, cal.gte)
    raise TypeError(f"unknown process step {step!r}")


def step_kind(step) -> str:
    return {DecorateStep: "decorate", ExposeStep: "expose", AnnealStep: "anneal"}[type(step)]


def run_recipe(state: NetworkState, recipe: ProcessRecipe, cal: Calibration, seed: int | None = None):
    """Apply the recipe; returns the final state and one census row per step.

    Row 0 is the initial census.  A failing step raises :class:`StepError`
    naming its index.
    """
    if seed is not None:
        state = NetworkState(state.wires, state.junctions, int(seed), state.additive, state.step_index, state._graph)
    log = [dict(step=0, kind="initial", **state.census())]
    for i, step in enumerate(recipe.steps, start=1):
        try:
            state = apply_step(state, step, cal)
        except Exception as exc:
            raise StepError(f"step {i} ({step_kind(step)}) failed: {exc}") from exc
        log.append(dict(step=i, kind=step_kind(step), **state.census()))
    return state, log


# ---------------------------------------------------------------------------
# visibility


@dataclass(frozen=True)
class VisibilityReport:
    wavelengths: np.ndarray
    t_cond: np.ndarray
    t_insul: np.ndarray
    h_cond: np.ndarray
    h_insul: np.ndarray
    delta_t: float  # percentage points at the reference wavelength
    delta_h: float
    rs_cond: float  # ohm/sq
    insulation_ratio: float
    reference_nm: float = REFERENCE_WAVELENGTH

    @property
    def reference_index(self) -> int:
        return int(np.flatnonzero(self.wavelengths == self.reference_nm)[0])


@functools.lru_cache(maxsize=8)
def _efficiencies(wavelengths: tuple, medium_index: float):
    diameters = np.arange(5.0, 301.0, 1.0)
    return efficiency_table(diameters, np.array(wavelengths), load_permittivity(), medium_index)


def region_inventories(state: NetworkState, mask: RegionMask, piece_length: float = PIECE_LENGTH):
    """Optical wire inventories of the exposed and shadowed regions.

    Wires are cut into pieces no longer than ``piece_length`` and each piece is
    assigned to the region containing its midpoint.  Fragment stubs enter as a
    thickened copy plus a negative entry at the parent diameter, so the wire
    length is not counted twice.
    """
    wires = state.wires
    lengths = wires.lengths
    n_pieces = np.maximum(1, np.ceil(lengths / piece_length).astype(np.int64))
    wire = np.repeat(np.arange(len(wires)), n_pieces)
    k = np.arange(n_pieces.sum()) - np.repeat(np.cumsum(n_pieces) - n_pieces, n_pieces)
    t = (k + 0.5) / n_pieces[wire]
    mid = wires.p0[wire] + t[:, None] * (wires.p1 - wires.p0)[wire]
    d = wires.diameter[wire]
    ell = (lengths / n_pieces)[wire]

    sw, t0, t1 = fragment_stubs(state)
    stub_mid = wires.p0[sw] + (0.5 * (t0 + t1))[:, None] * (wires.p1 - wires.p0)[sw]
    stub_len = (t1 - t0) * lengths[sw]
    stub_d = wires.diameter[sw]

    diam = np.concatenate([d, STUB_THICKENING * stub_d, stub_d])
    length = np.concatenate([ell, stub_len, -stub_len])
    where = np.concatenate([mask.lookup(mid), mask.lookup(stub_mid), mask.lookup(stub_mid)])
    a_exp, a_sh = mask.pixel_areas(wires.domain)
    return (
        Inventory(diam[where], length[where], a_exp),
        Inventory(diam[~where], length[~where], a_sh),
    )


def region_bbox(mask: RegionMask, exposed: bool, domain: Domain):
    rows, cols = np.nonzero(mask.bits == exposed)
    if len(rows) == 0:
        raise ValueError("empty region class: mask has no " + ("EXPOSED" if exposed else "SHADOWED") + " pixels")
    p = mask.pitch
    return (
        float(cols.min() * p),
        float(rows.min() * p),
        float(min((cols.max() + 1) * p, domain.width)),
        float(min((rows.max() + 1) * p, domain.height)),
    )


def probe_pads(bbox, size: float = PAD_SIZE):
    """Two ``size`` x ``size`` pads at the left and right extremes of a box."""
    x0, y0, x1, y1 = bbox
    if x1 - x0 < 2 * size or y1 - y0 < size:
        raise ValueError(f"region {bbox} too small for {size} um probe pads")
    ym = 0.5 * (y0 + y1)
    return (
        Electrode(x0, ym - size / 2, x0 + size, ym + size / 2),
        Electrode(x1 - size, ym - size / 2, x1, ym + size / 2),
    )


def electrode_resistance(state: NetworkState, electrodes, params: ElectricalParams) -> float:
    graph = build_graph(state.wires, state.junctions, electrodes)
    return network_resistance(graph, params, state.state)[0]


def _spectra(inv_cond, inv_insul, cal, wavelengths, reference):
    wl = np.asarray(wavelengths, float)
    if not np.any(wl == reference):
        raise ValueError(f"reference wavelength {reference} nm is not on the grid")
    eff = _efficiencies(tuple(wl.tolist()), float(cal.medium_index))
    t_c, h_c = region_transmittance_haze(inv_cond, eff, cal.forward_fraction)
    t_i, h_i = region_transmittance_haze(inv_insul, eff, cal.forward_fraction)
    k = int(np.flatnonzero(wl == reference)[0])
    return wl, t_c, t_i, h_c, h_i, abs(t_i[k] - t_c[k]) * 100.0, abs(h_i[k] - h_c[k]) * 100.0


def default_wavelengths():
    return np.arange(300.0, 800.0 + 0.5, 10.0)


def region_spectra(state: NetworkState, mask: RegionMask, cal: Calibration, wavelengths=None):
    """``(wavelengths, t_cond, t_insul, h_cond, h_insul)`` without any resistance solve.

    Comparing these before and after processing isolates what the recipe did
    to each region from the sampling mismatch between the two regions.
    """
    mask.check_domain(state.wires.domain)
    wl = np.asarray(default_wavelengths() if wavelengths is None else wavelengths, float)
    inv_c, inv_i = region_inventories(state, mask)
    return _spectra(inv_c, inv_i, cal, wl, float(wl[0]))[:5]


def visibility_report(state: NetworkState, mask: RegionMask, cal: Calibration, wavelengths=None, reference: float = REFERENCE_WAVELENGTH) -> VisibilityReport:
    """Transmittance, haze and resistance contrast between the two mask regions."""
    domain = state.wires.domain
    mask.check_domain(domain)
    bbox_c = region_bbox(mask, True, domain)
    bbox_i = region_bbox(mask, False, domain)
    wl = default_wavelengths() if wavelengths is None else wavelengths
    inv_c, inv_i = region_inventories(state, mask)
    wl, t_c, t_i, h_c, h_i, dt, dh = _spectra(inv_c, inv_i, cal, wl, reference)

    el = cal.electrical
    x0, y0, x1, y1 = bbox_c
    bars = (Electrode(x0, y0, x0, y1), Electrode(x1, y0, x1, y1))
    rs_cond = electrode_resistance(state, bars, el) * (y1 - y0) / (x1 - x0)
    r_cond = electrode_resistance(state, probe_pads(bbox_c), el)
    r_insul = electrode_resistance(state, probe_pads(bbox_i), el)
    ratio = math.inf if math.isinf(r_insul) else r_insul / r_cond
    return VisibilityReport(wl, t_c, t_i, h_c, h_i, dt, dh, rs_cond, ratio, reference)


def conventional_report(
    state: NetworkState,
    mask: RegionMask,
    cal: Calibration,
    wavelengths=None,
    reference: float = REFERENCE_WAVELENGTH,
    resistance: bool = True,
) -> VisibilityReport:
    """Baseline where the shadowed region is etched bare instead of fragmented.

    ``resistance=False`` skips the sheet-resistance solve and reports nan.
    """
    domain = state.wires.domain
    mask.check_domain(domain)
    region_bbox(mask, False, domain)
    x0, y0, x1, y1 = region_bbox(mask, True, domain)
    wl = default_wavelengths() if wavelengths is None else wavelengths
    inv_c, inv_i = region_inventories(state, mask)
    empty = Inventory(np.empty(0), np.empty(0), inv_i.area)
    wl, t_c, t_i, h_c, h_i, dt, dh = _spectra(inv_c, empty, cal, wl, reference)
    rs_cond = math.nan
    if resistance:
        bars = (Electrode(x0, y0, x0, y1), Electrode(x1, y0, x1, y1))
        rs_cond = electrode_resistance(state, bars, cal.electrical) * (y1 - y0) / (x1 - x0)
    return VisibilityReport(wl, t_c, t_i, h_c, h_i, dt, dh, rs_cond, math.inf, reference)


# ---------------------------------------------------------------------------
# fusing temperature


def variant_prefix(variant: str, cal: Calibration, domain: Domain):
    """Steps applied before the anneal for each film variant."""
    if variant == "raw":
        return ()
    if variant == "d":
        return (DecorateStep(0.0, "dpin"),)
    if variant == "da":
        return (DecorateStep(cal.da_coverage, "da"),)
    if variant == "uv_da":
        return (DecorateStep(cal.da_coverage, "da"), ExposeStep(uniform_mask(domain, domain.width), 10.74, 480.0))
    raise ValueError(f"unknown variant {variant!r}; expected one of {VARIANTS}")


def sweep_domain(cal: Calibration, wires_per_replica: int) -> Domain:
    side = math.sqrt(wires_per_replica / cal.areal_density)
    return Domain(side, side)


@dataclass
class _Replica:
    state: NetworkState
    r0: float


def resistance_ratio(state: NetworkState, r0: float, cal: Calibration, exact: bool = False) -> tuple[float, bool]:
    """``(ratio, is_exact)`` of the film resistance to ``r0``.

    Unless ``exact`` is set, a percolating film whose best single path already
    stays below the fusing threshold reports that path's ratio, an upper bound.
    """
    graph = state.graph
    if not percolates(graph, state.state):
        return math.inf, True
    if not exact:
        bound = path_resistance_bound(graph, cal.electrical, state.state) / r0
        if bound <= FUSED_RATIO:
            return bound, False
    return network_resistance(graph, cal.electrical, state.state)[0] / r0, True


def _median_exceeds(replicas, T, cal, duration):
    ratios, exact, states = [], [], []
    for rep in replicas:
        s = anneal_step(rep.state, AnnealStep(T, duration), cal.gte)
        r, e = resistance_ratio(s, rep.r0, cal)
        ratios.append(r)
        exact.append(e)
        states.append((s, rep.r0))
    med = float(np.median(ratios))
    if med > FUSED_RATIO and not all(exact):
        # bounds may sit in the middle of the ordering; resolve them exactly
        ratios = [r if e else resistance_ratio(s, r0, cal, exact=True)[0] for r, e, (s, r0) in zip(ratios, exact, states)]
        med = float(np.median(ratios))
    return med > FUSED_RATIO, med


@dataclass(frozen=True)
class FusingResult:
    variant: str
    diameter: float
    tf_kelvin: float  # inf if never fused on the grid
    temperatures: tuple  # evaluated grid points, K
    median_ratios: tuple

    @property
    def tf_celsius(self) -> float:
        return self.tf_kelvin - 273.15


def fusing_temperature_sweep(
    cal: Calibration,
    temperatures,
    diameters=(17.0, 30.0, 50.0, 90.0),
    variants=VARIANTS,
    replicas: int = 3,
    seed: int = 0,
    wires_per_replica: int = 10_000,
    duration: float = 180.0,
) -> list[FusingResult]:
    """Lowest grid temperature at which the median Rs/R0 exceeds 1e5.

    Every variant anneals the same replica networks (common random numbers),
    and R0 is each replica's resistance before any processing.  Temperatures
    are scanned upward and the scan stops at the first fused grid point.
    """
    if replicas < 3:
        raise ValueError("a fusing-temperature sweep needs >= 3 replicas")
    temps = sorted(float(t) for t in temperatures)
    domain = sweep_domain(cal, wires_per_replica)
    results = []
    for d in diameters:
        base = []
        for r in range(replicas):
            s = make_network(cal, domain, rng.derive_seed(seed, "tf", float(d), r), diameter=d)
            base.append(_Replica(s, network_resistance(s.graph, cal.electrical, s.state)[0]))
        for variant in variants:
            prefix = variant_prefix(variant, cal, domain)
            prepared = []
            for rep in base:
                s = rep.state
                for step in prefix:
                    s = apply_step(s, step, cal)
                prepared.append(_Replica(s, rep.r0))
            tf, seen, meds = math.inf, [], []
            for T in temps:
                fused, med = _median_exceeds(prepared, T, cal, duration)
                seen.append(T)
                meds.append(med)
                if fused:
                    tf = T
                    break
            results.append(FusingResult(variant, float(d), tf, tuple(seen), tuple(meds)))
    return results


def celsius_grid(t_min_c: float, t_max_c: float, step_k: float):
    n = int(math.floor((t_max_c - t_min_c) / step_k + 1e-9)) + 1
    return [t_min_c + 273.15 + i * step_k for i in range(n)]


# ---------------------------------------------------------------------------
# resolution


@dataclass(frozen=True)
class ResolutionResult:
    linewidth: float
    replicas: int
    percolation_probability: float  # every line spans end to end
    pass_probability: float  # spans and inter-line ratio above threshold
    median_insulation_ratio: float

    @property
    def passed(self) -> bool:
        return self.pass_probability >= 0.95


def resolution_layout(linewidth: float, line_length: float):
    """Domain, mask and line y-ranges for two parallel lines of equal spacing."""
    if not linewidth > 0:
        raise ValueError("zero-width mask lines are degenerate")
    w = float(linewidth)
    domain = Domain(float(line_length), 5.0 * w)
    pitch = w / 5.0
    mask = line_mask(domain, pitch, w, w, 2, margin=w)
    lines = [(w, 2 * w), (3 * w, 4 * w)]
    return domain, mask, lines


def linewidth_resolution_test(
    cal: Calibration,
    linewidths=(50.0, 30.0, 20.0, 10.0),
    replicas: int = 100,
    seed: int = 0,
    line_length: float = 100.0,
    threshold: float = INSULATION_RATIO,
) -> list[ResolutionResult]:
    """Pattern two lines per linewidth and test continuity and isolation.

    Each line has end pads spanning its width and ``min(linewidth,
    line_length / 5)`` along it, so the pads never meet.  A replica passes
    when both lines conduct pad to pad and the resistance between the two
    lines exceeds ``threshold`` times the resistance along a line.
    """
    out = []
    for w in linewidths:
        domain, mask, lines = resolution_layout(w, line_length)
        recipe = gte_recipe(mask, cal)
        spans, passes, ratios = 0, 0, []
        for r in range(replicas):
            s = make_network(cal, domain, rng.derive_seed(seed, "resolution", float(w), r))
            s, _ = run_recipe(s, recipe, cal)
            pad = min(w, line_length / 5.0)
            pads = [
                (Electrode(0.0, y0, pad, y1), Electrode(line_length - pad, y0, line_length, y1)) for y0, y1 in lines
            ]
            ok = all(percolates(build_graph(s.wires, s.junctions, p), s.state) for p in pads)
            spans += ok
            r_line = electrode_resistance(s, pads[0], cal.electrical)
            r_cross = electrode_resistance(s, (pads[0][0], pads[1][0]), cal.electrical)
            ratio = math.inf if math.isinf(r_cross) else (r_cross / r_line if math.isfinite(r_line) else math.nan)
            ratios.append(ratio)
            passes += ok and ratio > threshold
        out.append(
            ResolutionResult(float(w), replicas, spans / replicas, passes / replicas, float(np.nanmedian(ratios)) if ratios else math.nan)
        )
    return out
