"""Acceptance criteria 1-12, each at its stated tolerance.

Every test prints one ``criterion N: PASS|FAIL ...`` line straight to the
terminal, so ``pytest tests/test_acceptance.py`` doubles as the acceptance
report.  Calibration-target criteria (8-11) run on seeds other than the one
the shipped calibration was fitted on.
"""
import json
import math
import os
import subprocess
import sys
import time

import numpy as np
import pytest

from gtepattern import optics
from gtepattern.calibration import load_calibration
from gtepattern.electrical import network_resistance
from gtepattern.kinetics import (
    AnnealStep,
    DecorateStep,
    ExposeStep,
    GTEParams,
    JunctionGeometry,
    gibbs_thomson_flux,
)
from gtepattern.masks import half_mask, uniform_mask
from gtepattern.netgen import Domain, NetworkParams, generate_network
from gtepattern.optics import heat_density, heat_generation_spectrum, load_permittivity, mie_cylinder, series_order
from gtepattern.pipeline import (
    apply_step,
    celsius_grid,
    conventional_report,
    fusing_temperature_sweep,
    gte_recipe,
    linewidth_resolution_test,
    make_network,
    region_spectra,
    run_recipe,
    visibility_report,
)
from gtepattern.rng import derive_seed
from gtepattern.topology import critical_density, find_junctions
from oracles import all_pairs_junctions, internal_field_absorption, rayleigh_cylinder
from test_electrical import oracle_resistance, random_instance

CAL = load_calibration()
TABLE = load_permittivity()
SEED = 1  # the shipped calibration was fitted with seed 0


@pytest.fixture
def verdict(capsys):
    def emit(number, ok, detail):
        with capsys.disabled():
            print(f"\ncriterion {number}: {'PASS' if ok else 'FAIL'}  {detail}")
        assert ok, detail

    return emit


def test_criterion_01_junction_detection(verdict):
    gen = np.random.default_rng(SEED)
    elapsed, mismatches, worst = 0.0, 0, 0.0
    for seed in range(100):
        n = int(gen.integers(200, 501))
        side = 60.0
        w = generate_network(NetworkParams(side, side, areal_density=n / side**2, seed=seed))
        t = time.perf_counter()
        j = find_junctions(w)
        elapsed += time.perf_counter() - t
        ref = all_pairs_junctions(w.p0, w.p1)
        got = list(zip(j.wire_a.tolist(), j.wire_b.tolist()))
        if got != [(a, b) for a, b, _, _ in ref]:
            mismatches += 1
            continue
        pos = np.array([(x, y) for _, _, x, y in ref]).reshape(-1, 2)
        worst = max(worst, float(np.max(np.abs(pos - j.position), initial=0.0)))
    ok = mismatches == 0 and worst <= 1e-9 and elapsed < 5.0
    verdict(1, ok, f"set mismatches {mismatches}/100, max position error {worst:.2e} um, detection time {elapsed:.2f} s")


def test_criterion_02_sheet_resistance_oracle(verdict):
    elapsed, worst, count, seed = 0.0, 0.0, 0, 0
    while count < 50:
        inst = random_instance(1000 + seed)
        seed += 1
        if inst is None:
            continue
        _, _, g, state = inst
        t = time.perf_counter()
        r, _ = network_resistance(g, CAL.electrical, state)
        elapsed += time.perf_counter() - t
        ref = oracle_resistance(g, state, CAL.electrical)
        count += 1
        if math.isinf(ref) or math.isinf(r):
            worst = max(worst, 0.0 if math.isinf(ref) and math.isinf(r) else math.inf)
        else:
            worst = max(worst, abs(r - ref) / ref)
    ok = worst <= 1e-8 and elapsed < 10.0
    verdict(2, ok, f"50 graphs <= 500 nodes, max relative error {worst:.2e}, solver time {elapsed:.2f} s")


def test_criterion_03_percolation_threshold(verdict):
    t = time.perf_counter()
    nc, _ = critical_density(replicas=1000, seed=SEED)
    elapsed = time.perf_counter() - t
    ok = abs(nc - 5.6) <= 0.2 and elapsed < 60.0
    verdict(3, ok, f"N_c l^2 = {nc:.3f} from 1000 replicas in {elapsed:.1f} s")


def test_criterion_04_mie_energy_and_rayleigh(verdict):
    d = np.arange(17.0, 91.0, 1.0)[:, None]
    wl = np.arange(300.0, 801.0, 10.0)[None, :]
    e = mie_cylinder(d, wl, TABLE(wl))
    bookkeeping = float(np.max(np.abs(e.q_ext - (e.q_sca + e.q_abs))))
    # second route: absorption integrated from the internal field
    independent = 0.0
    for dd in (17.0, 30.0, 50.0, 90.0):
        for w in np.arange(300.0, 801.0, 10.0):
            x = math.pi * dd * optics.MEDIUM_INDEX / w
            m = np.sqrt(TABLE(w)) / optics.MEDIUM_INDEX
            q_abs, _, _ = internal_field_absorption(x, m, int(series_order(x)) + 5)
            ours = mie_cylinder(dd, w, TABLE(w))
            independent = max(independent, abs(ours.q_ext - ours.q_sca - q_abs))
    rayleigh = 0.0
    for dd, w, eps in ((2.0, 700.0, TABLE(700.0)), (5.0, 550.0, TABLE(550.0)), (3.0, 600.0, 2.25 + 0.1j)):
        x = math.pi * dd * optics.MEDIUM_INDEX / w
        qa, qs = rayleigh_cylinder(x, np.sqrt(complex(eps)) / optics.MEDIUM_INDEX)
        rayleigh = max(rayleigh, abs(mie_cylinder(dd, w, eps).q_ext / (qa + qs) - 1.0))
    ok = bookkeeping <= 1e-10 and independent <= 1e-10 and rayleigh <= 0.05
    verdict(
        4,
        ok,
        f"|q_ext - q_sca - q_abs| {bookkeeping:.1e}, internal-field absorption {independent:.1e}, Rayleigh deviation {100 * rayleigh:.2f}%",
    )


def test_criterion_05_flux_properties(verdict):
    p = GTEParams()
    zero = gibbs_thomson_flux(JunctionGeometry(3e7, 3e7), 350.0, p)
    toward = gibbs_thomson_flux(JunctionGeometry(-1e7, 4e7, (0.0, 1.0)), 350.0, p)
    temps = np.array([300.0, 400.0, 500.0, 600.0])
    j = gibbs_thomson_flux(JunctionGeometry.for_diameter(30.0), temps, p, ds=1e-19)[:, 0]
    inverse_t = float(np.max(np.abs(j * temps / (j[0] * temps[0]) - 1.0)))
    ok = np.all(zero == 0.0) and toward[1] > 0 and toward[0] == 0.0 and inverse_t < 1e-14
    verdict(5, ok, f"zero flux at equal curvature, flux along +axis toward the neck, |J|T spread {inverse_t:.1e}")


def test_criterion_06_heat_density_properties(verdict):
    wl = np.array([300.0, 350.0, 550.0])
    lossless = heat_density(np.array([1.0, 5.0, 9.0]), wl, np.array([-4.0, 2.25, -12.0]) + 0j)
    eps = TABLE(wl)
    e = np.array([0.3, 1.7, 40.0])
    q = heat_density(e, wl, eps)
    # power-of-two field scalings are exact in floating point, other factors to a few ulp
    exact = all(np.all(heat_density(k * e, wl, eps) == k * k * q) for k in (0.5, 2.0, 8.0))
    ratio = heat_density(3.0 * e, wl, eps) / q
    near = float(np.max(np.abs(ratio / 9.0 - 1.0)))
    ok = np.all(lossless == 0.0) and exact and near <= 4 * np.finfo(float).eps
    verdict(6, ok, f"q = 0 at Im eps = 0, q(kE) = k^2 q(E) exact for k in (1/2, 2, 8), k = 3 within {near:.1e}")


CLI_CFG = """\
network.domain_width = 60
network.domain_height = 60
mask.pattern = half
mask.pitch_um = 2
recipe.steps = decorate, expose, anneal
"""


def _cli(cfg, out, threads):
    env = dict(os.environ)
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        env.pop(var, None)
    cmd = [sys.executable, "-m", "gtepattern.cli", "run", "--config", str(cfg), "--seed", "7", "--out", str(out), "--threads", str(threads)]
    subprocess.run(cmd, env=env, check=True, capture_output=True)
    return out


def test_criterion_07_determinism(verdict, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(CLI_CFG)
    n = max(2, os.cpu_count() or 1)
    outs = [_cli(cfg, tmp_path / name, t) for name, t in (("a1", 1), ("b1", 1), ("an", n), ("bn", n))]
    csvs = sorted(f for f in os.listdir(outs[0]) if f.endswith(".csv"))
    blobs = [[(o / f).read_bytes() for f in csvs] for o in outs]
    checks = [json.loads((o / "manifest.json").read_text())["checksums"] for o in outs]
    ok = len(csvs) == 3 and all(b == blobs[0] for b in blobs) and all(c == checks[0] for c in checks)
    verdict(7, ok, f"{len(csvs)} CSVs byte-identical over 2 runs at 1 thread and 2 runs at {n} threads")


def test_criterion_08_fusing_temperature(verdict):
    t = time.perf_counter()
    res = fusing_temperature_sweep(CAL, celsius_grid(20.0, 320.0, 5.0), variants=("raw", "da"), replicas=3, seed=SEED, wires_per_replica=10_000)
    elapsed = time.perf_counter() - t
    tf = {(r.variant, r.diameter): r.tf_celsius for r in res}
    diameters = (17.0, 30.0, 50.0, 90.0)
    da = [tf["da", d] for d in diameters]
    shift = float(np.mean([tf["raw", d] - tf["da", d] for d in diameters]))
    ok = max(da) <= 80.0 and abs(shift - 150.0) <= 30.0 and elapsed < 300.0
    raw = [tf["raw", d] for d in diameters]
    verdict(8, ok, f"Tf(DA) {da} C, Tf(raw) {raw} C, mean shift {shift:.1f} C, {elapsed:.0f} s at 1e4 wires/replica")


def _mean_drop(films, steps):
    drops = []
    for s, r0 in films:
        for step in steps:
            s = apply_step(s, step, CAL)
        drops.append(100.0 * (1.0 - network_resistance(s.graph, CAL.electrical, s.state)[0] / r0))
    return float(np.mean(drops))


def test_criterion_09_uv_drops(verdict):
    domain = Domain(120.0, 120.0)
    films = []
    for r in range(4):
        s = make_network(CAL, domain, derive_seed(SEED, "acceptance-uv", r))
        films.append((s, network_resistance(s.graph, CAL.electrical, s.state)[0]))
    expose = ExposeStep(uniform_mask(domain, domain.width), 10.74, 480.0)
    drops = {
        "raw": _mean_drop(films, (expose,)),
        "dpin": _mean_drop(films, (DecorateStep(0.0, "dpin"), expose)),
        "da": _mean_drop(films, (DecorateStep(CAL.da_coverage, "da"), expose)),
        "da+anneal": _mean_drop(films, (DecorateStep(CAL.da_coverage, "da"), expose, AnnealStep(348.15, 180.0))),
    }
    targets = {"raw": 13.5, "dpin": 54.0, "da": 77.5, "da+anneal": 84.4}
    ok = all(abs(drops[k] - targets[k]) <= 5.0 for k in targets)
    verdict(9, ok, ", ".join(f"{k} {drops[k]:.1f}% (target {targets[k]})" for k in targets))


def test_criterion_10_visibility(verdict):
    domain = Domain(200.0, 200.0)
    mask = half_mask(domain, 10.0)
    film = make_network(CAL, domain, SEED)
    conv = conventional_report(film, mask, CAL, resistance=False)
    processed, _ = run_recipe(film, gte_recipe(mask, CAL), CAL)
    gte = visibility_report(processed, mask, CAL)
    # haze change each region picks up from processing, on the same wires
    wl = np.array([550.0])
    _, _, _, hc0, hi0 = region_spectra(film, mask, CAL, wl)
    _, _, _, hc1, hi1 = region_spectra(processed, mask, CAL, wl)
    dh_insul, dh_cond = 100 * float(hi1[0] - hi0[0]), 100 * float(hc1[0] - hc0[0])
    ok = (
        gte.delta_t <= 2.0
        and gte.delta_h <= 1.0
        and dh_insul >= dh_cond
        and 9.0 <= conv.delta_t <= 14.0
        and 1.5 <= conv.delta_h <= 3.5
    )
    verdict(
        10,
        ok,
        f"GTE dT {gte.delta_t:.2f} dH {gte.delta_h:.2f} points (haze gain insulative {dh_insul:.3f} vs conductive {dh_cond:.3f}); "
        f"conventional dT {conv.delta_t:.2f} dH {conv.delta_h:.2f} points; Rs {gte.rs_cond:.0f} ohm/sq",
    )


def test_criterion_11_resolution(verdict):
    res = {r.linewidth: r for r in linewidth_resolution_test(CAL, replicas=100, seed=SEED)}
    ok = res[50.0].percolation_probability >= 0.95 and res[30.0].percolation_probability >= 0.95 and 10.0 in res
    detail = ", ".join(
        f"{w:g} um P(percolate) {r.percolation_probability:.2f} P(pass) {r.pass_probability:.2f}" for w, r in sorted(res.items(), reverse=True)
    )
    verdict(11, ok, detail)


def test_criterion_12_heat_generation_peak(verdict):
    wl = np.arange(250.0, 600.0 + 0.5, 1.0)
    hg = heat_generation_spectrum(30.0, TABLE, wl, CAL.medium_index)
    peak = float(wl[np.argmax(hg.values)])
    verdict(12, 330.0 <= peak <= 360.0, f"d = 30 nm heat-generation peak at {peak:.0f} nm")
