import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gtepattern.calibration import load_calibration
from gtepattern.kinetics import AnnealStep, DecorateStep, ExposeStep, NetworkState
from gtepattern.masks import RegionMask, half_mask, uniform_mask
from gtepattern.netgen import Domain, WireSet
from gtepattern.pipeline import (
    ProcessRecipe,
    StepError,
    celsius_grid,
    conventional_report,
    fusing_temperature_sweep,
    gte_recipe,
    make_network,
    resolution_layout,
    run_recipe,
    visibility_report,
)
from gtepattern.topology import JunctionState

CAL = load_calibration()
BROKEN = int(JunctionState.BROKEN)
WELDED = int(JunctionState.WELDED)
WL = np.array([400.0, 550.0, 700.0])


def test_recipe_validation():
    mask = uniform_mask(Domain(10.0, 10.0), 1.0)
    with pytest.raises(ValueError, match="at least one"):
        ProcessRecipe(())
    with pytest.raises(ValueError, match="at most one"):
        ProcessRecipe((DecorateStep(0.8), DecorateStep(0.5)))
    with pytest.raises(ValueError, match="precede"):
        ProcessRecipe((ExposeStep(mask, 1.0, 1.0), DecorateStep(0.8)))
    with pytest.raises(TypeError):
        ProcessRecipe(("anneal",))


def test_failing_step_is_named():
    s = make_network(CAL, Domain(20.0, 20.0), 0)
    recipe = ProcessRecipe((DecorateStep(0.8), AnnealStep(700.0, 10.0)))
    with pytest.raises(StepError, match="step 2 \\(anneal\\)"):
        run_recipe(s, recipe, CAL)
    wrong = uniform_mask(Domain(40.0, 40.0), 1.0)
    with pytest.raises(StepError, match="step 1 \\(expose\\)"):
        run_recipe(s, ProcessRecipe((ExposeStep(wrong, 1.0, 1.0),)), CAL)


def test_census_log_and_determinism():
    s = make_network(CAL, Domain(40.0, 40.0), 1)
    recipe = gte_recipe(half_mask(Domain(40.0, 40.0), 2.0), CAL)
    a, log = run_recipe(s, recipe, CAL)
    b, log_b = run_recipe(s, recipe, CAL)
    assert np.array_equal(a.state, b.state) and log == log_b
    assert [row["kind"] for row in log] == ["initial", "decorate", "expose", "anneal"]
    assert all(sum(v for k, v in row.items() if k not in ("step", "kind")) == len(s.junctions) for row in log)
    c, _ = run_recipe(s, recipe, CAL, seed=2)
    assert not np.array_equal(a.state, c.state)


def test_empty_region_is_rejected():
    s = make_network(CAL, Domain(40.0, 40.0), 0)
    with pytest.raises(ValueError, match="empty region class"):
        visibility_report(s, uniform_mask(Domain(40.0, 40.0), 2.0), CAL, WL)
    with pytest.raises(ValueError, match="empty region class"):
        conventional_report(s, uniform_mask(Domain(40.0, 40.0), 2.0, exposed=False), CAL, WL)


def mirrored_film(seed, n=150, side=60.0):
    rng = np.random.default_rng(seed)
    # wires confined to the left half, away from the mirror line
    c = rng.uniform([3.0, 3.0], [side / 2 - 3.0, side - 3.0], (n, 2))
    theta = rng.uniform(0, np.pi, n)
    half = 2.5 * np.c_[np.cos(theta), np.sin(theta)]
    p0, p1 = c - half, c + half
    flip = np.array([-1.0, 1.0])
    q0, q1 = p0 * flip + [side, 0.0], p1 * flip + [side, 0.0]
    d = rng.uniform(60.0, 120.0, n)
    return WireSet(np.r_[p0, q0], np.r_[p1, q1], np.r_[d, d], Domain(side, side))


def test_mirror_symmetric_film_shows_no_contrast():
    s = NetworkState.from_wires(mirrored_film(0))
    rep = visibility_report(s, half_mask(s.wires.domain, 2.0), CAL, WL)
    assert rep.delta_t == pytest.approx(0.0, abs=1e-9)
    assert rep.delta_h == pytest.approx(0.0, abs=1e-9)
    assert np.allclose(rep.t_cond, rep.t_insul)


def test_visibility_fields_are_consistent():
    d = Domain(60.0, 60.0)
    s, _ = run_recipe(make_network(CAL, d, 2), gte_recipe(half_mask(d, 2.0), CAL), CAL)
    rep = visibility_report(s, half_mask(d, 2.0), CAL, WL)
    k = rep.reference_index
    assert rep.wavelengths[k] == 550.0
    assert rep.delta_t == pytest.approx(100 * abs(rep.t_insul[k] - rep.t_cond[k]))
    assert rep.delta_h == pytest.approx(100 * abs(rep.h_insul[k] - rep.h_cond[k]))
    assert np.all((0 < rep.t_cond) & (rep.t_cond <= 1) & (0 <= rep.h_cond) & (rep.h_cond <= 1))
    assert rep.rs_cond > 0
    conv = conventional_report(s, half_mask(d, 2.0), CAL, WL, resistance=False)
    # fragments keep most of the wire material, an etched region none
    assert rep.delta_t <= conv.delta_t
    assert math.isnan(conv.rs_cond)
    with pytest.raises(ValueError, match="reference"):
        visibility_report(s, half_mask(d, 2.0), CAL, np.array([400.0, 500.0]))


@settings(max_examples=8, deadline=None)
@given(seed=st.integers(0, 1000), data=st.data())
def test_larger_exposed_region_breaks_a_subset(seed, data):
    d = Domain(30.0, 30.0)
    small = np.array(data.draw(st.lists(st.lists(st.booleans(), min_size=6, max_size=6), min_size=6, max_size=6)))
    extra = np.array(data.draw(st.lists(st.lists(st.booleans(), min_size=6, max_size=6), min_size=6, max_size=6)))
    s = make_network(CAL, d, seed)
    out_small, _ = run_recipe(s, gte_recipe(RegionMask(small, 5.0), CAL, temperature=360.0), CAL)
    out_big, _ = run_recipe(s, gte_recipe(RegionMask(small | extra, 5.0), CAL, temperature=360.0), CAL)
    assert np.all((out_small.state == BROKEN)[out_big.state == BROKEN])
    welded_small = out_small.state == WELDED
    assert np.all((out_big.state == WELDED)[welded_small & (out_big.state != BROKEN)])


def test_resolution_layout():
    domain, mask, lines = resolution_layout(20.0, 100.0)
    assert (domain.width, domain.height) == (100.0, 100.0)
    assert mask.lookup([(50.0, 30.0), (50.0, 50.0), (50.0, 70.0), (50.0, 10.0)]).tolist() == [True, False, True, False]
    assert lines == [(20.0, 40.0), (60.0, 80.0)]
    with pytest.raises(ValueError, match="zero-width"):
        resolution_layout(0.0, 100.0)


def test_celsius_grid():
    grid = celsius_grid(20.0, 30.0, 5.0)
    assert grid == pytest.approx([293.15, 298.15, 303.15])


def test_sweep_requires_three_replicas():
    with pytest.raises(ValueError, match="3 replicas"):
        fusing_temperature_sweep(CAL, [300.0], replicas=2)


def test_small_sweep_orders_variants():
    temps = celsius_grid(40.0, 300.0, 20.0)
    res = fusing_temperature_sweep(CAL, temps, diameters=(50.0,), variants=("raw", "da"), replicas=3, wires_per_replica=1500)
    tf = {r.variant: r.tf_kelvin for r in res}
    assert tf["da"] < tf["raw"] < math.inf
    for r in res:
        assert r.temperatures[-1] == r.tf_kelvin
        assert r.median_ratios[-1] > 1e5
