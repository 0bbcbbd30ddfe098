import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gtepattern.cli import recipe_from_config
from gtepattern.config import SCHEMA, ConfigError, RunConfig, load_config, parse_config, serialize_config
from gtepattern.kinetics import AnnealStep, DecorateStep, ExposeStep
from gtepattern.masks import half_mask
from gtepattern.netgen import Domain

MINIMAL = "network.domain_width = 50\nnetwork.domain_height = 40\n"


def test_defaults():
    cfg = parse_config(MINIMAL)
    assert cfg["network.domain_width"] == 50.0
    assert cfg["run.seed"] == 0
    assert cfg["anneal.temperature_c"] == 75.0
    assert cfg["electrical.preconditioner"] == "wire"
    assert cfg["sweep.diameters_nm"] == (17.0, 30.0, 50.0, 90.0)
    assert cfg["network.areal_density"] is None
    assert cfg.get("network.areal_density", 0.1) == 0.1
    assert cfg.steps == ()


def test_comments_blank_lines_and_whitespace():
    cfg = parse_config("# header\n\n  network.domain_width=  10  \nnetwork.domain_height = 10\nrun.output_dir = a = b\n")
    assert cfg["network.domain_width"] == 10.0
    assert cfg["run.output_dir"] == "a = b"


def test_duplicate_key_names_both_lines():
    with pytest.raises(ConfigError) as err:
        parse_config(MINIMAL + "run.seed = 1\n\nrun.seed = 2\n", "a.cfg")
    (msg,) = err.value.errors
    assert "a.cfg:5" in msg and "line 3" in msg and "run.seed" in msg


def test_every_error_is_reported():
    text = "\n".join(
        [
            "network.domain_width = -1",
            "run.seed = abc",
            "no equals sign",
            "Bad.Key = 1",
            "unknown.key = 3",
            "decorate.coverage = 1.5",
            "electrical.preconditioner = ilu",
            "recipe.steps = expose, decorate, bake",
            "mask.file = does/not/exist.pbm",
        ]
    )
    with pytest.raises(ConfigError) as err:
        parse_config(text, "x.cfg")
    errors = err.value.errors
    lines = sorted({e.split(":")[1] for e in errors if e.split(":")[1].isdigit()})
    assert lines == [str(i) for i in range(1, 10)]
    assert any("domain_height" in e and "missing" in e for e in errors)
    assert any("bake" in e for e in errors)
    assert any("decorate before expose" in e for e in errors)
    assert any("file not found" in e for e in errors)


def test_relative_paths_resolve_against_the_config(tmp_path):
    (tmp_path / "m.pbm").write_bytes(b"P1\n# pitch_um=1\n1 1\n1\n")
    cfg_path = tmp_path / "run.cfg"
    cfg_path.write_text(MINIMAL + "mask.file = m.pbm\n")
    assert load_config(cfg_path)["mask.file"] == str(tmp_path / "m.pbm")


_VALUES = {
    "run.seed": st.integers(0, 2**63),
    "run.replicas": st.integers(1, 1000),
    "network.domain_width": st.floats(1.0, 1e4),
    "network.areal_density": st.floats(1e-3, 10.0),
    "anneal.temperature_c": st.floats(-20.0, 300.0),
    "decorate.coverage": st.floats(0.0, 1.0),
    "electrical.preconditioner": st.sampled_from(["wire", "jacobi"]),
    "sweep.diameters_nm": st.lists(st.floats(5.0, 300.0), min_size=1, max_size=5).map(tuple),
    "recipe.steps": st.sampled_from([("anneal",), ("decorate", "expose", "anneal"), ("expose", "anneal", "anneal")]),
}


@settings(max_examples=50)
@given(st.fixed_dictionaries({}, optional=_VALUES))
def test_serialize_round_trip(values):
    cfg = parse_config(MINIMAL).with_values(**{k.replace(".", "__"): v for k, v in values.items()})
    again = parse_config(serialize_config(cfg), check_files=False)
    assert again.values == cfg.values


def test_schema_defaults_are_typed():
    for key, spec in SCHEMA.items():
        if spec.default is not None:
            assert parse_config(MINIMAL)[key] == spec.default


def test_recipe_converts_celsius_to_kelvin():
    cfg = parse_config(MINIMAL + "recipe.steps = decorate, expose, anneal\n")
    mask = half_mask(Domain(50.0, 40.0), 10.0)
    recipe = recipe_from_config(cfg, mask)
    dec, exp, ann = recipe.steps
    assert isinstance(dec, DecorateStep) and dec.coverage == 0.8
    assert isinstance(exp, ExposeStep) and exp.dose == pytest.approx(10.74 * 480.0)
    assert isinstance(ann, AnnealStep)
    assert ann.temperature == pytest.approx(348.15)
    assert ann.duration == 180.0


def test_config_error_is_a_value_error():
    assert issubclass(ConfigError, ValueError)
    assert RunConfig({"run.seed": 3}).get("run.seed") == 3
