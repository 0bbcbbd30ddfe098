"""Line-oriented ``section.key = value`` configuration files.

Grammar, one statement per line::

    # comment
    section.key = value

Keys are lower-case dotted identifiers.  Blank lines and lines starting with
``#`` are ignored; everything after the first ``=`` is the value, with
surrounding whitespace stripped.  Lists are comma separated.  Every problem in
a file is reported at once, each with its line number.
"""
from __future__ import annotations

import math
import os
import re
from dataclasses import dataclass, field

_KEY = re.compile(r"^[a-z][a-z0-9_]*(\.[a-z][a-z0-9_]*)+$")


class ConfigError(ValueError):
    """All validation errors of one file, one per line of the message."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("\n".join(self.errors))


def parse_kv(text: str, source: str = "<config>"):
    """Split text into ``{key: (raw_value, line)}``; returns ``(entries, errors)``."""
    entries: dict[str, tuple[str, int]] = {}
    errors: list[str] = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            errors.append(f"{source}:{lineno}: expected 'key = value'")
            continue
        key, value = (part.strip() for part in stripped.split("=", 1))
        if not _KEY.match(key):
            errors.append(f"{source}:{lineno}: malformed key {key!r}")
            continue
        if key in entries:
            errors.append(f"{source}:{lineno}: duplicate key {key!r} (first defined on line {entries[key][1]})")
            continue
        entries[key] = (value, lineno)
    return entries, errors


# ---------------------------------------------------------------------------
# value types


def _float(raw):
    value = float(raw)
    if not math.isfinite(value):
        raise ValueError("not finite")
    return value


def _int(raw):
    return int(raw, 0)


def _str(raw):
    if not raw:
        raise ValueError("empty")
    return raw


def _float_list(raw):
    return tuple(_float(x) for x in _str_list(raw))


def _str_list(raw):
    items = tuple(x.strip() for x in raw.split(","))
    if not all(items):
        raise ValueError("empty list item")
    return items


_TYPE_NAMES = {_float: "number", _int: "integer", _str: "string", _float_list: "list of numbers", _str_list: "list of names"}


def _fmt(value) -> str:
    if isinstance(value, tuple):
        return ", ".join(_fmt(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


@dataclass(frozen=True)
class Key:
    kind: object
    default: object = None  # None: optional, resolved elsewhere
    required: bool = False
    choices: tuple = ()
    is_path: bool = False


SCHEMA: dict[str, Key] = {
    "run.seed": Key(_int, 0),
    "run.replicas": Key(_int, 3),
    "run.output_dir": Key(_str, "out"),
    "network.domain_width": Key(_float, required=True),
    "network.domain_height": Key(_float, required=True),
    "network.areal_density": Key(_float),
    "network.length_mean": Key(_float),
    "network.length_cv": Key(_float, 0.1),
    "network.diameter_mean": Key(_float),
    "network.diameter_cv": Key(_float, 0.1),
    "electrical.resistivity_eff": Key(_float),
    "electrical.r_contact_pristine": Key(_float),
    "electrical.r_contact_da": Key(_float),
    "electrical.r_contact_welded": Key(_float),
    "electrical.solver_tolerance": Key(_float, 1e-10),
    "electrical.max_iterations": Key(_int, 20000),
    "electrical.preconditioner": Key(_str, "wire", choices=("wire", "jacobi")),
    "calibration.file": Key(_str, is_path=True),
    "optics.permittivity_file": Key(_str, is_path=True),
    "optics.wavelength_min": Key(_float, 300.0),
    "optics.wavelength_max": Key(_float, 800.0),
    "optics.wavelength_step": Key(_float, 10.0),
    "optics.reference_nm": Key(_float, 550.0),
    "optics.forward_fraction": Key(_float),
    "optics.medium_index": Key(_float),
    "recipe.steps": Key(_str_list),
    "decorate.coverage": Key(_float, 0.8),
    "decorate.compound": Key(_str, "da", choices=("da", "dpin")),
    "expose.intensity_mw_cm2": Key(_float, 10.74),
    "expose.duration_s": Key(_float, 480.0),
    "expose.source_center_nm": Key(_float, 350.0),
    "expose.source_fwhm_nm": Key(_float, 30.0),
    "anneal.temperature_c": Key(_float, 75.0),
    "anneal.duration_s": Key(_float, 180.0),
    "mask.file": Key(_str, is_path=True),
    "mask.pattern": Key(_str, "half", choices=("half", "uniform")),
    "mask.pitch_um": Key(_float, 10.0),
    "sweep.t_min_c": Key(_float, 20.0),
    "sweep.t_max_c": Key(_float, 320.0),
    "sweep.t_step_k": Key(_float, 5.0),
    "sweep.diameters_nm": Key(_float_list, (17.0, 30.0, 50.0, 90.0)),
    "sweep.variants": Key(_str_list, ("raw", "d", "da", "uv_da")),
    "sweep.wires_per_replica": Key(_int, 10000),
    "resolution.linewidths_um": Key(_float_list, (50.0, 30.0, 20.0, 10.0)),
    "resolution.line_length_um": Key(_float, 100.0),
    "resolution.replicas": Key(_int, 100),
}

_STEP_NAMES = ("decorate", "expose", "anneal")


@dataclass(frozen=True)
class RunConfig:
    """Validated configuration: every schema key mapped to a typed value or None."""

    values: dict = field(default_factory=dict)

    def __getitem__(self, key):
        return self.values[key]

    def get(self, key, default=None):
        value = self.values.get(key)
        return default if value is None else value

    @property
    def steps(self) -> tuple[str, ...]:
        return self.values["recipe.steps"] or ()

    def with_values(self, **changes) -> "RunConfig":
        """Copy with keys given as ``section__key=value``."""
        values = dict(self.values)
        for name, value in changes.items():
            values[name.replace("__", ".")] = value
        return RunConfig(values)


def parse_config(text: str, source: str = "<config>", base_dir: str | None = None, check_files: bool = True) -> RunConfig:
    """Parse and validate a configuration; raises :class:`ConfigError` listing all problems."""
    entries, errors = parse_kv(text, source)
    values = {}
    for key, (raw, lineno) in entries.items():
        spec = SCHEMA.get(key)
        if spec is None:
            errors.append(f"{source}:{lineno}: unknown key {key!r}")
            continue
        try:
            value = spec.kind(raw)
        except (TypeError, ValueError):
            errors.append(f"{source}:{lineno}: {key} expects a {_TYPE_NAMES[spec.kind]}, got {raw!r}")
            continue
        if spec.choices and value not in spec.choices:
            errors.append(f"{source}:{lineno}: {key} must be one of {', '.join(spec.choices)}, got {raw!r}")
            continue
        if spec.is_path and base_dir is not None and not os.path.isabs(value):
            value = os.path.normpath(os.path.join(base_dir, value))
        if spec.is_path and check_files and not os.path.exists(value):
            errors.append(f"{source}:{lineno}: {key}: file not found: {value}")
            continue
        values[key] = value
    parsed = set(values)
    for key, spec in SCHEMA.items():
        if key not in entries and spec.required:
            errors.append(f"{source}: missing required key {key!r}")
        values.setdefault(key, spec.default)

    def check(key, cond, message):
        # only values that parsed are checked; the rest already carry an error
        if key in parsed and not cond(values[key]):
            errors.append(f"{source}:{entries[key][1]}: {key} {message}")

    for key in ("network.domain_width", "network.domain_height", "anneal.duration_s", "mask.pitch_um"):
        check(key, lambda v: v > 0, "must be > 0")
    check("run.replicas", lambda v: v >= 1, "must be >= 1")
    check("run.seed", lambda v: 0 <= v < 2**64, "must be a 64-bit unsigned integer")
    check("decorate.coverage", lambda v: 0 <= v <= 1, "must lie in [0, 1]")
    for s in values["recipe.steps"] or ():
        check("recipe.steps", lambda v, s=s: s in _STEP_NAMES, f"has unknown step {s!r}")
    check("recipe.steps", lambda v: v.count("decorate") <= 1, "may contain at most one decorate step")
    check(
        "recipe.steps",
        lambda v: "decorate" not in v or "expose" not in v or v.index("decorate") < v.index("expose"),
        "must decorate before expose",
    )
    if errors:
        raise ConfigError(errors)
    return RunConfig(values)


def load_config(path) -> RunConfig:
    with open(path, encoding="utf-8") as f:
        text = f.read()
    return parse_config(text, str(path), base_dir=os.path.dirname(os.path.abspath(path)))


def serialize_config(config: RunConfig) -> str:
    """Text form that parses back to an equal :class:`RunConfig`."""
    lines = []
    for key in SCHEMA:
        value = config.values.get(key)
        if value is None:
            continue
        if isinstance(value, tuple) and not value:
            continue
        lines.append(f"{key} = {_fmt(value)}")
    return "\n".join(lines) + "\n"
