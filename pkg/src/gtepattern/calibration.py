"""Frozen model constants and the file that stores them.

The file is ``key = value`` text (see :mod:`gtepattern.config`) with a
``version`` line.  Comment lines record how the values were fitted; they are
kept verbatim when the file is rewritten.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from importlib import resources

from .config import ConfigError, parse_kv
from .electrical import ElectricalParams
from .kinetics import GTEParams, UVParams
from .optics import MEDIUM_INDEX

DEFAULT_FILE = "calibration.txt"
_SOLVER_FIELDS = ("solver_tolerance", "max_iterations", "preconditioner")


@dataclass(frozen=True)
class Calibration:
    version: str = "0"
    areal_density: float = 0.118  # wires/um^2
    length_mean: float = 10.0  # um
    diameter_mean: float = 90.0  # nm
    da_coverage: float = 0.8
    forward_fraction: float = 0.16
    medium_index: float = MEDIUM_INDEX
    electrical: ElectricalParams = field(default_factory=ElectricalParams)
    gte: GTEParams = field(default_factory=GTEParams)
    uv: UVParams = field(default_factory=UVParams)
    notes: tuple[str, ...] = ()

    def replace(self, **changes) -> "Calibration":
        return dataclasses.replace(self, **changes)

    def items(self):
        """``(key, value)`` pairs in file order."""
        yield "network.areal_density", self.areal_density
        yield "network.length_mean", self.length_mean
        yield "network.diameter_mean", self.diameter_mean
        yield "decorate.coverage", self.da_coverage
        yield "optics.forward_fraction", self.forward_fraction
        yield "optics.medium_index", self.medium_index
        for f in dataclasses.fields(ElectricalParams):
            if f.name not in _SOLVER_FIELDS:
                yield f"electrical.{f.name}", getattr(self.electrical, f.name)
        for f in dataclasses.fields(GTEParams):
            yield f"gte.{f.name}", getattr(self.gte, f.name)
        for f in dataclasses.fields(UVParams):
            yield f"uv.{f.name}", getattr(self.uv, f.name)


_TOP = {
    "network.areal_density": "areal_density",
    "network.length_mean": "length_mean",
    "network.diameter_mean": "diameter_mean",
    "decorate.coverage": "da_coverage",
    "optics.forward_fraction": "forward_fraction",
    "optics.medium_index": "medium_index",
}


def format_calibration(cal: Calibration) -> str:
    lines = [f"# {n}" if n else "#" for n in cal.notes]
    lines.append(f"version = {cal.version}")
    lines.extend(f"{k} = {v!r}" for k, v in cal.items())
    return "\n".join(lines) + "\n"


def parse_calibration(text: str, source: str = "<calibration>") -> Calibration:
    lines = text.splitlines()
    version, errors = None, []
    for i, line in enumerate(lines):
        key, sep, value = line.partition("=")
        if sep and key.strip() == "version":
            if version is not None:
                errors.append(f"{source}:{i + 1}: duplicate 'version' line")
            version = value.strip()
            lines[i] = ""  # keep line numbers for the remaining keys
    entries, kv_errors = parse_kv("\n".join(lines), source)
    errors.extend(kv_errors)
    notes = tuple(line.strip()[1:].strip() for line in lines if line.strip().startswith("#"))
    expected = dict(Calibration().items())
    kwargs, sections = {}, {"electrical": {}, "gte": {}, "uv": {}}
    if not version:
        errors.append(f"{source}: missing 'version' line")
    for key, (raw, lineno) in entries.items():
        if key not in expected:
            errors.append(f"{source}:{lineno}: unknown key {key!r}")
            continue
        try:
            value = float(raw)
        except ValueError:
            errors.append(f"{source}:{lineno}: {key} expects a number, got {raw!r}")
            continue
        if key in _TOP:
            kwargs[_TOP[key]] = value
        else:
            section, name = key.split(".", 1)
            sections[section][name] = value
    for key in expected:
        if key not in entries:
            errors.append(f"{source}: missing key {key!r}")
    if errors:
        raise ConfigError(errors)
    try:
        return Calibration(
            version=version,
            electrical=ElectricalParams(**sections["electrical"]),
            gte=GTEParams(**sections["gte"]),
            uv=UVParams(**sections["uv"]),
            notes=notes,
            **kwargs,
        )
    except ValueError as exc:
        raise ConfigError([f"{source}: {exc}"]) from None


def load_calibration(path=None) -> Calibration:
    """Read a calibration file; ``None`` selects the one shipped with the package."""
    if path is None:
        text = resources.files("gtepattern.data").joinpath(DEFAULT_FILE).read_text("utf-8")
        return parse_calibration(text, DEFAULT_FILE)
    with open(path, encoding="utf-8") as f:
        return parse_calibration(f.read(), str(path))


def save_calibration(cal: Calibration, path):
    with open(path, "w", encoding="utf-8") as f:
        f.write(format_calibration(cal))
