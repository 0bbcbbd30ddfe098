"""CSV tables and the run manifest.

Every table has a fixed header (see :data:`HEADERS`), CRLF line endings and
floats written with 9 significant digits, so a rerun with the same seed writes
byte-identical files.  The manifest lists a SHA-256 checksum for every output
file next to the hash of the configuration that produced it.
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
import os
from dataclasses import asdict, dataclass, field

import numpy as np

from . import __version__
from .optics import Spectrum
from .pipeline import FusingResult, ResolutionResult, VisibilityReport
from .topology import JunctionState

HEADERS = {
    "spectrum": ("wavelength_nm", "value"),
    "visibility": ("wavelength_nm", "t_cond", "t_insul", "h_cond", "h_insul"),
    "visibility_summary": ("metric", "value"),
    "census": ("step", "kind") + tuple(s.name.lower() for s in JunctionState),
    "sweep": ("variant", "diameter_nm", "tf_k", "tf_c"),
    "sweep_curve": ("variant", "diameter_nm", "temperature_k", "median_ratio"),
    "resolution": (
        "linewidth_um",
        "replicas",
        "percolation_probability",
        "pass_probability",
        "median_insulation_ratio",
    ),
}


def format_value(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.9g}"
    return str(value)


def table_text(kind: str, rows) -> str:
    header = HEADERS[kind]
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(header)
    for row in rows:
        if len(row) != len(header):
            raise ValueError(f"{kind} row has {len(row)} fields, expected {len(header)}")
        writer.writerow([format_value(v) for v in row])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# rows per report kind


def spectrum_rows(spectrum: Spectrum):
    yield from zip(spectrum.wavelengths, spectrum.values)


def visibility_rows(report: VisibilityReport):
    for k, wl in enumerate(report.wavelengths):
        yield wl, report.t_cond[k], report.t_insul[k], report.h_cond[k], report.h_insul[k]


def visibility_summary_rows(report: VisibilityReport):
    yield "reference_nm", report.reference_nm
    yield "delta_t_points", report.delta_t
    yield "delta_h_points", report.delta_h
    yield "h_cond_points", 100.0 * report.h_cond[report.reference_index]
    yield "h_insul_points", 100.0 * report.h_insul[report.reference_index]
    yield "rs_cond_ohm_sq", report.rs_cond
    yield "insulation_ratio", report.insulation_ratio


def census_rows(log):
    for entry in log:
        yield (entry["step"], entry["kind"]) + tuple(entry[s.name.lower()] for s in JunctionState)


def sweep_rows(results):
    for r in results:
        yield r.variant, r.diameter, r.tf_kelvin, r.tf_celsius


def sweep_curve_rows(results):
    for r in results:
        for T, med in zip(r.temperatures, r.median_ratios):
            yield r.variant, r.diameter, T, med


def resolution_rows(results):
    for r in results:
        yield r.linewidth, r.replicas, r.percolation_probability, r.pass_probability, r.median_insulation_ratio


_ROWS = {
    "spectrum": spectrum_rows,
    "visibility": visibility_rows,
    "visibility_summary": visibility_summary_rows,
    "census": census_rows,
    "sweep": sweep_rows,
    "sweep_curve": sweep_curve_rows,
    "resolution": resolution_rows,
}


def _infer_kind(obj) -> str:
    if isinstance(obj, VisibilityReport):
        return "visibility"
    if isinstance(obj, Spectrum):
        return "spectrum"
    items = list(obj)
    if not items:
        raise ValueError("cannot infer the table kind of an empty sequence; pass kind=")
    first = items[0]
    if isinstance(first, FusingResult):
        return "sweep"
    if isinstance(first, ResolutionResult):
        return "resolution"
    if isinstance(first, dict) and "kind" in first:
        return "census"
    raise TypeError(f"no CSV schema for {type(first).__name__}")


def emit_csv(obj, path, kind: str | None = None) -> str:
    """Write ``obj`` as the CSV table ``kind`` and return the text written."""
    kind = kind or _infer_kind(obj)
    if kind not in HEADERS:
        raise ValueError(f"unknown table kind {kind!r}")
    text = table_text(kind, _ROWS[kind](obj))
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(text)
    return text


# ---------------------------------------------------------------------------
# manifest


def sha256_bytes(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for block in iter(lambda: f.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


@dataclass
class RunManifest:
    command: str
    config_hash: str
    seed: int
    calibration_version: str
    artifact_version: str = __version__
    started: str = ""
    finished: str = ""
    checksums: dict = field(default_factory=dict)  # file name -> sha256

    def add_output(self, path):
        self.checksums[os.path.basename(path)] = sha256_file(path)

    def same_outputs(self, other: "RunManifest") -> bool:
        return self.checksums == other.checksums

    def to_json(self) -> str:
        d = asdict(self)
        d["checksums"] = dict(sorted(self.checksums.items()))
        return json.dumps(d, indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "RunManifest":
        return cls(**json.loads(text))

    def write(self, path):
        with open(path, "w", encoding="utf-8") as f:
            f.write(self.to_json())
