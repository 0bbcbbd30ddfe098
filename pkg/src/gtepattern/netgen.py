"""Random stick networks of nanowires.

Wires are straight sticks with isotropic orientation and uniformly distributed
centers.  Sticks that overhang the rectangular domain are clipped to it rather
than rejected so the film has no density depletion near the edges.

Lengths are in micrometres, diameters in nanometres.
"""
from __future__ import annotations

import io
import math
import zipfile
from dataclasses import dataclass

import numpy as np

from . import rng

MAX_WIRES = 10_000_000


@dataclass(frozen=True)
class Domain:
    width: float
    height: float

    @property
    def area(self) -> float:
        return self.width * self.height


@dataclass(frozen=True)
class NetworkParams:
    """Parameters of the random-stick film.

    ``areal_density`` is in wires per square micrometre; ``length_cv`` and
    ``diameter_cv`` are coefficients of variation of the truncated normal
    distributions.
    """

    domain_width: float = 100.0
    domain_height: float = 100.0
    areal_density: float = 0.1
    length_mean: float = 10.0
    length_cv: float = 0.1
    diameter_mean: float = 90.0
    diameter_cv: float = 0.1
    seed: int = 0

    def __post_init__(self):
        for name in ("domain_width", "domain_height", "length_mean", "diameter_mean"):
            value = getattr(self, name)
            if not math.isfinite(value) or value <= 0:
                raise ValueError(f"{name} must be finite and > 0, got {value}")
        if not math.isfinite(self.areal_density) or self.areal_density < 0:
            raise ValueError(f"areal_density must be finite and >= 0, got {self.areal_density}")
        for name in ("length_cv", "diameter_cv"):
            value = getattr(self, name)
            if not (0.0 <= value < 1.0):
                raise ValueError(f"{name} must lie in [0, 1), got {value}")
        if not (0 <= int(self.seed) <= rng.MASK64):
            raise ValueError("seed must be a 64-bit unsigned integer")

    @property
    def domain(self) -> Domain:
        return Domain(self.domain_width, self.domain_height)

    @property
    def wire_count(self) -> int:
        return int(round(self.areal_density * self.domain_width * self.domain_height))


@dataclass(frozen=True)
class Wire:
    id: int
    p0: tuple[float, float]
    p1: tuple[float, float]
    diameter: float

    @property
    def length(self) -> float:
        return math.hypot(self.p1[0] - self.p0[0], self.p1[1] - self.p0[1])


class WireSet:
    """Structure-of-arrays container for wires.

    ``p0`` and ``p1`` have shape ``(n, 2)``; wire ``i`` has id ``i``.
    """

    def __init__(self, p0, p1, diameter, domain: Domain):
        self.p0 = np.ascontiguousarray(p0, dtype=np.float64).reshape(-1, 2)
        self.p1 = np.ascontiguousarray(p1, dtype=np.float64).reshape(-1, 2)
        self.diameter = np.ascontiguousarray(diameter, dtype=np.float64).reshape(-1)
        self.domain = domain
        if not (len(self.p0) == len(self.p1) == len(self.diameter)):
            raise ValueError("p0, p1 and diameter must have the same length")

    def __len__(self) -> int:
        return len(self.diameter)

    def __getitem__(self, i: int) -> Wire:
        return Wire(int(i), tuple(self.p0[i]), tuple(self.p1[i]), float(self.diameter[i]))

    @property
    def lengths(self) -> np.ndarray:
        return np.hypot(*(self.p1 - self.p0).T)

    def subset(self, index) -> "WireSet":
        """Wires selected by a boolean mask or index array, renumbered from 0."""
        return WireSet(self.p0[index], self.p1[index], self.diameter[index], self.domain)

    def with_diameters(self, diameter) -> "WireSet":
        return WireSet(self.p0, self.p1, np.broadcast_to(diameter, self.diameter.shape), self.domain)

    @classmethod
    def from_wires(cls, wires, domain: Domain) -> "WireSet":
        wires = list(wires)
        if not wires:
            return cls(np.empty((0, 2)), np.empty((0, 2)), np.empty(0), domain)
        return cls([w.p0 for w in wires], [w.p1 for w in wires], [w.diameter for w in wires], domain)

    def tobytes(self) -> bytes:
        """Serialized form: an ``.npz`` archive with fixed member order.

        Members carry a fixed timestamp so equal wire sets give equal bytes.
        """
        members = dict(
            p0=self.p0,
            p1=self.p1,
            diameter=self.diameter,
            domain=np.array([self.domain.width, self.domain.height], dtype=float),
        )
        buf = io.BytesIO()
        with zipfile.ZipFile(buf, "w", zipfile.ZIP_STORED) as zf:
            for name, arr in members.items():
                member = io.BytesIO()
                np.lib.format.write_array(member, np.ascontiguousarray(arr), allow_pickle=False)
                zf.writestr(zipfile.ZipInfo(name + ".npy", date_time=(1980, 1, 1, 0, 0, 0)), member.getvalue())
        return buf.getvalue()

    @classmethod
    def frombytes(cls, data: bytes) -> "WireSet":
        with np.load(io.BytesIO(data)) as z:
            w, h = z["domain"]
            return cls(z["p0"], z["p1"], z["diameter"], Domain(float(w), float(h)))


def _truncated_normal(gen: np.random.Generator, mean: float, cv: float, n: int) -> np.ndarray:
    # Redraw non-positive samples; with cv < 1 fewer than 16% are ever redrawn.
    out = gen.normal(mean, cv * mean, size=n)
    bad = out <= 0
    while bad.any():
        out[bad] = gen.normal(mean, cv * mean, size=int(bad.sum()))
        bad = out <= 0
    return out


def clip_segments(p0: np.ndarray, p1: np.ndarray, xmin, ymin, xmax, ymax):
    """Vectorized Liang-Barsky clipping against an axis-aligned box.

    Returns ``(t0, t1, keep)``: the parameter interval of the part of each
    segment inside the closed box, and whether that part is non-empty.
    """
    d = p1 - p0
    t0 = np.zeros(len(p0))
    t1 = np.ones(len(p0))
    keep = np.ones(len(p0), dtype=bool)
    with np.errstate(divide="ignore", invalid="ignore"):
        for p, q in (
            (-d[:, 0], p0[:, 0] - xmin),
            (d[:, 0], xmax - p0[:, 0]),
            (-d[:, 1], p0[:, 1] - ymin),
            (d[:, 1], ymax - p0[:, 1]),
        ):
            parallel = p == 0
            keep &= ~(parallel & (q < 0))
            r = q / p
            entering = p < 0
            leaving = p > 0
            t0 = np.where(entering, np.maximum(t0, r), t0)
            t1 = np.where(leaving, np.minimum(t1, r), t1)
    keep &= t0 <= t1
    return t0, t1, keep


def _snap(points: np.ndarray, domain: Domain) -> np.ndarray:
    # Clipped coordinates land on the boundary up to rounding; pin them exactly.
    pts = points.copy()
    for axis, hi in ((0, domain.width), (1, domain.height)):
        c = pts[:, axis]
        c[np.abs(c) <= 1e-12 * hi] = 0.0
        c[np.abs(c - hi) <= 1e-12 * hi] = hi
        np.clip(c, 0.0, hi, out=c)
    return pts


def clip_to_domain(wire: Wire, domain: Domain) -> Wire | None:
    """Clip one wire to ``[0, width] x [0, height]``; ``None`` if it lies outside."""
    p0 = np.array([wire.p0], dtype=float)
    p1 = np.array([wire.p1], dtype=float)
    t0, t1, keep = clip_segments(p0, p1, 0.0, 0.0, domain.width, domain.height)
    if not keep[0]:
        return None
    if t0[0] == 0.0 and t1[0] == 1.0:
        return wire
    d = p1 - p0
    a = _snap(p0 + t0[:, None] * d, domain)[0]
    b = _snap(p0 + t1[:, None] * d, domain)[0]
    return Wire(wire.id, (float(a[0]), float(a[1])), (float(b[0]), float(b[1])), wire.diameter)


def generate_network(params: NetworkParams) -> WireSet:
    """Draw a clipped random-stick network.

    The output is a pure function of ``params``: centers, orientations,
    lengths and diameters come from one Philox stream keyed by ``params.seed``.
    """
    n = params.wire_count
    if n > MAX_WIRES:
        raise ValueError(f"density implies {n} wires, above the {MAX_WIRES} limit")
    domain = params.domain
    if n == 0:
        return WireSet(np.empty((0, 2)), np.empty((0, 2)), np.empty(0), domain)

    gen = rng.stream(int(params.seed), "netgen")
    centers = gen.uniform(0.0, 1.0, size=(n, 2)) * [domain.width, domain.height]
    theta = gen.uniform(0.0, math.pi, size=n)
    length = _truncated_normal(gen, params.length_mean, params.length_cv, n)
    diameter = _truncated_normal(gen, params.diameter_mean, params.diameter_cv, n)

    half = 0.5 * length[:, None] * np.column_stack([np.cos(theta), np.sin(theta)])
    p0 = centers - half
    p1 = centers + half
    t0, t1, keep = clip_segments(p0, p1, 0.0, 0.0, domain.width, domain.height)
    # Centers are inside the domain, so every clipped wire keeps positive length.
    assert keep.all()
    d = p1 - p0
    outside = (t0 > 0) | (t1 < 1)
    q0 = np.where(outside[:, None], _snap(p0 + t0[:, None] * d, domain), p0)
    q1 = np.where(outside[:, None], _snap(p0 + t1[:, None] * d, domain), p1)
    return WireSet(q0, q1, diameter, domain)
