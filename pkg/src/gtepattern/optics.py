"""Silver optics: permittivity table, cylinder Mie efficiencies, photothermal heating
and the layered transmittance/haze model of a wire film.

Wires are treated as infinite circular cylinders at normal incidence in a
homogeneous ambient of refractive index ``medium_index``.  The default ambient
1.22 is the rms of air and the PDMS substrate, a crude stand-in for a wire lying
on an interface.  Real wires have pentagonal cross sections and junctions
couple their fields; the cylinder keeps a single transverse resonance where the
pentagon shows two, so resonance positions are only good to a few tens of nm.
"""
from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass
from importlib import resources

import numpy as np
from scipy.special import h1vp, hankel1, jv, jvp

SPEED_OF_LIGHT = 299_792_458.0  # m/s
MEDIUM_INDEX = 1.22
REFERENCE_WAVELENGTH = 550.0  # nm
DEFAULT_TABLE = "ag_permittivity_jc.csv"


class PermittivityError(ValueError):
    pass


class MieConvergenceError(RuntimeError):
    pass


@dataclass(frozen=True)
class PermittivityTable:
    """Tabulated complex permittivity, linearly interpolated with constant extension."""

    wavelengths: np.ndarray
    eps_real: np.ndarray
    eps_imag: np.ndarray

    def __call__(self, wavelength):
        wl = np.asarray(wavelength, dtype=float)
        re = np.interp(wl, self.wavelengths, self.eps_real)
        im = np.interp(wl, self.wavelengths, self.eps_imag)
        return re + 1j * im


def parse_permittivity(lines, source="<table>") -> PermittivityTable:
    """Parse CSV text with header ``wavelength_nm,eps_real,eps_imag``.

    Lines starting with ``#`` are comments.  Errors carry the 1-based line number.
    """
    rows = []
    header_seen = False
    for lineno, line in enumerate(lines, start=1):
        text = line.strip()
        if not text or text.startswith("#"):
            continue
        fields = next(csv.reader([text]))
        if not header_seen:
            if [f.strip() for f in fields] != ["wavelength_nm", "eps_real", "eps_imag"]:
                raise PermittivityError(f"{source}:{lineno}: expected header wavelength_nm,eps_real,eps_imag")
            header_seen = True
            continue
        if len(fields) != 3:
            raise PermittivityError(f"{source}:{lineno}: expected 3 fields, got {len(fields)}")
        try:
            wl, re, im = (float(f) for f in fields)
        except ValueError:
            raise PermittivityError(f"{source}:{lineno}: non-numeric field") from None
        if not all(math.isfinite(v) for v in (wl, re, im)):
            raise PermittivityError(f"{source}:{lineno}: non-finite value")
        if im < 0:
            raise PermittivityError(f"{source}:{lineno}: negative Im(eps) {im} (active medium)")
        if rows and wl <= rows[-1][1]:
            raise PermittivityError(f"{source}:{lineno}: wavelength grid not strictly increasing")
        rows.append((lineno, wl, re, im))
    if not header_seen or not rows:
        raise PermittivityError(f"{source}: no data rows")
    data = np.array([r[1:] for r in rows])
    return PermittivityTable(data[:, 0].copy(), data[:, 1].copy(), data[:, 2].copy())


def load_permittivity(path=None) -> PermittivityTable:
    """Load a permittivity CSV; ``None`` selects the shipped silver table."""
    if path is None:
        text = resources.files("gtepattern.data").joinpath(DEFAULT_TABLE).read_text("utf-8")
        return parse_permittivity(text.splitlines(), DEFAULT_TABLE)
    with open(path, encoding="utf-8") as f:
        return parse_permittivity(f.read().splitlines(), str(path))


# ---------------------------------------------------------------------------
# Mie theory


@dataclass(frozen=True)
class Efficiencies:
    q_ext: np.ndarray | float
    q_sca: np.ndarray | float
    q_abs: np.ndarray | float


def series_order(x):
    """Truncation order ``ceil(x + 4 x^(1/3) + 2)``."""
    return np.ceil(x + 4.0 * np.cbrt(x) + 2.0).astype(int)


def _coefficients(n, x, m):
    """TM (field parallel to the axis) and TE scattering coefficients of order n."""
    mx = m * x
    jm, djm = jv(n, mx), jvp(n, mx)
    jx, djx = jv(n, x), jvp(n, x)
    h, dh = hankel1(n, x), h1vp(n, x)
    b = (jm * djx - m * djm * jx) / (jm * dh - m * djm * h)
    a = (m * djx * jm - jx * djm) / (m * jm * dh - djm * h)
    return b, a


def mie_cylinder(diameter, wavelength, eps, medium_index: float = MEDIUM_INDEX) -> Efficiencies:
    """Extinction, scattering and absorption efficiencies of an infinite cylinder.

    Normal incidence, unpolarized (mean of the two polarizations).  Arguments
    broadcast; ``diameter`` and ``wavelength`` are in nm.  Efficiencies are
    cross sections per unit length divided by the diameter.
    """
    d, wl, eps = np.broadcast_arrays(
        np.asarray(diameter, float), np.asarray(wavelength, float), np.asarray(eps, complex)
    )
    if np.any(d <= 0) or np.any(wl <= 0):
        raise ValueError("diameter and wavelength must be > 0")
    shape = d.shape
    d, wl, eps = d.ravel(), wl.ravel(), eps.ravel()
    x = math.pi * d * medium_index / wl
    m = np.sqrt(eps + 0j) / medium_index
    m_max = series_order(x)
    top = int(m_max.max()) + 5
    n = np.arange(top + 1)[:, None]
    b, a = _coefficients(n, x[None, :], m[None, :])

    # convergence check on the first term beyond the margin
    tail = (2.0 / x) * 2.0 * np.maximum(np.abs(b[m_max + 5, np.arange(len(x))]), np.abs(a[m_max + 5, np.arange(len(x))]))
    if np.any(~(tail <= 1e-12)):
        bad = int(np.argmax(~(tail <= 1e-12)))
        raise MieConvergenceError(
            f"Mie series not converged: term {m_max[bad] + 5} is {tail[bad]:.3e} "
            f"(d={d[bad]} nm, lambda={wl[bad]} nm)"
        )

    weight = np.where(n == 0, 1.0, 2.0) * (n <= m_max[None, :])
    q_ext = (2.0 / x) * 0.5 * np.sum(weight * (b.real + a.real), axis=0)
    q_sca = (2.0 / x) * 0.5 * np.sum(weight * (np.abs(b) ** 2 + np.abs(a) ** 2), axis=0)
    lossless = eps.imag == 0
    q_ext = np.where(lossless, q_sca, q_ext)
    q_abs = np.where(lossless, 0.0, q_ext - q_sca)
    if shape == ():
        return Efficiencies(float(q_ext[0]), float(q_sca[0]), float(q_abs[0]))
    return Efficiencies(q_ext.reshape(shape), q_sca.reshape(shape), q_abs.reshape(shape))


@dataclass(frozen=True)
class EfficiencySet:
    """Efficiencies on a (diameter, wavelength) grid; arrays have shape (nd, nl)."""

    diameters: np.ndarray
    wavelengths: np.ndarray
    q_ext: np.ndarray
    q_sca: np.ndarray
    q_abs: np.ndarray


def efficiency_table(diameters, wavelengths, table: PermittivityTable, medium_index: float = MEDIUM_INDEX) -> EfficiencySet:
    d = np.asarray(diameters, float)
    wl = np.asarray(wavelengths, float)
    eff = mie_cylinder(d[:, None], wl[None, :], table(wl)[None, :], medium_index)
    return EfficiencySet(d, wl, eff.q_ext, eff.q_sca, eff.q_abs)


# ---------------------------------------------------------------------------
# photothermal heating


@dataclass(frozen=True)
class Spectrum:
    wavelengths: np.ndarray
    values: np.ndarray
    units: str = "arb"

    def __post_init__(self):
        if len(self.wavelengths) != len(self.values):
            raise ValueError("wavelength grid and values differ in length")
        if np.any(np.asarray(self.values) < 0):
            raise ValueError("spectrum values must be non-negative")


def heat_density(e_magnitude, wavelength, eps):
    """Volumetric heat source ``(omega / 2) Im(eps) |E|^2`` with ``omega = 2 pi c / lambda``.

    ``wavelength`` in nm; the result is in arbitrary units (no vacuum
    permittivity factor).
    """
    wl = np.asarray(wavelength, float)
    if np.any(wl <= 0):
        raise ValueError("wavelength must be > 0")
    if np.any(np.asarray(e_magnitude) < 0):
        raise ValueError("field magnitude must be >= 0")
    omega = 2.0 * math.pi * SPEED_OF_LIGHT / (wl * 1e-9)
    return 0.5 * omega * np.imag(eps) * np.abs(e_magnitude) ** 2


def mean_internal_intensity(diameter, wavelength, eps, medium_index: float = MEDIUM_INDEX):
    """Cross-section average of |E|^2 inside the wire, per unit incident |E0|^2.

    Follows from equating the absorbed power ``Q_abs d I0`` with the volume
    integral of the heat density: ``<|E|^2> = 2 n Q_abs lambda / (pi^2 d Im eps)``.
    Zero for a lossless wire.
    """
    q_abs = mie_cylinder(diameter, wavelength, eps, medium_index).q_abs
    im = np.imag(eps)
    with np.errstate(divide="ignore", invalid="ignore"):
        value = 2.0 * medium_index * q_abs * wavelength / (math.pi**2 * diameter * im)
    return np.where(im > 0, value, 0.0)


def heat_generation_spectrum(diameter, table: PermittivityTable, wavelengths, medium_index: float = MEDIUM_INDEX) -> Spectrum:
    """Heat generated in a wire under unit incident intensity, scaled to unit peak.

    Each wavelength evaluates the heat density with the wire's mean internal
    intensity, so the spectrum tracks the absorption efficiency.  A spectrum
    that is zero everywhere stays zero.
    """
    wl = np.asarray(wavelengths, float)
    eps = table(wl)
    intensity = mean_internal_intensity(diameter, wl, eps, medium_index)
    hg = heat_density(np.sqrt(intensity), wl, eps)
    peak = hg.max() if len(hg) else 0.0
    if peak > 0:
        hg = hg / peak
    return Spectrum(wl, hg, "relative")


def uv_source_spectrum(wavelengths, center: float = 350.0, fwhm: float = 30.0) -> Spectrum:
    """Gaussian lamp line normalized to unit area on the given grid (per nm)."""
    wl = np.asarray(wavelengths, float)
    sigma = fwhm / (2.0 * math.sqrt(2.0 * math.log(2.0)))
    values = np.exp(-0.5 * ((wl - center) / sigma) ** 2)
    area = np.trapezoid(values, wl)
    if area <= 0:
        raise ValueError("source line does not overlap the wavelength grid")
    return Spectrum(wl, values / area, "1/nm")


def spectral_overlap(source: Spectrum, hg: Spectrum) -> float:
    """Integral of source times heat-generation spectrum over a common grid."""
    if not np.array_equal(source.wavelengths, hg.wavelengths):
        raise ValueError("spectra must share one wavelength grid")
    return float(np.trapezoid(source.values * hg.values, source.wavelengths))


# ---------------------------------------------------------------------------
# film transmittance and haze


@dataclass(frozen=True)
class Inventory:
    """Projected wire pieces in a region: diameters (nm), lengths (um), region area (um^2)."""

    diameters: np.ndarray
    lengths: np.ndarray
    area: float

    @property
    def coverage(self) -> float:
        return float(np.sum(self.diameters * 1e-3 * self.lengths) / self.area)


def optical_depths(inventory: Inventory, eff: EfficiencySet):
    """``(tau_abs, tau_sca)`` per wavelength: sum of d l q(d) over the region area.

    Efficiencies are linearly interpolated between the table diameters.
    """
    grid = eff.diameters
    d = np.clip(inventory.diameters, grid[0], grid[-1])
    k = np.clip(np.searchsorted(grid, d, side="right") - 1, 0, len(grid) - 2) if len(grid) > 1 else np.zeros(len(d), int)
    weight = inventory.diameters * 1e-3 * inventory.lengths / inventory.area
    if len(grid) == 1:
        w_nodes = np.array([weight.sum()])
    else:
        frac = (d - grid[k]) / (grid[k + 1] - grid[k])
        w_nodes = np.bincount(k, weight * (1 - frac), minlength=len(grid))
        w_nodes += np.bincount(k + 1, weight * frac, minlength=len(grid))
    return w_nodes @ eff.q_abs, w_nodes @ eff.q_sca


def transmittance_haze(tau_abs, tau_sca, forward_fraction: float):
    """Layered film model: absorbed, scattered and direct parts of the beam."""
    absorbed = 1.0 - np.exp(-np.asarray(tau_abs, float))
    scattered = 1.0 - np.exp(-np.asarray(tau_sca, float))
    diffuse = (1.0 - absorbed) * scattered * forward_fraction
    t = (1.0 - absorbed) * (1.0 - scattered) + diffuse
    with np.errstate(invalid="ignore", divide="ignore"):
        h = np.where(t > 0, diffuse / t, 0.0)
    return t, h


def region_transmittance_haze(inventory: Inventory, eff: EfficiencySet, forward_fraction: float):
    """Total transmittance and haze spectra of one region on ``eff.wavelengths``."""
    if inventory.area <= 0:
        raise ValueError("region area must be > 0")
    if not 0.0 <= forward_fraction <= 1.0:
        raise ValueError("forward_fraction must lie in [0, 1]")
    phi = inventory.coverage
    if phi > 1.5:
        warnings.warn(f"coverage {phi:.2f} > 1.5: dense-film regime, layered model unreliable", stacklevel=2)
    tau_abs, tau_sca = optical_depths(inventory, eff)
    return transmittance_haze(tau_abs, tau_sca, forward_fraction)
