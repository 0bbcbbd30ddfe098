"""Photomask rasters.

A mask is a binary raster registered to the network domain with its origin at
(0, 0): row ``r`` covers ``y`` in ``[r p, (r + 1) p)`` and column ``c`` covers
``x`` in ``[c p, (c + 1) p)`` for pitch ``p``.  Bit 1 marks an EXPOSED pixel
(conductive after processing), bit 0 a SHADOWED one.  A point on a pixel
boundary belongs to the lower-index pixel.

Masks are stored as PBM files (P1 or P4) carrying the physical pitch in a
mandatory comment line ``# pitch_um=<value>``.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np

from .netgen import Domain

_PITCH = re.compile(rb"#\s*pitch_um\s*=\s*([^\s]+)")


class MaskFormatError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class RegionMask:
    bits: np.ndarray  # (height_px, width_px) bool
    pitch: float  # um per pixel

    def __post_init__(self):
        bits = np.asarray(self.bits, dtype=bool)
        if bits.ndim != 2 or bits.size == 0:
            raise ValueError("mask must be a non-empty 2-D raster")
        if not (math.isfinite(self.pitch) and self.pitch > 0):
            raise ValueError("mask pitch must be finite and > 0")
        object.__setattr__(self, "bits", bits)

    def __eq__(self, other):
        return isinstance(other, RegionMask) and self.pitch == other.pitch and np.array_equal(self.bits, other.bits)

    @property
    def width_px(self) -> int:
        return self.bits.shape[1]

    @property
    def height_px(self) -> int:
        return self.bits.shape[0]

    @property
    def width(self) -> float:
        return self.width_px * self.pitch

    @property
    def height(self) -> float:
        return self.height_px * self.pitch

    def check_domain(self, domain: Domain):
        """Raise unless the mask covers the domain to within half a pitch."""
        half = 0.5 * self.pitch
        if abs(self.width - domain.width) > half or abs(self.height - domain.height) > half:
            raise ValueError(
                f"mask covers {self.width} x {self.height} um but the domain is "
                f"{domain.width} x {domain.height} um"
            )

    def pixel_index(self, points):
        """``(row, col)`` of the pixel containing each point."""
        pts = np.asarray(points, float).reshape(-1, 2)
        col = np.clip(np.ceil(pts[:, 0] / self.pitch).astype(np.int64) - 1, 0, self.width_px - 1)
        row = np.clip(np.ceil(pts[:, 1] / self.pitch).astype(np.int64) - 1, 0, self.height_px - 1)
        return row, col

    def lookup(self, points) -> np.ndarray:
        """True where a point lies in an EXPOSED pixel."""
        row, col = self.pixel_index(points)
        return self.bits[row, col]

    def pixel_areas(self, domain: Domain) -> tuple[float, float]:
        """Exposed and shadowed areas (um^2) inside the domain."""
        xs = np.minimum((np.arange(self.width_px) + 1) * self.pitch, domain.width) - np.minimum(
            np.arange(self.width_px) * self.pitch, domain.width
        )
        ys = np.minimum((np.arange(self.height_px) + 1) * self.pitch, domain.height) - np.minimum(
            np.arange(self.height_px) * self.pitch, domain.height
        )
        area = np.outer(ys, xs)
        return float(area[self.bits].sum()), float(area[~self.bits].sum())


# ---------------------------------------------------------------------------
# builders


def _shape(domain: Domain, pitch: float):
    return max(1, int(round(domain.height / pitch))), max(1, int(round(domain.width / pitch)))


def uniform_mask(domain: Domain, pitch: float, exposed: bool = True) -> RegionMask:
    return RegionMask(np.full(_shape(domain, pitch), exposed), pitch)


def half_mask(domain: Domain, pitch: float) -> RegionMask:
    """Left half exposed, right half shadowed."""
    h, w = _shape(domain, pitch)
    bits = np.zeros((h, w), bool)
    bits[:, : w // 2] = True
    return RegionMask(bits, pitch)


def line_mask(domain: Domain, pitch: float, linewidth: float, spacing: float, count: int, margin: float = 0.0) -> RegionMask:
    """``count`` horizontal exposed lines of the given width and spacing.

    Lines run along x over the full domain width; the first starts at
    ``margin`` from the bottom edge.
    """
    if linewidth <= 0 or spacing < 0:
        raise ValueError("line width must be > 0 and spacing >= 0")
    h, w = _shape(domain, pitch)
    bits = np.zeros((h, w), bool)
    centers = (np.arange(h) + 0.5) * pitch
    for k in range(count):
        y0 = margin + k * (linewidth + spacing)
        bits[(centers >= y0) & (centers < y0 + linewidth), :] = True
    return RegionMask(bits, pitch)


# ---------------------------------------------------------------------------
# PBM


def _tokens(data: bytes, count: int, pos: int):
    """Read ``count`` header tokens starting at ``pos``; returns tokens, end, comments."""
    out, comments = [], []
    n = len(data)
    while len(out) < count:
        while pos < n and data[pos : pos + 1].isspace():
            pos += 1
        if pos >= n:
            raise MaskFormatError("truncated PBM header")
        if data[pos : pos + 1] == b"#":
            end = data.find(b"\n", pos)
            end = n if end < 0 else end
            comments.append(data[pos:end])
            pos = end
            continue
        start = pos
        while pos < n and not data[pos : pos + 1].isspace() and data[pos : pos + 1] != b"#":
            pos += 1
        out.append(data[start:pos])
    return out, pos, comments


def parse_pbm(data: bytes) -> RegionMask:
    """Decode a P1 or P4 PBM with a ``# pitch_um=`` comment."""
    if len(data) < 2 or data[:2] not in (b"P1", b"P4"):
        raise MaskFormatError("not a PBM file: magic must be P1 or P4")
    magic = data[:2]
    (w_tok, h_tok), pos, comments = _tokens(data, 2, 2)
    try:
        width, height = int(w_tok), int(h_tok)
    except ValueError:
        raise MaskFormatError(f"malformed PBM dimensions {w_tok!r} {h_tok!r}") from None
    if width <= 0 or height <= 0:
        raise MaskFormatError("PBM dimensions must be positive")
    pitch = None
    for c in comments:
        m = _PITCH.match(c)
        if m:
            try:
                pitch = float(m.group(1))
            except ValueError:
                raise MaskFormatError(f"malformed pitch comment {c!r}") from None
    if pitch is None:
        raise MaskFormatError("missing '# pitch_um=<value>' comment in PBM header")
    if not (math.isfinite(pitch) and pitch > 0):
        raise MaskFormatError("pitch_um must be finite and > 0")

    if magic == b"P1":
        body = re.sub(rb"#[^\n]*", b"", data[pos:])
        digits = np.frombuffer(bytes(c for c in body if c in b"01"), dtype=np.uint8) - ord("0")
        stray = re.sub(rb"[01\s]", b"", body)
        if stray:
            raise MaskFormatError(f"unexpected characters in P1 raster: {stray[:10]!r}")
        if len(digits) != width * height:
            raise MaskFormatError(f"P1 raster has {len(digits)} bits, expected {width * height}")
        bits = digits.reshape(height, width).astype(bool)
    else:
        if pos >= len(data) or not data[pos : pos + 1].isspace():
            raise MaskFormatError("P4 header must end with a single whitespace byte")
        raster = np.frombuffer(data[pos + 1 :], dtype=np.uint8)
        row_bytes = (width + 7) // 8
        if len(raster) != row_bytes * height:
            raise MaskFormatError(f"P4 raster has {len(raster)} bytes, expected {row_bytes * height}")
        bits = np.unpackbits(raster.reshape(height, row_bytes), axis=1)[:, :width].astype(bool)
    return RegionMask(bits, pitch)


def load_mask_pbm(path, domain: Domain | None = None) -> RegionMask:
    with open(path, "rb") as f:
        mask = parse_pbm(f.read())
    if domain is not None:
        mask.check_domain(domain)
    return mask


def format_pbm(mask: RegionMask, binary: bool = False) -> bytes:
    header = f"{'P4' if binary else 'P1'}\n# pitch_um={mask.pitch!r}\n{mask.width_px} {mask.height_px}\n".encode()
    if binary:
        return header + np.packbits(mask.bits, axis=1).tobytes()
    rows = [" ".join("1" if b else "0" for b in row) for row in mask.bits]
    return header + ("\n".join(rows) + "\n").encode()


def write_mask_pbm(mask: RegionMask, path, binary: bool = False):
    with open(path, "wb") as f:
        f.write(format_pbm(mask, binary))
