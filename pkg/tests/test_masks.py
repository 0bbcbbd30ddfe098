import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from gtepattern.masks import (
    MaskFormatError,
    RegionMask,
    format_pbm,
    half_mask,
    line_mask,
    load_mask_pbm,
    parse_pbm,
    uniform_mask,
    write_mask_pbm,
)
from gtepattern.netgen import Domain

P1 = b"""P1
# pitch_um=2.5
4 2
1 0 0 1
0 1 1 0
"""


def test_p1_example():
    m = parse_pbm(P1)
    assert m.pitch == 2.5
    assert (m.width_px, m.height_px) == (4, 2)
    assert m.bits.tolist() == [[True, False, False, True], [False, True, True, False]]
    assert (m.width, m.height) == (10.0, 5.0)


def test_p4_decodes_like_p1():
    m = parse_pbm(P1)
    p4 = b"P4\n# pitch_um=2.5\n4 2\n" + bytes([0b10010000, 0b01100000])
    assert parse_pbm(p4) == m


def test_comments_inside_raster_and_header():
    text = b"P1 # pitch_um=1.0\n# another comment\n2 1\n1 # inline\n0\n"
    assert parse_pbm(text).bits.tolist() == [[True, False]]


@settings(max_examples=40)
@given(
    bits=arrays(bool, st.tuples(st.integers(1, 12), st.integers(1, 20))),
    pitch=st.floats(0.01, 100.0),
    binary=st.booleans(),
)
def test_round_trip(bits, pitch, binary):
    m = RegionMask(bits, pitch)
    assert parse_pbm(format_pbm(m, binary)) == m


def test_file_round_trip(tmp_path):
    m = half_mask(Domain(20.0, 10.0), 2.0)
    path = tmp_path / "m.pbm"
    write_mask_pbm(m, path, binary=True)
    assert load_mask_pbm(path, Domain(20.0, 10.0)) == m
    with pytest.raises(ValueError, match="domain"):
        load_mask_pbm(path, Domain(40.0, 10.0))


@pytest.mark.parametrize(
    "data, message",
    [
        (b"P2\n# pitch_um=1\n1 1\n1\n", "magic"),
        (b"P1\n1 1\n1\n", "pitch_um"),
        (b"P1\n# pitch_um=-1\n1 1\n1\n", "pitch_um"),
        (b"P1\n# pitch_um=x\n1 1\n1\n", "pitch"),
        (b"P1\n# pitch_um=1\n2 2\n1 0 1\n", "bits"),
        (b"P1\n# pitch_um=1\n1 1\n2\n", "unexpected"),
        (b"P1\n# pitch_um=1\n0 1\n", "positive"),
        (b"P1\n# pitch_um=1\na 1\n1\n", "dimensions"),
        (b"P4\n# pitch_um=1\n8 2\n\x00", "bytes"),
        (b"P1\n# pitch_um=1\n", "truncated"),
    ],
)
def test_malformed_files(data, message):
    with pytest.raises(MaskFormatError, match=message):
        parse_pbm(data)


def test_boundary_points_belong_to_lower_pixel():
    m = RegionMask(np.array([[True, False], [False, False]]), 1.0)
    # x = 1 lies on the shared edge of columns 0 and 1
    assert m.lookup([(1.0, 0.5)]).tolist() == [True]
    assert m.lookup([(1.0 + 1e-9, 0.5)]).tolist() == [False]
    assert m.lookup([(0.5, 1.0)]).tolist() == [True]
    assert m.lookup([(0.0, 0.0), (2.0, 2.0)]).tolist() == [True, False]


def test_builders():
    d = Domain(10.0, 10.0)
    assert uniform_mask(d, 1.0).bits.all()
    assert not uniform_mask(d, 1.0, exposed=False).bits.any()
    h = half_mask(d, 1.0)
    assert h.bits[:, :5].all() and not h.bits[:, 5:].any()
    lines = line_mask(d, 0.5, 2.0, 2.0, 2, margin=1.0)
    rows = np.flatnonzero(lines.bits[:, 0])
    assert rows.tolist() == [2, 3, 4, 5, 10, 11, 12, 13]
    with pytest.raises(ValueError):
        line_mask(d, 0.5, 0.0, 2.0, 1)


def test_pixel_areas_split_the_domain():
    d = Domain(10.0, 10.0)
    a, b = half_mask(d, 1.0).pixel_areas(d)
    assert a + b == pytest.approx(100.0)
    assert a == pytest.approx(50.0)


def test_invalid_rasters():
    with pytest.raises(ValueError):
        RegionMask(np.zeros((0, 3), bool), 1.0)
    with pytest.raises(ValueError):
        RegionMask(np.zeros((2, 2), bool), 0.0)
