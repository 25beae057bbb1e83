import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from skipflow.errors import (
    ImageTooSmall,
    MalformedHeader,
    MalformedPbm,
    OutOfBounds,
    TooManyLevels,
    TruncatedData,
    UnsupportedMaxval,
)
from skipflow.imaging import (
    bilinear_sample,
    build_pyramid,
    erode,
    gradient,
    load_pbm,
    load_pgm,
    load_ppm,
    pyr_down,
    smooth,
    to_float,
    write_pbm,
    write_pgm,
    write_ppm,
)


class TestPgm:
    def test_binary_2x2(self):
        img = load_pgm(b"P5 2 2 255\n" + bytes([0, 64, 128, 255]))
        assert img.dtype == np.uint8
        assert img.tolist() == [[0, 64], [128, 255]]

    def test_ascii_1x1(self):
        assert load_pgm(b"P2\n1 1\n255\n7\n").tolist() == [[7]]

    def test_comments_in_header(self):
        img = load_pgm(b"P5\n# made by hand\n2 1\n# depth\n255\n" + bytes([3, 4]))
        assert img.tolist() == [[3, 4]]

    def test_empty_input(self):
        with pytest.raises(MalformedHeader):
            load_pgm(b"")

    def test_wrong_magic(self):
        with pytest.raises(MalformedHeader):
            load_pgm(b"P6 1 1 255\n\x00\x00\x00")

    def test_truncated_raster(self):
        with pytest.raises(TruncatedData):
            load_pgm(b"P5 2 2 255\n" + bytes([1, 2, 3]))

    def test_sixteen_bit_rejected(self):
        with pytest.raises(UnsupportedMaxval):
            load_pgm(b"P5 1 1 65535\n\x00\x01")

    @settings(max_examples=50, deadline=None)
    @given(arrays(np.uint8, st.tuples(st.integers(1, 12), st.integers(1, 12))))
    def test_round_trip(self, img):
        assert np.array_equal(load_pgm(write_pgm(img)), img)


class TestPpm:
    def test_red_pixel(self):
        img = np.array([[[255, 0, 0]]], dtype=np.uint8)
        assert write_ppm(img) == b"P6\n1 1\n255\n" + bytes([255, 0, 0])

    def test_zero_area_rejected(self):
        with pytest.raises(ValueError):
            write_ppm(np.zeros((0, 3, 3), dtype=np.uint8))

    @settings(max_examples=30, deadline=None)
    @given(arrays(np.uint8, st.tuples(st.integers(1, 8), st.integers(1, 8), st.just(3))))
    def test_round_trip(self, img):
        assert np.array_equal(load_ppm(write_ppm(img)), img)


class TestPbm:
    def test_all_set_4x4(self):
        # 4 columns pack into the high nibble of one byte per row
        data = b"P4\n4 4\n" + bytes([0xF0] * 4)
        mask = load_pbm(data)
        assert mask.shape == (4, 4) and mask.all()

    def test_truncated(self):
        with pytest.raises(MalformedPbm):
            load_pbm(b"P4\n4 4\n" + bytes([0xF0] * 3))

    @settings(max_examples=50, deadline=None)
    @given(arrays(np.bool_, st.tuples(st.integers(1, 20), st.integers(1, 20))))
    def test_round_trip(self, mask):
        assert np.array_equal(load_pbm(write_pbm(mask)), mask)


def test_to_float_is_exact():
    img = np.array([[0, 255], [17, 128]], dtype=np.uint8)
    f = to_float(img)
    assert f.dtype == np.float64
    assert f.tolist() == [[0.0, 255.0], [17.0, 128.0]]


class TestPyramid:
    def test_constant_stays_constant(self):
        pyr = build_pyramid(np.full((32, 40), 77.0), 3)
        for level in pyr.levels:
            assert np.allclose(level, 77.0, atol=1e-12)

    def test_halving(self):
        pyr = build_pyramid(np.zeros((4, 4)), 2)
        assert pyr.levels[1].shape == (2, 2)

    def test_odd_sizes_floor(self):
        pyr = build_pyramid(np.zeros((33, 17)), 3)
        assert [lv.shape for lv in pyr.levels] == [(33, 17), (16, 8), (8, 4)]

    def test_ramp_slope_doubles(self):
        img = np.tile(np.arange(64, dtype=np.float64), (64, 1))
        lv1 = build_pyramid(img, 2).levels[1]
        # level-1 column c sits over level-0 column 2c; the kernel is symmetric
        assert np.allclose(lv1[:, 2:-2], 2.0 * np.arange(32)[2:-2])
        assert np.allclose(np.diff(lv1[5, 2:-2]), 2.0)

    def test_too_many_levels(self):
        with pytest.raises(TooManyLevels):
            build_pyramid(np.zeros((8, 8)), 5)

    def test_gradients_attached(self):
        pyr = build_pyramid(np.zeros((16, 16)), 2, with_gradients=True)
        assert pyr.grads is not None and len(pyr.grads) == 2

    def test_smooth_kernel_on_impulse(self):
        img = np.zeros((9, 9))
        img[4, 4] = 256.0
        out = smooth(img)
        k = np.array([1, 4, 6, 4, 1], dtype=float)
        assert np.allclose(out[2:7, 2:7], np.outer(k, k))


class TestGradient:
    def test_ramp_x(self):
        img = np.tile(np.arange(10, dtype=float), (6, 1))
        ix, iy = gradient(img)
        assert np.allclose(ix[1:-1, 1:-1], 1.0) and np.allclose(iy[1:-1, 1:-1], 0.0)

    def test_plane(self):
        y, x = np.mgrid[0:7, 0:9].astype(float)
        ix, iy = gradient(x + 2 * y)
        assert np.allclose(ix[1:-1, 1:-1], 1.0) and np.allclose(iy[1:-1, 1:-1], 2.0)

    def test_constant(self):
        ix, iy = gradient(np.full((5, 5), 3.0))
        assert not ix.any() and not iy.any()

    def test_too_small(self):
        with pytest.raises(ImageTooSmall):
            gradient(np.zeros((2, 5)))


class TestBilinear:
    img = np.array([[0.0, 10.0, 20.0], [30.0, 40.0, 50.0]])

    def test_integer_coordinates(self):
        for y in range(2):
            for x in range(3):
                assert bilinear_sample(self.img, x, y) == self.img[y, x]

    def test_midpoint(self):
        assert bilinear_sample(self.img, 0.5, 0.0) == 5.0

    def test_corner(self):
        assert bilinear_sample(self.img, 2.0, 1.0) == 50.0

    def test_out_of_bounds(self):
        with pytest.raises(OutOfBounds):
            bilinear_sample(self.img, 2.01, 0.0)

    @settings(max_examples=100, deadline=None)
    @given(st.floats(0, 2), st.floats(0, 1))
    def test_reproduces_planes(self, x, y):
        plane = np.fromfunction(lambda r, c: 3.0 * c - 2.0 * r + 1.0, (2, 3))
        assert bilinear_sample(plane, x, y) == pytest.approx(3.0 * x - 2.0 * y + 1.0, abs=1e-9)


def _erode_oracle(mask):
    h, w = mask.shape
    out = np.zeros_like(mask)
    for r in range(h):
        for c in range(w):
            out[r, c] = all(
                0 <= r + dr < h and 0 <= c + dc < w and mask[r + dr, c + dc]
                for dr in (-1, 0, 1)
                for dc in (-1, 0, 1)
            )
    return out


class TestErode:
    def test_full_5x5(self):
        out = erode(np.ones((5, 5), dtype=bool), 1)
        expected = np.zeros((5, 5), dtype=bool)
        expected[1:4, 1:4] = True
        assert np.array_equal(out, expected)

    def test_empty(self):
        assert not erode(np.zeros((4, 4), dtype=bool), 3).any()

    def test_zero_iterations(self):
        mask = np.random.default_rng(0).random((6, 6)) > 0.5
        assert np.array_equal(erode(mask, 0), mask)

    @settings(max_examples=50, deadline=None)
    @given(arrays(np.bool_, st.tuples(st.integers(1, 9), st.integers(1, 9))))
    def test_matches_brute_force(self, mask):
        assert np.array_equal(erode(mask, 1), _erode_oracle(mask))

    @settings(max_examples=30, deadline=None)
    @given(arrays(np.bool_, st.tuples(st.integers(1, 9), st.integers(1, 9))), st.integers(0, 3))
    def test_monotone(self, mask, k):
        assert not (erode(mask, k + 1) & ~erode(mask, k)).any()


def test_pyr_down_reference_shape():
    assert pyr_down(np.zeros((9, 7))).shape == (4, 3)
