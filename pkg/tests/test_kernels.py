"""Kernel correctness: loop and numpy paths agree, dispatch honors the
environment flag, and results match independent brute-force counters."""

import os
import subprocess
import sys

import numpy as np
import pytest

from memefuse import kernels


def _random_image(rng, h, w, c):
    return rng.integers(0, 256, size=(h, w, c), dtype=np.uint8)


class TestResizeBilinear:
    def test_loop_and_numpy_paths_agree(self, rng):
        for h, w, c, oh, ow in [(7, 9, 3, 16, 12), (16, 16, 1, 5, 7), (3, 2, 3, 9, 9)]:
            img = _random_image(rng, h, w, c)
            out = np.empty((oh, ow, c), dtype=np.uint8)
            loops = kernels._resize_bilinear_loops(img, oh, ow, out)
            vec = kernels._resize_bilinear_np(img, oh, ow)
            assert np.array_equal(loops, vec)
            assert np.array_equal(kernels.resize_bilinear(img, oh, ow), vec)

    def test_same_size_is_identity(self, rng):
        img = _random_image(rng, 6, 8, 3)
        assert np.array_equal(kernels.resize_bilinear(img, 6, 8), img)

    def test_single_pixel_upscales_to_constant(self):
        img = np.full((1, 1, 3), 77, dtype=np.uint8)
        out = kernels.resize_bilinear(img, 5, 4)
        assert out.shape == (5, 4, 3)
        assert np.all(out == 77)

    def test_two_to_four_interpolation_values(self):
        """Half-pixel centers at 2->4 give weights 1, 3/4, 1/4, 0 on the
        first row: 0,100 rows interpolate to 0,25,75,100."""
        img = np.zeros((2, 1, 1), dtype=np.uint8)
        img[1, 0, 0] = 100
        out = kernels.resize_bilinear(img, 4, 1)
        assert out[:, 0, 0].tolist() == [0, 25, 75, 100]

    def test_rejects_bad_inputs(self):
        with pytest.raises(ValueError):
            kernels.resize_bilinear(np.zeros((4, 4), dtype=np.uint8), 2, 2)
        with pytest.raises(ValueError):
            kernels.resize_bilinear(np.zeros((4, 4, 3), dtype=np.uint8), 0, 2)


class TestCellHistograms:
    def test_matches_bruteforce_counter(self, rng):
        img = _random_image(rng, 10, 12, 3)
        got = kernels.cell_histograms(img, 2, 2, 32)
        want = np.zeros((2, 2, 3, 32))
        for y in range(10):
            for x in range(12):
                for c in range(3):
                    iy = min(y // 5, 1)
                    ix = min(x // 6, 1)
                    want[iy, ix, c, int(img[y, x, c]) * 32 // 256] += 1
        assert np.array_equal(got, want)

    def test_counts_sum_to_pixels_times_channels(self, rng):
        img = _random_image(rng, 9, 7, 3)
        got = kernels.cell_histograms(img, 2, 2, 16)
        assert got.sum() == 9 * 7 * 3

    def test_leftover_rows_fold_into_last_cell(self):
        img = np.zeros((5, 4, 1), dtype=np.uint8)
        got = kernels.cell_histograms(img, 2, 2, 4)
        # rows 0-1 in top cells, rows 2-4 in bottom cells
        assert got[0, 0].sum() == 4 and got[0, 1].sum() == 4
        assert got[1, 0].sum() == 6 and got[1, 1].sum() == 6

    def test_loop_and_numpy_paths_agree(self, rng):
        img = _random_image(rng, 11, 5, 2)
        out = np.zeros((3, 2, 2, 8), dtype=np.float64)
        loops = kernels._cell_histograms_loops(img, 3, 2, 8, out)
        vec = kernels._cell_histograms_np(img, 3, 2, 8)
        assert np.array_equal(loops, vec)

    def test_rejects_grid_larger_than_image(self):
        with pytest.raises(ValueError):
            kernels.cell_histograms(np.zeros((2, 2, 1), dtype=np.uint8), 3, 1, 4)


class TestPairwiseSqdist:
    def test_matches_bruteforce(self, rng):
        a = rng.normal(size=(6, 4))
        b = rng.normal(size=(5, 4))
        got = kernels.pairwise_sqdist(a, b)
        want = np.zeros((6, 5))
        for i in range(6):
            for j in range(5):
                want[i, j] = np.sum((a[i] - b[j]) ** 2)
        np.testing.assert_allclose(got, want, atol=1e-9)

    def test_zero_on_identical_rows(self, rng):
        a = rng.normal(size=(4, 3))
        d = kernels.pairwise_sqdist(a, a)
        np.testing.assert_allclose(np.diag(d), 0.0, atol=1e-9)
        assert (d >= 0).all()

    def test_loop_and_numpy_paths_agree(self, rng):
        a = rng.normal(size=(7, 5))
        b = rng.normal(size=(3, 5))
        out = np.empty((7, 3))
        loops = kernels._pairwise_sqdist_loops(a, b, out)
        vec = kernels._pairwise_sqdist_np(a, b)
        np.testing.assert_allclose(loops, vec, rtol=1e-12, atol=1e-12)

    def test_rejects_mismatched_dims(self):
        with pytest.raises(ValueError):
            kernels.pairwise_sqdist(np.zeros((2, 3)), np.zeros((2, 4)))


def test_env_flag_disables_numba():
    """MEMEFUSE_NUMBA=0 forces the numpy path at import time."""
    code = (
        "import memefuse.kernels as k; import numpy as np; "
        "img = np.arange(48, dtype=np.uint8).reshape(4, 4, 3); "
        "print(k.NUMBA_ENABLED, k.resize_bilinear(img, 2, 2).sum())"
    )
    env = dict(os.environ, MEMEFUSE_NUMBA="0")
    res = subprocess.run(
        [sys.executable, "-c", code], env=env, capture_output=True, text=True
    )
    assert res.returncode == 0, res.stderr
    flag, checksum = res.stdout.split()
    assert flag == "False"
    # same numbers as the in-process (numba-enabled by default) path
    img = np.arange(48, dtype=np.uint8).reshape(4, 4, 3)
    assert int(checksum) == int(kernels.resize_bilinear(img, 2, 2).sum())
