"""Hot numeric kernels: bilinear resize, cell histograms, pairwise distances.

Each kernel ships in two flavors: an explicit-loop version compiled with
numba ``@njit`` and a vectorized pure-numpy fallback.  The active flavor is
chosen at import time from the ``MEMEFUSE_NUMBA`` environment variable
(set it to ``0``/``false``/``no``/``off`` to force the numpy path; default
is numba whenever it imports).  ``benchmarks/bench_kernels.py`` compares
the two paths.

Resize and histogram results are identical between paths (same per-element
expression tree, integer outputs).  ``pairwise_sqdist`` uses the Gram-matrix
expansion on the numpy path, so the two paths may differ at float rounding
level; within one path results are deterministic.
"""

import os

import numpy as np

_env = os.environ.get("MEMEFUSE_NUMBA", "").strip().lower()
_DISABLED = _env in {"0", "false", "no", "off"}

try:
    if _DISABLED:
        raise ImportError("numba disabled via MEMEFUSE_NUMBA")
    from numba import njit as _njit

    NUMBA_ENABLED = True
except ImportError:
    _njit = None
    NUMBA_ENABLED = False


# ---------------------------------------------------------------------------
# loop kernels (numba-compatible; also runnable as plain python in tests)


def _resize_bilinear_loops(img, out_h, out_w, out):
    in_h, in_w, ch = img.shape
    sy = in_h / out_h
    sx = in_w / out_w
    for oy in range(out_h):
        fy = (oy + 0.5) * sy - 0.5
        if fy < 0.0:
            fy = 0.0
        if fy > in_h - 1.0:
            fy = in_h - 1.0
        y0 = int(fy)
        y1 = y0 + 1
        if y1 > in_h - 1:
            y1 = in_h - 1
        wy = fy - y0
        for ox in range(out_w):
            fx = (ox + 0.5) * sx - 0.5
            if fx < 0.0:
                fx = 0.0
            if fx > in_w - 1.0:
                fx = in_w - 1.0
            x0 = int(fx)
            x1 = x0 + 1
            if x1 > in_w - 1:
                x1 = in_w - 1
            wx = fx - x0
            for c in range(ch):
                top = img[y0, x0, c] * (1.0 - wx) + img[y0, x1, c] * wx
                bot = img[y1, x0, c] * (1.0 - wx) + img[y1, x1, c] * wx
                val = top * (1.0 - wy) + bot * wy
                out[oy, ox, c] = np.uint8(int(val + 0.5))
    return out


def _cell_histograms_loops(img, grid_y, grid_x, bins, out):
    h, w, ch = img.shape
    cell_h = h // grid_y
    cell_w = w // grid_x
    for y in range(h):
        iy = y // cell_h
        if iy > grid_y - 1:
            iy = grid_y - 1
        for x in range(w):
            ix = x // cell_w
            if ix > grid_x - 1:
                ix = grid_x - 1
            for c in range(ch):
                b = (int(img[y, x, c]) * bins) // 256
                out[iy, ix, c, b] += 1.0
    return out


def _pairwise_sqdist_loops(a, b, out):
    n, d = a.shape
    m = b.shape[0]
    for i in range(n):
        for j in range(m):
            acc = 0.0
            for k in range(d):
                diff = a[i, k] - b[j, k]
                acc += diff * diff
            out[i, j] = acc
    return out


if NUMBA_ENABLED:
    _resize_bilinear_jit = _njit(cache=True)(_resize_bilinear_loops)
    _cell_histograms_jit = _njit(cache=True)(_cell_histograms_loops)
    _pairwise_sqdist_jit = _njit(cache=True)(_pairwise_sqdist_loops)


# ---------------------------------------------------------------------------
# numpy fallbacks


def _resize_bilinear_np(img, out_h, out_w):
    in_h, in_w, _ = img.shape
    fy = np.clip((np.arange(out_h) + 0.5) * (in_h / out_h) - 0.5, 0.0, in_h - 1.0)
    fx = np.clip((np.arange(out_w) + 0.5) * (in_w / out_w) - 0.5, 0.0, in_w - 1.0)
    y0 = np.floor(fy).astype(np.int64)
    x0 = np.floor(fx).astype(np.int64)
    y1 = np.minimum(y0 + 1, in_h - 1)
    x1 = np.minimum(x0 + 1, in_w - 1)
    wy = (fy - y0)[:, None, None]
    wx = (fx - x0)[None, :, None]
    pix = img.astype(np.float64)
    top = pix[y0][:, x0] * (1.0 - wx) + pix[y0][:, x1] * wx
    bot = pix[y1][:, x0] * (1.0 - wx) + pix[y1][:, x1] * wx
    val = top * (1.0 - wy) + bot * wy
    return np.floor(val + 0.5).astype(np.uint8)


def _cell_histograms_np(img, grid_y, grid_x, bins):
    h, w, ch = img.shape
    cell_h = h // grid_y
    cell_w = w // grid_x
    iy = np.minimum(np.arange(h) // cell_h, grid_y - 1)
    ix = np.minimum(np.arange(w) // cell_w, grid_x - 1)
    b = (img.astype(np.int64) * bins) // 256
    cell = iy[:, None] * grid_x + ix[None, :]
    flat = (cell[:, :, None] * ch + np.arange(ch)[None, None, :]) * bins + b
    counts = np.bincount(flat.ravel(), minlength=grid_y * grid_x * ch * bins)
    return counts.reshape(grid_y, grid_x, ch, bins).astype(np.float64)


def _pairwise_sqdist_np(a, b):
    a2 = np.einsum("ij,ij->i", a, a)
    b2 = np.einsum("ij,ij->i", b, b)
    d = a2[:, None] + b2[None, :] - 2.0 * (a @ b.T)
    return np.maximum(d, 0.0)


# ---------------------------------------------------------------------------
# dispatchers


def resize_bilinear(img, out_h, out_w):
    """Resize an (h, w, c) uint8 image with half-pixel-center bilinear sampling.

    Source coordinate for output pixel k is (k + 0.5) * in/out - 0.5, clamped
    to the valid range; values round half-up to uint8.
    """
    img = np.ascontiguousarray(img, dtype=np.uint8)
    if img.ndim != 3:
        raise ValueError(f"expected (h, w, c) image, got shape {img.shape}")
    if out_h < 1 or out_w < 1 or img.shape[0] < 1 or img.shape[1] < 1:
        raise ValueError("image and output dimensions must be positive")
    if NUMBA_ENABLED:
        out = np.empty((out_h, out_w, img.shape[2]), dtype=np.uint8)
        return _resize_bilinear_jit(img, out_h, out_w, out)
    return _resize_bilinear_np(img, out_h, out_w)


def cell_histograms(img, grid_y, grid_x, bins):
    """Raw per-cell, per-channel intensity histogram counts.

    Returns float64 (grid_y, grid_x, channels, bins).  Pixel value v lands in
    bin (v * bins) // 256.  Rows/columns left over by integer division fold
    into the last cell.
    """
    img = np.ascontiguousarray(img, dtype=np.uint8)
    if img.ndim != 3:
        raise ValueError(f"expected (h, w, c) image, got shape {img.shape}")
    if img.shape[0] < grid_y or img.shape[1] < grid_x:
        raise ValueError("image smaller than histogram grid")
    if NUMBA_ENABLED:
        out = np.zeros((grid_y, grid_x, img.shape[2], bins), dtype=np.float64)
        return _cell_histograms_jit(img, grid_y, grid_x, bins, out)
    return _cell_histograms_np(img, grid_y, grid_x, bins)


def pairwise_sqdist(a, b):
    """Squared euclidean distances between rows of a (n, d) and b (m, d).

    Always dispatches to the vectorized flavor: its a @ b.T runs on BLAS,
    which beats the compiled triple loop by an order of magnitude at the
    feature widths this package produces (see benchmarks/bench_kernels.py).
    The loop flavor stays available as the agreement oracle.
    """
    a = np.ascontiguousarray(a, dtype=np.float64)
    b = np.ascontiguousarray(b, dtype=np.float64)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[1]:
        raise ValueError(f"incompatible shapes {a.shape} and {b.shape}")
    return _pairwise_sqdist_np(a, b)
