"""Hot numeric kernels for the vision pipeline.

Numba-jitted implementations with pure-numpy fallbacks. Selection is by the
VESTBED_KERNELS env var: "numba", "numpy", or "auto" (default: numba when it
imports). benchmarks/bench_kernels.py compares the two paths.
"""

from __future__ import annotations

import os

import numpy as np


def _pick_impl() -> str:
    choice = os.environ.get("VESTBED_KERNELS", "auto").lower()
    if choice == "numpy":
        return "numpy"
    if choice not in ("numba", "auto"):
        raise ValueError(f"VESTBED_KERNELS={choice!r}, want numba|numpy|auto")
    try:
        import numba  # noqa: F401
        return "numba"
    except ImportError:
        if choice == "numba":
            raise
        return "numpy"


ACTIVE_IMPL = _pick_impl()


# -- pure-numpy path ----------------------------------------------------------

def conv2d_same_numpy(x: np.ndarray, kernel: np.ndarray,
                      bias: np.ndarray) -> np.ndarray:
    """3x3 stride-1 zero-padded cross-correlation on an HxWxCin tensor."""
    h, w, _ = x.shape
    kh, kw, _, c_out = kernel.shape
    padded = np.zeros((h + kh - 1, w + kw - 1, x.shape[2]), dtype=x.dtype)
    padded[kh // 2:kh // 2 + h, kw // 2:kw // 2 + w] = x
    out = np.broadcast_to(bias, (h, w, c_out)).astype(x.dtype).copy()
    flat = out.reshape(h * w, c_out)
    for dy in range(kh):
        for dx in range(kw):
            window = padded[dy:dy + h, dx:dx + w].reshape(h * w, -1)
            flat += window @ kernel[dy, dx]
    return out


def maxpool2_numpy(x: np.ndarray) -> np.ndarray:
    h, w, c = x.shape
    return x.reshape(h // 2, 2, w // 2, 2, c).max(axis=(1, 3))


def sepfilter_numpy(img: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Separable correlation with edge replication on an HxW image."""
    k = len(weights)
    r = k // 2
    h, w = img.shape
    padded = np.pad(img, r, mode="edge")
    rows = np.zeros((h, w + 2 * r), dtype=img.dtype)
    for i in range(k):
        rows += weights[i] * padded[i:i + h, :]
    out = np.zeros((h, w), dtype=img.dtype)
    for i in range(k):
        out += weights[i] * rows[:, i:i + w]
    return out


# -- numba path ---------------------------------------------------------------

if ACTIVE_IMPL == "numba":
    from numba import njit

    @njit(cache=True, fastmath=True)
    def _conv2d_same_core(x, kt, bias):
        # kt is (kh, kw, c_out, c_in): the innermost accumulation runs over
        # contiguous memory in both operands, which LLVM vectorizes
        h, w, c_in = x.shape
        kh, kw, c_out, _ = kt.shape
        ry, rx = kh // 2, kw // 2
        out = np.empty((h, w, c_out), dtype=x.dtype)
        for y in range(h):
            for xx in range(w):
                for co in range(c_out):
                    acc = bias[co]
                    for dy in range(kh):
                        sy = y + dy - ry
                        if sy < 0 or sy >= h:
                            continue
                        for dx in range(kw):
                            sx = xx + dx - rx
                            if sx < 0 or sx >= w:
                                continue
                            for ci in range(c_in):
                                acc += x[sy, sx, ci] * kt[dy, dx, co, ci]
                    out[y, xx, co] = acc
        return out

    def _conv2d_same_jit(x, kernel, bias):
        kt = np.ascontiguousarray(kernel.transpose(0, 1, 3, 2))
        return _conv2d_same_core(np.ascontiguousarray(x), kt, bias)

    @njit(cache=True)
    def _maxpool2_jit(x):
        h, w, c = x.shape
        out = np.empty((h // 2, w // 2, c), dtype=x.dtype)
        for y in range(h // 2):
            for xx in range(w // 2):
                for ch in range(c):
                    a = x[2 * y, 2 * xx, ch]
                    b = x[2 * y, 2 * xx + 1, ch]
                    cc = x[2 * y + 1, 2 * xx, ch]
                    d = x[2 * y + 1, 2 * xx + 1, ch]
                    m = a if a > b else b
                    if cc > m:
                        m = cc
                    if d > m:
                        m = d
                    out[y, xx, ch] = m
        return out

    @njit(cache=True, fastmath=True)
    def _sepfilter_jit(img, weights):
        k = len(weights)
        r = k // 2
        h, w = img.shape
        rows = np.empty((h, w), dtype=img.dtype)
        for y in range(h):
            for x in range(w):
                acc = 0.0
                for i in range(k):
                    sy = y + i - r
                    if sy < 0:
                        sy = 0
                    elif sy >= h:
                        sy = h - 1
                    acc += weights[i] * img[sy, x]
                rows[y, x] = acc
        out = np.empty((h, w), dtype=img.dtype)
        for y in range(h):
            for x in range(w):
                acc = 0.0
                for i in range(k):
                    sx = x + i - r
                    if sx < 0:
                        sx = 0
                    elif sx >= w:
                        sx = w - 1
                    acc += weights[i] * rows[y, sx]
                out[y, x] = acc
        return out

    conv2d_same_numba = _conv2d_same_jit
    maxpool2_numba = _maxpool2_jit
    sepfilter_numba = _sepfilter_jit

    conv2d_same = _conv2d_same_jit
    maxpool2 = _maxpool2_jit
    sepfilter = _sepfilter_jit
else:
    conv2d_same = conv2d_same_numpy
    maxpool2 = maxpool2_numpy
    sepfilter = sepfilter_numpy
