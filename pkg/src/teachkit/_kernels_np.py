"""NumPy implementations of the hot per-pixel kernels.

These mirror `teachkit._fastkernels` (the Cython build) operation for
operation. Where float summation order matters (gradient-cell accumulation)
the NumPy path uses np.bincount, whose weighted accumulation runs
sequentially in input order, matching the row-major C loop so both backends
produce bit-identical results. Reductions whose order NumPy does not pin
(L2 norms etc.) live in the shared callers, not here.
"""

from __future__ import annotations

import numpy as np
from scipy import ndimage, signal

# tan(pi/8) and tan(3*pi/8): 8-bin unsigned orientation boundaries expressed
# as slope comparisons so both backends quantize with the same float compares.
TAN_PI_8 = 0.41421356237309503
TAN_3PI_8 = 2.414213562373095

FOUR_CONNECTED = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=np.uint8)

# Window-variance floor below which an NCC score is pinned to 0 (flat window);
# large enough to absorb FFT round-off on genuinely flat 8-bit windows.
NCC_VAR_FLOOR = 1e-4


def resize_bilinear_rgb(src: np.ndarray, out_w: int, out_h: int) -> np.ndarray:
    """Bilinear resample with half-pixel centers, rounding half away from zero."""
    h, w, _ = src.shape
    sx = w / out_w
    sy = h / out_h
    xs = (np.arange(out_w, dtype=np.float64) + 0.5) * sx - 0.5
    ys = (np.arange(out_h, dtype=np.float64) + 0.5) * sy - 0.5
    xs = np.clip(xs, 0.0, w - 1.0)
    ys = np.clip(ys, 0.0, h - 1.0)
    x0 = np.floor(xs).astype(np.intp)
    y0 = np.floor(ys).astype(np.intp)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    fx = (xs - x0)[None, :, None]
    fy = (ys - y0)[:, None, None]

    s = src.astype(np.float64)
    top = s[y0[:, None], x0[None, :]] * (1.0 - fx) + s[y0[:, None], x1[None, :]] * fx
    bot = s[y1[:, None], x0[None, :]] * (1.0 - fx) + s[y1[:, None], x1[None, :]] * fx
    val = top * (1.0 - fy) + bot * fy
    out = np.floor(val + 0.5)
    return np.clip(out, 0.0, 255.0).astype(np.uint8)


def color_cell_counts(img: np.ndarray, grid: int, bins: int) -> np.ndarray:
    """Per-cell per-channel intensity histograms as raw int64 counts.

    Output shape (grid*grid, 3, bins); cells indexed row-major.
    """
    h, w, _ = img.shape
    ch = h // grid
    cw = w // grid
    ys, xs = np.indices((h, w))
    cell = (ys // ch) * grid + (xs // cw)
    bin_idx = (img.astype(np.intp) * bins) >> 8
    flat = (cell[:, :, None] * 3 + np.arange(3)[None, None, :]) * bins + bin_idx
    counts = np.bincount(flat.ravel(), minlength=grid * grid * 3 * bins)
    return counts.reshape(grid * grid, 3, bins).astype(np.int64)


def gradient_cell_sums(luma: np.ndarray, grid: int) -> np.ndarray:
    """Magnitude-weighted 8-bin unsigned-orientation sums per grid cell.

    3x3 Sobel with edge replication; orientation folded into [0, pi) and
    quantized by slope comparison. Returns float64 (grid*grid, 8).
    """
    h, w = luma.shape
    p = np.pad(luma, 1, mode="edge")
    # identical expression structure to the C loop so rounding matches
    gx = (
        (p[:-2, 2:] - p[:-2, :-2])
        + 2.0 * (p[1:-1, 2:] - p[1:-1, :-2])
        + (p[2:, 2:] - p[2:, :-2])
    )
    gy = (
        (p[2:, :-2] - p[:-2, :-2])
        + 2.0 * (p[2:, 1:-1] - p[:-2, 1:-1])
        + (p[2:, 2:] - p[:-2, 2:])
    )
    mag = np.sqrt(gx * gx + gy * gy)

    flip = (gy < 0.0) | ((gy == 0.0) & (gx < 0.0))
    gx = np.where(flip, -gx, gx)
    gy = np.where(flip, -gy, gy)

    b = np.zeros(luma.shape, dtype=np.intp)
    pos = gx > 0.0
    b[pos] = (
        (gy[pos] >= TAN_PI_8 * gx[pos]).astype(np.intp)
        + (gy[pos] >= gx[pos])
        + (gy[pos] >= TAN_3PI_8 * gx[pos])
    )
    zero = (gx == 0.0) & (gy > 0.0)
    b[zero] = 4
    neg = gx < 0.0
    ax = -gx[neg]
    b[neg] = (
        4
        + (gy[neg] <= TAN_3PI_8 * ax).astype(np.intp)
        + (gy[neg] <= ax)
        + (gy[neg] <= TAN_PI_8 * ax)
    )

    ch = h // grid
    cw = w // grid
    ys, xs = np.indices((h, w))
    cell = (ys // ch) * grid + (xs // cw)
    flat = cell * 8 + b
    sums = np.bincount(flat.ravel(), weights=mag.ravel(), minlength=grid * grid * 8)
    return sums.reshape(grid * grid, 8)


def label_components(mask: np.ndarray) -> np.ndarray:
    """4-connected component labels; 0 is background. Label numbering is
    backend-specific; callers must select blobs by area and member pixels."""
    labels, _ = ndimage.label(mask, structure=FOUR_CONNECTED)
    return labels.astype(np.int32)


def ncc_score_map(image: np.ndarray, templ: np.ndarray) -> np.ndarray:
    """Zero-mean normalized cross-correlation at every valid placement.

    Returns float64 (H-th+1, W-tw+1). Placements whose window variance falls
    below NCC_VAR_FLOOR score 0.
    """
    th, tw = templ.shape
    t0 = templ - templ.mean()
    t_energy = float(np.sum(t0 * t0))
    if t_energy <= 0.0:
        return np.zeros((image.shape[0] - th + 1, image.shape[1] - tw + 1))

    kernel = t0[::-1, ::-1]
    num = signal.fftconvolve(image, kernel, mode="valid")
    ones = np.ones_like(templ)
    win_sum = signal.fftconvolve(image, ones, mode="valid")
    win_sumsq = signal.fftconvolve(image * image, ones, mode="valid")
    n = float(th * tw)
    win_var = win_sumsq - win_sum * win_sum / n
    win_var = np.maximum(win_var, 0.0)
    denom = np.sqrt(win_var * t_energy)
    with np.errstate(divide="ignore", invalid="ignore"):
        score = num / denom
    score[win_var < NCC_VAR_FLOOR] = 0.0
    score[~np.isfinite(score)] = 0.0
    return np.clip(score, -1.0, 1.0)
