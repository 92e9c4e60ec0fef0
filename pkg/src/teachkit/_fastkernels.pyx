# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled hot kernels; must stay operation-for-operation equivalent to
teachkit._kernels_np (same formulas, same accumulation order)."""

import numpy as np

cimport numpy as cnp
from libc.math cimport floor, sqrt

cnp.import_array()

DEF TAN_PI_8 = 0.41421356237309503
DEF TAN_3PI_8 = 2.414213562373095
DEF NCC_VAR_FLOOR = 1e-4


def resize_bilinear_rgb(const unsigned char[:, :, ::1] src, int out_w, int out_h):
    cdef int h = src.shape[0]
    cdef int w = src.shape[1]
    cdef double sx = w / <double> out_w
    cdef double sy = h / <double> out_h
    out_arr = np.empty((out_h, out_w, 3), dtype=np.uint8)
    cdef unsigned char[:, :, ::1] out = out_arr
    cdef int ox, oy, c, x0, y0, x1, y1
    cdef double xs, ys, fx, fy, top, bot, val

    for oy in range(out_h):
        ys = (oy + 0.5) * sy - 0.5
        if ys < 0.0:
            ys = 0.0
        if ys > h - 1.0:
            ys = h - 1.0
        y0 = <int> floor(ys)
        y1 = y0 + 1
        if y1 > h - 1:
            y1 = h - 1
        fy = ys - y0
        for ox in range(out_w):
            xs = (ox + 0.5) * sx - 0.5
            if xs < 0.0:
                xs = 0.0
            if xs > w - 1.0:
                xs = w - 1.0
            x0 = <int> floor(xs)
            x1 = x0 + 1
            if x1 > w - 1:
                x1 = w - 1
            fx = xs - x0
            for c in range(3):
                top = src[y0, x0, c] * (1.0 - fx) + src[y0, x1, c] * fx
                bot = src[y1, x0, c] * (1.0 - fx) + src[y1, x1, c] * fx
                val = top * (1.0 - fy) + bot * fy
                val = floor(val + 0.5)
                if val < 0.0:
                    val = 0.0
                if val > 255.0:
                    val = 255.0
                out[oy, ox, c] = <unsigned char> val
    return out_arr


def color_cell_counts(const unsigned char[:, :, ::1] img, int grid, int bins):
    cdef int h = img.shape[0]
    cdef int w = img.shape[1]
    cdef int ch = h // grid
    cdef int cw = w // grid
    out_arr = np.zeros((grid * grid, 3, bins), dtype=np.int64)
    cdef long long[:, :, ::1] out = out_arr
    cdef int y, x, c, cell

    for y in range(h):
        for x in range(w):
            cell = (y // ch) * grid + (x // cw)
            for c in range(3):
                out[cell, c, (img[y, x, c] * bins) >> 8] += 1
    return out_arr


cdef inline double _px(const double[:, ::1] luma, int y, int x, int h, int w) nogil:
    if y < 0:
        y = 0
    elif y > h - 1:
        y = h - 1
    if x < 0:
        x = 0
    elif x > w - 1:
        x = w - 1
    return luma[y, x]


def gradient_cell_sums(const double[:, ::1] luma, int grid):
    cdef int h = luma.shape[0]
    cdef int w = luma.shape[1]
    cdef int ch = h // grid
    cdef int cw = w // grid
    out_arr = np.zeros((grid * grid, 8), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef int y, x, b, cell
    cdef double gx, gy, mag, ax

    for y in range(h):
        for x in range(w):
            gx = (
                (_px(luma, y - 1, x + 1, h, w) - _px(luma, y - 1, x - 1, h, w))
                + 2.0 * (_px(luma, y, x + 1, h, w) - _px(luma, y, x - 1, h, w))
                + (_px(luma, y + 1, x + 1, h, w) - _px(luma, y + 1, x - 1, h, w))
            )
            gy = (
                (_px(luma, y + 1, x - 1, h, w) - _px(luma, y - 1, x - 1, h, w))
                + 2.0 * (_px(luma, y + 1, x, h, w) - _px(luma, y - 1, x, h, w))
                + (_px(luma, y + 1, x + 1, h, w) - _px(luma, y - 1, x + 1, h, w))
            )
            mag = sqrt(gx * gx + gy * gy)
            if gy < 0.0 or (gy == 0.0 and gx < 0.0):
                gx = -gx
                gy = -gy
            if gx > 0.0:
                b = 0
                if gy >= TAN_PI_8 * gx:
                    b += 1
                if gy >= gx:
                    b += 1
                if gy >= TAN_3PI_8 * gx:
                    b += 1
            elif gx == 0.0:
                b = 4 if gy > 0.0 else 0
            else:
                ax = -gx
                b = 4
                if gy <= TAN_3PI_8 * ax:
                    b += 1
                if gy <= ax:
                    b += 1
                if gy <= TAN_PI_8 * ax:
                    b += 1
            cell = (y // ch) * grid + (x // cw)
            out[cell, b] += mag
    return out_arr


def label_components(const unsigned char[:, ::1] mask):
    """4-connected flood fill labeling; 0 = background."""
    cdef int h = mask.shape[0]
    cdef int w = mask.shape[1]
    out_arr = np.zeros((h, w), dtype=np.int32)
    cdef int[:, ::1] labels = out_arr
    stack_arr = np.empty(h * w, dtype=np.int64)
    cdef long long[::1] stack = stack_arr
    cdef int y, x, cy, cx
    cdef long long top
    cdef int next_label = 0

    for y in range(h):
        for x in range(w):
            if mask[y, x] == 0 or labels[y, x] != 0:
                continue
            next_label += 1
            top = 0
            stack[0] = <long long> y * w + x
            labels[y, x] = next_label
            while top >= 0:
                cy = <int> (stack[top] // w)
                cx = <int> (stack[top] % w)
                top -= 1
                if cy > 0 and mask[cy - 1, cx] != 0 and labels[cy - 1, cx] == 0:
                    labels[cy - 1, cx] = next_label
                    top += 1
                    stack[top] = <long long> (cy - 1) * w + cx
                if cy < h - 1 and mask[cy + 1, cx] != 0 and labels[cy + 1, cx] == 0:
                    labels[cy + 1, cx] = next_label
                    top += 1
                    stack[top] = <long long> (cy + 1) * w + cx
                if cx > 0 and mask[cy, cx - 1] != 0 and labels[cy, cx - 1] == 0:
                    labels[cy, cx - 1] = next_label
                    top += 1
                    stack[top] = <long long> cy * w + cx - 1
                if cx < w - 1 and mask[cy, cx + 1] != 0 and labels[cy, cx + 1] == 0:
                    labels[cy, cx + 1] = next_label
                    top += 1
                    stack[top] = <long long> cy * w + cx + 1
    return out_arr


def ncc_score_map(const double[:, ::1] image, const double[:, ::1] templ):
    cdef int h = image.shape[0]
    cdef int w = image.shape[1]
    cdef int th = templ.shape[0]
    cdef int tw = templ.shape[1]
    cdef int oh = h - th + 1
    cdef int ow = w - tw + 1
    cdef double n = <double> (th * tw)
    cdef int y, x, i, j
    cdef double t_mean = 0.0, t_energy = 0.0
    cdef double win_sum, win_sumsq, num, win_var, score, v, t0

    t0_arr = np.empty((th, tw), dtype=np.float64)
    cdef double[:, ::1] tz = t0_arr
    for i in range(th):
        for j in range(tw):
            t_mean += templ[i, j]
    t_mean /= n
    for i in range(th):
        for j in range(tw):
            t0 = templ[i, j] - t_mean
            tz[i, j] = t0
            t_energy += t0 * t0

    out_arr = np.zeros((oh, ow), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    if t_energy <= 0.0:
        return out_arr

    for y in range(oh):
        for x in range(ow):
            win_sum = 0.0
            win_sumsq = 0.0
            num = 0.0
            for i in range(th):
                for j in range(tw):
                    v = image[y + i, x + j]
                    win_sum += v
                    win_sumsq += v * v
                    num += v * tz[i, j]
            win_var = win_sumsq - win_sum * win_sum / n
            if win_var < NCC_VAR_FLOOR:
                continue
            score = num / sqrt(win_var * t_energy)
            if score > 1.0:
                score = 1.0
            elif score < -1.0:
                score = -1.0
            out[y, x] = score
    return out_arr
