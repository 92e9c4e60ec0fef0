"""Synthetic corpus renderers: desk-scale stand-ins for demonstrated states
(colored objects, a slider handle at K positions, two-blob arrangements).

Generation is fully deterministic for a given seed: images are written as
PPM P6 so the bytes depend on nothing but the RNG stream.
"""

from __future__ import annotations

import colorsys
import os

import numpy as np

from .errors import BadSpec
from .vision import Frame, decode_frame, encode_ppm, frame_from_array

RENDERERS = ("colored-shape", "slider-position", "two-blob-relationship")
LABELS_FILENAME = "labels.csv"

SLIDER_HANDLE_COLOR = (230, 25, 25)
SLIDER_HANDLE_W = 20
SLIDER_HANDLE_H = 28
SLIDER_MARGIN = 10


def class_palette(k: int) -> list[tuple[int, int, int]]:
    """K well-separated saturated colors (evenly spaced hues)."""
    colors = []
    for i in range(k):
        r, g, b = colorsys.hsv_to_rgb(i / k, 1.0, 1.0)
        colors.append((int(r * 255), int(g * 255), int(b * 255)))
    return colors


def slider_handle_center(width: int, ordinal: int, classes: int) -> float:
    """Nominal handle center x for a slider state (before jitter)."""
    span = width - 2 * SLIDER_MARGIN - SLIDER_HANDLE_W
    x0 = SLIDER_MARGIN + ordinal * span / (classes - 1)
    return x0 + SLIDER_HANDLE_W / 2.0


def _background(rng, width, height, base=110, spread=0, noise=4):
    level = base if spread == 0 else int(rng.integers(base - spread, base + spread + 1))
    img = np.full((height, width, 3), float(level))
    img += rng.integers(-noise, noise + 1, size=(height, width, 3))
    return img


def _fill_rect(img, x0, y0, w, h, color):
    x0, y0 = max(0, int(x0)), max(0, int(y0))
    x1, y1 = min(img.shape[1], int(x0 + w)), min(img.shape[0], int(y0 + h))
    img[y0:y1, x0:x1] = color


def _fill_ellipse(img, cx, cy, rx, ry, color):
    ys, xs = np.indices(img.shape[:2])
    mask = ((xs - cx) / rx) ** 2 + ((ys - cy) / ry) ** 2 <= 1.0
    img[mask] = color


def _finalize(img, rng) -> np.ndarray:
    # mild lighting jitter: a capture session is a controlled desk scene
    img = img * rng.uniform(0.97, 1.03)
    return np.clip(img, 0, 255).astype(np.uint8)


def _render_colored_shape(rng, width, height, ordinal, palette):
    img = _background(rng, width, height)
    color = palette[ordinal]
    size = rng.uniform(0.55, 0.85) * min(width, height)
    cx = rng.uniform(size / 2, width - size / 2)
    cy = rng.uniform(size / 2, height - size / 2)
    if rng.integers(0, 2) == 0:
        _fill_rect(img, cx - size / 2, cy - size / 2, size, size, color)
    else:
        _fill_ellipse(img, cx, cy, size / 2, size / 2, color)
    return _finalize(img, rng)


def _render_slider(rng, width, height, ordinal, classes):
    img = _background(rng, width, height, base=225)
    track_y = height // 2
    _fill_rect(img, SLIDER_MARGIN, track_y - 3, width - 2 * SLIDER_MARGIN, 6, (55, 55, 55))
    center = slider_handle_center(width, ordinal, classes) + rng.uniform(-2.0, 2.0)
    y = track_y - SLIDER_HANDLE_H / 2 + rng.uniform(-1.5, 1.5)
    _fill_rect(img, center - SLIDER_HANDLE_W / 2, y, SLIDER_HANDLE_W,
               SLIDER_HANDLE_H, SLIDER_HANDLE_COLOR)
    return _finalize(img, rng)


def _render_two_blob(rng, width, height, ordinal, classes):
    img = _background(rng, width, height, base=150, noise=5)
    angle = 2.0 * np.pi * ordinal / classes
    r = 0.24 * min(width, height) + rng.uniform(-2.0, 2.0)
    cx, cy = width / 2 + rng.uniform(-4, 4), height / 2 + rng.uniform(-4, 4)
    ax = cx - r * np.cos(angle)
    ay = cy - r * np.sin(angle)
    bx = cx + r * np.cos(angle)
    by = cy + r * np.sin(angle)
    radius = 0.13 * min(width, height)
    _fill_ellipse(img, ax, ay, radius, radius, (210, 40, 40))
    _fill_ellipse(img, bx, by, radius, radius, (40, 60, 210))
    return _finalize(img, rng)


def generate_corpus(out_dir, renderer: str, classes: int, samples_per_class: int,
                    seed: int, width: int = 128, height: int = 96) -> list[tuple[str, str]]:
    """Render the corpus into out_dir and write labels.csv; returns the
    (relative path, state id) pairs in generation order."""
    if renderer not in RENDERERS:
        raise BadSpec(f"unknown renderer {renderer!r} (choose from {RENDERERS})")
    if classes < 1 or samples_per_class < 1:
        raise BadSpec("classes and samples-per-class must be positive")
    if renderer in ("slider-position", "two-blob-relationship") and classes < 2:
        raise BadSpec(f"{renderer} needs at least 2 classes")
    if width < 32 or height < 32:
        raise BadSpec("corpus images must be at least 32x32")

    os.makedirs(out_dir, exist_ok=True)
    rng = np.random.default_rng(seed)
    palette = class_palette(classes)
    labels: list[tuple[str, str]] = []
    for ordinal in range(classes):
        state_id = f"s{ordinal}"
        for i in range(samples_per_class):
            if renderer == "colored-shape":
                arr = _render_colored_shape(rng, width, height, ordinal, palette)
            elif renderer == "slider-position":
                arr = _render_slider(rng, width, height, ordinal, classes)
            else:
                arr = _render_two_blob(rng, width, height, ordinal, classes)
            name = f"{state_id}_{i:03d}.ppm"
            with open(os.path.join(out_dir, name), "wb") as fh:
                fh.write(encode_ppm(frame_from_array(arr)))
            labels.append((name, state_id))
    with open(os.path.join(out_dir, LABELS_FILENAME), "w", encoding="utf-8") as fh:
        for name, state_id in labels:
            fh.write(f"{name},{state_id}\n")
    return labels


def read_labels(data_dir) -> list[tuple[str, str]]:
    """(relative path, state id) pairs from a corpus labels.csv."""
    labels_path = os.path.join(data_dir, LABELS_FILENAME)
    if not os.path.isfile(labels_path):
        raise BadSpec(f"no {LABELS_FILENAME} in {data_dir}")
    out = []
    with open(labels_path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            path, _, state_id = line.rpartition(",")
            if not path or not state_id:
                raise BadSpec(f"bad label line {line!r}")
            out.append((path, state_id))
    if not out:
        raise BadSpec(f"{labels_path} is empty")
    return out


def load_frame(path) -> Frame:
    ext = os.path.splitext(str(path))[1].lower()
    with open(path, "rb") as fh:
        data = fh.read()
    if ext in (".ppm", ".pnm"):
        return decode_frame(data, "ppm_p6")
    if ext == ".png":
        return decode_frame(data, "png")
    raise BadSpec(f"unsupported image extension {ext!r} for {path}")
