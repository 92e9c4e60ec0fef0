"""Vision utilities backing the anchor system: color-blob tracking,
pixel-to-plane lifting, template localization, and keypoint ingestion.

Camera convention (fixed for the whole engine): +z forward, x right, y down,
pixel = (fx*X/Z + cx, fy*Y/Z + cy). Color matching happens in normalized
chroma space (r', g') = (R, G)/(R+G+B+1) so uniform lighting changes do not
move the target.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import (
    BadDimensions,
    BehindCamera,
    FlatTemplate,
    OutOfBounds,
    ParseError,
    RayParallel,
    TeachkitError,
)
from .geometry import quat, quat_rotate
from .vision import Frame, luma

DEFAULT_CHROMA_TOLERANCE = 0.08
DEFAULT_MIN_INTENSITY = 30.0
DEFAULT_MIN_BLOB_AREA = 50
NCC_ACCEPT_SCORE = 0.7
# template search ladder: 1.25**k for k in -3..3, all inside [0.5, 2.0] and
# containing 1.0 so unscaled self-matches land exactly
DEFAULT_SCALE_LADDER = tuple(1.25 ** k for k in range(-3, 4))


@dataclass
class CameraModel:
    fx: float
    fy: float
    cx: float
    cy: float
    width: int = 640
    height: int = 480
    pose_rotation: np.ndarray = field(default_factory=lambda: quat())
    pose_translation: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        if self.fx <= 0 or self.fy <= 0:
            raise TeachkitError("focal lengths must be positive")
        self.pose_rotation = np.asarray(self.pose_rotation, dtype=np.float64)
        self.pose_translation = np.asarray(self.pose_translation, dtype=np.float64)

    @property
    def position(self) -> np.ndarray:
        return self.pose_translation

    def ray_direction(self, px: float, py: float) -> np.ndarray:
        """Unit world-space direction through a pixel."""
        d = np.array([(px - self.cx) / self.fx, (py - self.cy) / self.fy, 1.0])
        d = quat_rotate(self.pose_rotation, d)
        return d / math.sqrt(float(np.dot(d, d)))

    def unproject(self, px: float, py: float, depth: float) -> np.ndarray:
        """World point at camera-frame z-depth along the pixel ray."""
        cam = np.array(
            [(px - self.cx) / self.fx * depth, (py - self.cy) / self.fy * depth, depth]
        )
        return self.pose_translation + quat_rotate(self.pose_rotation, cam)


@dataclass
class Plane:
    plane_id: str
    origin: np.ndarray
    normal: np.ndarray
    basis1: np.ndarray
    basis2: np.ndarray

    def __post_init__(self):
        self.origin = np.asarray(self.origin, dtype=np.float64)
        self.normal = np.asarray(self.normal, dtype=np.float64)
        self.basis1 = np.asarray(self.basis1, dtype=np.float64)
        self.basis2 = np.asarray(self.basis2, dtype=np.float64)
        for a, b in ((self.basis1, self.basis2), (self.basis1, self.normal),
                     (self.basis2, self.normal)):
            if abs(float(np.dot(a, b))) > 1e-9:
                raise TeachkitError(f"plane {self.plane_id!r} basis not orthogonal")
        for v in (self.basis1, self.basis2, self.normal):
            if abs(float(np.dot(v, v)) - 1.0) > 1e-9:
                raise TeachkitError(f"plane {self.plane_id!r} basis not unit length")

    def point_at(self, u: float, v: float, height: float = 0.0) -> np.ndarray:
        return self.origin + u * self.basis1 + v * self.basis2 + height * self.normal


def plane_from_normal(plane_id: str, origin, normal) -> Plane:
    """Build an orthonormal in-plane basis for a unit normal."""
    normal = np.asarray(normal, dtype=np.float64)
    normal = normal / math.sqrt(float(np.dot(normal, normal)))
    helper = np.array([1.0, 0.0, 0.0])
    if abs(float(np.dot(helper, normal))) > 0.9:
        helper = np.array([0.0, 1.0, 0.0])
    b1 = np.cross(helper, normal)
    b1 = b1 / math.sqrt(float(np.dot(b1, b1)))
    b2 = np.cross(normal, b1)
    return Plane(plane_id=plane_id, origin=np.asarray(origin, dtype=np.float64),
                 normal=normal, basis1=b1, basis2=b2)


@dataclass
class ColorTracker:
    tracker_id: str
    target_chroma: tuple[float, float]
    chroma_tolerance: float = DEFAULT_CHROMA_TOLERANCE
    min_intensity: float = DEFAULT_MIN_INTENSITY
    min_blob_area: int = DEFAULT_MIN_BLOB_AREA

    def __post_init__(self):
        if self.chroma_tolerance <= 0:
            raise TeachkitError("chroma tolerance must be positive")


@dataclass(frozen=True)
class Keypoint:
    x: float
    y: float
    confidence: float


@dataclass
class KeypointFrame:
    timestamp_ms: float
    points: dict[str, Keypoint] = field(default_factory=dict)


@dataclass(frozen=True)
class BlobResult:
    centroid: tuple[float, float]
    area: int


@dataclass(frozen=True)
class TemplateMatch:
    x: int
    y: int
    scale: float
    score: float
    width: int
    height: int

    @property
    def center(self) -> tuple[float, float]:
        return (self.x + self.width / 2.0, self.y + self.height / 2.0)


def rgb_to_chroma(rgb: np.ndarray) -> np.ndarray:
    """(..., 3) RGB floats -> (..., 2) normalized chroma (r', g')."""
    rgb = np.asarray(rgb, dtype=np.float64)
    s = rgb[..., 0] + rgb[..., 1] + rgb[..., 2] + 1.0
    return np.stack([rgb[..., 0] / s, rgb[..., 1] / s], axis=-1)


def pick_color(frame: Frame, x: int, y: int,
               tracker_id: str = "tracker0") -> ColorTracker:
    """Sample the mean color of the 5x5 patch around a tap (edges clamped)."""
    if not (0 <= x < frame.width and 0 <= y < frame.height):
        raise OutOfBounds(f"tap ({x},{y}) outside {frame.width}x{frame.height}")
    arr = frame.as_array().astype(np.float64)
    x0, x1 = max(0, x - 2), min(frame.width, x + 3)
    y0, y1 = max(0, y - 2), min(frame.height, y + 3)
    mean_rgb = arr[y0:y1, x0:x1].reshape(-1, 3).mean(axis=0)
    chroma = rgb_to_chroma(mean_rgb)
    return ColorTracker(tracker_id=tracker_id,
                        target_chroma=(float(chroma[0]), float(chroma[1])))


def chroma_mask(frame: Frame, tracker: ColorTracker) -> np.ndarray:
    """uint8 mask of pixels within chroma tolerance and above min intensity."""
    arr = frame.as_array().astype(np.float64)
    chroma = rgb_to_chroma(arr)
    dr = chroma[..., 0] - tracker.target_chroma[0]
    dg = chroma[..., 1] - tracker.target_chroma[1]
    dist_sq = dr * dr + dg * dg
    intensity = (arr[..., 0] + arr[..., 1] + arr[..., 2]) / 3.0
    tol = tracker.chroma_tolerance
    mask = (dist_sq <= tol * tol) & (intensity >= tracker.min_intensity)
    return mask.astype(np.uint8)


def track_blob(frame: Frame, tracker: ColorTracker) -> BlobResult | None:
    """Largest 4-connected matching blob; area ties broken by the blob whose
    first pixel in row-major order comes earliest. None when nothing matches."""
    mask = chroma_mask(frame, tracker)
    labels = kernels.label_components(mask)
    if labels.max() == 0:
        return None
    areas = np.bincount(labels.ravel())
    areas[0] = 0
    best_area = int(areas.max())
    if best_area < tracker.min_blob_area:
        return None
    tied = np.nonzero(areas == best_area)[0]
    if len(tied) == 1:
        label = int(tied[0])
    else:
        flat = labels.ravel()
        label = int(min(tied, key=lambda lab: int(np.argmax(flat == lab))))
    ys, xs = np.nonzero(labels == label)
    centroid = (float(xs.sum()) / len(xs), float(ys.sum()) / len(ys))
    return BlobResult(centroid=centroid, area=best_area)


def lift_to_plane(camera: CameraModel, plane: Plane, pixel) -> np.ndarray:
    """Intersect the pixel's camera ray with a plane; world point."""
    origin = camera.position
    direction = camera.ray_direction(pixel[0], pixel[1])
    denom = float(np.dot(direction, plane.normal))
    if abs(denom) < 1e-9:
        raise RayParallel("ray is parallel to the plane")
    t = float(np.dot(plane.origin - origin, plane.normal)) / denom
    if t <= 0:
        raise BehindCamera(f"intersection at t={t} is behind the camera")
    return origin + t * direction


def locate_template(frame: Frame, template: Frame, scales=None,
                    accept_score: float = NCC_ACCEPT_SCORE) -> TemplateMatch | None:
    """Best normalized-cross-correlation placement of the template over a
    geometric scale ladder. (x, y) is the top-left pixel of the placement."""
    templ_arr = template.as_array()
    if float(np.var(luma(templ_arr))) == 0.0:
        raise FlatTemplate("template has zero luma variance")
    frame_luma = luma(frame.as_array())
    scales = tuple(scales) if scales is not None else DEFAULT_SCALE_LADDER

    best: TemplateMatch | None = None
    searched = 0
    for scale in scales:
        tw = int(round(template.width * scale))
        th = int(round(template.height * scale))
        if tw < 2 or th < 2 or tw > frame.width or th > frame.height:
            continue
        searched += 1
        if tw == template.width and th == template.height:
            scaled = templ_arr
        else:
            scaled = kernels.resize_bilinear_rgb(templ_arr, tw, th)
        score_map = kernels.ncc_score_map(frame_luma, luma(scaled))
        idx = np.unravel_index(int(np.argmax(score_map)), score_map.shape)
        score = float(score_map[idx])
        if best is None or score > best.score:
            best = TemplateMatch(x=int(idx[1]), y=int(idx[0]), scale=scale,
                                 score=score, width=tw, height=th)
    if searched == 0:
        raise BadDimensions("template does not fit the frame at any searched scale")
    if best is None or best.score < accept_score:
        return None
    return best


def ingest_keypoints(line: str) -> KeypointFrame:
    """Parse one `t_ms;id:x,y,c;...` line into a KeypointFrame."""
    fields = line.strip().split(";")
    if not fields or not fields[0]:
        raise ParseError("missing timestamp field", offset=0)
    try:
        t_ms = float(fields[0])
    except ValueError:
        raise ParseError(f"bad timestamp {fields[0]!r}", offset=0)
    points: dict[str, Keypoint] = {}
    for i, fieldstr in enumerate(fields[1:], start=1):
        if not fieldstr:
            continue
        name, sep, rest = fieldstr.partition(":")
        if not sep or not name:
            raise ParseError(f"expected `id:x,y,c`, got {fieldstr!r}", offset=i)
        parts = rest.split(",")
        if len(parts) != 3:
            raise ParseError(f"expected `id:x,y,c`, got {fieldstr!r}", offset=i)
        try:
            x, y, c = (float(p) for p in parts)
        except ValueError:
            raise ParseError(f"bad number in {fieldstr!r}", offset=i)
        points[name] = Keypoint(x=x, y=y, confidence=c)
    return KeypointFrame(timestamp_ms=t_ms, points=points)


def ingest_keypoint_file(path) -> list[KeypointFrame]:
    frames = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            if not raw.strip():
                continue
            try:
                frames.append(ingest_keypoints(raw))
            except ParseError as exc:
                raise ParseError(str(exc), line=lineno) from exc
    return frames
