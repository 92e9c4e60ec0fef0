"""Virtual objects, per-state keyed scenes, tweened transitions, anchors,
and pre-programmed behaviors.

State transitions tween the live snapshot to the target keyed scene with
smoothstep easing (3t^2 - 2t^3, default 500 ms). A transition scheduled while
another tween is running starts from the evaluated mid-tween snapshot, so the
motion never jumps. Objects present on only one side of a tween appear or
disappear by ramping scale and opacity from or to zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import SourceUnavailable, TeachkitError
from .geometry import (
    lerp,
    matrix_to_quat,
    quat,
    quat_from_axis_angle,
    quat_mul,
    quat_normalize,
    quat_rotate,
    quat_slerp,
)
from .tracking import CameraModel, KeypointFrame, Plane, TemplateMatch

DEFAULT_TWEEN_MS = 500.0

MODEL3D = "model3d"
IMAGE2D = "image2d"
AUDIO = "audio"
TEXT2D = "text2d"
ASSET_KINDS = (MODEL3D, IMAGE2D, AUDIO, TEXT2D)


def smoothstep(u: float) -> float:
    u = min(1.0, max(0.0, u))
    return 3.0 * u * u - 2.0 * u * u * u


@dataclass
class Transform:
    position: np.ndarray = field(default_factory=lambda: np.zeros(3))
    rotation: np.ndarray = field(default_factory=lambda: quat())
    scale: np.ndarray = field(default_factory=lambda: np.ones(3))

    def __post_init__(self):
        self.position = np.asarray(self.position, dtype=np.float64)
        self.rotation = quat_normalize(np.asarray(self.rotation, dtype=np.float64))
        self.scale = np.asarray(self.scale, dtype=np.float64)

    def copy(self) -> "Transform":
        return Transform(self.position.copy(), self.rotation.copy(), self.scale.copy())


@dataclass
class ObjectState:
    transform: Transform
    visible: bool = True
    opacity: float = 1.0

    def copy(self) -> "ObjectState":
        return ObjectState(self.transform.copy(), self.visible, self.opacity)


SceneSnapshot = dict[str, ObjectState]


def copy_snapshot(snapshot: SceneSnapshot) -> SceneSnapshot:
    return {oid: st.copy() for oid, st in snapshot.items()}


# -- anchors -------------------------------------------------------------

@dataclass(frozen=True)
class SurfaceAnchor:
    plane_id: str
    u: float = 0.0
    v: float = 0.0
    height: float = 0.0


@dataclass(frozen=True)
class SpatialAnchor:
    position: tuple[float, float, float] = (0.0, 0.0, 0.0)


@dataclass(frozen=True)
class CameraAnchor:
    x: float = 0.5  # normalized screen coords
    y: float = 0.5
    depth_m: float = 1.0


@dataclass(frozen=True)
class ImageAnchor:
    template_ref: str
    offset: tuple[float, float, float] = (0.0, 0.0, 0.0)
    base_depth_m: float = 1.0  # depth when matched at scale 1.0


@dataclass(frozen=True)
class ObjectAnchor:
    tracker_id: str
    offset: tuple[float, float, float] = (0.0, 0.0, 0.0)


@dataclass(frozen=True)
class HumanAnchor:
    keypoint_id: str
    offset_px: tuple[float, float] = (0.0, 0.0)
    depth_m: float = 1.0


Anchor = (SurfaceAnchor | SpatialAnchor | CameraAnchor | ImageAnchor
          | ObjectAnchor | HumanAnchor)


@dataclass
class AnchorContext:
    """Per-frame sources anchors resolve against. tracker_points carries
    already-lifted world centroids (blob tracking + plane raycast happen in
    the pipeline)."""

    camera: CameraModel | None = None
    planes: dict[str, Plane] = field(default_factory=dict)
    tracker_points: dict[str, np.ndarray] = field(default_factory=dict)
    template_matches: dict[str, TemplateMatch] = field(default_factory=dict)
    keypoints: KeypointFrame | None = None


def resolve_anchor(anchor: Anchor, ctx: AnchorContext) -> tuple[np.ndarray, np.ndarray]:
    """World (position, rotation) of the anchor frame.

    Raises SourceUnavailable when the referenced plane/tracker/template/
    keypoint is not in the context; callers keep the last resolved transform
    and flag the object stale.
    """
    if isinstance(anchor, SpatialAnchor):
        return np.asarray(anchor.position, dtype=np.float64), quat()
    if isinstance(anchor, SurfaceAnchor):
        plane = ctx.planes.get(anchor.plane_id)
        if plane is None:
            raise SourceUnavailable(anchor.plane_id)
        pos = plane.point_at(anchor.u, anchor.v, anchor.height)
        rot = matrix_to_quat(
            np.column_stack([plane.basis1, plane.basis2, plane.normal])
        )
        return pos, rot
    if isinstance(anchor, CameraAnchor):
        cam = ctx.camera
        if cam is None:
            raise SourceUnavailable("camera")
        pos = cam.unproject(anchor.x * cam.width, anchor.y * cam.height,
                            anchor.depth_m)
        return pos, cam.pose_rotation.copy()
    if isinstance(anchor, ImageAnchor):
        cam = ctx.camera
        match = ctx.template_matches.get(anchor.template_ref)
        if cam is None or match is None:
            raise SourceUnavailable(anchor.template_ref)
        cx, cy = match.center
        depth = anchor.base_depth_m / match.scale
        pos = cam.unproject(cx, cy, depth)
        pos = pos + quat_rotate(cam.pose_rotation, np.asarray(anchor.offset))
        return pos, cam.pose_rotation.copy()
    if isinstance(anchor, ObjectAnchor):
        point = ctx.tracker_points.get(anchor.tracker_id)
        if point is None:
            raise SourceUnavailable(anchor.tracker_id)
        return np.asarray(point, dtype=np.float64) + np.asarray(anchor.offset), quat()
    if isinstance(anchor, HumanAnchor):
        cam = ctx.camera
        kp = None if ctx.keypoints is None else ctx.keypoints.points.get(anchor.keypoint_id)
        if cam is None or kp is None:
            raise SourceUnavailable(anchor.keypoint_id)
        pos = cam.unproject(kp.x + anchor.offset_px[0], kp.y + anchor.offset_px[1],
                            anchor.depth_m)
        return pos, cam.pose_rotation.copy()
    raise TeachkitError(f"unknown anchor type {type(anchor).__name__}")


# -- objects and behaviors -------------------------------------------------

@dataclass
class SceneObject:
    object_id: str
    asset_ref: str
    asset_kind: str = MODEL3D
    anchor: Anchor = field(default_factory=SpatialAnchor)
    transform: Transform = field(default_factory=Transform)
    visible: bool = True
    opacity: float = 1.0

    def __post_init__(self):
        if self.asset_kind not in ASSET_KINDS:
            raise TeachkitError(f"unknown asset kind {self.asset_kind!r}")
        if self.visible and np.any(self.transform.scale <= 0):
            raise TeachkitError(
                f"object {self.object_id!r} visible with non-positive scale"
            )

    def initial_state(self) -> ObjectState:
        return ObjectState(self.transform.copy(), self.visible, self.opacity)


SCALE_UNIFORM = "scale-uniform"
ROTATION_ABOUT_AXIS = "rotation-about-axis"
POSITION_ALONG_AXIS = "position-along-axis"
OPACITY = "opacity"
PARAM_PROPERTIES = (SCALE_UNIFORM, ROTATION_ABOUT_AXIS, POSITION_ALONG_AXIS, OPACITY)


@dataclass
class ParamBinding:
    """Drives one object property from the runtime parameter p as a*p + b."""

    target_property: str
    a: float = 1.0
    b: float = 0.0
    axis: tuple[float, float, float] = (0.0, 0.0, 1.0)

    def __post_init__(self):
        if self.target_property not in PARAM_PROPERTIES:
            raise TeachkitError(f"unknown param property {self.target_property!r}")
        if not (math.isfinite(self.a) and math.isfinite(self.b)):
            raise TeachkitError("param binding coefficients must be finite")


@dataclass
class Behavior:
    behavior_id: str
    object_id: str
    active: bool = False
    linear_velocity: tuple[float, float, float] | None = None  # m/s, anchor frame
    angular_axis: tuple[float, float, float] | None = None
    angular_rad_per_s: float = 0.0
    param_binding: ParamBinding | None = None

    def __post_init__(self):
        for rule in (self.linear_velocity, self.angular_axis):
            if rule is not None and not all(math.isfinite(v) for v in rule):
                raise TeachkitError(f"behavior {self.behavior_id!r} has non-finite rule")
        if not math.isfinite(self.angular_rad_per_s):
            raise TeachkitError(f"behavior {self.behavior_id!r} has non-finite rule")


# -- keyed scenes and tweens -----------------------------------------------

@dataclass
class KeyedScene:
    state_id: str
    snapshots: SceneSnapshot


@dataclass
class Tween:
    from_snapshot: SceneSnapshot
    to_snapshot: SceneSnapshot
    start_ms: float
    duration_ms: float = DEFAULT_TWEEN_MS

    def __post_init__(self):
        if self.duration_ms <= 0:
            raise TeachkitError("tween duration must be positive")

    def eased_t(self, now_ms: float) -> float:
        return smoothstep((now_ms - self.start_ms) / self.duration_ms)

    def done(self, now_ms: float) -> bool:
        return now_ms >= self.start_ms + self.duration_ms

    def evaluate(self, now_ms: float) -> SceneSnapshot:
        return interpolate(self.from_snapshot, self.to_snapshot, self.eased_t(now_ms))


def _interp_state(a: ObjectState | None, b: ObjectState | None,
                  t: float) -> ObjectState | None:
    a_vis = a is not None and a.visible
    b_vis = b is not None and b.visible
    if a_vis and b_vis:
        tr = Transform(
            position=lerp(a.transform.position, b.transform.position, t),
            rotation=quat_slerp(a.transform.rotation, b.transform.rotation, t),
            scale=lerp(a.transform.scale, b.transform.scale, t),
        )
        return ObjectState(tr, True, float(lerp(a.opacity, b.opacity, t)))
    if b_vis:  # appear: grow from zero scale/opacity at b's pose
        scale = np.maximum(b.transform.scale * t, 0.0)
        tr = Transform(b.transform.position.copy(), b.transform.rotation.copy(), scale)
        return ObjectState(tr, t > 0.0, b.opacity * t)
    if a_vis:  # disappear: shrink toward zero, invisible at the end
        scale = np.maximum(a.transform.scale * (1.0 - t), 0.0)
        tr = Transform(a.transform.position.copy(), a.transform.rotation.copy(), scale)
        return ObjectState(tr, t < 1.0, a.opacity * (1.0 - t))
    keep = a if t < 1.0 else (b or a)
    return keep.copy() if keep is not None else None


def interpolate(from_snapshot: SceneSnapshot, to_snapshot: SceneSnapshot,
                t: float) -> SceneSnapshot:
    """Blend two snapshots at eased position t in [0, 1]. Objects missing on
    one side are treated as invisible there (appear/disappear ramps)."""
    out: SceneSnapshot = {}
    for oid in dict.fromkeys(list(from_snapshot) + list(to_snapshot)):
        state = _interp_state(from_snapshot.get(oid), to_snapshot.get(oid), t)
        if state is not None:
            out[oid] = state
    return out


# -- runtime ----------------------------------------------------------------

@dataclass
class WorldObject:
    object_id: str
    position: np.ndarray
    rotation: np.ndarray
    scale: np.ndarray
    visible: bool
    opacity: float
    stale: bool = False


class SceneRuntime:
    """Owns the live snapshot; mutated only from the event/tick loop."""

    def __init__(self, objects: dict[str, SceneObject] | None = None,
                 behaviors: dict[str, Behavior] | None = None,
                 keyed_scenes: dict[str, SceneSnapshot] | None = None,
                 tween_duration_ms: float = DEFAULT_TWEEN_MS):
        self.objects = dict(objects or {})
        self.behaviors = dict(behaviors or {})
        self.keyed_scenes = {sid: copy_snapshot(s)
                             for sid, s in (keyed_scenes or {}).items()}
        self.tween_duration_ms = tween_duration_ms
        self.now_ms = 0.0
        self.current: SceneSnapshot = {
            oid: obj.initial_state() for oid, obj in self.objects.items()
        }
        self.active_tween: Tween | None = None
        self.parameter = 0.0
        self._audio_queue: list[str] = []
        self._anchor_cache: dict[str, tuple[np.ndarray, np.ndarray]] = {}
        self.stale_objects: set[str] = set()

    def save_keyed_scene(self, state_id: str, snapshots: SceneSnapshot) -> KeyedScene:
        scene = KeyedScene(state_id=state_id, snapshots=copy_snapshot(snapshots))
        self.keyed_scenes[state_id] = scene.snapshots
        return scene

    def live_snapshot(self, now_ms: float | None = None) -> SceneSnapshot:
        now = self.now_ms if now_ms is None else now_ms
        if self.active_tween is not None:
            return self.active_tween.evaluate(now)
        return copy_snapshot(self.current)

    def apply_transition(self, target_state_id: str, now_ms: float) -> Tween:
        """Tween from the evaluated live snapshot to the target keyed scene.
        Targets without a saved scene keep the current snapshot (no-op)."""
        start = self.live_snapshot(now_ms)
        target = self.keyed_scenes.get(target_state_id)
        if target is None:
            target = start
        tween = Tween(from_snapshot=copy_snapshot(start),
                      to_snapshot=copy_snapshot(target),
                      start_ms=now_ms, duration_ms=self.tween_duration_ms)
        self.active_tween = tween
        return tween

    def queue_audio(self, asset_id: str):
        self._audio_queue.append(asset_id)

    def set_behavior_active(self, behavior_id: str, on: bool):
        if behavior_id not in self.behaviors:
            raise TeachkitError(f"unknown behavior {behavior_id!r}")
        self.behaviors[behavior_id].active = on

    def tick(self, dt_ms: float) -> tuple[SceneSnapshot, list[str]]:
        """Advance time: tween playback, then behavior integration; returns
        the live snapshot and the audio asset ids triggered since last tick."""
        if dt_ms <= 0:
            raise TeachkitError("tick dt must be positive")
        self.now_ms += dt_ms
        if self.active_tween is not None:
            self.current = self.active_tween.evaluate(self.now_ms)
            if self.active_tween.done(self.now_ms):
                self.current = copy_snapshot(self.active_tween.to_snapshot)
                self.active_tween = None
        dt_s = dt_ms / 1000.0
        for behavior in self.behaviors.values():
            if not behavior.active:
                continue
            state = self.current.get(behavior.object_id)
            if state is None:
                continue
            if behavior.linear_velocity is not None:
                state.transform.position = (
                    state.transform.position
                    + np.asarray(behavior.linear_velocity) * dt_s
                )
            if behavior.angular_axis is not None and behavior.angular_rad_per_s != 0.0:
                delta = quat_from_axis_angle(behavior.angular_axis,
                                             behavior.angular_rad_per_s * dt_s)
                state.transform.rotation = quat_normalize(
                    quat_mul(delta, state.transform.rotation)
                )
            if behavior.param_binding is not None:
                self._apply_param_binding(state, behavior.param_binding)
        audio = self._audio_queue
        self._audio_queue = []
        return copy_snapshot(self.current), audio

    def _apply_param_binding(self, state: ObjectState, pb: ParamBinding):
        value = pb.a * self.parameter + pb.b
        if pb.target_property == SCALE_UNIFORM:
            s = max(value, 0.0)
            state.transform.scale = np.array([s, s, s])
            if s == 0.0:
                state.visible = False
        elif pb.target_property == OPACITY:
            state.opacity = min(1.0, max(0.0, value))
        elif pb.target_property == ROTATION_ABOUT_AXIS:
            state.transform.rotation = quat_from_axis_angle(pb.axis, value)
        elif pb.target_property == POSITION_ALONG_AXIS:
            axis = np.asarray(pb.axis, dtype=np.float64)
            axis = axis / math.sqrt(float(np.dot(axis, axis)))
            pos = state.transform.position
            along = float(np.dot(pos, axis))
            state.transform.position = pos - along * axis + value * axis

    def world_snapshot(self, ctx: AnchorContext) -> list[WorldObject]:
        """Resolve every object's anchor and compose its world transform.
        Unavailable sources freeze the object at its last anchor (stale)."""
        out: list[WorldObject] = []
        for oid, obj in self.objects.items():
            state = self.current.get(oid)
            if state is None:
                continue
            stale = False
            try:
                apos, arot = resolve_anchor(obj.anchor, ctx)
                self._anchor_cache[oid] = (apos, arot)
            except SourceUnavailable:
                cached = self._anchor_cache.get(oid)
                if cached is None:
                    apos, arot = np.zeros(3), quat()
                else:
                    apos, arot = cached
                stale = True
            self.stale_objects.discard(oid)
            if stale:
                self.stale_objects.add(oid)
            out.append(WorldObject(
                object_id=oid,
                position=apos + quat_rotate(arot, state.transform.position),
                rotation=quat_normalize(quat_mul(arot, state.transform.rotation)),
                scale=state.transform.scale.copy(),
                visible=state.visible,
                opacity=state.opacity,
                stale=stale,
            ))
        return out
