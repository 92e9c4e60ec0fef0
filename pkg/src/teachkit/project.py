"""Versioned project persistence with canonical, lossless serialization.

A project is one JSON document plus a `samples/<stateId>/` directory of
captured images beside it. The document is canonical: "version" is always
the first key, every other key is sorted, and reals are written with 17
significant digits so doubles survive a round trip bit for bit. Two saves of
the same in-memory project are byte-identical.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field

import numpy as np

from .classify import ClassifierModel, SmootherConfig, StateClass
from .errors import TeachkitError, UnknownState, ValidationError, VersionMismatch
from .scene import (
    Anchor,
    Behavior,
    CameraAnchor,
    HumanAnchor,
    ImageAnchor,
    KeyedScene,
    ObjectAnchor,
    ObjectState,
    ParamBinding,
    SceneObject,
    SceneSnapshot,
    SpatialAnchor,
    SurfaceAnchor,
    Transform,
    copy_snapshot,
)
from .states import (
    ApplyKeyedScene,
    EnterTrigger,
    PlayAudio,
    RunBehavior,
    SetParameterTarget,
    StateSet,
    TransitionTrigger,
    TriggerBinding,
    binding_problems,
)
from .tracking import CameraModel, ColorTracker, Plane, plane_from_normal
from .vision import EMBEDDING_CONFIG, Frame, encode_ppm

PROJECT_VERSION = 1
SAMPLES_DIRNAME = "samples"


@dataclass
class AssetInfo:
    kind: str
    path: str | None = None


@dataclass
class ProjectSettings:
    smoother: SmootherConfig = field(default_factory=SmootherConfig)
    tween_duration_ms: float = 500.0
    tick_hz: float = 30.0
    capture_fps: float = 15.0
    camera: CameraModel = field(default_factory=lambda: CameraModel(
        fx=525.0, fy=525.0, cx=320.0, cy=240.0, width=640, height=480))
    planes: dict[str, Plane] = field(default_factory=dict)
    assets: dict[str, AssetInfo] = field(default_factory=dict)
    trackers: dict[str, ColorTracker] = field(default_factory=dict)
    tracking_plane_id: str = "default"  # plane blob centroids are lifted onto


@dataclass
class Project:
    name: str = "untitled"
    version: int = PROJECT_VERSION
    state_sets: list[StateSet] = field(default_factory=list)
    training_manifest: dict[str, list[str]] = field(default_factory=dict)
    embedding_config: str = EMBEDDING_CONFIG
    model: ClassifierModel | None = None
    scene_objects: dict[str, SceneObject] = field(default_factory=dict)
    keyed_scenes: dict[str, SceneSnapshot] = field(default_factory=dict)
    bindings: list[TriggerBinding] = field(default_factory=list)
    behaviors: dict[str, Behavior] = field(default_factory=dict)
    settings: ProjectSettings = field(default_factory=ProjectSettings)
    # captured frames not yet flushed to the samples directory; keyed by state
    sample_frames: dict[str, list[Frame]] = field(default_factory=dict)

    def all_states(self) -> list[StateClass]:
        return [cls for sset in self.state_sets for cls in sset.states]

    def state_ids(self) -> list[str]:
        return [cls.state_id for cls in self.all_states()]

    def find_state_set(self, state_id: str) -> StateSet | None:
        for sset in self.state_sets:
            if any(c.state_id == state_id for c in sset.states):
                return sset
        return None


def new_project(name: str = "untitled") -> Project:
    project = Project(name=name)
    project.settings.planes["default"] = plane_from_normal(
        "default", origin=[0.0, 0.0, 2.0], normal=[0.0, 0.0, -1.0]
    )
    return project


def save_keyed_scene(project: Project, state_id: str,
                     snapshots: SceneSnapshot) -> KeyedScene:
    """Store (overwrite) the scene snapshot bound to a state."""
    if state_id not in project.state_ids():
        raise UnknownState(state_id)
    scene = KeyedScene(state_id=state_id, snapshots=copy_snapshot(snapshots))
    project.keyed_scenes[state_id] = scene.snapshots
    return scene


# -- canonical JSON -----------------------------------------------------------

def _fmt_float(x: float) -> str:
    if not math.isfinite(x):
        raise ValidationError([f"non-finite real {x!r} cannot be serialized"])
    s = format(x, ".17g")
    if not any(c in s for c in ".eE"):
        s += ".0"  # keep float typing through a round trip
    return s


def _emit(value, lines: list[str], indent: int, prefix: str, suffix: str,
          root_first: tuple[str, ...] = ()):
    pad = "  " * indent
    if isinstance(value, dict):
        keys = sorted(value.keys())
        if root_first:
            head = [k for k in root_first if k in value]
            keys = head + [k for k in keys if k not in head]
        if not keys:
            lines.append(f"{pad}{prefix}{{}}{suffix}")
            return
        lines.append(f"{pad}{prefix}{{")
        for i, key in enumerate(keys):
            if not isinstance(key, str):
                raise ValidationError([f"non-string key {key!r}"])
            tail = "," if i < len(keys) - 1 else ""
            _emit(value[key], lines, indent + 1, json.dumps(key) + ": ", tail)
        lines.append(f"{pad}}}{suffix}")
    elif isinstance(value, (list, tuple)):
        if len(value) == 0:
            lines.append(f"{pad}{prefix}[]{suffix}")
            return
        lines.append(f"{pad}{prefix}[")
        for i, item in enumerate(value):
            tail = "," if i < len(value) - 1 else ""
            _emit(item, lines, indent + 1, "", tail)
        lines.append(f"{pad}]{suffix}")
    elif isinstance(value, bool):
        lines.append(f"{pad}{prefix}{'true' if value else 'false'}{suffix}")
    elif value is None:
        lines.append(f"{pad}{prefix}null{suffix}")
    elif isinstance(value, float):
        lines.append(f"{pad}{prefix}{_fmt_float(value)}{suffix}")
    elif isinstance(value, int):
        lines.append(f"{pad}{prefix}{value}{suffix}")
    elif isinstance(value, str):
        lines.append(f"{pad}{prefix}{json.dumps(value)}{suffix}")
    else:
        raise ValidationError([f"unserializable value of type {type(value).__name__}"])


def dumps_canonical(doc: dict, root_first: tuple[str, ...] = ("version",)) -> str:
    lines: list[str] = []
    _emit(doc, lines, 0, "", "", root_first=root_first)
    return "\n".join(lines) + "\n"


def dumps_compact(doc) -> str:
    """Single-line canonical form for event logs (sorted keys, .17g floats)."""
    if isinstance(doc, dict):
        inner = ",".join(
            f"{json.dumps(k)}:{dumps_compact(doc[k])}" for k in sorted(doc)
        )
        return "{" + inner + "}"
    if isinstance(doc, (list, tuple)):
        return "[" + ",".join(dumps_compact(v) for v in doc) + "]"
    if isinstance(doc, bool):
        return "true" if doc else "false"
    if doc is None:
        return "null"
    if isinstance(doc, float):
        return _fmt_float(doc)
    if isinstance(doc, int):
        return str(doc)
    if isinstance(doc, str):
        return json.dumps(doc)
    raise ValidationError([f"unserializable value of type {type(doc).__name__}"])


# -- model <-> doc ------------------------------------------------------------

def model_to_doc(model: ClassifierModel) -> dict:
    doc = {
        "headKind": model.head_kind,
        "embeddingDim": model.embedding_dim,
        "classes": [
            {"stateId": c.state_id, "name": c.name, "ordinal": c.ordinal,
             "sampleCount": c.sample_count}
            for c in model.classes
        ],
        "trainedAtMs": float(model.trained_at_ms),
        "configDigest": model.config_digest,
    }
    if model.head_kind == "knn":
        doc["k"] = model.k
        doc["kClamped"] = model.k_clamped
        doc["exemplars"] = model.exemplars.tolist()
        doc["exemplarLabels"] = model.exemplar_labels.tolist()
    else:
        doc["weights"] = model.weights.tolist()
        doc["bias"] = model.bias.tolist()
        doc["finalLoss"] = (None if model.final_loss is None
                            else float(model.final_loss))
    return doc


def model_from_doc(doc: dict) -> ClassifierModel:
    classes = [
        StateClass(state_id=c["stateId"], name=c["name"], ordinal=c["ordinal"],
                   sample_count=c.get("sampleCount", 0))
        for c in doc["classes"]
    ]
    model = ClassifierModel(
        head_kind=doc["headKind"],
        embedding_dim=doc["embeddingDim"],
        classes=classes,
        trained_at_ms=doc.get("trainedAtMs", 0.0),
        config_digest=doc.get("configDigest", ""),
    )
    if model.head_kind == "knn":
        model.k = doc["k"]
        model.k_clamped = doc.get("kClamped", False)
        model.exemplars = np.array(doc["exemplars"], dtype=np.float64)
        model.exemplar_labels = np.array(doc["exemplarLabels"], dtype=np.intp)
    elif model.head_kind == "softmax":
        model.weights = np.array(doc["weights"], dtype=np.float64)
        model.bias = np.array(doc["bias"], dtype=np.float64)
        model.final_loss = doc.get("finalLoss")
    else:
        raise ValidationError([f"unknown model head {model.head_kind!r}"])
    return model


# -- scene pieces <-> doc -----------------------------------------------------

def _transform_to_doc(tr: Transform) -> dict:
    return {"position": tr.position.tolist(), "rotation": tr.rotation.tolist(),
            "scale": tr.scale.tolist()}


def _transform_from_doc(doc: dict) -> Transform:
    return Transform(position=np.array(doc["position"], dtype=np.float64),
                     rotation=np.array(doc["rotation"], dtype=np.float64),
                     scale=np.array(doc["scale"], dtype=np.float64))


def _state_to_doc(st: ObjectState) -> dict:
    return {"transform": _transform_to_doc(st.transform), "visible": st.visible,
            "opacity": float(st.opacity)}


def _state_from_doc(doc: dict) -> ObjectState:
    return ObjectState(transform=_transform_from_doc(doc["transform"]),
                       visible=doc["visible"], opacity=doc["opacity"])


def anchor_to_doc(anchor: Anchor) -> dict:
    if isinstance(anchor, SurfaceAnchor):
        return {"kind": "surface", "planeId": anchor.plane_id, "u": float(anchor.u),
                "v": float(anchor.v), "height": float(anchor.height)}
    if isinstance(anchor, SpatialAnchor):
        return {"kind": "spatial", "position": [float(v) for v in anchor.position]}
    if isinstance(anchor, CameraAnchor):
        return {"kind": "camera", "x": float(anchor.x), "y": float(anchor.y),
                "depthM": float(anchor.depth_m)}
    if isinstance(anchor, ImageAnchor):
        return {"kind": "image", "templateRef": anchor.template_ref,
                "offset": [float(v) for v in anchor.offset],
                "baseDepthM": float(anchor.base_depth_m)}
    if isinstance(anchor, ObjectAnchor):
        return {"kind": "object", "trackerId": anchor.tracker_id,
                "offset": [float(v) for v in anchor.offset]}
    if isinstance(anchor, HumanAnchor):
        return {"kind": "human", "keypointId": anchor.keypoint_id,
                "offsetPx": [float(v) for v in anchor.offset_px],
                "depthM": float(anchor.depth_m)}
    raise ValidationError([f"unknown anchor type {type(anchor).__name__}"])


def anchor_from_doc(doc: dict) -> Anchor:
    kind = doc.get("kind")
    if kind == "surface":
        return SurfaceAnchor(plane_id=doc["planeId"], u=doc["u"], v=doc["v"],
                             height=doc["height"])
    if kind == "spatial":
        return SpatialAnchor(position=tuple(doc["position"]))
    if kind == "camera":
        return CameraAnchor(x=doc["x"], y=doc["y"], depth_m=doc["depthM"])
    if kind == "image":
        return ImageAnchor(template_ref=doc["templateRef"],
                           offset=tuple(doc["offset"]),
                           base_depth_m=doc["baseDepthM"])
    if kind == "object":
        return ObjectAnchor(tracker_id=doc["trackerId"], offset=tuple(doc["offset"]))
    if kind == "human":
        return HumanAnchor(keypoint_id=doc["keypointId"],
                           offset_px=tuple(doc["offsetPx"]), depth_m=doc["depthM"])
    raise ValidationError([f"unknown anchor kind {kind!r}"])


def _object_to_doc(obj: SceneObject) -> dict:
    return {
        "objectId": obj.object_id,
        "assetRef": obj.asset_ref,
        "assetKind": obj.asset_kind,
        "anchor": anchor_to_doc(obj.anchor),
        "transform": _transform_to_doc(obj.transform),
        "visible": obj.visible,
        "opacity": float(obj.opacity),
    }


def _object_from_doc(doc: dict) -> SceneObject:
    return SceneObject(
        object_id=doc["objectId"],
        asset_ref=doc["assetRef"],
        asset_kind=doc["assetKind"],
        anchor=anchor_from_doc(doc["anchor"]),
        transform=_transform_from_doc(doc["transform"]),
        visible=doc["visible"],
        opacity=doc["opacity"],
    )


def _behavior_to_doc(b: Behavior) -> dict:
    pb = None
    if b.param_binding is not None:
        pb = {"targetProperty": b.param_binding.target_property,
              "a": float(b.param_binding.a), "b": float(b.param_binding.b),
              "axis": [float(v) for v in b.param_binding.axis]}
    return {
        "behaviorId": b.behavior_id,
        "objectId": b.object_id,
        "active": b.active,
        "linearVelocity": (None if b.linear_velocity is None
                           else [float(v) for v in b.linear_velocity]),
        "angularAxis": (None if b.angular_axis is None
                        else [float(v) for v in b.angular_axis]),
        "angularRadPerS": float(b.angular_rad_per_s),
        "paramBinding": pb,
    }


def _behavior_from_doc(doc: dict) -> Behavior:
    pb = None
    if doc.get("paramBinding") is not None:
        p = doc["paramBinding"]
        pb = ParamBinding(target_property=p["targetProperty"], a=p["a"], b=p["b"],
                          axis=tuple(p["axis"]))
    return Behavior(
        behavior_id=doc["behaviorId"],
        object_id=doc["objectId"],
        active=doc.get("active", False),
        linear_velocity=(None if doc.get("linearVelocity") is None
                         else tuple(doc["linearVelocity"])),
        angular_axis=(None if doc.get("angularAxis") is None
                      else tuple(doc["angularAxis"])),
        angular_rad_per_s=doc.get("angularRadPerS", 0.0),
        param_binding=pb,
    )


def _binding_to_doc(binding: TriggerBinding) -> dict:
    trig = binding.trigger
    if isinstance(trig, EnterTrigger):
        trig_doc = {"type": "enter", "stateId": trig.state_id}
    else:
        trig_doc = {"type": "transition", "fromId": trig.from_id, "toId": trig.to_id}
    actions = []
    for action in binding.actions:
        if isinstance(action, ApplyKeyedScene):
            actions.append({"action": "applyKeyedScene", "stateId": action.state_id})
        elif isinstance(action, PlayAudio):
            actions.append({"action": "playAudio", "assetId": action.asset_id})
        elif isinstance(action, SetParameterTarget):
            actions.append({"action": "setParameterTarget", "value": float(action.value)})
        elif isinstance(action, RunBehavior):
            actions.append({"action": "runBehavior", "behaviorId": action.behavior_id,
                            "on": action.on})
        else:
            raise ValidationError([f"unknown action type {type(action).__name__}"])
    return {"trigger": trig_doc, "actions": actions}


def _binding_from_doc(doc: dict) -> TriggerBinding:
    t = doc["trigger"]
    if t["type"] == "enter":
        trigger = EnterTrigger(state_id=t["stateId"])
    elif t["type"] == "transition":
        trigger = TransitionTrigger(from_id=t["fromId"], to_id=t["toId"])
    else:
        raise ValidationError([f"unknown trigger type {t['type']!r}"])
    actions = []
    for a in doc["actions"]:
        kind = a["action"]
        if kind == "applyKeyedScene":
            actions.append(ApplyKeyedScene(state_id=a["stateId"]))
        elif kind == "playAudio":
            actions.append(PlayAudio(asset_id=a["assetId"]))
        elif kind == "setParameterTarget":
            actions.append(SetParameterTarget(value=a["value"]))
        elif kind == "runBehavior":
            actions.append(RunBehavior(behavior_id=a["behaviorId"], on=a["on"]))
        else:
            raise ValidationError([f"unknown action kind {kind!r}"])
    return TriggerBinding(trigger=trigger, actions=actions)


def _settings_to_doc(s: ProjectSettings) -> dict:
    cam = s.camera
    return {
        "smoother": {"windowN": s.smoother.window_n,
                     "confidenceTau": float(s.smoother.confidence_tau),
                     "hysteresisM": s.smoother.hysteresis_m},
        "tween": {"durationMs": float(s.tween_duration_ms),
                  "tickHz": float(s.tick_hz)},
        "captureFps": float(s.capture_fps),
        "camera": {"fx": float(cam.fx), "fy": float(cam.fy), "cx": float(cam.cx),
                   "cy": float(cam.cy), "width": cam.width, "height": cam.height,
                   "poseRotation": cam.pose_rotation.tolist(),
                   "poseTranslation": cam.pose_translation.tolist()},
        "planes": {
            pid: {"origin": p.origin.tolist(), "normal": p.normal.tolist(),
                  "basis1": p.basis1.tolist(), "basis2": p.basis2.tolist()}
            for pid, p in s.planes.items()
        },
        "assets": {
            aid: {"kind": a.kind, "path": a.path} for aid, a in s.assets.items()
        },
        "trackers": {
            tid: {"targetChroma": [float(t.target_chroma[0]), float(t.target_chroma[1])],
                  "chromaTolerance": float(t.chroma_tolerance),
                  "minIntensity": float(t.min_intensity),
                  "minBlobArea": t.min_blob_area}
            for tid, t in s.trackers.items()
        },
        "trackingPlaneId": s.tracking_plane_id,
    }


def _settings_from_doc(doc: dict) -> ProjectSettings:
    sm = doc["smoother"]
    cam = doc["camera"]
    return ProjectSettings(
        smoother=SmootherConfig(window_n=sm["windowN"],
                                confidence_tau=sm["confidenceTau"],
                                hysteresis_m=sm["hysteresisM"]),
        tween_duration_ms=doc["tween"]["durationMs"],
        tick_hz=doc["tween"]["tickHz"],
        capture_fps=doc.get("captureFps", 15.0),
        camera=CameraModel(
            fx=cam["fx"], fy=cam["fy"], cx=cam["cx"], cy=cam["cy"],
            width=cam["width"], height=cam["height"],
            pose_rotation=np.array(cam["poseRotation"], dtype=np.float64),
            pose_translation=np.array(cam["poseTranslation"], dtype=np.float64),
        ),
        planes={
            pid: Plane(plane_id=pid, origin=np.array(p["origin"]),
                       normal=np.array(p["normal"]), basis1=np.array(p["basis1"]),
                       basis2=np.array(p["basis2"]))
            for pid, p in doc["planes"].items()
        },
        assets={aid: AssetInfo(kind=a["kind"], path=a.get("path"))
                for aid, a in doc["assets"].items()},
        trackers={
            tid: ColorTracker(tracker_id=tid,
                              target_chroma=tuple(t["targetChroma"]),
                              chroma_tolerance=t["chromaTolerance"],
                              min_intensity=t["minIntensity"],
                              min_blob_area=t["minBlobArea"])
            for tid, t in doc.get("trackers", {}).items()
        },
        tracking_plane_id=doc.get("trackingPlaneId", "default"),
    )


def project_to_doc(project: Project) -> dict:
    return {
        "version": project.version,
        "name": project.name,
        "embeddingConfig": project.embedding_config,
        "stateSets": [
            {"setId": s.set_id, "kind": s.kind,
             "paramStart": float(s.param_start), "paramEnd": float(s.param_end),
             "states": [{"stateId": c.state_id, "name": c.name, "ordinal": c.ordinal}
                        for c in s.states]}
            for s in project.state_sets
        ],
        "trainingManifest": {sid: list(paths)
                             for sid, paths in project.training_manifest.items()},
        "model": None if project.model is None else model_to_doc(project.model),
        "sceneObjects": {oid: _object_to_doc(obj)
                         for oid, obj in project.scene_objects.items()},
        "keyedScenes": {
            sid: {oid: _state_to_doc(st) for oid, st in snap.items()}
            for sid, snap in project.keyed_scenes.items()
        },
        "bindings": [_binding_to_doc(b) for b in project.bindings],
        "behaviors": {bid: _behavior_to_doc(b)
                      for bid, b in project.behaviors.items()},
        "settings": _settings_to_doc(project.settings),
    }


def doc_to_project(doc: dict) -> Project:
    version = doc.get("version")
    if version != PROJECT_VERSION:
        raise VersionMismatch(
            f"project version {version!r} unsupported (expected {PROJECT_VERSION})"
        )
    state_sets = []
    for s in doc.get("stateSets", []):
        sset = StateSet(set_id=s["setId"], kind=s["kind"],
                        param_start=s.get("paramStart", 0.0),
                        param_end=s.get("paramEnd", 1.0))
        for c in sorted(s["states"], key=lambda c: c["ordinal"]):
            cls = sset.add_state(c["stateId"], c.get("name"))
            if cls.ordinal != c["ordinal"]:
                raise ValidationError([
                    f"state {c['stateId']!r} ordinal {c['ordinal']} not contiguous"
                ])
        state_sets.append(sset)
    project = Project(
        name=doc.get("name", "untitled"),
        version=version,
        state_sets=state_sets,
        training_manifest={sid: list(p)
                           for sid, p in doc.get("trainingManifest", {}).items()},
        embedding_config=doc.get("embeddingConfig", EMBEDDING_CONFIG),
        model=None if doc.get("model") is None else model_from_doc(doc["model"]),
        scene_objects={oid: _object_from_doc(o)
                       for oid, o in doc.get("sceneObjects", {}).items()},
        keyed_scenes={
            sid: {oid: _state_from_doc(st) for oid, st in snap.items()}
            for sid, snap in doc.get("keyedScenes", {}).items()
        },
        bindings=[_binding_from_doc(b) for b in doc.get("bindings", [])],
        behaviors={bid: _behavior_from_doc(b)
                   for bid, b in doc.get("behaviors", {}).items()},
        settings=_settings_from_doc(doc["settings"]),
    )
    return project


# -- validation ---------------------------------------------------------------

def validate_project(project: Project) -> list[str]:
    problems: list[str] = []
    state_ids: list[str] = []
    for sset in project.state_sets:
        ordinals = [c.ordinal for c in sset.states]
        if ordinals != list(range(len(ordinals))):
            problems.append(f"state set {sset.set_id!r} ordinals not contiguous")
        if sset.kind == "continuous" and len(sset.states) < 2:
            problems.append(
                f"continuous state set {sset.set_id!r} needs at least 2 states"
            )
        state_ids.extend(c.state_id for c in sset.states)
    if len(set(state_ids)) != len(state_ids):
        problems.append("state ids are not globally unique")
    known_states = set(state_ids)
    known_assets = set(project.settings.assets)
    known_behaviors = set(project.behaviors)
    known_objects = set(project.scene_objects)
    known_planes = set(project.settings.planes)

    for sid in project.training_manifest:
        if sid not in known_states:
            problems.append(f"training manifest references unknown state {sid!r}")
    for sid, snap in project.keyed_scenes.items():
        if sid not in known_states:
            problems.append(f"keyed scene references unknown state {sid!r}")
        for oid in snap:
            if oid not in known_objects:
                problems.append(
                    f"keyed scene for {sid!r} references unknown object {oid!r}"
                )
    for binding in project.bindings:
        problems.extend(binding_problems(binding, known_states, known_assets,
                                         known_behaviors))
    for bid, behavior in project.behaviors.items():
        if behavior.object_id not in known_objects:
            problems.append(
                f"behavior {bid!r} references unknown object {behavior.object_id!r}"
            )
    known_trackers = set(project.settings.trackers)
    for oid, obj in project.scene_objects.items():
        if obj.asset_ref not in known_assets:
            problems.append(f"object {oid!r} references unknown asset {obj.asset_ref!r}")
        if isinstance(obj.anchor, SurfaceAnchor) and obj.anchor.plane_id not in known_planes:
            problems.append(
                f"object {oid!r} anchored to unknown plane {obj.anchor.plane_id!r}"
            )
        if isinstance(obj.anchor, ObjectAnchor) and obj.anchor.tracker_id not in known_trackers:
            problems.append(
                f"object {oid!r} anchored to unknown tracker {obj.anchor.tracker_id!r}"
            )
        if isinstance(obj.anchor, ImageAnchor) and obj.anchor.template_ref not in known_assets:
            problems.append(
                f"object {oid!r} anchored to unknown template asset {obj.anchor.template_ref!r}"
            )
    if project.model is not None:
        for cls in project.model.classes:
            if cls.state_id not in known_states:
                problems.append(
                    f"model class references unknown state {cls.state_id!r}"
                )
        if project.model.embedding_dim <= 0:
            problems.append("model embedding dimension must be positive")
    return problems


# -- save / load --------------------------------------------------------------

def save_project(project: Project, path) -> None:
    """Write the canonical document plus any pending sample frames."""
    problems = validate_project(project)
    if problems:
        raise ValidationError(problems)
    path = os.fspath(path)
    base = os.path.dirname(os.path.abspath(path))
    os.makedirs(base, exist_ok=True)

    # flush pending captures into samples/<stateId>/, appending to the manifest
    for state_id, frames in project.sample_frames.items():
        if not frames:
            continue
        os.makedirs(os.path.join(base, SAMPLES_DIRNAME, state_id), exist_ok=True)
        paths = project.training_manifest.setdefault(state_id, [])
        start = len(paths)
        for i, frame in enumerate(frames):
            rel = f"{SAMPLES_DIRNAME}/{state_id}/{start + i:04d}.ppm"
            with open(os.path.join(base, rel.replace('/', os.sep)), "wb") as fh:
                fh.write(encode_ppm(frame))
            paths.append(rel)
    project.sample_frames = {}

    text = dumps_canonical(project_to_doc(project))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def load_project(path) -> Project:
    path = os.fspath(path)
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    if not isinstance(doc, dict):
        raise ValidationError(["project document must be a JSON object"])
    project = doc_to_project(doc)
    problems = validate_project(project)
    if problems:
        raise ValidationError(problems)
    return project
