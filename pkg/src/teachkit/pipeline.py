"""The live loop shared by the service's test mode and offline replay:
embed -> predict -> smooth -> state logic -> scene tick.

The pipeline is clock-agnostic: callers supply timestamps (wall clock in the
service, synthetic 30 Hz in replay), so the same corpus produces the same
decision events either way. All event payloads are plain dicts ready for
newline-delimited JSON.
"""

from __future__ import annotations

from .classify import SmootherState, predict, smooth
from .errors import BehindCamera, NoModel, RayParallel
from .project import Project
from .scene import AnchorContext, SceneRuntime, WorldObject
from .states import (
    ApplyKeyedScene,
    PlayAudio,
    RunBehavior,
    SetParameterTarget,
    StateRuntime,
)
from .tracking import KeypointFrame, lift_to_plane, locate_template, track_blob
from .vision import Embedding, Frame, embed


def world_object_doc(obj: WorldObject) -> dict:
    return {
        "id": obj.object_id,
        "worldTransform": {
            "position": obj.position.tolist(),
            "rotation": obj.rotation.tolist(),
            "scale": obj.scale.tolist(),
        },
        "visible": obj.visible,
        "opacity": float(obj.opacity),
        "stale": obj.stale,
    }


class LivePipeline:
    """Owns the smoother, counters, and scene runtime for one test session."""

    def __init__(self, project: Project, templates: dict[str, Frame] | None = None):
        if project.model is None:
            raise NoModel("project has no trained model")
        self.project = project
        self.model = project.model
        self.smoother_cfg = project.settings.smoother
        self.smoother = SmootherState()
        self.state_runtime = StateRuntime(project.state_sets, project.bindings)
        self.scene = SceneRuntime(
            objects=project.scene_objects,
            behaviors=project.behaviors,
            keyed_scenes=project.keyed_scenes,
            tween_duration_ms=project.settings.tween_duration_ms,
        )
        self.templates = dict(templates or {})
        self._ctx = AnchorContext(
            camera=project.settings.camera,
            planes=dict(project.settings.planes),
        )
        self._needed_trackers = {
            obj.anchor.tracker_id
            for obj in project.scene_objects.values()
            if hasattr(obj.anchor, "tracker_id")
        }
        self._needed_templates = {
            obj.anchor.template_ref
            for obj in project.scene_objects.values()
            if hasattr(obj.anchor, "template_ref")
        }

    # -- anchor sources -------------------------------------------------

    def _update_tracking(self, frame: Frame):
        settings = self.project.settings
        plane = settings.planes.get(settings.tracking_plane_id)
        for tid in self._needed_trackers:
            tracker = settings.trackers.get(tid)
            hit = track_blob(frame, tracker) if tracker is not None else None
            if hit is None or plane is None:
                self._ctx.tracker_points.pop(tid, None)
                continue
            try:
                point = lift_to_plane(settings.camera, plane, hit.centroid)
            except (RayParallel, BehindCamera):
                self._ctx.tracker_points.pop(tid, None)
                continue
            self._ctx.tracker_points[tid] = point
        for ref in self._needed_templates:
            template = self.templates.get(ref)
            match = locate_template(frame, template) if template is not None else None
            if match is None:
                self._ctx.template_matches.pop(ref, None)
            else:
                self._ctx.template_matches[ref] = match

    def ingest_keypoints(self, kp_frame: KeypointFrame):
        self._ctx.keypoints = kp_frame

    # -- frame and clock feeds -------------------------------------------

    def feed_frame(self, frame: Frame, t_ms: float) -> list[dict]:
        self._update_tracking(frame)
        return self.feed_embedding(embed(frame), t_ms)

    def feed_embedding(self, emb: Embedding, t_ms: float) -> list[dict]:
        pred = predict(self.model, emb, timestamp_ms=t_ms)
        events = [{
            "type": "prediction",
            "t": float(t_ms),
            "probs": [float(p) for p in pred.probabilities],
            "top": pred.top_state_id,
            "confidence": float(pred.top_confidence),
        }]
        state_event = smooth(pred, self.smoother, self.smoother_cfg)
        if state_event is not None:
            actions = self.state_runtime.on_state_event(state_event)
            self.scene.apply_transition(state_event.state_id, t_ms)
            param = None
            for action in actions:
                if isinstance(action, SetParameterTarget):
                    param = float(action.value)
                    self.scene.parameter = param
                elif isinstance(action, ApplyKeyedScene):
                    self.scene.apply_transition(action.state_id, t_ms)
                elif isinstance(action, PlayAudio):
                    self.scene.queue_audio(action.asset_id)
                elif isinstance(action, RunBehavior):
                    self.scene.set_behavior_active(action.behavior_id, action.on)
            events.append({
                "type": "stateChanged",
                "t": float(t_ms),
                "from": state_event.from_state_id,
                "to": state_event.state_id,
                "counter": self.state_runtime.counter(state_event.state_id),
                "param": param,
            })
        return events

    def tick(self, t_ms: float) -> list[dict]:
        """Advance the scene to t_ms; emits sceneSnapshot plus any queued
        playAudio events. No-op if t_ms has not advanced."""
        dt = t_ms - self.scene.now_ms
        if dt <= 0:
            return []
        snapshot_states, audio = self.scene.tick(dt)
        world = self.scene.world_snapshot(self._ctx)
        events = [{
            "type": "sceneSnapshot",
            "t": float(t_ms),
            "objects": [world_object_doc(o) for o in world],
        }]
        for asset_id in audio:
            events.append({"type": "playAudio", "t": float(t_ms), "assetId": asset_id})
        return events
