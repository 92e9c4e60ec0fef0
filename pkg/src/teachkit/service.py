"""Local HTTP service orchestrating the full loop: frame ingestion, training
jobs, live classification, scene authoring, and event broadcast.

One session owns all mutable state behind a lock; training runs on a worker
thread and swaps the finished model in atomically, so the live pipeline never
blocks on training. Events go out as newline-delimited JSON with
nondecreasing session-relative timestamps; scene snapshots are produced by a
wall-clock ticker (default 30 Hz) while the session is in test mode.

All payloads live under /v1/. Frames arrive as image/png or as
application/octet-stream with X-Frame-Width/X-Frame-Height headers.
"""

from __future__ import annotations

import itertools
import json
import mimetypes
import os
import queue
import threading
import time
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from . import classify as heads
from .classify import SmootherConfig, TrainingSet
from .corpus import load_frame
from .errors import (
    BadDimensions,
    EmptyClass,
    MalformedImage,
    NoModel,
    ParseError,
    TeachkitError,
    UnknownState,
    UnsupportedFormat,
    ValidationError,
    VersionMismatch,
)
from .pipeline import LivePipeline
from .project import (
    AssetInfo,
    Project,
    doc_to_project,
    dumps_compact,
    load_project,
    new_project,
    project_to_doc,
    save_keyed_scene,
    save_project,
    validate_project,
    _state_from_doc,
)
from .states import StateSet
from .vision import decode_frame, embed

DEFAULT_LISTEN = "127.0.0.1:7423"
_CLOSE = object()  # stream close sentinel


class BadMode(TeachkitError):
    pass


class TrainingInProgress(TeachkitError):
    pass


class Session:
    """All mutable state of one authoring/testing session."""

    _ids = itertools.count()

    def __init__(self, project: Project | None = None):
        self.session_id = f"session{next(Session._ids)}"
        self.lock = threading.RLock()
        self.project = project if project is not None else new_project()
        self.training_set = TrainingSet()
        for cls in self.project.all_states():
            self.training_set.add_class(cls.state_id, cls.name)
        self.mode = "author"
        self.capture_state_id: str | None = None
        self.pipeline: LivePipeline | None = None
        self._t0 = time.monotonic()
        self._last_event_t = 0.0
        self._subscribers: list[queue.SimpleQueue] = []
        self.event_log: list[dict] = []
        self.job = {"running": False, "progress": 0.0, "head": None,
                    "startedMs": None, "error": None}
        self._train_thread: threading.Thread | None = None
        self._ticker: threading.Thread | None = None
        self._ticker_stop = threading.Event()
        self._state_seq = itertools.count()
        self._object_seq = itertools.count()
        self._set_seq = itertools.count()

    # -- clock and events --------------------------------------------------

    def now_ms(self) -> float:
        return (time.monotonic() - self._t0) * 1000.0

    def emit(self, event: dict):
        with self.lock:
            t = max(float(event.get("t", self.now_ms())), self._last_event_t)
            event["t"] = t
            self._last_event_t = t
            self.event_log.append(event)
            for q in self._subscribers:
                q.put(event)

    def subscribe(self) -> queue.SimpleQueue:
        q = queue.SimpleQueue()
        with self.lock:
            self._subscribers.append(q)
        return q

    def unsubscribe(self, q):
        with self.lock:
            if q in self._subscribers:
                self._subscribers.remove(q)

    def _close_streams(self):
        for q in list(self._subscribers):
            q.put(_CLOSE)

    # -- authoring ----------------------------------------------------------

    def replace_project(self, project: Project):
        with self.lock:
            if self.job["running"]:
                raise TrainingInProgress("cannot replace project while training")
            self._exit_test_mode()
            self.project = project
            self.training_set = TrainingSet()
            for cls in project.all_states():
                tcls = self.training_set.add_class(cls.state_id, cls.name)
                tcls.sample_count = len(project.training_manifest.get(cls.state_id, []))
            self.mode = "author"

    def _default_state_set(self) -> StateSet:
        if not self.project.state_sets:
            self.project.state_sets.append(
                StateSet(set_id=f"set{next(self._set_seq)}")
            )
        return self.project.state_sets[0]

    def create_state_set(self, kind: str, param_start=0.0, param_end=1.0) -> StateSet:
        with self.lock:
            sset = StateSet(set_id=f"set{next(self._set_seq)}", kind=kind,
                            param_start=param_start, param_end=param_end)
            self.project.state_sets.append(sset)
            return sset

    def create_state(self, name: str | None = None, set_id: str | None = None):
        with self.lock:
            if set_id is None:
                sset = self._default_state_set()
            else:
                sset = next((s for s in self.project.state_sets
                             if s.set_id == set_id), None)
                if sset is None:
                    raise UnknownState(set_id)
            state_id = f"state{next(self._state_seq)}"
            cls = sset.add_state(state_id, name or state_id)
            self.training_set.add_class(state_id, cls.name)
            return cls, sset

    def add_sample(self, state_id: str, frame) -> tuple[str, int]:
        with self.lock:
            emb = embed(frame)
            sample_id = self.training_set.add_sample(state_id, emb)
            self.project.sample_frames.setdefault(state_id, []).append(frame)
            return sample_id, self.training_set.class_for(state_id).sample_count

    def create_object(self, doc: dict) -> str:
        from .project import _object_from_doc

        with self.lock:
            object_id = doc.get("objectId") or f"obj{next(self._object_seq)}"
            doc = dict(doc)
            doc.setdefault("objectId", object_id)
            doc["objectId"] = object_id
            doc.setdefault("assetKind", "model3d")
            doc.setdefault("anchor", {"kind": "spatial", "position": [0.0, 0.0, 1.0]})
            doc.setdefault("transform", {"position": [0.0, 0.0, 0.0],
                                         "rotation": [1.0, 0.0, 0.0, 0.0],
                                         "scale": [1.0, 1.0, 1.0]})
            doc.setdefault("visible", True)
            doc.setdefault("opacity", 1.0)
            obj = _object_from_doc(doc)
            if obj.asset_ref not in self.project.settings.assets:
                self.project.settings.assets[obj.asset_ref] = AssetInfo(
                    kind=obj.asset_kind)
            self.project.scene_objects[object_id] = obj
            return object_id

    # -- training ------------------------------------------------------------

    def start_training(self, head: str = "auto", hyperparams: dict | None = None):
        hp = hyperparams or {}
        with self.lock:
            if self.job["running"]:
                raise TrainingInProgress("a training job is already running")
            self.training_set.require_samples()  # EmptyClass surfaces here
            if head == "auto":
                head = "softmax" if len(self.training_set.classes) >= 2 else "knn"
            if head not in ("softmax", "knn"):
                raise TeachkitError(f"unknown head {head!r}")
            # frozen copy: live captures don't race the worker
            frozen = TrainingSet(self.training_set.embedding_dim)
            for cls in self.training_set.classes:
                frozen.add_class(cls.state_id, cls.name)
                for vec in self.training_set.samples[cls.state_id]:
                    frozen.samples[cls.state_id].append(vec)
                frozen.class_for(cls.state_id).sample_count = cls.sample_count
            started = self.now_ms()
            self.job = {"running": True, "progress": 0.0, "head": head,
                        "startedMs": started, "error": None}
        self.emit({"type": "trainStatus", "t": started, "progress": 0.0,
                   "running": True, "head": head})
        self._train_thread = threading.Thread(
            target=self._train_worker, args=(frozen, head, hp), daemon=True
        )
        self._train_thread.start()
        return head

    def _train_worker(self, tset: TrainingSet, head: str, hp: dict):
        last_bucket = [0]

        def progress(p):
            with self.lock:
                self.job["progress"] = p
            bucket = int(p * 10)
            if bucket > last_bucket[0] and p < 1.0:
                last_bucket[0] = bucket
                self.emit({"type": "trainStatus", "t": self.now_ms(),
                           "progress": round(p, 3), "running": True, "head": head})

        try:
            if head == "knn":
                model = heads.train_knn(tset, k=int(hp.get("k", heads.DEFAULT_KNN_K)),
                                        trained_at_ms=self.now_ms())
            else:
                model = heads.train_softmax(
                    tset,
                    lr=float(hp.get("lr", heads.DEFAULT_LR)),
                    epochs=int(hp.get("epochs", heads.DEFAULT_EPOCHS)),
                    l2=float(hp.get("l2", heads.DEFAULT_L2)),
                    trained_at_ms=self.now_ms(),
                    progress=progress,
                )
        except TeachkitError as exc:
            with self.lock:
                self.job.update(running=False, error=str(exc))
            self.emit({"type": "trainStatus", "t": self.now_ms(), "progress": 0.0,
                       "running": False, "head": head, "error": str(exc)})
            return
        with self.lock:
            self.project.model = model  # atomic swap: readers see old or new
            self.job.update(running=False, progress=1.0)
        self.emit({"type": "trainStatus", "t": self.now_ms(), "progress": 1.0,
                   "running": False, "head": head})

    def classify_frame(self, frame) -> dict:
        model = self.project.model  # atomic reference read
        if model is None:
            raise NoModel("no trained model yet")
        pred = heads.predict(model, embed(frame), timestamp_ms=self.now_ms())
        return {
            "probs": [float(p) for p in pred.probabilities],
            "top": pred.top_state_id,
            "confidence": float(pred.top_confidence),
            "t": pred.timestamp_ms,
        }

    # -- modes and live loop ---------------------------------------------

    def set_mode(self, mode: str, state_id: str | None = None):
        with self.lock:
            if mode not in ("author", "capture", "test"):
                raise TeachkitError(f"unknown mode {mode!r}")
            was_streaming = self.mode in ("capture", "test")
            self._exit_test_mode()
            if mode == "capture":
                if state_id is None:
                    raise TeachkitError("capture mode needs a stateId")
                if state_id not in self.project.state_ids():
                    raise UnknownState(state_id)
                self.capture_state_id = state_id
            else:
                self.capture_state_id = None
            if mode == "test":
                if self.project.model is None:
                    raise NoModel("train a model before entering test mode")
                self.pipeline = LivePipeline(self.project,
                                             templates=self._load_templates())
                self._start_ticker()
            if was_streaming and mode == "author":
                self._close_streams()
            self.mode = mode

    def _load_templates(self) -> dict:
        templates = {}
        for aid, asset in self.project.settings.assets.items():
            if asset.kind == "image" and asset.path and os.path.isfile(asset.path):
                try:
                    templates[aid] = load_frame(asset.path)
                except TeachkitError:
                    continue
        return templates

    def _exit_test_mode(self):
        if self._ticker is not None:
            self._ticker_stop.set()
            self._ticker = None
        self.pipeline = None

    def _start_ticker(self):
        self._ticker_stop = threading.Event()
        stop = self._ticker_stop

        def run():
            period = 1.0 / self.project.settings.tick_hz
            deadline = time.monotonic() + period
            while not stop.wait(max(0.0, deadline - time.monotonic())):
                deadline += period
                with self.lock:
                    if self.pipeline is None:
                        break
                    events = self.pipeline.tick(self.now_ms())
                for event in events:
                    self.emit(event)

        self._ticker = threading.Thread(target=run, daemon=True)
        self._ticker.start()

    def feed_frame(self, frame) -> dict:
        with self.lock:
            if self.mode != "test" or self.pipeline is None:
                raise BadMode("POST /frames requires test mode")
            events = self.pipeline.feed_frame(frame, self.now_ms())
        prediction = None
        state_changed = None
        for event in events:
            self.emit(event)
            if event["type"] == "prediction":
                prediction = event
            elif event["type"] == "stateChanged":
                state_changed = event
        return {"prediction": prediction, "stateChanged": state_changed}

    def ingest_keypoint_line(self, line: str):
        from .tracking import ingest_keypoints

        kp = ingest_keypoints(line)
        with self.lock:
            if self.pipeline is not None:
                self.pipeline.ingest_keypoints(kp)
        return kp

    def shutdown(self):
        with self.lock:
            self._exit_test_mode()
            self._close_streams()


ERROR_CODES = {
    UnknownState: (404, "UnknownState"),
    NoModel: (409, "NoModel"),
    TrainingInProgress: (409, "TrainingInProgress"),
    BadMode: (409, "BadMode"),
    EmptyClass: (400, "EmptyClass"),
    ValidationError: (400, "ValidationError"),
    VersionMismatch: (400, "VersionMismatch"),
    MalformedImage: (400, "MalformedImage"),
    UnsupportedFormat: (400, "UnsupportedFormat"),
    BadDimensions: (400, "BadDimensions"),
    ParseError: (400, "ParseError"),
}


def _error_payload(exc: TeachkitError) -> tuple[int, dict]:
    for etype, (code, name) in ERROR_CODES.items():
        if isinstance(exc, etype):
            payload = {"error": name, "detail": str(exc)}
            if isinstance(exc, EmptyClass):
                payload["stateId"] = exc.state_id
            if isinstance(exc, ValidationError):
                payload["problems"] = exc.problems
            return code, payload
    return 400, {"error": type(exc).__name__, "detail": str(exc)}


class TeachServer(ThreadingHTTPServer):
    daemon_threads = True

    def __init__(self, addr, static_dir=None, project: Project | None = None):
        super().__init__(addr, Handler)
        self.static_dir = static_dir
        self.sessions: dict[str, Session] = {}
        self.default_session_id: str | None = None
        if project is not None:
            self.create_session(project)

    def create_session(self, project: Project | None = None) -> Session:
        session = Session(project)
        self.sessions[session.session_id] = session
        self.default_session_id = session.session_id
        return session

    def get_session(self, session_id: str | None) -> Session:
        sid = session_id or self.default_session_id
        if sid is None or sid not in self.sessions:
            raise UnknownState(sid or "<no session>")
        return self.sessions[sid]

    def shutdown(self):
        for session in self.sessions.values():
            session.shutdown()
        super().shutdown()


class Handler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"
    server: TeachServer

    # -- plumbing -----------------------------------------------------------

    def log_message(self, fmt, *args):
        pass

    def _cors(self):
        self.send_header("Access-Control-Allow-Origin", "*")
        self.send_header("Access-Control-Allow-Methods", "GET, POST, PUT, OPTIONS")
        self.send_header("Access-Control-Allow-Headers",
                         "Content-Type, X-Frame-Width, X-Frame-Height, "
                         "X-Frame-Timestamp-Ms, X-Session")

    def _respond(self, code: int, payload: dict):
        body = (dumps_compact(payload) + "\n").encode("utf-8")
        self.send_response(code)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self._cors()
        self.end_headers()
        self.wfile.write(body)

    def _body(self) -> bytes:
        length = int(self.headers.get("Content-Length") or 0)
        return self.rfile.read(length) if length else b""

    def _json_body(self) -> dict:
        raw = self._body()
        if not raw:
            return {}
        try:
            doc = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise ParseError(f"bad JSON body: {exc}")
        if not isinstance(doc, dict):
            raise ParseError("JSON body must be an object")
        return doc

    def _frame_body(self):
        ctype = (self.headers.get("Content-Type") or "").split(";")[0].strip()
        data = self._body()
        t_ms = float(self.headers.get("X-Frame-Timestamp-Ms") or 0.0)
        if ctype == "image/png":
            return decode_frame(data, "png", timestamp_ms=t_ms)
        if ctype in ("image/x-portable-pixmap", "image/x-portable-anymap"):
            return decode_frame(data, "ppm_p6", timestamp_ms=t_ms)
        if ctype == "application/octet-stream":
            try:
                w = int(self.headers["X-Frame-Width"])
                h = int(self.headers["X-Frame-Height"])
            except (KeyError, ValueError, TypeError):
                raise BadDimensions(
                    "raw frames need X-Frame-Width and X-Frame-Height headers"
                )
            return decode_frame(data, "raw_rgb", width=w, height=h, timestamp_ms=t_ms)
        raise UnsupportedFormat(f"unsupported frame content type {ctype!r}")

    def _session(self) -> Session:
        return self.server.get_session(self.headers.get("X-Session"))

    # -- HTTP verbs -----------------------------------------------------------

    def do_OPTIONS(self):
        self.send_response(204)
        self._cors()
        self.send_header("Content-Length", "0")
        self.end_headers()

    def do_GET(self):
        self._dispatch("GET")

    def do_POST(self):
        self._dispatch("POST")

    def do_PUT(self):
        self._dispatch("PUT")

    def _dispatch(self, verb: str):
        path = self.path.split("?", 1)[0]
        try:
            if path.startswith("/v1/"):
                self._api(verb, path[3:])
            elif verb == "GET":
                self._static(path)
            else:
                self._respond(404, {"error": "NotFound", "detail": path})
        except TeachkitError as exc:
            code, payload = _error_payload(exc)
            self._respond(code, payload)
        except (BrokenPipeError, ConnectionResetError):
            pass
        except Exception as exc:  # noqa: BLE001 - surface as 500, keep serving
            self._respond(500, {"error": "Internal", "detail": str(exc)})

    # -- API routes -----------------------------------------------------------

    def _api(self, verb: str, path: str):
        parts = [p for p in path.split("/") if p]
        if verb == "POST" and parts == ["project"]:
            body = self._json_body()
            session = self.server.create_session(new_project(body.get("name", "untitled")))
            self._respond(200, {"sessionId": session.session_id,
                                "project": project_to_doc(session.project)})
        elif verb == "GET" and parts == ["project"]:
            session = self._session()
            with session.lock:
                self._respond(200, project_to_doc(session.project))
        elif verb == "PUT" and parts == ["project"]:
            session = self._session()
            project = doc_to_project(self._json_body())
            problems = validate_project(project)
            if problems:
                raise ValidationError(problems)
            session.replace_project(project)
            self._respond(200, {"ok": True})
        elif verb == "POST" and parts == ["project", "save"]:
            session = self._session()
            body = self._json_body()
            path_out = body.get("path")
            if not path_out:
                raise ParseError("missing `path`")
            with session.lock:
                save_project(session.project, path_out)
            self._respond(200, {"path": os.path.abspath(path_out)})
        elif verb == "POST" and parts == ["project", "load"]:
            body = self._json_body()
            path_in = body.get("path")
            if not path_in:
                raise ParseError("missing `path`")
            project = load_project(path_in)
            session = self._session()
            session.replace_project(project)
            self._respond(200, {"sessionId": session.session_id,
                                "project": project_to_doc(project)})
        elif verb == "POST" and parts == ["statesets"]:
            body = self._json_body()
            session = self._session()
            sset = session.create_state_set(body.get("kind", "discrete"),
                                            body.get("paramStart", 0.0),
                                            body.get("paramEnd", 1.0))
            self._respond(200, {"setId": sset.set_id, "kind": sset.kind})
        elif verb == "POST" and parts == ["states"]:
            body = self._json_body()
            session = self._session()
            cls, sset = session.create_state(body.get("name"), body.get("setId"))
            self._respond(200, {"stateId": cls.state_id, "name": cls.name,
                                "ordinal": cls.ordinal, "setId": sset.set_id})
        elif verb == "POST" and len(parts) == 3 and parts[0] == "states" \
                and parts[2] == "samples":
            session = self._session()
            frame = self._frame_body()
            sample_id, count = session.add_sample(parts[1], frame)
            self._respond(200, {"sampleId": sample_id, "sampleCount": count})
        elif verb == "POST" and parts == ["train"]:
            body = self._json_body()
            session = self._session()
            head = session.start_training(body.get("head", "auto"),
                                          body.get("hyperparams"))
            self._respond(202, {"status": "started", "head": head})
        elif verb == "GET" and parts == ["train", "status"]:
            session = self._session()
            with session.lock:
                job = dict(session.job)
                job["modelReady"] = session.project.model is not None
            self._respond(200, job)
        elif verb == "POST" and parts == ["classify"]:
            session = self._session()
            frame = self._frame_body()
            self._respond(200, session.classify_frame(frame))
        elif verb == "POST" and parts == ["objects"]:
            session = self._session()
            object_id = session.create_object(self._json_body())
            self._respond(200, {"objectId": object_id})
        elif verb == "GET" and parts == ["objects"]:
            session = self._session()
            with session.lock:
                doc = project_to_doc(session.project)["sceneObjects"]
            self._respond(200, doc)
        elif verb == "POST" and len(parts) == 2 and parts[0] == "scenes":
            session = self._session()
            body = self._json_body()
            snapshots = {oid: _state_from_doc(st)
                         for oid, st in body.get("snapshots", {}).items()}
            with session.lock:
                scene = save_keyed_scene(session.project, parts[1], snapshots)
            self._respond(200, {"stateId": scene.state_id,
                                "objects": len(scene.snapshots)})
        elif verb == "POST" and parts == ["mode"]:
            body = self._json_body()
            session = self._session()
            session.set_mode(body.get("mode", ""), body.get("stateId"))
            self._respond(200, {"mode": session.mode})
        elif verb == "POST" and parts == ["frames"]:
            session = self._session()
            frame = self._frame_body()
            self._respond(200, session.feed_frame(frame))
        elif verb == "POST" and parts == ["keypoints"]:
            session = self._session()
            body = self._body().decode("utf-8")
            if self.headers.get("Content-Type", "").startswith("application/json"):
                body = json.loads(body).get("line", "")
            kp = session.ingest_keypoint_line(body)
            self._respond(200, {"t": kp.timestamp_ms, "points": len(kp.points)})
        elif verb == "GET" and parts == ["events"]:
            self._stream_events(self._session())
        elif verb == "GET" and parts == ["health"]:
            self._respond(200, {"ok": True})
        else:
            self._respond(404, {"error": "NotFound", "detail": self.path})

    # -- event stream -----------------------------------------------------

    def _stream_events(self, session: Session):
        if session.mode not in ("capture", "test"):
            raise BadMode("event stream is available in capture or test mode")
        q = session.subscribe()
        try:
            self.send_response(200)
            self.send_header("Content-Type", "application/x-ndjson")
            self.send_header("Cache-Control", "no-store")
            self.send_header("Connection", "close")
            self._cors()
            self.end_headers()
            while True:
                try:
                    event = q.get(timeout=0.25)
                except queue.Empty:
                    continue
                if event is _CLOSE:
                    break
                self.wfile.write((dumps_compact(event) + "\n").encode("utf-8"))
                self.wfile.flush()
        except (BrokenPipeError, ConnectionResetError):
            pass
        finally:
            session.unsubscribe(q)

    # -- static studio files -----------------------------------------------

    def _static(self, path: str):
        root = self.server.static_dir
        if root is None:
            self._respond(404, {"error": "NotFound",
                                "detail": "no static dir configured"})
            return
        rel = path.lstrip("/") or "index.html"
        full = os.path.realpath(os.path.join(root, rel))
        if not full.startswith(os.path.realpath(root)) or not os.path.isfile(full):
            self._respond(404, {"error": "NotFound", "detail": path})
            return
        ctype = mimetypes.guess_type(full)[0] or "application/octet-stream"
        with open(full, "rb") as fh:
            body = fh.read()
        self.send_response(200)
        self.send_header("Content-Type", ctype)
        self.send_header("Content-Length", str(len(body)))
        self._cors()
        self.end_headers()
        self.wfile.write(body)


def parse_listen(listen: str) -> tuple[str, int]:
    host, _, port = listen.rpartition(":")
    if not host or not port.isdigit():
        raise TeachkitError(f"bad --listen value {listen!r} (want host:port)")
    return host, int(port)


def make_server(listen: str = DEFAULT_LISTEN, project: Project | None = None,
                static_dir=None) -> TeachServer:
    return TeachServer(parse_listen(listen), static_dir=static_dir, project=project)


def run_server(listen: str = DEFAULT_LISTEN, project_path=None, static_dir=None):
    project = load_project(project_path) if project_path else None
    server = make_server(listen, project=project, static_dir=static_dir)
    if not server.sessions:
        server.create_session()
    host, port = server.server_address[:2]
    print(f"teach service listening on http://{host}:{port}/v1/")
    if static_dir:
        print(f"studio served from {static_dir} at http://{host}:{port}/")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.shutdown()
