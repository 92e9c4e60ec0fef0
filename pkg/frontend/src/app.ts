// Studio wiring: webcam, the three panels (capture / author / test), and the
// event stream. All decisions (predictions, smoothing, tweens, counters)
// happen in the engine; this file only uploads frames and draws payloads.

import { TeachClient, type ObjectStateDoc, type ProjectDoc } from "./api.js";
import { SceneEditor } from "./authoring.js";
import { FrameUploader, videoGrabber } from "./capture.js";
import { EventStream } from "./events.js";
import { applyEvent, drainAudio, initialLiveState, type LiveState } from "./livestate.js";
import { projectPoint } from "./projection.js";

const client = new TeachClient("/v1");
let project: ProjectDoc | null = null;
let live: LiveState = initialLiveState();
let editor: SceneEditor | null = null;
let editingStateId: string | null = null;
let captureTimer: number | null = null;
let testTimer: number | null = null;
let eventStream: EventStream | null = null;

const $ = <T extends HTMLElement>(id: string): T =>
  document.getElementById(id) as T;

const video = () => $<HTMLVideoElement>("camera");

function setStatus(text: string): void {
  $("status").textContent = text;
}

async function refreshProject(): Promise<void> {
  project = await client.getProject();
  renderStateRows();
  renderPalette();
  if (editingStateId) openStateScene(editingStateId);
}

// -- capture panel ---------------------------------------------------------

function states(): { stateId: string; name: string }[] {
  if (!project) return [];
  return project.stateSets.flatMap((s) => s.states);
}

function renderStateRows(): void {
  const rows = $("state-rows");
  rows.innerHTML = "";
  for (const st of states()) {
    const row = document.createElement("div");
    row.className = "state-row";
    row.innerHTML = `
      <span class="state-name">${st.name}</span>
      <span class="sample-count" id="count-${st.stateId}">0</span>
      <button class="add-data" data-state="${st.stateId}">Add Data (hold)</button>
      <button class="save-scene" data-state="${st.stateId}">Save scene</button>
      <span class="thumbs" id="thumbs-${st.stateId}"></span>`;
    rows.appendChild(row);
  }
  for (const btn of rows.querySelectorAll<HTMLButtonElement>(".add-data")) {
    const stateId = btn.dataset.state!;
    btn.addEventListener("mousedown", () => startCapture(stateId));
    btn.addEventListener("touchstart", (e) => {
      e.preventDefault();
      startCapture(stateId);
    });
    for (const evt of ["mouseup", "mouseleave", "touchend"]) {
      btn.addEventListener(evt, stopCapture);
    }
  }
  for (const btn of rows.querySelectorAll<HTMLButtonElement>(".save-scene")) {
    btn.addEventListener("click", () => saveScene(btn.dataset.state!));
  }
}

function pushThumb(stateId: string): void {
  const strip = $(`thumbs-${stateId}`);
  const vid = video();
  const canvas = document.createElement("canvas");
  canvas.width = 48;
  canvas.height = 36;
  canvas.getContext("2d")?.drawImage(vid, 0, 0, 48, 36);
  strip.prepend(canvas);
  while (strip.childElementCount > 5) strip.lastElementChild?.remove();
}

function startCapture(stateId: string): void {
  stopCapture();
  void client.setMode("capture", stateId).catch(() => {});
  const fps = project?.settings.captureFps ?? 15;
  const uploader = new FrameUploader(videoGrabber(video()), async (frame) => {
    const result = await client.addSample(stateId, frame.pixels, frame.width,
                                          frame.height);
    $(`count-${stateId}`).textContent = String(result.sampleCount);
    pushThumb(stateId);
  });
  captureTimer = window.setInterval(() => void uploader.tick(), 1000 / fps);
}

function stopCapture(): void {
  if (captureTimer !== null) {
    window.clearInterval(captureTimer);
    captureTimer = null;
  }
}

async function trainNow(): Promise<void> {
  setStatus("training...");
  try {
    await client.train("auto");
  } catch (err) {
    setStatus(String(err));
    return;
  }
  const poll = window.setInterval(async () => {
    const status = await client.trainStatus();
    const bar = $<HTMLProgressElement>("train-progress");
    bar.value = status.progress;
    if (!status.running) {
      window.clearInterval(poll);
      setStatus(status.error ? `training failed: ${status.error}`
                             : "model ready");
    }
  }, 150);
}

// -- author panel -----------------------------------------------------------

function renderPalette(): void {
  const palette = $("palette");
  palette.innerHTML = "";
  const kinds: [string, string][] = [
    ["tree", "model3d"], ["ball", "model3d"], ["arrow", "model3d"],
    ["label", "text2d"],
  ];
  for (const [ref, kind] of kinds) {
    const btn = document.createElement("button");
    btn.textContent = `+ ${ref}`;
    btn.addEventListener("click", () => void addObject(ref, kind));
    palette.appendChild(btn);
  }
}

async function addObject(assetRef: string, assetKind: string): Promise<void> {
  if (!project) return;
  const created = await client.createObject({
    assetRef,
    assetKind,
    anchor: { kind: "camera", x: 0.5, y: 0.5, depthM: 1.5 },
    transform: { position: [0, 0, 0], rotation: [1, 0, 0, 0], scale: [0.3, 0.3, 0.3] },
  });
  await refreshProject();
  editor?.addObject(created.objectId, {
    transform: { position: [0, 0, 1.5], rotation: [1, 0, 0, 0], scale: [0.3, 0.3, 0.3] },
    visible: true,
    opacity: 1,
  });
  drawAuthorCanvas();
}

function openStateScene(stateId: string): void {
  if (!project) return;
  editingStateId = stateId;
  const saved = project.keyedScenes[stateId];
  if (editor) {
    editor.load(saved ?? currentDefaultSnapshot());
  }
  $("editing-state").textContent = stateId;
  drawAuthorCanvas();
}

function currentDefaultSnapshot(): Record<string, ObjectStateDoc> {
  const snap: Record<string, ObjectStateDoc> = {};
  if (!project) return snap;
  for (const [oid, obj] of Object.entries(project.sceneObjects)) {
    snap[oid] = {
      transform: structuredClone(obj.transform),
      visible: obj.visible,
      opacity: obj.opacity,
    };
  }
  return snap;
}

async function saveScene(stateId: string): Promise<void> {
  if (!editor) return;
  if (editingStateId !== stateId) openStateScene(stateId);
  await client.saveScene(stateId, editor.snapshot);
  await refreshProject();
  setStatus(`scene saved for ${stateId}`);
}

function drawAuthorCanvas(): void {
  if (!project || !editor) return;
  const canvas = $<HTMLCanvasElement>("author-canvas");
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  ctx.drawImage(video(), 0, 0, canvas.width, canvas.height);
  const sx = canvas.width / project.settings.camera.width;
  const sy = canvas.height / project.settings.camera.height;
  for (const [oid, st] of Object.entries(editor.snapshot)) {
    if (!st.visible) continue;
    const world = anchoredPosition(oid, st);
    const proj = projectPoint(project.settings.camera, world);
    if (proj.behind) continue;
    const size = Math.max(8, proj.pxPerMeter * st.transform.scale[0]) * sx;
    ctx.strokeStyle = "#4da3ff";
    ctx.lineWidth = 2;
    ctx.strokeRect(proj.x * sx - size / 2, proj.y * sy - size / 2, size, size);
    ctx.fillStyle = "#4da3ff";
    ctx.fillText(oid, proj.x * sx - size / 2, proj.y * sy - size / 2 - 4);
  }
}

// authoring composites in 2D: object position is relative to its anchor, so
// approximate the anchor origin for editing (camera anchors only, the studio
// default; other anchors draw at their raw position)
function anchoredPosition(oid: string, st: ObjectStateDoc): [number, number, number] {
  const obj = project?.sceneObjects[oid];
  const pos = st.transform.position;
  if (obj && obj.anchor.kind === "camera" && project) {
    const cam = project.settings.camera;
    const a = obj.anchor as unknown as { x: number; y: number; depthM: number };
    const ax = ((a.x * cam.width - cam.cx) / cam.fx) * a.depthM;
    const ay = ((a.y * cam.height - cam.cy) / cam.fy) * a.depthM;
    return [ax + pos[0], ay + pos[1], a.depthM + pos[2]];
  }
  return pos;
}

function wireAuthorCanvas(): void {
  const canvas = $<HTMLCanvasElement>("author-canvas");
  const toCamera = (e: MouseEvent): [number, number] => {
    if (!project) return [0, 0];
    const rect = canvas.getBoundingClientRect();
    return [
      ((e.clientX - rect.left) / rect.width) * project.settings.camera.width,
      ((e.clientY - rect.top) / rect.height) * project.settings.camera.height,
    ];
  };
  canvas.addEventListener("mousedown", (e) => {
    if (!editor) return;
    const [x, y] = toCamera(e);
    const picked = editor.pick(x, y);
    if (picked) editor.beginDrag(picked, x, y, e.shiftKey);
  });
  canvas.addEventListener("mousemove", (e) => {
    if (!editor?.drag) return;
    const [x, y] = toCamera(e);
    editor.moveDrag(x, y);
    drawAuthorCanvas();
  });
  for (const evt of ["mouseup", "mouseleave"]) {
    canvas.addEventListener(evt, () => editor?.endDrag());
  }
  canvas.addEventListener("wheel", (e) => {
    if (!editor) return;
    e.preventDefault();
    const [x, y] = toCamera(e);
    const picked = editor.pick(x, y);
    if (picked) {
      editor.scaleObject(picked, e.deltaY < 0 ? 1 : -1);
      drawAuthorCanvas();
    }
  });
}

// -- test view -------------------------------------------------------------

async function enterTestMode(): Promise<void> {
  await client.setMode("test");
  live = initialLiveState();
  eventStream = new EventStream(
    "/v1/events",
    (event) => {
      live = applyEvent(live, event);
      const [audio, next] = drainAudio(live);
      live = next;
      for (const assetId of audio) playAsset(assetId);
    },
    () => setStatus("event stream closed"),
  );
  void eventStream.start();

  const uploader = new FrameUploader(videoGrabber(video()), (frame) =>
    client.postFrame(frame.pixels, frame.width, frame.height),
  );
  const fps = project?.settings.captureFps ?? 15;
  testTimer = window.setInterval(() => void uploader.tick(), 1000 / fps);
  requestAnimationFrame(drawTestView);
}

async function leaveTestMode(): Promise<void> {
  if (testTimer !== null) window.clearInterval(testTimer);
  testTimer = null;
  eventStream?.stop();
  eventStream = null;
  await client.setMode("author").catch(() => {});
}

function playAsset(assetId: string): void {
  const asset = project?.settings.assets[assetId];
  if (asset?.path) void new Audio(asset.path).play().catch(() => {});
}

function drawTestView(): void {
  if (testTimer === null || !project) return;
  const canvas = $<HTMLCanvasElement>("test-canvas");
  const ctx = canvas.getContext("2d");
  if (ctx) {
    ctx.drawImage(video(), 0, 0, canvas.width, canvas.height);
    const cam = project.settings.camera;
    const sx = canvas.width / cam.width;
    const sy = canvas.height / cam.height;
    for (const obj of live.objects) {
      if (!obj.visible) continue;
      const proj = projectPoint(cam, obj.worldTransform.position);
      if (proj.behind) continue;
      const info = project.sceneObjects[obj.id];
      const size = Math.max(4, proj.pxPerMeter * obj.worldTransform.scale[0]) * sx;
      ctx.globalAlpha = obj.opacity;
      if (info?.assetKind === "text2d") {
        const counter = live.currentState !== null
          ? live.counters[live.currentState] ?? 0 : 0;
        ctx.fillStyle = "#ffd34d";
        ctx.font = `${Math.max(14, size / 3)}px sans-serif`;
        ctx.fillText(`${info.assetRef}: ${counter}`, proj.x * sx, proj.y * sy);
      } else {
        ctx.fillStyle = obj.stale ? "#888888" : "#41c46a";
        ctx.fillRect(proj.x * sx - size / 2, proj.y * sy - size / 2, size, size);
        ctx.fillStyle = "#073018";
        ctx.fillText(info?.assetRef ?? obj.id, proj.x * sx - size / 2 + 3,
                     proj.y * sy);
      }
      ctx.globalAlpha = 1;
    }
  }
  const badge = $("badge");
  badge.textContent = live.currentState
    ? `${live.currentState}  ${(live.confidence * 100).toFixed(0)}%`
    : "no stable state";
  $("counters").textContent = Object.entries(live.counters)
    .map(([sid, n]) => `${sid}: ${n}`)
    .join("   ");
  requestAnimationFrame(drawTestView);
}

// -- boot --------------------------------------------------------------------

async function boot(): Promise<void> {
  try {
    const media = await navigator.mediaDevices.getUserMedia({
      video: { width: 640, height: 480 },
    });
    video().srcObject = media;
    await video().play();
  } catch {
    setStatus("no webcam; capture disabled (test mode still renders events)");
  }

  try {
    await refreshProject();
  } catch {
    await client.createProject("studio");
    await refreshProject();
  }
  editor = new SceneEditor(project!.settings.camera, currentDefaultSnapshot());

  $("new-state").addEventListener("click", async () => {
    const name = ($<HTMLInputElement>("state-name").value || "state").trim();
    await client.createState(name);
    await refreshProject();
  });
  $("train").addEventListener("click", () => void trainNow());
  $("save-project").addEventListener("click", async () => {
    const path = $<HTMLInputElement>("project-path").value || "studio-project.json";
    const saved = await client.saveProjectTo(path);
    setStatus(`project written to ${saved.path}`);
  });
  $("edit-state").addEventListener("change", (e) => {
    openStateScene(($<HTMLSelectElement>("edit-state")).value);
  });
  $("refresh-states").addEventListener("click", async () => {
    await refreshProject();
    const select = $<HTMLSelectElement>("edit-state");
    select.innerHTML = "";
    for (const st of states()) {
      const opt = document.createElement("option");
      opt.value = st.stateId;
      opt.textContent = st.name;
      select.appendChild(opt);
    }
  });
  wireAuthorCanvas();
  window.setInterval(() => {
    if ($("tab-author").classList.contains("active")) drawAuthorCanvas();
  }, 100);

  for (const tab of ["capture", "author", "test"]) {
    $(`tab-${tab}`).addEventListener("click", async () => {
      for (const other of ["capture", "author", "test"]) {
        $(`tab-${other}`).classList.toggle("active", other === tab);
        $(`panel-${other}`).classList.toggle("hidden", other !== tab);
      }
      if (tab === "test") await enterTestMode();
      else await leaveTestMode();
    });
  }
  setStatus("ready");
}

window.addEventListener("DOMContentLoaded", () => void boot());
