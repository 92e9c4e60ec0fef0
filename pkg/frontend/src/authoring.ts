// Direct-manipulation editing for the author panel: drag to translate,
// wheel to scale, shift-drag to rotate about the camera axis. Works on plain
// snapshot data so the interaction math is testable without a DOM.

import type { CameraDoc, ObjectStateDoc, TransformDoc } from "./api.js";
import { dragToWorld, projectPoint, rotate, type Quat, type Vec3 } from "./projection.js";

export const WHEEL_SCALE_STEP = 1.1;
export const ROTATE_RADIANS_PER_PX = 0.01;

export function cloneTransform(tr: TransformDoc): TransformDoc {
  return {
    position: [...tr.position] as Vec3,
    rotation: [...tr.rotation] as Quat,
    scale: [...tr.scale] as [number, number, number],
  };
}

function quatMul(a: Quat, b: Quat): Quat {
  const [aw, ax, ay, az] = a;
  const [bw, bx, by, bz] = b;
  return [
    aw * bw - ax * bx - ay * by - az * bz,
    aw * bx + ax * bw + ay * bz - az * by,
    aw * by - ax * bz + ay * bw + az * bx,
    aw * bz + ax * by - ay * bx + az * bw,
  ];
}

function axisAngle(axis: Vec3, angle: number): Quat {
  const n = Math.hypot(...axis);
  const s = Math.sin(angle / 2) / n;
  return [Math.cos(angle / 2), axis[0] * s, axis[1] * s, axis[2] * s];
}

export type Snapshot = Record<string, ObjectStateDoc>;

export interface DragState {
  objectId: string;
  mode: "translate" | "rotate";
  lastX: number;
  lastY: number;
}

/** Editable layout for one state's keyed scene. */
export class SceneEditor {
  snapshot: Snapshot;
  drag: DragState | null = null;

  constructor(readonly camera: CameraDoc, snapshot: Snapshot = {}) {
    this.snapshot = structuredClone(snapshot);
  }

  /** Replace the layout (e.g., when reopening a state's saved scene). */
  load(snapshot: Snapshot): void {
    this.snapshot = structuredClone(snapshot);
    this.drag = null;
  }

  addObject(objectId: string, state: ObjectStateDoc): void {
    this.snapshot[objectId] = structuredClone(state);
  }

  /** The object whose projection is nearest the cursor (within radius px). */
  pick(xPx: number, yPx: number, radius = 48): string | null {
    let best: string | null = null;
    let bestDist = radius;
    for (const [oid, st] of Object.entries(this.snapshot)) {
      if (!st.visible) continue;
      const proj = projectPoint(this.camera, st.transform.position);
      if (proj.behind) continue;
      const dist = Math.hypot(proj.x - xPx, proj.y - yPx);
      if (dist < bestDist) {
        best = oid;
        bestDist = dist;
      }
    }
    return best;
  }

  beginDrag(objectId: string, xPx: number, yPx: number, rotateMode = false): void {
    if (!(objectId in this.snapshot)) return;
    this.drag = {
      objectId,
      mode: rotateMode ? "rotate" : "translate",
      lastX: xPx,
      lastY: yPx,
    };
  }

  moveDrag(xPx: number, yPx: number): void {
    if (!this.drag) return;
    const state = this.snapshot[this.drag.objectId];
    const dx = xPx - this.drag.lastX;
    const dy = yPx - this.drag.lastY;
    this.drag.lastX = xPx;
    this.drag.lastY = yPx;
    if (this.drag.mode === "translate") {
      const proj = projectPoint(this.camera, state.transform.position);
      const depth = proj.behind ? 1.0 : proj.depth;
      const delta = dragToWorld(this.camera, dx, dy, depth);
      state.transform.position = [
        state.transform.position[0] + delta[0],
        state.transform.position[1] + delta[1],
        state.transform.position[2] + delta[2],
      ];
    } else {
      // twist about the camera's forward axis
      const axis = rotate(this.camera.poseRotation, [0, 0, 1]);
      const delta = axisAngle(axis, dx * ROTATE_RADIANS_PER_PX);
      state.transform.rotation = quatMul(delta, state.transform.rotation);
    }
  }

  endDrag(): void {
    this.drag = null;
  }

  /** Wheel/pinch: multiplicative uniform scale, clamped to stay positive. */
  scaleObject(objectId: string, steps: number): void {
    const state = this.snapshot[objectId];
    if (!state) return;
    const factor = Math.pow(WHEEL_SCALE_STEP, steps);
    state.transform.scale = state.transform.scale.map(
      (s) => Math.max(1e-3, s * factor),
    ) as [number, number, number];
  }

  setVisible(objectId: string, visible: boolean): void {
    const state = this.snapshot[objectId];
    if (state) state.visible = visible;
  }
}
