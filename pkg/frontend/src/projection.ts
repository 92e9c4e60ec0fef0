// Pinhole projection of engine world transforms onto the canvas. The camera
// convention matches the engine: +z forward, x right, y down,
// pixel = (fx*X/Z + cx, fy*Y/Z + cy); pose maps camera to world.

import type { CameraDoc } from "./api.js";

export type Vec3 = [number, number, number];
export type Quat = [number, number, number, number]; // (w, x, y, z)

export function rotate(q: Quat, v: Vec3): Vec3 {
  const [w, x, y, z] = q;
  const ux = y * v[2] - z * v[1];
  const uy = z * v[0] - x * v[2];
  const uz = x * v[1] - y * v[0];
  const uux = y * uz - z * uy;
  const uuy = z * ux - x * uz;
  const uuz = x * uy - y * ux;
  return [
    v[0] + 2 * (w * ux + uux),
    v[1] + 2 * (w * uy + uuy),
    v[2] + 2 * (w * uz + uuz),
  ];
}

export function conjugate(q: Quat): Quat {
  return [q[0], -q[1], -q[2], -q[3]];
}

export interface Projected {
  x: number; // canvas px
  y: number;
  depth: number; // camera-frame z in meters
  pxPerMeter: number; // screen scale at that depth
  behind: boolean;
}

export function projectPoint(camera: CameraDoc, world: Vec3): Projected {
  const t = camera.poseTranslation;
  const local: Vec3 = [world[0] - t[0], world[1] - t[1], world[2] - t[2]];
  const cam = rotate(conjugate(camera.poseRotation), local);
  const z = cam[2];
  if (z <= 1e-6) {
    return { x: 0, y: 0, depth: z, pxPerMeter: 0, behind: true };
  }
  return {
    x: (camera.fx * cam[0]) / z + camera.cx,
    y: (camera.fy * cam[1]) / z + camera.cy,
    depth: z,
    pxPerMeter: camera.fx / z,
    behind: false,
  };
}

/** Pixel delta -> world delta in the camera's image plane at a depth (the
 * drag mapping for the author panel). */
export function dragToWorld(camera: CameraDoc, dxPx: number, dyPx: number,
                            depth: number): Vec3 {
  const camDelta: Vec3 = [(dxPx * depth) / camera.fx, (dyPx * depth) / camera.fy, 0];
  return rotate(camera.poseRotation, camDelta);
}
