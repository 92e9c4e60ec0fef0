import { describe, expect, it } from "vitest";

import type { CameraDoc, ObjectStateDoc } from "../src/api.js";
import { SceneEditor, WHEEL_SCALE_STEP } from "../src/authoring.js";
import { projectPoint } from "../src/projection.js";

const camera: CameraDoc = {
  fx: 500, fy: 500, cx: 320, cy: 240, width: 640, height: 480,
  poseRotation: [1, 0, 0, 0],
  poseTranslation: [0, 0, 0],
};

const objectAt = (pos: [number, number, number]): ObjectStateDoc => ({
  transform: { position: pos, rotation: [1, 0, 0, 0], scale: [0.3, 0.3, 0.3] },
  visible: true,
  opacity: 1,
});

describe("SceneEditor", () => {
  it("picks the object nearest the cursor", () => {
    const editor = new SceneEditor(camera, {
      a: objectAt([0, 0, 2]),      // projects to (320, 240)
      b: objectAt([0.5, 0, 2]),    // projects to (445, 240)
    });
    expect(editor.pick(322, 238)).toBe("a");
    expect(editor.pick(440, 240)).toBe("b");
    expect(editor.pick(10, 10)).toBeNull();
  });

  it("drag translates so the object follows the cursor", () => {
    const editor = new SceneEditor(camera, { a: objectAt([0, 0, 2]) });
    editor.beginDrag("a", 320, 240);
    editor.moveDrag(370, 215);
    editor.endDrag();
    const proj = projectPoint(camera, editor.snapshot.a.transform.position);
    expect(proj.x).toBeCloseTo(370, 6);
    expect(proj.y).toBeCloseTo(215, 6);
  });

  it("wheel scales multiplicatively and stays positive", () => {
    const editor = new SceneEditor(camera, { a: objectAt([0, 0, 2]) });
    editor.scaleObject("a", 2);
    expect(editor.snapshot.a.transform.scale[0])
      .toBeCloseTo(0.3 * WHEEL_SCALE_STEP ** 2, 12);
    editor.scaleObject("a", -200);
    expect(editor.snapshot.a.transform.scale[0]).toBeGreaterThan(0);
  });

  it("shift-drag rotates without moving the object", () => {
    const editor = new SceneEditor(camera, { a: objectAt([0, 0, 2]) });
    const before = [...editor.snapshot.a.transform.position];
    editor.beginDrag("a", 320, 240, true);
    editor.moveDrag(420, 240);
    editor.endDrag();
    const tr = editor.snapshot.a.transform;
    expect(tr.position).toEqual(before);
    // 100 px * 0.01 rad/px about +z
    const angle = 2 * Math.acos(Math.min(1, Math.abs(tr.rotation[0])));
    expect(angle).toBeCloseTo(1.0, 9);
    const norm = Math.hypot(...tr.rotation);
    expect(norm).toBeCloseTo(1, 12);
  });

  it("load replaces the layout and survives reopening", () => {
    const editor = new SceneEditor(camera, { a: objectAt([0, 0, 2]) });
    editor.beginDrag("a", 320, 240);
    editor.moveDrag(400, 300);
    const edited = structuredClone(editor.snapshot);
    editor.load({ a: objectAt([0, 0, 2]) });
    expect(editor.snapshot.a.transform.position).toEqual([0, 0, 2]);
    editor.load(edited);
    expect(editor.snapshot.a.transform.position)
      .toEqual(edited.a.transform.position);
  });

  it("edits are isolated from the source snapshot", () => {
    const source = { a: objectAt([0, 0, 2]) };
    const editor = new SceneEditor(camera, source);
    editor.scaleObject("a", 5);
    expect(source.a.transform.scale[0]).toBe(0.3);
  });
});
