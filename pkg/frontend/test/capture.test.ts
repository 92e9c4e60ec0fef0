import { describe, expect, it } from "vitest";

import {
  FrameUploader,
  downscaleDims,
  rgbaToRgb,
  type GrabbedFrame,
} from "../src/capture.js";

const frame = (): GrabbedFrame => ({
  pixels: new ArrayBuffer(8 * 8 * 3),
  width: 8,
  height: 8,
});

describe("downscaleDims", () => {
  it("leaves small frames alone", () => {
    expect(downscaleDims(320, 240)).toEqual([320, 240]);
    expect(downscaleDims(640, 480)).toEqual([640, 480]);
  });

  it("caps width at 640 preserving aspect", () => {
    expect(downscaleDims(1280, 720)).toEqual([640, 360]);
    expect(downscaleDims(1920, 1080)).toEqual([640, 360]);
  });
});

describe("rgbaToRgb", () => {
  it("drops alpha and keeps channel order", () => {
    const rgba = new Uint8ClampedArray([10, 20, 30, 255, 40, 50, 60, 128]);
    expect(Array.from(rgbaToRgb(rgba))).toEqual([10, 20, 30, 40, 50, 60]);
  });
});

describe("FrameUploader back-pressure", () => {
  it("skips ticks while a request is in flight, never queues", async () => {
    let release: () => void = () => {};
    const pending = new Promise<void>((resolve) => (release = resolve));
    let sends = 0;
    const uploader = new FrameUploader(frame, async () => {
      sends += 1;
      await pending;
    });
    const first = uploader.tick();
    await Promise.resolve();
    expect(uploader.inFlight).toBe(true);
    await uploader.tick();
    await uploader.tick();
    expect(uploader.skipped).toBe(2);
    expect(sends).toBe(1);
    release();
    await first;
    expect(uploader.inFlight).toBe(false);
    await uploader.tick();
    expect(sends).toBe(2);
    expect(uploader.sent).toBe(2);
  });

  it("counts failures and recovers", async () => {
    let fail = true;
    const uploader = new FrameUploader(frame, async () => {
      if (fail) throw new Error("boom");
    });
    await uploader.tick();
    expect(uploader.failed).toBe(1);
    fail = false;
    await uploader.tick();
    expect(uploader.sent).toBe(1);
  });

  it("does nothing when the grabber has no frame yet", async () => {
    const uploader = new FrameUploader(() => null, async () => {});
    expect(await uploader.tick()).toBe(false);
    expect(uploader.sent + uploader.skipped + uploader.failed).toBe(0);
  });
});
