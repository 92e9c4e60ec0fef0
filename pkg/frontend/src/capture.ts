// Webcam frame uploads: fixed-rate while a button is held, downscaled to the
// latency budget, serialized with back-pressure (a tick is skipped while a
// request is still in flight, never queued).

export const MAX_UPLOAD_WIDTH = 640;

export function downscaleDims(width: number, height: number,
                              maxWidth = MAX_UPLOAD_WIDTH): [number, number] {
  if (width <= maxWidth) return [width, height];
  const scale = maxWidth / width;
  return [maxWidth, Math.max(1, Math.round(height * scale))];
}

export interface GrabbedFrame {
  pixels: ArrayBuffer; // RGB8, row-major
  width: number;
  height: number;
}

export type FrameGrabber = () => GrabbedFrame | null;
export type FrameSender = (frame: GrabbedFrame) => Promise<unknown>;

/** Drives grab+send at a fixed rate; call tick() from a timer. */
export class FrameUploader {
  inFlight = false;
  sent = 0;
  skipped = 0;
  failed = 0;

  constructor(private readonly grab: FrameGrabber,
              private readonly send: FrameSender) {}

  async tick(): Promise<boolean> {
    if (this.inFlight) {
      this.skipped += 1;
      return false;
    }
    const frame = this.grab();
    if (frame === null) return false;
    this.inFlight = true;
    try {
      await this.send(frame);
      this.sent += 1;
      return true;
    } catch {
      this.failed += 1;
      return false;
    } finally {
      this.inFlight = false;
    }
  }
}

/** RGBA canvas pixels -> tightly packed RGB8 (the raw upload format). */
export function rgbaToRgb(rgba: Uint8ClampedArray): Uint8Array {
  const pixels = rgba.length / 4;
  const out = new Uint8Array(pixels * 3);
  for (let i = 0; i < pixels; i++) {
    out[i * 3] = rgba[i * 4];
    out[i * 3 + 1] = rgba[i * 4 + 1];
    out[i * 3 + 2] = rgba[i * 4 + 2];
  }
  return out;
}

/** Grabs downscaled RGB frames from a <video> element via a scratch canvas. */
export function videoGrabber(video: HTMLVideoElement): FrameGrabber {
  const scratch = document.createElement("canvas");
  return () => {
    if (!video.videoWidth) return null;
    const [w, h] = downscaleDims(video.videoWidth, video.videoHeight);
    scratch.width = w;
    scratch.height = h;
    const ctx = scratch.getContext("2d", { willReadFrequently: true });
    if (!ctx) return null;
    ctx.drawImage(video, 0, 0, w, h);
    const rgba = ctx.getImageData(0, 0, w, h).data;
    const rgb = rgbaToRgb(rgba);
    return { pixels: rgb.buffer as ArrayBuffer, width: w, height: h };
  };
}
