import { describe, expect, it } from "vitest";

import { TeachClient, type FetchLike } from "../src/api.js";

interface Recorded {
  url: string;
  method: string;
  headers: Record<string, string>;
  body: unknown;
}

function fakeFetch(status = 200, payload: unknown = { ok: true }) {
  const calls: Recorded[] = [];
  const impl: FetchLike = async (url, init) => {
    calls.push({
      url,
      method: init?.method ?? "GET",
      headers: (init?.headers as Record<string, string>) ?? {},
      body: init?.body,
    });
    return new Response(JSON.stringify(payload), {
      status,
      headers: { "Content-Type": "application/json" },
    });
  };
  return { impl, calls };
}

describe("TeachClient", () => {
  it("adds samples as raw frames with dimension headers", async () => {
    const { impl, calls } = fakeFetch(200, { sampleId: "s0/0", sampleCount: 1 });
    const client = new TeachClient("/v1", impl);
    const pixels = new ArrayBuffer(8 * 8 * 3);
    const result = await client.addSample("state0", pixels, 8, 8);
    expect(result.sampleCount).toBe(1);
    expect(calls[0].url).toBe("/v1/states/state0/samples");
    expect(calls[0].headers["Content-Type"]).toBe("application/octet-stream");
    expect(calls[0].headers["X-Frame-Width"]).toBe("8");
    expect(calls[0].headers["X-Frame-Height"]).toBe("8");
  });

  it("posts scenes to the keyed-scene endpoint", async () => {
    const { impl, calls } = fakeFetch(200, { stateId: "state1" });
    const client = new TeachClient("/v1", impl);
    const snapshot = {
      obj0: {
        transform: {
          position: [0, 0, 1] as [number, number, number],
          rotation: [1, 0, 0, 0] as [number, number, number, number],
          scale: [1, 1, 1] as [number, number, number],
        },
        visible: true,
        opacity: 1,
      },
    };
    await client.saveScene("state1", snapshot);
    expect(calls[0].url).toBe("/v1/scenes/state1");
    expect(JSON.parse(calls[0].body as string)).toEqual({ snapshots: snapshot });
  });

  it("switches modes with the state id for capture", async () => {
    const { impl, calls } = fakeFetch(200, { mode: "capture" });
    const client = new TeachClient("/v1", impl);
    await client.setMode("capture", "state0");
    expect(JSON.parse(calls[0].body as string))
      .toEqual({ mode: "capture", stateId: "state0" });
    await client.setMode("test");
    expect(JSON.parse(calls[1].body as string)).toEqual({ mode: "test" });
  });

  it("surfaces engine error names", async () => {
    const { impl } = fakeFetch(409, { error: "NoModel", detail: "train first" });
    const client = new TeachClient("/v1", impl);
    await expect(client.train()).rejects.toThrow(/NoModel/);
  });
});
