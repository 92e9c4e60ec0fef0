// Newline-delimited JSON event stream: chunk reassembly plus a typed reader
// over fetch's ReadableStream.

export interface WorldTransform {
  position: [number, number, number];
  rotation: [number, number, number, number];
  scale: [number, number, number];
}

export interface SnapshotObject {
  id: string;
  worldTransform: WorldTransform;
  visible: boolean;
  opacity: number;
  stale: boolean;
}

export type EngineEvent =
  | { type: "trainStatus"; t: number; progress: number; running: boolean; error?: string }
  | { type: "prediction"; t: number; probs: number[]; top: string; confidence: number }
  | { type: "stateChanged"; t: number; from: string | null; to: string; counter: number; param: number | null }
  | { type: "sceneSnapshot"; t: number; objects: SnapshotObject[] }
  | { type: "playAudio"; t: number; assetId: string };

/** Reassembles NDJSON records across arbitrary chunk boundaries. */
export class NdjsonParser {
  private buffer = "";

  push(chunk: string): EngineEvent[] {
    this.buffer += chunk;
    const events: EngineEvent[] = [];
    let idx: number;
    while ((idx = this.buffer.indexOf("\n")) >= 0) {
      const line = this.buffer.slice(0, idx).trim();
      this.buffer = this.buffer.slice(idx + 1);
      if (!line) continue;
      events.push(JSON.parse(line) as EngineEvent);
    }
    return events;
  }

  /** Anything left without a trailing newline (incomplete record). */
  pending(): string {
    return this.buffer;
  }
}

export class EventStream {
  private controller: AbortController | null = null;

  constructor(
    private readonly url: string,
    private readonly onEvent: (event: EngineEvent) => void,
    private readonly onClose: (err?: unknown) => void = () => {},
  ) {}

  async start(): Promise<void> {
    this.controller = new AbortController();
    const parser = new NdjsonParser();
    try {
      const resp = await fetch(this.url, { signal: this.controller.signal });
      if (!resp.ok || !resp.body) {
        this.onClose(new Error(`event stream: ${resp.status}`));
        return;
      }
      const reader = resp.body.getReader();
      const decoder = new TextDecoder();
      for (;;) {
        const { done, value } = await reader.read();
        if (done) break;
        for (const event of parser.push(decoder.decode(value, { stream: true }))) {
          this.onEvent(event);
        }
      }
      this.onClose();
    } catch (err) {
      this.onClose(err);
    }
  }

  stop(): void {
    this.controller?.abort();
    this.controller = null;
  }
}
