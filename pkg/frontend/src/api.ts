// Typed client for the engine's /v1 API. The studio holds no authoritative
// state: everything it shows is re-fetchable from these endpoints or arrives
// on the event stream.

export interface TransformDoc {
  position: [number, number, number];
  rotation: [number, number, number, number]; // (w, x, y, z)
  scale: [number, number, number];
}

export interface ObjectStateDoc {
  transform: TransformDoc;
  visible: boolean;
  opacity: number;
}

export interface SceneObjectDoc {
  objectId: string;
  assetRef: string;
  assetKind: string;
  anchor: Record<string, unknown> & { kind: string };
  transform: TransformDoc;
  visible: boolean;
  opacity: number;
}

export interface CameraDoc {
  fx: number;
  fy: number;
  cx: number;
  cy: number;
  width: number;
  height: number;
  poseRotation: [number, number, number, number];
  poseTranslation: [number, number, number];
}

export interface StateDoc {
  stateId: string;
  name: string;
  ordinal: number;
}

export interface ProjectDoc {
  version: number;
  name: string;
  stateSets: { setId: string; kind: string; states: StateDoc[] }[];
  sceneObjects: Record<string, SceneObjectDoc>;
  keyedScenes: Record<string, Record<string, ObjectStateDoc>>;
  settings: {
    camera: CameraDoc;
    captureFps: number;
    assets: Record<string, { kind: string; path: string | null }>;
    [key: string]: unknown;
  };
  [key: string]: unknown;
}

export interface PredictionDoc {
  probs: number[];
  top: string;
  confidence: number;
  t: number;
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class TeachClient {
  constructor(
    readonly base: string = "/v1",
    private readonly fetchImpl: FetchLike = (u, i) => fetch(u, i),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const resp = await this.fetchImpl(this.base + path, init);
    if (!resp.ok) {
      let detail = `${resp.status}`;
      try {
        const body = (await resp.json()) as { error?: string; detail?: string };
        detail = body.error ?? detail;
      } catch {
        /* non-JSON error body */
      }
      throw new Error(`${path}: ${detail}`);
    }
    return (await resp.json()) as T;
  }

  private json<T>(path: string, method: string, body: unknown): Promise<T> {
    return this.request<T>(path, {
      method,
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
  }

  createProject(name: string): Promise<{ sessionId: string; project: ProjectDoc }> {
    return this.json("/project", "POST", { name });
  }

  getProject(): Promise<ProjectDoc> {
    return this.request("/project");
  }

  saveProjectTo(path: string): Promise<{ path: string }> {
    return this.json("/project/save", "POST", { path });
  }

  createStateSet(kind: string, paramStart = 0, paramEnd = 1): Promise<{ setId: string }> {
    return this.json("/statesets", "POST", { kind, paramStart, paramEnd });
  }

  createState(name: string, setId?: string): Promise<StateDoc & { setId: string }> {
    return this.json("/states", "POST", setId ? { name, setId } : { name });
  }

  addSample(
    stateId: string,
    pixels: ArrayBuffer,
    width: number,
    height: number,
  ): Promise<{ sampleId: string; sampleCount: number }> {
    return this.request(`/states/${stateId}/samples`, {
      method: "POST",
      headers: {
        "Content-Type": "application/octet-stream",
        "X-Frame-Width": String(width),
        "X-Frame-Height": String(height),
      },
      body: pixels,
    });
  }

  train(head = "auto"): Promise<{ status: string; head: string }> {
    return this.json("/train", "POST", { head });
  }

  trainStatus(): Promise<{ running: boolean; progress: number; modelReady: boolean; error: string | null }> {
    return this.request("/train/status");
  }

  classifyRaw(pixels: ArrayBuffer, width: number, height: number): Promise<PredictionDoc> {
    return this.request("/classify", {
      method: "POST",
      headers: {
        "Content-Type": "application/octet-stream",
        "X-Frame-Width": String(width),
        "X-Frame-Height": String(height),
      },
      body: pixels,
    });
  }

  createObject(doc: Partial<SceneObjectDoc>): Promise<{ objectId: string }> {
    return this.json("/objects", "POST", doc);
  }

  saveScene(stateId: string, snapshots: Record<string, ObjectStateDoc>): Promise<{ stateId: string }> {
    return this.json(`/scenes/${stateId}`, "POST", { snapshots });
  }

  setMode(mode: "capture" | "author" | "test", stateId?: string): Promise<{ mode: string }> {
    return this.json("/mode", "POST", stateId ? { mode, stateId } : { mode });
  }

  postFrame(
    pixels: ArrayBuffer,
    width: number,
    height: number,
  ): Promise<{ prediction: unknown; stateChanged: unknown }> {
    return this.request("/frames", {
      method: "POST",
      headers: {
        "Content-Type": "application/octet-stream",
        "X-Frame-Width": String(width),
        "X-Frame-Height": String(height),
      },
      body: pixels,
    });
  }
}
