// Folds the event stream into the little bit of view state the test view,
// badge, and progress bar render from. Rendering never computes predictions
// or tweens itself; this is a pure reducer over event payloads.

import type { EngineEvent, SnapshotObject } from "./events.js";

export interface LiveState {
  trainProgress: number;
  training: boolean;
  trainError: string | null;
  currentState: string | null;
  confidence: number;
  counters: Record<string, number>;
  param: number | null;
  objects: SnapshotObject[];
  snapshotT: number;
  audioRequests: string[]; // drained by the caller after playback
}

export function initialLiveState(): LiveState {
  return {
    trainProgress: 0,
    training: false,
    trainError: null,
    currentState: null,
    confidence: 0,
    counters: {},
    param: null,
    objects: [],
    snapshotT: 0,
    audioRequests: [],
  };
}

export function applyEvent(state: LiveState, event: EngineEvent): LiveState {
  switch (event.type) {
    case "trainStatus":
      return {
        ...state,
        training: event.running,
        trainProgress: event.progress,
        trainError: event.error ?? null,
      };
    case "prediction":
      return { ...state, confidence: event.confidence };
    case "stateChanged":
      return {
        ...state,
        currentState: event.to,
        param: event.param ?? state.param,
        counters: { ...state.counters, [event.to]: event.counter },
      };
    case "sceneSnapshot":
      return { ...state, objects: event.objects, snapshotT: event.t };
    case "playAudio":
      return { ...state, audioRequests: [...state.audioRequests, event.assetId] };
    default:
      return state;
  }
}

export function drainAudio(state: LiveState): [string[], LiveState] {
  return [state.audioRequests, { ...state, audioRequests: [] }];
}
