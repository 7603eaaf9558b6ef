import type { Engine, Params, ResponsePayload } from "./api.js";

// One store, one subscriber list. The displayed params are optimistic and
// may run ahead of `acknowledged` for at most one debounce interval; every
// reconcile or revert snaps them back to server truth.

export interface ClipMeta {
  name: string;
  sampleRate: number;
  channels: number;
  seconds: number;
  format: "pcm16" | "float32";
}

export type Monitor = "input" | "output";

export interface UiState {
  params: Params;
  acknowledged: Params;
  clip: ClipMeta | null;
  neuralAllowed: boolean;
  processing: boolean;
  renderReady: boolean;
  monitor: Monitor;
  message: string | null;
  offline: boolean;
  curves: ResponsePayload[];
}

export const DEFAULT_PARAMS: Params = {
  gain: 0.5,
  treble: 0.5,
  level: 0.5,
  engine: "traditional",
};

export function initialState(): UiState {
  return {
    params: { ...DEFAULT_PARAMS },
    acknowledged: { ...DEFAULT_PARAMS },
    clip: null,
    neuralAllowed: true,
    processing: false,
    renderReady: false,
    monitor: "input",
    message: null,
    offline: false,
    curves: [],
  };
}

export function clampUnit(value: number): number {
  if (Number.isNaN(value)) return 0;
  return Math.min(1, Math.max(0, value));
}

export type Listener = (state: UiState) => void;

export class Store {
  private state: UiState = initialState();
  private listeners: Listener[] = [];

  get(): UiState {
    return this.state;
  }

  set(patch: Partial<UiState>): void {
    this.state = { ...this.state, ...patch };
    for (const fn of this.listeners) fn(this.state);
  }

  setParams(patch: Partial<Params>): void {
    this.set({ params: { ...this.state.params, ...patch } });
  }

  subscribe(fn: Listener): () => void {
    this.listeners.push(fn);
    fn(this.state);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== fn);
    };
  }
}

export function engineLabel(engine: Engine): string {
  return engine === "traditional" ? "Traditional" : "Neural";
}
