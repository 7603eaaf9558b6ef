import { ApiClient, ApiError } from "./api.js";
import type { Engine, Params } from "./api.js";
import { Store, clampUnit } from "./state.js";
import { WavParseError, isWav, parseWav } from "./wav.js";

// Wires the store to the service. Knob drags coalesce into one POST per
// debounce interval (100 ms, so at most 10 updates/s) and the display is
// reconciled with whatever the server acknowledges. Processed audio is
// cached per clip + params + engine, which is what makes the
// Traditional/Neural A-B comparison instant: flipping the toggle with
// unchanged params replays the cached render instead of re-requesting.

export type Knob = "gain" | "treble" | "level";

export interface ControllerOptions {
  debounceMs?: number;
  resultPollMs?: number;
  resultTries?: number;
}

const sleep = (ms: number) => new Promise((r) => setTimeout(r, ms));

export class Controller {
  readonly store = new Store();

  private readonly debounceMs: number;
  private readonly resultPollMs: number;
  private readonly resultTries: number;

  private pending: Partial<Params> = {};
  private timer: ReturnType<typeof setTimeout> | null = null;
  private lastFlushAt = -Infinity;
  private queue: Promise<void> = Promise.resolve();

  private neuralFs = 44100;
  private clipBytes: ArrayBuffer | null = null;
  private clipId = 0;
  private renderCache = new Map<string, ArrayBuffer>();
  private currentRenderKey: string | null = null;

  constructor(
    private readonly api: ApiClient,
    opts: ControllerOptions = {},
  ) {
    this.debounceMs = opts.debounceMs ?? 100;
    this.resultPollMs = opts.resultPollMs ?? 150;
    this.resultTries = opts.resultTries ?? 30;
  }

  /** Pull server truth once at startup; offline is not fatal. */
  async init(): Promise<void> {
    try {
      const [meta, params] = await Promise.all([
        this.api.meta(),
        this.api.getParams(),
      ]);
      this.neuralFs = meta.neural_fs;
      this.store.set({ params, acknowledged: params, offline: false });
    } catch {
      this.store.set({ offline: true, message: "service unreachable" });
    }
  }

  // ----- knobs ------------------------------------------------------------

  knobChange(knob: Knob, value: number): void {
    const clamped = clampUnit(value);
    this.store.setParams({ [knob]: clamped });
    this.pending[knob] = clamped;
    this.scheduleFlush();
  }

  private scheduleFlush(): void {
    if (this.timer !== null) return;
    const wait = Math.max(0, this.lastFlushAt + this.debounceMs - Date.now());
    this.timer = setTimeout(() => {
      this.timer = null;
      this.flush();
    }, wait);
  }

  private flush(): void {
    if (Object.keys(this.pending).length === 0) return;
    const patch = this.pending;
    this.pending = {};
    this.lastFlushAt = Date.now();
    this.queue = this.queue.then(() => this.post(patch));
  }

  private async post(patch: Partial<Params>): Promise<void> {
    try {
      const ack = await this.api.postParams(patch);
      // fields changed again while the POST was in flight stay optimistic
      this.store.set({
        acknowledged: ack,
        params: { ...ack, ...this.pending },
        offline: false,
      });
      if (this.currentRenderKey !== null
          && this.currentRenderKey !== this.renderKey(ack)) {
        this.store.set({ renderReady: false });
      }
      if (Object.keys(this.pending).length > 0) this.scheduleFlush();
    } catch (err) {
      this.revert(err);
    }
  }

  private revert(err: unknown): void {
    this.pending = {};
    const ack = this.store.get().acknowledged;
    if (err instanceof ApiError) {
      this.store.set({ params: { ...ack }, message: err.message });
    } else {
      this.store.set({
        params: { ...ack },
        offline: true,
        message: "service unreachable; reverted to last acknowledged values",
      });
    }
  }

  /** Resolves when no debounced POST is pending or in flight. */
  async settled(): Promise<void> {
    while (this.timer !== null || Object.keys(this.pending).length > 0) {
      if (this.timer !== null) {
        clearTimeout(this.timer);
        this.timer = null;
        this.flush();
      }
      await this.queue;
    }
    await this.queue;
  }

  // ----- engine toggle ----------------------------------------------------

  async toggleEngine(): Promise<void> {
    const state = this.store.get();
    const target: Engine =
      state.params.engine === "traditional" ? "neural" : "traditional";
    await this.setEngine(target);
  }

  async setEngine(target: Engine): Promise<void> {
    if (target === "neural" && !this.store.get().neuralAllowed) {
      this.store.set({
        message: `neural runs only at ${this.neuralFs} Hz; this clip does not`,
      });
      return;
    }
    this.store.setParams({ engine: target });
    this.pending.engine = target;
    this.flush();
    await this.settled();
    if (this.clipBytes !== null && !this.store.get().offline) {
      await this.ensureRender();
    }
  }

  // ----- clip upload and audition ------------------------------------------

  async loadClip(name: string, bytes: ArrayBuffer): Promise<void> {
    if (!isWav(bytes)) {
      this.store.set({ message: `${name} is not a WAV file` });
      return;
    }
    let info;
    try {
      info = parseWav(bytes);
    } catch (err) {
      const detail = err instanceof WavParseError ? err.message : String(err);
      this.store.set({ message: `${name}: ${detail}` });
      return;
    }
    this.clipBytes = bytes;
    this.clipId += 1;
    this.renderCache.clear();
    this.currentRenderKey = null;
    const neuralAllowed = info.sampleRate === this.neuralFs;
    this.store.set({
      clip: {
        name,
        sampleRate: info.sampleRate,
        channels: info.channels,
        seconds: info.seconds,
        format: info.format,
      },
      neuralAllowed,
      renderReady: false,
      monitor: "input",
      message: null,
    });
    if (!neuralAllowed && this.store.get().params.engine === "neural") {
      this.store.set({
        message:
          `clip is ${info.sampleRate} Hz; switched to the traditional engine`,
      });
      this.store.setParams({ engine: "traditional" });
      this.pending.engine = "traditional";
      this.flush();
      await this.settled();
    }
    await this.ensureRender();
  }

  private renderKey(p: Params): string {
    return `${this.clipId}|${p.gain}|${p.treble}|${p.level}|${p.engine}`;
  }

  /**
   * Processed audio for the current clip at the acknowledged params.
   * Cache hit costs no request; a miss does one process round trip.
   */
  async ensureRender(): Promise<ArrayBuffer | null> {
    if (this.clipBytes === null) return null;
    await this.settled();
    const key = this.renderKey(this.store.get().acknowledged);
    const hit = this.renderCache.get(key);
    if (hit !== undefined) {
      this.currentRenderKey = key;
      this.store.set({ renderReady: true });
      return hit;
    }
    this.store.set({ processing: true });
    try {
      const name = this.store.get().clip?.name ?? "clip.wav";
      const ticket = await this.api.process(this.clipBytes, name);
      const rendered = await this.pollResult(ticket.job_id);
      this.renderCache.set(key, rendered);
      this.currentRenderKey = key;
      this.store.set({ processing: false, renderReady: true, offline: false });
      return rendered;
    } catch (err) {
      const detail =
        err instanceof ApiError ? err.message : "service unreachable";
      this.store.set({
        processing: false,
        offline: !(err instanceof ApiError),
        message: detail,
      });
      return null;
    }
  }

  private async pollResult(jobId: string): Promise<ArrayBuffer> {
    for (let attempt = 0; ; attempt++) {
      try {
        return await this.api.result(jobId);
      } catch (err) {
        const retryable =
          err instanceof ApiError && err.status === 404
          && attempt + 1 < this.resultTries;
        if (!retryable) throw err;
        await sleep(this.resultPollMs);
      }
    }
  }

  /** Cached render for the current clip + acknowledged params, if any. */
  currentRender(): ArrayBuffer | null {
    if (this.currentRenderKey === null) return null;
    return this.renderCache.get(this.currentRenderKey) ?? null;
  }

  inputClip(): ArrayBuffer | null {
    return this.clipBytes;
  }

  // ----- response overlay ---------------------------------------------------

  /** One digital + analog curve pair per treble grid point. */
  async showResponse(trebles: number[] = [0, 0.5, 1]): Promise<void> {
    try {
      const engine = this.store.get().acknowledged.engine;
      const curves = await Promise.all(
        trebles.map((t) => this.api.response(t, engine)),
      );
      this.store.set({ curves, offline: false });
    } catch (err) {
      const detail =
        err instanceof ApiError ? err.message : "service unreachable";
      this.store.set({ message: detail, offline: !(err instanceof ApiError) });
    }
  }

  dismissMessage(): void {
    this.store.set({ message: null });
  }

  setMonitor(monitor: "input" | "output"): void {
    this.store.set({ monitor });
  }
}
