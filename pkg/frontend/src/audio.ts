// Browser playback with an input/output A-B switch. Both buffers are
// decoded up front; switching just moves a gain crossbar, so the compare
// is gapless and stays at the same playhead position.

export type Monitor = "input" | "output";

export class AuditionPlayer {
  private ctx: AudioContext | null = null;
  private inputBuffer: AudioBuffer | null = null;
  private outputBuffer: AudioBuffer | null = null;
  private sources: AudioBufferSourceNode[] = [];
  private inputGain: GainNode | null = null;
  private outputGain: GainNode | null = null;
  private monitor: Monitor = "input";
  playing = false;

  private ensureCtx(): AudioContext {
    if (this.ctx === null) this.ctx = new AudioContext();
    return this.ctx;
  }

  async setClips(input: ArrayBuffer, output: ArrayBuffer | null): Promise<void> {
    const ctx = this.ensureCtx();
    // decodeAudioData detaches its argument, so hand it copies
    this.inputBuffer = await ctx.decodeAudioData(input.slice(0));
    this.outputBuffer =
      output === null ? null : await ctx.decodeAudioData(output.slice(0));
    this.stop();
  }

  async setOutput(output: ArrayBuffer): Promise<void> {
    const ctx = this.ensureCtx();
    this.outputBuffer = await ctx.decodeAudioData(output.slice(0));
  }

  setMonitor(monitor: Monitor): void {
    this.monitor = monitor;
    const t = this.ctx?.currentTime ?? 0;
    this.inputGain?.gain.setValueAtTime(monitor === "input" ? 1 : 0, t);
    this.outputGain?.gain.setValueAtTime(monitor === "output" ? 1 : 0, t);
  }

  start(): void {
    const ctx = this.ensureCtx();
    if (this.inputBuffer === null) return;
    this.stop();
    void ctx.resume();

    this.inputGain = ctx.createGain();
    this.outputGain = ctx.createGain();
    this.inputGain.connect(ctx.destination);
    this.outputGain.connect(ctx.destination);

    const spin = (buffer: AudioBuffer, gain: GainNode) => {
      const src = ctx.createBufferSource();
      src.buffer = buffer;
      src.connect(gain);
      src.onended = () => {
        this.playing = false;
      };
      src.start();
      this.sources.push(src);
    };
    spin(this.inputBuffer, this.inputGain);
    if (this.outputBuffer !== null) spin(this.outputBuffer, this.outputGain);
    this.setMonitor(this.monitor);
    this.playing = true;
  }

  stop(): void {
    for (const src of this.sources) {
      src.onended = null;
      try {
        src.stop();
      } catch {
        // never started; fine
      }
    }
    this.sources = [];
    this.playing = false;
  }
}
