import { ApiClient } from "./api.js";
import { AuditionPlayer } from "./audio.js";
import { Controller } from "./controller.js";
import { KnobControl } from "./knob.js";
import { renderResponse, renderWaveform } from "./plot.js";
import { engineLabel } from "./state.js";
import { decodeSamples } from "./wav.js";

const controller = new Controller(new ApiClient());
const player = new AuditionPlayer();

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (node === null) throw new Error(`missing #${id}`);
  return node as T;
}

const knobs = {
  gain: new KnobControl("Gain", (v) => controller.knobChange("gain", v)),
  treble: new KnobControl("Tone", (v) => controller.knobChange("treble", v)),
  level: new KnobControl("Level", (v) => controller.knobChange("level", v)),
};

async function refreshPlayerClips(): Promise<void> {
  const input = controller.inputClip();
  if (input === null) return;
  await player.setClips(input, controller.currentRender());
}

function wire(): void {
  const panel = el<HTMLDivElement>("knobs");
  panel.append(knobs.gain.element, knobs.treble.element, knobs.level.element);

  const engineBtn = el<HTMLButtonElement>("engine");
  engineBtn.addEventListener("click", () => {
    void controller.toggleEngine().then(refreshPlayerClips);
  });

  const upload = el<HTMLInputElement>("upload");
  upload.addEventListener("change", async () => {
    const file = upload.files?.[0];
    if (file === undefined) return;
    const bytes = await file.arrayBuffer();
    await controller.loadClip(file.name, bytes);
    const input = controller.inputClip();
    if (input !== null) {
      renderWaveform(el<never>("waveform"), decodeSamples(input));
      await refreshPlayerClips();
    }
  });

  el<HTMLButtonElement>("play").addEventListener("click", () => {
    if (player.playing) {
      player.stop();
    } else {
      player.start();
    }
  });
  el<HTMLButtonElement>("monitor-input").addEventListener("click", () => {
    controller.setMonitor("input");
  });
  el<HTMLButtonElement>("monitor-output").addEventListener("click", () => {
    controller.setMonitor("output");
  });
  el<HTMLButtonElement>("show-response").addEventListener("click", () => {
    void controller.showResponse();
  });
  el<HTMLButtonElement>("dismiss").addEventListener("click", () => {
    controller.dismissMessage();
  });
}

function bindStore(): void {
  const engineBtn = el<HTMLButtonElement>("engine");
  const banner = el<HTMLDivElement>("banner");
  const bannerText = el<HTMLSpanElement>("banner-text");
  const offline = el<HTMLDivElement>("offline");
  const clipInfo = el<HTMLDivElement>("clip-info");
  const status = el<HTMLDivElement>("status");
  const monitorIn = el<HTMLButtonElement>("monitor-input");
  const monitorOut = el<HTMLButtonElement>("monitor-output");
  const responseSvg = el<never>("response");

  controller.store.subscribe((state) => {
    knobs.gain.setValue(state.params.gain);
    knobs.treble.setValue(state.params.treble);
    knobs.level.setValue(state.params.level);

    engineBtn.textContent = engineLabel(state.params.engine);
    engineBtn.classList.toggle("neural", state.params.engine === "neural");
    const neuralBlocked =
      !state.neuralAllowed && state.params.engine === "traditional";
    engineBtn.disabled = neuralBlocked;
    engineBtn.title = neuralBlocked
      ? "neural runs only at 44100 Hz; this clip does not"
      : "switch engine";

    banner.hidden = state.message === null;
    bannerText.textContent = state.message ?? "";
    offline.hidden = !state.offline;

    clipInfo.textContent = state.clip === null
      ? "no clip loaded"
      : `${state.clip.name} | ${state.clip.sampleRate} Hz | ` +
        `${state.clip.channels} ch | ${state.clip.seconds.toFixed(2)} s | ` +
        `${state.clip.format}`;
    status.textContent = state.processing
      ? "processing..."
      : state.renderReady
        ? "render ready"
        : state.clip === null
          ? ""
          : "render pending";

    monitorIn.classList.toggle("active", state.monitor === "input");
    monitorOut.classList.toggle("active", state.monitor === "output");
    player.setMonitor(state.monitor);

    if (state.curves.length > 0) renderResponse(responseSvg, state.curves);
  });
}

wire();
bindStore();
void controller.init();
