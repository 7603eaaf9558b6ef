// SVG plotting: magnitude curves on a log-frequency dB axis and a simple
// waveform strip. Path building is kept pure so the mapping is testable.

import type { ResponsePayload } from "./api.js";

export interface PlotBox {
  width: number;
  height: number;
}

export interface Axis {
  fMin: number;
  fMax: number;
  dbMin: number;
  dbMax: number;
}

export function xForFreq(f: number, axis: Axis, width: number): number {
  const span = Math.log10(axis.fMax) - Math.log10(axis.fMin);
  return ((Math.log10(f) - Math.log10(axis.fMin)) / span) * width;
}

export function yForDb(db: number, axis: Axis, height: number): number {
  const clamped = Math.min(axis.dbMax, Math.max(axis.dbMin, db));
  return height - ((clamped - axis.dbMin) / (axis.dbMax - axis.dbMin)) * height;
}

export function curvePath(
  freqs: number[],
  mags: number[],
  axis: Axis,
  box: PlotBox,
): string {
  const parts: string[] = [];
  for (let i = 0; i < freqs.length; i++) {
    const f = freqs[i];
    const m = mags[i];
    if (f === undefined || m === undefined) continue;
    const x = xForFreq(f, axis, box.width).toFixed(2);
    const y = yForDb(m, axis, box.height).toFixed(2);
    parts.push(`${i === 0 ? "M" : "L"}${x},${y}`);
  }
  return parts.join(" ");
}

function axisFor(curves: ResponsePayload[]): Axis {
  let dbMin = Infinity;
  let dbMax = -Infinity;
  for (const c of curves) {
    for (const m of [...c.magnitudes, ...c.analog_tone_magnitudes]) {
      dbMin = Math.min(dbMin, m);
      dbMax = Math.max(dbMax, m);
    }
  }
  if (!Number.isFinite(dbMin)) {
    dbMin = -40;
    dbMax = 10;
  }
  return { fMin: 20, fMax: 20000, dbMin: dbMin - 3, dbMax: dbMax + 3 };
}

const CURVE_COLORS = ["#e0b64e", "#6fb3d2", "#c47fd1"];
const GRID_FREQS = [100, 1000, 10000];

/** Overlay: solid digital curve, dashed analog tone reference, per treble. */
export function renderResponse(
  svg: SVGSVGElement,
  curves: ResponsePayload[],
): void {
  const box: PlotBox = { width: 640, height: 280 };
  svg.setAttribute("viewBox", `0 0 ${box.width} ${box.height}`);
  const axis = axisFor(curves);

  const chunks: string[] = [];
  for (const f of GRID_FREQS) {
    const x = xForFreq(f, axis, box.width).toFixed(1);
    chunks.push(
      `<line x1="${x}" y1="0" x2="${x}" y2="${box.height}" class="grid"/>`,
      `<text x="${x}" y="${box.height - 4}" class="tick">` +
        `${f >= 1000 ? `${f / 1000}k` : f}</text>`,
    );
  }
  for (const db of [0, -10, -20, -30]) {
    if (db < axis.dbMin || db > axis.dbMax) continue;
    const y = yForDb(db, axis, box.height).toFixed(1);
    chunks.push(
      `<line x1="0" y1="${y}" x2="${box.width}" y2="${y}" class="grid"/>`,
      `<text x="4" y="${y}" class="tick">${db} dB</text>`,
    );
  }
  curves.forEach((curve, i) => {
    const color = CURVE_COLORS[i % CURVE_COLORS.length];
    const digital = curvePath(curve.frequencies, curve.magnitudes, axis, box);
    const analog = curvePath(
      curve.frequencies, curve.analog_tone_magnitudes, axis, box);
    chunks.push(
      `<path d="${analog}" fill="none" stroke="${color}" stroke-width="1" ` +
        `stroke-dasharray="4 3" opacity="0.7"/>`,
      `<path d="${digital}" fill="none" stroke="${color}" stroke-width="2"/>`,
      `<text x="${box.width - 110}" y="${16 + i * 16}" fill="${color}" ` +
        `class="legend">treble ${curve.treble.toFixed(2)}</text>`,
    );
  });
  svg.innerHTML = chunks.join("");
}

/** Min/max envelope of the samples, one column per pixel. */
export function renderWaveform(
  svg: SVGSVGElement,
  samples: Float32Array,
): void {
  const box: PlotBox = { width: 640, height: 96 };
  svg.setAttribute("viewBox", `0 0 ${box.width} ${box.height}`);
  if (samples.length === 0) {
    svg.innerHTML = "";
    return;
  }
  let peak = 1e-9;
  for (const s of samples) peak = Math.max(peak, Math.abs(s));
  const mid = box.height / 2;
  const parts: string[] = [];
  for (let x = 0; x < box.width; x++) {
    const lo = Math.floor((x / box.width) * samples.length);
    const hi = Math.max(lo + 1,
      Math.floor(((x + 1) / box.width) * samples.length));
    let mn = Infinity;
    let mx = -Infinity;
    for (let i = lo; i < hi; i++) {
      const s = samples[i] ?? 0;
      mn = Math.min(mn, s);
      mx = Math.max(mx, s);
    }
    const y0 = mid - (mx / peak) * (mid - 2);
    const y1 = mid - (mn / peak) * (mid - 2);
    parts.push(
      `M${x},${y0.toFixed(1)} L${x},${(y1 + 0.5).toFixed(1)}`,
    );
  }
  svg.innerHTML =
    `<path d="${parts.join(" ")}" stroke="#7fae6f" stroke-width="1"/>`;
}
