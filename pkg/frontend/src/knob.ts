// Rotary knob control: vertical pointer drag, arrow keys, double-click to
// reset. Emits values already clamped to [0, 1]; display rotation spans
// -135 to +135 degrees like the panel pots it mimics.

import { clampUnit } from "./state.js";

const SWEEP_DEG = 270;
const PIXELS_FOR_FULL_SWEEP = 200;
const ARROW_STEP = 0.02;

export function dragValue(startValue: number, dyPixels: number): number {
  // dragging up increases the value
  return clampUnit(startValue - dyPixels / PIXELS_FOR_FULL_SWEEP);
}

export function rotationDeg(value: number): number {
  return (clampUnit(value) - 0.5) * SWEEP_DEG;
}

export class KnobControl {
  readonly element: HTMLElement;
  private value = 0.5;
  private dragStartY = 0;
  private dragStartValue = 0.5;
  private readonly dial: HTMLElement;
  private readonly readout: HTMLElement;

  constructor(
    label: string,
    private readonly onChange: (value: number) => void,
    private readonly defaultValue = 0.5,
  ) {
    this.element = document.createElement("div");
    this.element.className = "knob";
    this.element.tabIndex = 0;
    this.element.setAttribute("role", "slider");
    this.element.setAttribute("aria-label", label);
    this.element.setAttribute("aria-valuemin", "0");
    this.element.setAttribute("aria-valuemax", "1");

    this.dial = document.createElement("div");
    this.dial.className = "knob-dial";
    const mark = document.createElement("div");
    mark.className = "knob-mark";
    this.dial.appendChild(mark);

    const name = document.createElement("div");
    name.className = "knob-label";
    name.textContent = label;
    this.readout = document.createElement("div");
    this.readout.className = "knob-readout";

    this.element.append(this.dial, name, this.readout);
    this.bind();
    this.setValue(defaultValue);
  }

  /** Update the display without emitting; used for server reconciliation. */
  setValue(value: number): void {
    this.value = clampUnit(value);
    this.dial.style.transform = `rotate(${rotationDeg(this.value)}deg)`;
    this.readout.textContent = this.value.toFixed(2);
    this.element.setAttribute("aria-valuenow", this.value.toFixed(2));
  }

  private emit(value: number): void {
    this.setValue(value);
    this.onChange(this.value);
  }

  private bind(): void {
    this.element.addEventListener("pointerdown", (ev) => {
      this.element.setPointerCapture(ev.pointerId);
      this.dragStartY = ev.clientY;
      this.dragStartValue = this.value;
    });
    this.element.addEventListener("pointermove", (ev) => {
      if (!this.element.hasPointerCapture(ev.pointerId)) return;
      this.emit(dragValue(this.dragStartValue, ev.clientY - this.dragStartY));
    });
    this.element.addEventListener("dblclick", () => {
      this.emit(this.defaultValue);
    });
    this.element.addEventListener("keydown", (ev) => {
      if (ev.key === "ArrowUp" || ev.key === "ArrowRight") {
        this.emit(this.value + ARROW_STEP);
        ev.preventDefault();
      } else if (ev.key === "ArrowDown" || ev.key === "ArrowLeft") {
        this.emit(this.value - ARROW_STEP);
        ev.preventDefault();
      } else if (ev.key === "Home") {
        this.emit(0);
        ev.preventDefault();
      } else if (ev.key === "End") {
        this.emit(1);
        ev.preventDefault();
      }
    });
  }
}
