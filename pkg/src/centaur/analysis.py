"""Measurement tooling: ESR metric, sine-probe frequency response, benchmark.

The response probe drives steady-state sines rather than impulses so the same
tool can characterize the nonlinear chain in its small-signal regime. The
benchmark reports compute time per second of audio across a fixed grid of
block sizes, the figure of merit for real-time use (< 1 is real time).
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from statistics import median
from typing import Callable, Sequence

import numpy as np

BLOCK_SIZES = (8, 16, 32, 64, 128, 256, 512, 1024, 2048, 4096)

# Comparison point from a native C++ build on 2019-era desktop hardware;
# annotation only, never asserted (timings are hardware-specific).
REFERENCE_BLOCK64 = {"traditional": 0.0662835, "neural": 0.0502434}

DB_FLOOR = -240.0


class AnalysisError(ValueError):
    """Invalid measurement request (lengths, frequencies, block sizes)."""


@dataclass(frozen=True)
class EsrReport:
    """Error-to-signal ratio: error energy over reference energy."""

    esr: float
    n: int


def esr(y: np.ndarray, yhat: np.ndarray) -> EsrReport:
    """Sum |y - yhat|^2 / sum |y|^2 over equal-length blocks."""
    y = np.asarray(y, dtype=np.float64)
    yhat = np.asarray(yhat, dtype=np.float64)
    if y.shape != yhat.shape or y.ndim != 1:
        raise AnalysisError(
            f"esr needs equal-length 1-D blocks, got {y.shape} and {yhat.shape}"
        )
    energy = float(np.sum(y * y))
    if energy == 0.0:
        raise AnalysisError("esr reference signal has zero energy")
    err = y - yhat
    return EsrReport(esr=float(np.sum(err * err)) / energy, n=y.shape[0])


@dataclass(frozen=True)
class ResponseCurve:
    """Measured magnitudes (dB) on a strictly increasing frequency grid."""

    frequencies: np.ndarray
    magnitudes: np.ndarray

    def __post_init__(self):
        if self.frequencies.shape != self.magnitudes.shape:
            raise AnalysisError("frequency and magnitude grids differ in length")
        if np.any(np.diff(self.frequencies) <= 0.0):
            raise AnalysisError("frequencies must be strictly increasing")


def log_frequencies(lo: float, hi: float, n: int) -> np.ndarray:
    """Log-spaced probe grid, endpoints included."""
    if not 0.0 < lo < hi:
        raise AnalysisError(f"need 0 < lo < hi, got {lo}, {hi}")
    return np.geomspace(lo, hi, n)


def freq_response(
    processor: Callable[[np.ndarray], np.ndarray],
    freqs: Sequence[float],
    fs: float,
    amplitude: float = 1e-3,
    warmup_s: float = 0.2,
) -> ResponseCurve:
    """Sine-probe magnitude response of a block processor.

    Each probe frequency is snapped to a whole number of cycles over the
    measurement window (k * fs / N), which makes the single-bin correlation
    exact for a steady-state sinusoid: no spectral leakage, so a passthrough
    measures 0 dB to floating-point precision. The processor keeps its state
    between probes; the warm-up stretch (discarded) absorbs transients.
    Magnitudes are floored at -240 dB.
    """
    freqs = np.atleast_1d(np.asarray(freqs, dtype=np.float64))
    if freqs.size == 0:
        raise AnalysisError("no probe frequencies given")
    if np.any(freqs <= 0.0) or np.any(freqs >= fs / 2.0):
        raise AnalysisError("probe frequencies must lie in (0, fs/2)")
    if amplitude <= 0.0:
        raise AnalysisError("probe amplitude must be positive")

    warm = int(round(warmup_s * fs))
    snapped = np.empty_like(freqs)
    mags = np.empty_like(freqs)
    for idx, f in enumerate(freqs):
        cycles = max(8, math.ceil(f * 0.1))
        window = int(round(cycles * fs / f))
        if 2 * cycles >= window:
            raise AnalysisError(f"probe frequency {f} Hz too close to fs/2")
        f_snap = cycles * fs / window
        total = warm + window
        n = np.arange(total)
        x = amplitude * np.sin(2.0 * np.pi * f_snap / fs * n)
        y = np.empty(total)
        for start in range(0, total, 4096):
            stop = min(start + 4096, total)
            y[start:stop] = processor(x[start:stop])
        tail = np.arange(warm, total)
        probe = np.exp(-2j * np.pi * f_snap / fs * tail)
        mag = abs(np.sum(y[warm:] * probe)) * 2.0 / window / amplitude
        snapped[idx] = f_snap
        mags[idx] = 20.0 * math.log10(mag) if mag > 0.0 else DB_FLOOR
    mags = np.maximum(mags, DB_FLOOR)
    return ResponseCurve(frequencies=snapped, magnitudes=mags)


@dataclass(frozen=True)
class BenchRow:
    block_size: int
    engine: str
    compute_time_per_audio_second: float


@dataclass(frozen=True)
class BenchReport:
    """Timing grid plus the methodology knobs that produced it."""

    rows: tuple
    duration_s: float
    repetitions: int

    def cell(self, engine: str, block_size: int) -> float:
        for row in self.rows:
            if row.engine == engine and row.block_size == block_size:
                return row.compute_time_per_audio_second
        raise KeyError(f"no benchmark cell for {engine!r} at block {block_size}")

    def engines(self) -> list[str]:
        seen = []
        for row in self.rows:
            if row.engine not in seen:
                seen.append(row.engine)
        return seen

    def block_sizes(self) -> list[int]:
        seen = []
        for row in self.rows:
            if row.block_size not in seen:
                seen.append(row.block_size)
        return seen

    def to_text(self) -> str:
        engines = self.engines()
        header = "block".rjust(6) + "".join(e.rjust(16) for e in engines)
        lines = [header]
        for bs in self.block_sizes():
            cells = "".join(f"{self.cell(e, bs):16.7f}" for e in engines)
            lines.append(f"{bs:6d}" + cells)
        lines.append("")
        lines.append(
            "# comparison: a native C++ build on 2019-era desktop hardware"
        )
        lines.append(
            "# measured "
            f"{REFERENCE_BLOCK64['traditional']:.7f} (traditional) and "
            f"{REFERENCE_BLOCK64['neural']:.7f} (neural) at block size 64."
        )
        return "\n".join(lines)

    def to_json_dict(self) -> dict:
        return {
            "duration_s": self.duration_s,
            "repetitions": self.repetitions,
            "reference_block64": dict(REFERENCE_BLOCK64),
            "rows": [
                {
                    "block_size": r.block_size,
                    "engine": r.engine,
                    "compute_time_per_audio_second":
                        r.compute_time_per_audio_second,
                }
                for r in self.rows
            ],
        }


def benchmark(
    pedal_factory: Callable[[str], Callable[[np.ndarray], np.ndarray]],
    engines: Sequence[str] = ("traditional", "neural"),
    block_sizes: Sequence[int] = BLOCK_SIZES,
    duration_s: float = 5.0,
    fs: float = 44100.0,
    repetitions: int = 5,
) -> BenchReport:
    """Median wall-clock compute time per audio second for each grid cell.

    `pedal_factory(engine)` must return a fresh block processor; each cell
    gets its own so state and caches never leak between cells. One untimed
    warm-up pass per cell absorbs compilation and allocator effects.
    Measurements should use duration_s >= 5; shorter runs are allowed for
    quick looks but are noisier.
    """
    for bs in block_sizes:
        if bs not in BLOCK_SIZES:
            raise AnalysisError(
                f"block size {bs} not in the fixed grid {BLOCK_SIZES}"
            )
    if repetitions < 1:
        raise AnalysisError("need at least one repetition")
    x = noise(duration_s, fs, seed=913)
    rows = []
    for engine in engines:
        for bs in block_sizes:
            processor = pedal_factory(engine)
            nblocks = x.shape[0] // bs
            if nblocks == 0:
                raise AnalysisError(
                    f"duration too short for block size {bs} at fs {fs}"
                )
            blocks = [x[i * bs:(i + 1) * bs] for i in range(nblocks)]
            audio_seconds = nblocks * bs / fs
            for blk in blocks:  # warm-up pass, excluded from timing
                processor(blk)
            times = []
            for _ in range(repetitions):
                t0 = time.perf_counter()
                for blk in blocks:
                    processor(blk)
                times.append(time.perf_counter() - t0)
            rows.append(BenchRow(
                block_size=bs,
                engine=engine,
                compute_time_per_audio_second=median(times) / audio_seconds,
            ))
    return BenchReport(rows=tuple(rows), duration_s=duration_s,
                       repetitions=repetitions)


# ---------------------------------------------------------------------------
# test signals
# ---------------------------------------------------------------------------

def noise(duration_s: float, fs: float, seed: int = 0) -> np.ndarray:
    """Gaussian noise at -20 dBFS-ish level, seeded for reproducibility."""
    rng = np.random.default_rng(seed)
    return 0.1 * rng.standard_normal(int(round(duration_s * fs)))


def guitar_like(duration_s: float, fs: float = 44100.0) -> np.ndarray:
    """Deterministic plucked-phrase test signal, peak-normalized to 0.2.

    A few exponentially decaying harmonic stacks at guitar pitches; closed
    form (no RNG), so golden files derived from it are stable across
    platforms and library versions.
    """
    nsamples = int(round(duration_s * fs))
    t = np.arange(nsamples) / fs
    notes = (
        (0.00, 110.00), (0.60, 146.83), (1.20, 196.00), (1.90, 246.94),
        (2.50, 110.00), (3.20, 164.81), (3.90, 220.00), (4.40, 130.81),
    )
    x = np.zeros(nsamples)
    for onset, f0 in notes:
        if onset >= duration_s:
            continue
        rel = t - onset
        live = rel >= 0.0
        tr = rel[live]
        for harmonic in range(1, 7):
            amp = 0.5 / harmonic ** 1.3
            decay = np.exp(-tr * (2.0 + 0.7 * harmonic))
            phase = 0.4 * harmonic * harmonic
            x[live] += amp * decay * np.sin(2.0 * np.pi * f0 * harmonic * tr + phase)
    peak = np.max(np.abs(x))
    if peak > 0.0:
        x *= 0.2 / peak
    return x
