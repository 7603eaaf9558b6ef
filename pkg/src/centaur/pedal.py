"""Full pedal signal chain with engine switching and control smoothing.

Chain order: input buffer -> gain stage (traditional circuit simulation or
the recurrent model) -> tone control -> output buffer -> level. The level
knob applies as level^2, approximating an audio-taper pot.

Controls are smoothed with a one-pole low-pass (20 ms time constant) and
stage coefficients are re-derived at control rate, every 32 samples on an
absolute sample counter. Segmenting on the absolute counter (not the block
phase) makes processing exactly invariant to how the stream is split into
blocks. Engine switches crossfade over 2048 samples; both engines run during
the fade, and each engine's state is otherwise untouched while inactive.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import rnn
from .circuits import (
    FlatTree,
    GainStageCircuits,
    Tap,
    amp_stage_coeffs,
    build_clipper,
    build_ff1_preamp,
    build_ff2,
    summing_stage_coeffs,
)
from .config import default_config
from .filters import FirstOrderCoeffs, FirstOrderFilter, StageConfig, stage_coeffs
from .wavio import WavData

ENGINES = ("traditional", "neural")
NEURAL_FS = 44100.0
CONTROL_INTERVAL = 32
FADE_SAMPLES = 2048
SMOOTH_TAU_S = 0.020


class InvalidParamsError(ValueError):
    """A control is outside [0, 1] or the engine name is unknown."""


class SampleRateError(ValueError):
    """Neural processing requested at a sample rate it was not trained for."""


@dataclass
class PedalParams:
    """Knob snapshot: unit-interval controls plus the engine selector."""

    gain: float = 0.5
    treble: float = 0.5
    level: float = 0.5
    engine: str = "traditional"

    def validate(self) -> None:
        for name in ("gain", "treble", "level"):
            value = getattr(self, name)
            if not isinstance(value, (int, float)) or not 0.0 <= value <= 1.0:
                raise InvalidParamsError(f"{name} must be in [0, 1], got {value!r}")
        if self.engine not in ENGINES:
            raise InvalidParamsError(
                f"engine must be one of {ENGINES}, got {self.engine!r}"
            )


class _Smoother:
    """One-pole tracker advanced once per control interval."""

    def __init__(self, value: float, alpha: float):
        self.value = value
        self.alpha = alpha

    def advance(self, target: float) -> float:
        self.value = target + (self.value - target) * self.alpha
        if abs(self.value - target) < 1e-7:
            self.value = target
        return self.value


def tone_stage_config(config: dict, treble: float) -> StageConfig:
    """Tone-stage component map from a flat config at a treble setting."""
    return StageConfig("tone", {
        "r21": config["tone.r21"], "r22": config["tone.r22"],
        "r23": config["tone.r23"], "r24": config["tone.r24"],
        "rv2": config["tone.rv2"], "c14": config["tone.c14"],
        "treble": treble,
    })


class Pedal:
    """One audio stream's worth of pedal state; single-owner, not thread-safe."""

    def __init__(self, config: dict | None = None, fs: float = 44100.0,
                 bank: rnn.ModelBank | None = None):
        if fs <= 0.0:
            raise ValueError(f"sample rate must be positive, got {fs}")
        self.config = dict(config) if config is not None else default_config()
        self.fs = float(fs)
        cfg = self.config

        self._input = FirstOrderFilter(stage_coeffs(
            StageConfig("input_buffer", {"r1": cfg["input.r1"], "c1": cfg["input.c1"]}),
            self.fs))
        self._tone = FirstOrderFilter(stage_coeffs(tone_stage_config(cfg, 0.5), self.fs))
        self._output = FirstOrderFilter(stage_coeffs(
            StageConfig("output_buffer",
                        {"rload": cfg["output.rload"], "cout": cfg["output.cout"]}),
            self.fs))

        self.circuits = GainStageCircuits(cfg, self.fs, gain=0.5)
        self._amp_coeffs = amp_stage_coeffs(cfg, 0.5, self.fs)
        self._sum_coeffs = summing_stage_coeffs(cfg, self.fs)
        self.bank = bank if bank is not None else rnn.load_demo_bank()

        self._alpha = math.exp(-(CONTROL_INTERVAL / self.fs) / SMOOTH_TAU_S)
        self._counter = 0
        self._smooth: dict[str, _Smoother] | None = None
        self._applied_gain: float | None = None
        self._applied_treble: float | None = None
        self._level = 0.5
        self._engine: str | None = None
        self._fade_from: str | None = None
        self._fade_pos = 0

    # -- engine availability -------------------------------------------------

    def engines_available(self) -> dict[str, bool]:
        return {
            "traditional": True,
            "neural": self.fs == NEURAL_FS,
        }

    def _check_engine(self, engine: str) -> None:
        if engine == "neural" and self.fs != NEURAL_FS:
            raise SampleRateError(
                f"neural engine runs only at {int(NEURAL_FS)} Hz "
                f"(pedal is at {self.fs:g} Hz)"
            )

    # -- state ----------------------------------------------------------------

    def reset(self) -> None:
        self._input.reset()
        self._tone.reset()
        self._output.reset()
        self.circuits.reset()
        self.bank.reset()
        self._counter = 0
        self._smooth = None
        self._applied_gain = None
        self._applied_treble = None
        self._engine = None
        self._fade_from = None
        self._fade_pos = 0

    # -- control --------------------------------------------------------------

    def _apply_controls(self, gain: float, treble: float) -> None:
        if gain != self._applied_gain:
            self.circuits.set_gain(gain)
            self._amp_coeffs = amp_stage_coeffs(self.config, gain, self.fs)
            self._applied_gain = gain
        if treble != self._applied_treble:
            self._tone.set_coeffs(stage_coeffs(tone_stage_config(self.config, treble),
                                               self.fs))
            self._applied_treble = treble

    def _control_tick(self, params: PedalParams) -> None:
        if self._smooth is None:
            # first block: land on the requested values with no glide
            self._smooth = {
                "gain": _Smoother(params.gain, self._alpha),
                "treble": _Smoother(params.treble, self._alpha),
                "level": _Smoother(params.level, self._alpha),
            }
            self._engine = params.engine
            self._apply_controls(params.gain, params.treble)
            self._level = params.level
            return
        g = self._smooth["gain"].advance(params.gain)
        t = self._smooth["treble"].advance(params.treble)
        self._level = self._smooth["level"].advance(params.level)
        self._apply_controls(g, t)
        if params.engine != self._engine:
            if self._fade_from == params.engine:
                # switching back mid-fade: reverse the ramp in place
                self._fade_from = self._engine
                self._fade_pos = FADE_SAMPLES - self._fade_pos
            else:
                self._fade_from = self._engine
                self._fade_pos = 0
            self._engine = params.engine

    # -- audio ----------------------------------------------------------------

    def _engine_segment(self, engine: str, seg: np.ndarray) -> np.ndarray:
        if engine == "traditional":
            return self.circuits.process_block_with_taps(
                self._amp_coeffs, self._sum_coeffs, seg)[0]
        return self.bank.process_block(seg, self._smooth["gain"].value)

    def process_block(self, params: PedalParams, block: np.ndarray) -> np.ndarray:
        """Run one block through the chain; block length is arbitrary."""
        params.validate()
        self._check_engine(params.engine)
        x = np.ascontiguousarray(block, dtype=np.float64)
        if x.ndim != 1:
            raise ValueError("process_block expects a 1-D block")
        pre = self._input.process(x)
        out = np.empty_like(pre)
        pos = 0
        n = pre.shape[0]
        while pos < n:
            phase = self._counter % CONTROL_INTERVAL
            if phase == 0:
                self._control_tick(params)
            run = min(CONTROL_INTERVAL - phase, n - pos)
            seg = pre[pos:pos + run]
            if self._fade_from is not None:
                old = self._engine_segment(self._fade_from, seg)
                new = self._engine_segment(self._engine, seg)
                ramp = (np.arange(self._fade_pos, self._fade_pos + run) + 1.0) \
                    / FADE_SAMPLES
                mixed = (1.0 - ramp) * old + ramp * new
                self._fade_pos += run
                if self._fade_pos >= FADE_SAMPLES:
                    self._fade_from = None
                    self._fade_pos = 0
            else:
                mixed = self._engine_segment(self._engine, seg)
            shaped = self._output.process(self._tone.process(mixed))
            out[pos:pos + run] = shaped * (self._level * self._level)
            self._counter += run
            pos += run
        return out

    # -- analysis -------------------------------------------------------------

    def output_bound(self) -> float:
        """Worst-case |output| for inputs in [-1, 1] on the traditional engine.

        Product of per-stage gain bounds: exact l1 norms for the first-order
        sections, measured impulse-response l1 norms for the trees, worst-case
        control settings (gain pot at both ends, treble over a fine grid),
        and the diode stage bounded by its unloaded port voltage (the pair
        only ever pulls the port toward zero). Deliberately loose; used to
        assert boundedness, not to predict levels.
        """
        cfg = self.config
        fs = self.fs
        input_l1 = _first_order_l1(self._input.coeffs)
        sum_l1 = _first_order_l1(self._sum_coeffs)
        out_l1 = _first_order_l1(self._output.coeffs)
        tone_l1 = max(
            _first_order_l1(stage_coeffs(tone_stage_config(cfg, t), fs))
            for t in np.linspace(0.0, 1.0, 101)
        )
        amp_l1 = max(
            _first_order_l1(amp_stage_coeffs(cfg, g, fs)) for g in (0.0, 1.0)
        )

        ff1 = FlatTree(build_ff1_preamp(cfg, fs))
        taps = ff1.tree.taps
        pre_l1, iff1_l1 = _tree_impulse_l1(
            ff1, [taps["v_pre"], taps["i_ff1"]], fs)

        clip_open = FlatTree(build_clipper(cfg, fs), open_root=True)
        (vd_l1,) = _tree_impulse_l1(
            clip_open, [Tap(clip_open.tree.body, "voltage", 1.0)], fs)
        iclip_l1 = vd_l1 / cfg["clip.rout"]

        # FF-2 passes most current with the smallest source resistance (gain 0)
        ff2 = FlatTree(build_ff2(cfg, 0.0, fs))
        (iff2_l1,) = _tree_impulse_l1(ff2, [ff2.tree.taps["i_ff2"]], fs)

        current_bound = iff1_l1 + amp_l1 * pre_l1 * (iclip_l1 + iff2_l1)
        return (input_l1 * current_bound * cfg["sum.rin"]
                * sum_l1 * tone_l1 * out_l1)


def _first_order_l1(c: FirstOrderCoeffs) -> float:
    """Exact l1 norm of a first-order section's impulse response."""
    # h[0] = b0, h[k] = (b1 - a1 b0) (-a1)^(k-1) for k >= 1
    return abs(c.b0) + abs(c.b1 - c.a1 * c.b0) / (1.0 - abs(c.a1))


def _tree_impulse_l1(flat: FlatTree, taps: list[Tap], fs: float) -> list[float]:
    """Impulse-response l1 norms of tree taps, measured over 10 seconds.

    The trees are RC networks whose responses decay geometrically; 10 s
    dwarfs every time constant in the netlist, and a tail allowance from the
    final-second decay ratio covers the truncation.
    """
    nsamples = int(round(10.0 * fs))
    x = np.zeros(nsamples)
    x[0] = 1.0
    rows = np.abs(flat.process_block(x, taps))
    second = int(round(fs))
    totals = []
    for row in rows:
        head = float(row.sum())
        last = float(row[-second:].sum())
        prev = float(row[-2 * second:-second].sum())
        ratio = last / prev if prev > 0.0 and last < prev else 0.0
        tail = last * ratio / (1.0 - ratio) if ratio < 1.0 else 0.0
        totals.append(head + tail)
    return totals


def create_pedal(config: dict | None = None, fs: float = 44100.0,
                 bank: rnn.ModelBank | None = None) -> Pedal:
    """Build a pedal with every stage constructed at the given sample rate."""
    return Pedal(config=config, fs=fs, bank=bank)


def process_block(pedal: Pedal, params: PedalParams, block: np.ndarray) -> np.ndarray:
    """Run one block through the chain (module-level spelling of the method)."""
    return pedal.process_block(params, block)


def render_wav(wav: WavData, params: PedalParams,
               config: dict | None = None, bank: rnn.ModelBank | None = None,
               block_size: int = 4096) -> WavData:
    """Process a whole decoded file through a fresh pedal at the file's rate.

    The command-line processor and the service both route through here, so a
    given (file, params) pair renders byte-identically everywhere.
    """
    pedal = create_pedal(config=config, fs=float(wav.fs), bank=bank)
    x = wav.samples
    y = np.empty_like(x)
    for start in range(0, x.shape[0], block_size):
        stop = min(start + block_size, x.shape[0])
        y[start:stop] = pedal.process_block(params, x[start:stop])
    return WavData(fs=wav.fs, samples=y, encoding=wav.encoding, channels=1)
