"""First-order nodal stages.

Each linear stage of the pedal (input buffer, tone control, output buffer,
and the op-amp gain structures inside the gain stage) reduces to a first-order
analog prototype

    H(s) = (b1 s + b0) / (a1 s + a0)

derived by nodal analysis with ideal op-amps and all bias rails treated as AC
ground. Prototypes are discretised with the bilinear transform
s <- (2/T) (1 - z^-1) / (1 + z^-1) and realised by the recurrence

    y[n] = b0d x[n] + b1d x[n-1] - a1d y[n-1].

The tone control is the active shelf around the second op-amp half: the wiper
of RV2 feeds C14 into the virtual-ground summing point, with R21/R22 on the
input side and R23/R24 on the output side. Its transfer function is returned
in the all-positive stable orientation; the physical stage also inverts, which
only flips polarity and is dropped by convention.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .kernels import df1_block


class FilterError(ValueError):
    """Base class for stage-derivation errors."""


class DegeneratePrototypeError(FilterError):
    """Analog prototype has no valid first-order bilinear image."""


class UnknownStageError(FilterError):
    """stage_coeffs got a stage id it does not know."""


class MissingComponentError(FilterError):
    """A stage config lacks a required component value."""


@dataclass(frozen=True)
class AnalogFirstOrder:
    """Continuous-time prototype (b1 s + b0) / (a1 s + a0)."""

    b1: float
    b0: float
    a1: float
    a0: float

    def __post_init__(self):
        if self.a1 == 0.0 and self.a0 == 0.0:
            raise DegeneratePrototypeError("prototype denominator is zero")

    def eval_mag(self, f: float) -> float:
        """|H(j 2 pi f)| by direct complex evaluation."""
        s = 2j * np.pi * f
        return abs((self.b1 * s + self.b0) / (self.a1 * s + self.a0))


@dataclass(frozen=True)
class FirstOrderCoeffs:
    """Digital coefficients with unity leading denominator coefficient."""

    b0: float
    b1: float
    a1: float

    def __post_init__(self):
        for name in ("b0", "b1", "a1"):
            if not np.isfinite(getattr(self, name)):
                raise FilterError(f"non-finite coefficient {name}")
        if abs(self.a1) >= 1.0:
            raise FilterError(f"unstable digital filter: |a1| = {abs(self.a1)}")

    def eval_mag(self, f: float, fs: float) -> float:
        """|H(e^{j 2 pi f / fs})| by direct complex evaluation."""
        z = np.exp(2j * np.pi * f / fs)
        return abs((self.b0 + self.b1 / z) / (1.0 + self.a1 / z))


@dataclass(frozen=True)
class ToneComponents:
    r21: float
    r22: float
    r23: float
    r24: float
    rv2: float
    c14: float

    def __post_init__(self):
        for name in ("r21", "r22", "r23", "r24", "rv2", "c14"):
            if getattr(self, name) <= 0.0:
                raise FilterError(f"tone component {name} must be positive")


@dataclass
class StageConfig:
    """A stage id plus its component map (name -> value)."""

    stage_id: str
    components: dict = field(default_factory=dict)


@dataclass
class FilterState:
    """One sample of input/output memory; shared layout with the kernels."""

    buf: np.ndarray = field(default_factory=lambda: np.zeros(2))

    def reset(self):
        self.buf[:] = 0.0


def bilinear_transform(proto: AnalogFirstOrder, fs: float) -> FirstOrderCoeffs:
    """Map an analog prototype to digital coefficients at sample rate fs."""
    if fs <= 0.0:
        raise FilterError(f"sample rate must be positive, got {fs}")
    if proto.a1 == 0.0:
        if proto.b1 != 0.0:
            # improper prototype: bilinear image would put a pole at z = -1
            raise DegeneratePrototypeError(
                "prototype with b1 != 0 requires a1 != 0"
            )
        return FirstOrderCoeffs(proto.b0 / proto.a0, 0.0, 0.0)
    k = 2.0 * fs
    a0d = proto.a1 * k + proto.a0
    if a0d == 0.0:
        raise DegeneratePrototypeError("digital leading denominator is zero")
    return FirstOrderCoeffs(
        b0=(proto.b1 * k + proto.b0) / a0d,
        b1=(proto.b0 - proto.b1 * k) / a0d,
        a1=(proto.a0 - proto.a1 * k) / a0d,
    )


def prewarped_frequency(f: float, fs: float) -> float:
    """Analog frequency that the bilinear transform maps onto digital f."""
    return fs / np.pi * np.tan(np.pi * f / fs)


def tone_analog_prototype(c: ToneComponents, treble: float) -> AnalogFirstOrder:
    """Tone-shelf prototype for a wiper position.

    The pot splits as rv2a = (1 - treble) * rv2 above the wiper (toward R23)
    and rv2b = treble * rv2 below (toward R21).
    """
    if not 0.0 <= treble <= 1.0:
        raise FilterError(f"treble must be in [0, 1], got {treble}")
    rv2a = (1.0 - treble) * c.rv2
    rv2b = treble * c.rv2
    g1 = 1.0 / (c.r21 + rv2b)
    g2 = 1.0 / (c.r23 + rv2a)
    g22 = 1.0 / c.r22
    g24 = 1.0 / c.r24
    return AnalogFirstOrder(
        b1=c.c14 * (g22 + g1),
        b0=g22 * (g1 + g2),
        a1=c.c14 * (g2 + g24),
        a0=g24 * (g1 + g2),
    )


def _component(cfg: StageConfig, name: str) -> float:
    try:
        return cfg.components[name]
    except KeyError:
        raise MissingComponentError(
            f"stage {cfg.stage_id!r} needs component {name!r}"
        ) from None


def stage_analog_prototype(cfg: StageConfig) -> AnalogFirstOrder:
    """Analog prototype for a named pedal stage.

    input_buffer / output_buffer: series capacitor into a shunt load, the
    single-pole high-pass H = sRC / (1 + sRC).
    amp_stage: non-inverting op-amp with feedback rf over a ground leg of
    (rg + rv1a) in series with cg, H = 1 + rf / (rg + rv1a + 1/(s cg)).
    summing_amp: inverting transimpedance referenced to rin,
    H = -(rf / rin) / (1 + s rf cf).
    tone: see tone_analog_prototype; takes a `treble` entry.
    """
    sid = cfg.stage_id
    if sid == "input_buffer":
        rc = _component(cfg, "r1") * _component(cfg, "c1")
        return AnalogFirstOrder(b1=rc, b0=0.0, a1=rc, a0=1.0)
    if sid == "output_buffer":
        rc = _component(cfg, "rload") * _component(cfg, "cout")
        return AnalogFirstOrder(b1=rc, b0=0.0, a1=rc, a0=1.0)
    if sid == "amp_stage":
        rf = _component(cfg, "rf")
        rg = _component(cfg, "rg") + cfg.components.get("rv1a", 0.0)
        cg = _component(cfg, "cg")
        return AnalogFirstOrder(b1=cg * (rg + rf), b0=1.0, a1=cg * rg, a0=1.0)
    if sid == "summing_amp":
        rf = _component(cfg, "rf")
        rin = _component(cfg, "rin")
        cf = cfg.components.get("cf", 0.0)
        return AnalogFirstOrder(b1=0.0, b0=-rf / rin, a1=rf * cf, a0=1.0)
    if sid == "tone":
        tone = ToneComponents(
            r21=_component(cfg, "r21"), r22=_component(cfg, "r22"),
            r23=_component(cfg, "r23"), r24=_component(cfg, "r24"),
            rv2=_component(cfg, "rv2"), c14=_component(cfg, "c14"),
        )
        return tone_analog_prototype(tone, cfg.components.get("treble", 0.5))
    raise UnknownStageError(f"unknown stage id {sid!r}")


def stage_coeffs(cfg: StageConfig, fs: float) -> FirstOrderCoeffs:
    """Digital coefficients for a named stage at sample rate fs."""
    return bilinear_transform(stage_analog_prototype(cfg), fs)


def process_first_order(coeffs: FirstOrderCoeffs, state: FilterState,
                        block: np.ndarray) -> np.ndarray:
    """Run the first-order recurrence over a block, advancing `state`."""
    x = np.ascontiguousarray(block, dtype=np.float64)
    return df1_block(x, coeffs.b0, coeffs.b1, coeffs.a1, state.buf)


class FirstOrderFilter:
    """Coefficients plus state, the stage as a stream processor."""

    def __init__(self, coeffs: FirstOrderCoeffs):
        self.coeffs = coeffs
        self.state = FilterState()

    def set_coeffs(self, coeffs: FirstOrderCoeffs) -> None:
        self.coeffs = coeffs

    def process(self, block: np.ndarray) -> np.ndarray:
        return process_first_order(self.coeffs, self.state, block)

    def reset(self) -> None:
        self.state.reset()
