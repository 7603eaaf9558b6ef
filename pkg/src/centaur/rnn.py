"""Recurrent gain-stage model: 8-unit GRU plus a single dense output neuron.

One trained model captures the gain stage at one knob position, so the engine
keeps a bank of five models on the gain grid {0, 0.25, 0.5, 0.75, 1} and
crossfades linearly between the two models bracketing the requested gain.
All five models step on every sample so their states stay warm and a gain
change never has to cold-start a recurrence.

Per sample, with sigmoid gates and Hadamard products:

    z[n] = sigmoid(Wz x[n] + Uz h[n-1] + bz)        update gate
    r[n] = sigmoid(Wr x[n] + Ur h[n-1] + br)        reset gate
    c[n] = tanh(Wc x[n] + r[n] * (Uc h[n-1]) + bc)  candidate state
    h[n] = z[n] * h[n-1] + (1 - z[n]) * c[n]
    y[n] = W h[n] + b                               dense head, no activation

`gru_step`/`dense_forward` are the plain-numpy reference path; `ModelBank`
block processing runs the same arithmetic through a compiled kernel.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import kernels

UNITS = 8
INPUT_DIM = 1
GAIN_GRID = (0.0, 0.25, 0.5, 0.75, 1.0)

DEMO_SEED = 714


class WeightFormatError(ValueError):
    """Weight file is not valid JSON or does not follow the schema."""


class BankGridError(WeightFormatError):
    """Model count or gain grid wrong: bank needs exactly the five grid gains."""


class WeightDimensionError(WeightFormatError):
    """A weight matrix has the wrong shape; message names the matrix."""


class NonFiniteWeightError(WeightFormatError):
    """A weight entry is NaN or infinite; message names the matrix."""


def sigmoid(x: float) -> float:
    """Logistic function 1 / (1 + e^{-x}); saturates cleanly for large |x|."""
    if x >= 0.0:
        return 1.0 / (1.0 + math.exp(-x))
    # avoid overflow in exp for very negative x
    e = math.exp(x)
    return e / (1.0 + e)


@dataclass(frozen=True)
class GruWeights:
    """Gate weights: kernel (units,), recurrent (units, units), bias (units)."""

    wz: np.ndarray
    wr: np.ndarray
    wc: np.ndarray
    uz: np.ndarray
    ur: np.ndarray
    uc: np.ndarray
    bz: np.ndarray
    br: np.ndarray
    bc: np.ndarray

    def __post_init__(self):
        for name in ("wz", "wr", "wc", "bz", "br", "bc"):
            _check_shape(getattr(self, name), (UNITS,), name)
        for name in ("uz", "ur", "uc"):
            _check_shape(getattr(self, name), (UNITS, UNITS), name)


@dataclass(frozen=True)
class DenseWeights:
    """Output head: weight vector (units,) and scalar bias."""

    w: np.ndarray
    b: float

    def __post_init__(self):
        _check_shape(self.w, (UNITS,), "dense.W")
        if not math.isfinite(self.b):
            raise NonFiniteWeightError("dense.b is not finite")


def _check_shape(arr: np.ndarray, shape: tuple, name: str) -> None:
    if arr.shape != shape:
        raise WeightDimensionError(
            f"{name} has shape {arr.shape}, expected {shape}"
        )
    if not np.all(np.isfinite(arr)):
        raise NonFiniteWeightError(f"{name} contains non-finite entries")


@dataclass
class GruModel:
    """One trained snapshot of the gain stage plus its running hidden state."""

    gru: GruWeights
    dense: DenseWeights
    h: np.ndarray = field(default_factory=lambda: np.zeros(UNITS))

    def reset(self) -> None:
        self.h[:] = 0.0


def gru_step(model: GruModel, x: float) -> np.ndarray:
    """Advance the hidden state by one sample; returns the new state."""
    w = model.gru
    h = model.h
    z = 1.0 / (1.0 + np.exp(-(w.wz * x + w.uz @ h + w.bz)))
    r = 1.0 / (1.0 + np.exp(-(w.wr * x + w.ur @ h + w.br)))
    c = np.tanh(w.wc * x + r * (w.uc @ h) + w.bc)
    h_new = z * h + (1.0 - z) * c
    model.h = h_new
    return h_new


def dense_forward(w: DenseWeights, h: np.ndarray) -> float:
    """y = W . h + b, identity activation."""
    return float(w.w @ h + w.b)


def model_step(model: GruModel, x: float) -> float:
    """One full inference sample: GRU step then dense head."""
    return dense_forward(model.dense, gru_step(model, x))


def crossfade_weights(gain: float) -> tuple[int, float]:
    """Bracketing grid index and interpolation weight for a gain setting.

    Exact at grid points: fade is 0.0 there (or 1.0 at the top of the last
    segment), so the blend reduces to a single model's output.
    """
    if not 0.0 <= gain <= 1.0:
        raise ValueError(f"gain must be in [0, 1], got {gain}")
    pos = gain * (len(GAIN_GRID) - 1)
    lo = min(int(pos), len(GAIN_GRID) - 2)
    return lo, pos - lo


class ModelBank:
    """Five models on the gain grid, with stacked arrays for the kernel path.

    The per-model `GruModel.h` vectors are the authoritative state; block
    processing copies them into the stacked scratch arrays and back, so the
    sample path (`bank_process`) and the block path interleave consistently.
    """

    def __init__(self, models: list[GruModel], gains=GAIN_GRID):
        if len(models) != len(GAIN_GRID):
            raise BankGridError(
                f"bank needs {len(GAIN_GRID)} models, got {len(models)}"
            )
        if tuple(gains) != GAIN_GRID:
            raise BankGridError(
                f"gain grid must be {GAIN_GRID}, got {tuple(gains)}"
            )
        self.models = list(models)
        self.gains = GAIN_GRID
        nm = len(models)
        stack = lambda attr: np.stack([getattr(m.gru, attr) for m in models])
        self._wz, self._wr, self._wc = stack("wz"), stack("wr"), stack("wc")
        self._uz, self._ur, self._uc = stack("uz"), stack("ur"), stack("uc")
        self._bz, self._br, self._bc = stack("bz"), stack("br"), stack("bc")
        self._wd = np.stack([m.dense.w for m in models])
        self._bd = np.array([m.dense.b for m in models])
        self._h = np.zeros((nm, UNITS))

    def reset(self) -> None:
        for m in self.models:
            m.reset()

    def process_block(self, block: np.ndarray, gain: float) -> np.ndarray:
        """Kernel-path block inference at a fixed gain setting."""
        lo, fade = crossfade_weights(gain)
        x = np.ascontiguousarray(block, dtype=np.float64)
        out = np.empty_like(x)
        for i, m in enumerate(self.models):
            self._h[i, :] = m.h
        kernels.gru_bank_block(
            x, self._wz, self._wr, self._wc, self._uz, self._ur, self._uc,
            self._bz, self._br, self._bc, self._wd, self._bd,
            self._h, lo, fade, out,
        )
        for i, m in enumerate(self.models):
            m.h[:] = self._h[i, :]
        return out


def bank_process(bank: ModelBank, gain: float, x: float) -> float:
    """One sample through the bank: all five models step, two blend."""
    lo, fade = crossfade_weights(gain)
    outputs = [model_step(m, x) for m in bank.models]
    return (1.0 - fade) * outputs[lo] + fade * outputs[lo + 1]


# ---------------------------------------------------------------------------
# weight files
# ---------------------------------------------------------------------------

def _as_array(raw, shape: tuple, name: str) -> np.ndarray:
    if raw is None:
        raise WeightFormatError(f"{name} is missing")
    try:
        arr = np.asarray(raw, dtype=np.float64)
    except (TypeError, ValueError):
        raise WeightFormatError(f"{name} is not a numeric array") from None
    flat_len = int(np.prod(shape))
    if arr.shape == shape:
        pass
    elif arr.ndim == 2 and arr.size == flat_len and len(shape) == 1:
        # row-major matrix serialized with an explicit singleton dimension
        arr = arr.reshape(shape)
    elif arr.ndim == 1 and len(shape) == 2 and shape[1] == 1 and arr.size == flat_len:
        arr = arr.reshape(shape)
    else:
        raise WeightDimensionError(
            f"{name} has shape {arr.shape}, expected {shape}"
        )
    if not np.all(np.isfinite(arr)):
        raise NonFiniteWeightError(f"{name} contains non-finite entries")
    return arr


def _parse_model(obj, label: str) -> tuple[float, GruModel]:
    if not isinstance(obj, dict):
        raise WeightFormatError(f"{label} is not an object")
    if "gain" not in obj:
        raise BankGridError(f"{label} has no gain entry")
    gain = obj["gain"]
    if not isinstance(gain, (int, float)) or not math.isfinite(gain):
        raise BankGridError(f"{label} gain is not a finite number")
    try:
        gru_obj = obj["gru"]
        dense_obj = obj["dense"]
    except (KeyError, TypeError):
        raise WeightFormatError(f"{label} is missing gru/dense sections") from None

    wz = _as_array(gru_obj.get("Wz"), (UNITS, INPUT_DIM), f"{label} gru.Wz")
    wr = _as_array(gru_obj.get("Wr"), (UNITS, INPUT_DIM), f"{label} gru.Wr")
    wc = _as_array(gru_obj.get("Wc"), (UNITS, INPUT_DIM), f"{label} gru.Wc")
    gru = GruWeights(
        wz=wz[:, 0], wr=wr[:, 0], wc=wc[:, 0],
        uz=_as_array(gru_obj.get("Uz"), (UNITS, UNITS), f"{label} gru.Uz"),
        ur=_as_array(gru_obj.get("Ur"), (UNITS, UNITS), f"{label} gru.Ur"),
        uc=_as_array(gru_obj.get("Uc"), (UNITS, UNITS), f"{label} gru.Uc"),
        bz=_as_array(gru_obj.get("bz"), (UNITS,), f"{label} gru.bz"),
        br=_as_array(gru_obj.get("br"), (UNITS,), f"{label} gru.br"),
        bc=_as_array(gru_obj.get("bc"), (UNITS,), f"{label} gru.bc"),
    )
    if not isinstance(dense_obj, dict) or "W" not in dense_obj or "b" not in dense_obj:
        raise WeightFormatError(f"{label} dense section is missing W/b")
    dw = _as_array(dense_obj["W"], (UNITS,), f"{label} dense.W")
    db = dense_obj["b"]
    if not isinstance(db, (int, float)):
        raise WeightFormatError(f"{label} dense.b is not a number")
    dense = DenseWeights(w=dw, b=float(db))
    return float(gain), GruModel(gru=gru, dense=dense)


def load_model_bank(source) -> ModelBank:
    """Load a weight bank from a path, file object, or parsed JSON list."""
    if isinstance(source, (str, Path)):
        text = Path(source).read_text()
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise WeightFormatError(f"weight file is not valid JSON: {exc}") from None
    elif hasattr(source, "read"):
        try:
            data = json.load(source)
        except json.JSONDecodeError as exc:
            raise WeightFormatError(f"weight file is not valid JSON: {exc}") from None
    else:
        data = source
    if not isinstance(data, list):
        raise WeightFormatError("weight file must be a top-level array of models")
    if len(data) != len(GAIN_GRID):
        raise BankGridError(
            f"bank needs {len(GAIN_GRID)} models, file has {len(data)}"
        )
    parsed = [_parse_model(obj, f"model {i}") for i, obj in enumerate(data)]
    parsed.sort(key=lambda item: item[0])
    gains = tuple(g for g, _ in parsed)
    if gains != GAIN_GRID:
        raise BankGridError(f"gain grid must be {GAIN_GRID}, got {gains}")
    return ModelBank([m for _, m in parsed])


def save_model_bank(bank: ModelBank, path) -> None:
    """Write a bank back out in the interchange schema."""
    data = []
    for gain, model in zip(bank.gains, bank.models):
        g = model.gru
        data.append({
            "gain": gain,
            "gru": {
                "Wz": [[float(v)] for v in g.wz],
                "Wr": [[float(v)] for v in g.wr],
                "Wc": [[float(v)] for v in g.wc],
                "Uz": g.uz.tolist(), "Ur": g.ur.tolist(), "Uc": g.uc.tolist(),
                "bz": g.bz.tolist(), "br": g.br.tolist(), "bc": g.bc.tolist(),
            },
            "dense": {"W": model.dense.w.tolist(), "b": model.dense.b},
        })
    Path(path).write_text(json.dumps(data, indent=1))


def demo_bank(seed: int = DEMO_SEED) -> ModelBank:
    """Deterministic demonstration weights (not trained on anything).

    Input drive into the candidate gate grows with the model's gain point, so
    the bank distorts progressively harder up the grid. Biases are zero,
    which keeps silence an exact fixed point (h = 0 maps to y = 0).
    """
    children = np.random.SeedSequence(seed).spawn(len(GAIN_GRID))
    models = []
    for g, child in zip(GAIN_GRID, children):
        rng = np.random.default_rng(child)
        zeros = np.zeros(UNITS)
        gru = GruWeights(
            wz=rng.normal(0.0, 1.0, UNITS),
            wr=rng.normal(0.0, 1.0, UNITS),
            wc=rng.normal(0.0, 2.0 + 6.0 * g, UNITS),
            uz=rng.normal(0.0, 0.3, (UNITS, UNITS)),
            ur=rng.normal(0.0, 0.3, (UNITS, UNITS)),
            uc=rng.normal(0.0, 0.3, (UNITS, UNITS)),
            bz=zeros.copy(), br=zeros.copy(), bc=zeros.copy(),
        )
        dense = DenseWeights(w=rng.normal(0.0, 0.45, UNITS), b=0.0)
        models.append(GruModel(gru=gru, dense=dense))
    return ModelBank(models)


def load_demo_bank() -> ModelBank:
    """Load the demonstration weights shipped with the package."""
    from importlib import resources

    ref = resources.files("centaur.data").joinpath("demo_weights.json")
    with ref.open("r") as fh:
        return load_model_bank(fh)
