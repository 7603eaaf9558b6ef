"""Recurrent gain-stage model against a direct-equation oracle.

The oracle below is a scalar-loop transliteration of the gate equations,
written before looking at either production path and sharing no code with
them. The production NumPy path (`gru_step`) and the compiled bank kernel
(`ModelBank.process_block`) must both track it to 1e-6 over long streams;
the structural contracts (crossfade exactness, stream splitting, reset) are
exact and asserted bitwise.
"""

import json
import math

import numpy as np
import pytest

from centaur import rnn
from centaur.rnn import (
    GAIN_GRID,
    UNITS,
    BankGridError,
    DenseWeights,
    GruModel,
    GruWeights,
    ModelBank,
    NonFiniteWeightError,
    WeightDimensionError,
    WeightFormatError,
    bank_process,
    crossfade_weights,
    demo_bank,
    dense_forward,
    gru_step,
    load_demo_bank,
    load_model_bank,
    model_step,
    save_model_bank,
    sigmoid,
)


# ---------------------------------------------------------------------------
# direct-equation oracle
# ---------------------------------------------------------------------------

def oracle_sigmoid(t: float) -> float:
    # equivalent tanh form of the logistic function; numerically stable for
    # any argument and a different evaluation path than the production code
    return 0.5 * (1.0 + math.tanh(0.5 * t))


def oracle_step(w: GruWeights, h: list, x: float) -> list:
    """One gate update written as plain scalar loops over the equations."""
    n = len(h)
    uzh = [sum(w.uz[i, j] * h[j] for j in range(n)) for i in range(n)]
    urh = [sum(w.ur[i, j] * h[j] for j in range(n)) for i in range(n)]
    uch = [sum(w.uc[i, j] * h[j] for j in range(n)) for i in range(n)]
    out = []
    for i in range(n):
        z = oracle_sigmoid(w.wz[i] * x + uzh[i] + w.bz[i])
        r = oracle_sigmoid(w.wr[i] * x + urh[i] + w.br[i])
        c = math.tanh(w.wc[i] * x + r * uch[i] + w.bc[i])
        out.append(z * h[i] + (1.0 - z) * c)
    return out


def oracle_run(model: GruModel, xs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Full stream through the oracle; returns (states, dense outputs)."""
    h = [0.0] * UNITS
    states = np.empty((len(xs), UNITS))
    ys = np.empty(len(xs))
    for k, x in enumerate(xs):
        h = oracle_step(model.gru, h, float(x))
        states[k] = h
        ys[k] = sum(model.dense.w[i] * h[i] for i in range(UNITS)) + model.dense.b
    return states, ys


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------

def random_weights(rng, scale: float = 1.0) -> GruWeights:
    return GruWeights(
        wz=rng.normal(0.0, scale, UNITS),
        wr=rng.normal(0.0, scale, UNITS),
        wc=rng.normal(0.0, scale, UNITS),
        uz=rng.normal(0.0, scale * 0.4, (UNITS, UNITS)),
        ur=rng.normal(0.0, scale * 0.4, (UNITS, UNITS)),
        uc=rng.normal(0.0, scale * 0.4, (UNITS, UNITS)),
        bz=rng.normal(0.0, scale, UNITS),
        br=rng.normal(0.0, scale, UNITS),
        bc=rng.normal(0.0, scale, UNITS),
    )


def random_model(seed: int, scale: float = 1.0) -> GruModel:
    rng = np.random.default_rng(seed)
    return GruModel(
        gru=random_weights(rng, scale),
        dense=DenseWeights(w=rng.normal(0.0, 1.0, UNITS), b=float(rng.normal())),
    )


def random_bank(seed: int) -> ModelBank:
    return ModelBank([random_model(seed * 100 + k) for k in range(len(GAIN_GRID))])


def clone(model: GruModel) -> GruModel:
    # weights are frozen dataclasses, safe to share; state starts at zero
    return GruModel(gru=model.gru, dense=model.dense)


def uniform_bank(model: GruModel) -> ModelBank:
    """Bank whose five slots all hold the same weights (fresh states)."""
    return ModelBank([clone(model) for _ in GAIN_GRID])


def zero_model() -> GruModel:
    zv = np.zeros(UNITS)
    zm = np.zeros((UNITS, UNITS))
    gru = GruWeights(wz=zv, wr=zv, wc=zv, uz=zm, ur=zm, uc=zm,
                     bz=zv, br=zv, bc=zv)
    return GruModel(gru=gru, dense=DenseWeights(w=zv, b=0.0))


def bank_document(seed: int = 11) -> list:
    """Schema-conforming parsed weight document with random entries."""
    rng = np.random.default_rng(seed)
    doc = []
    for gain in GAIN_GRID:
        doc.append({
            "gain": gain,
            "gru": {
                "Wz": [[float(v)] for v in rng.normal(size=UNITS)],
                "Wr": [[float(v)] for v in rng.normal(size=UNITS)],
                "Wc": [[float(v)] for v in rng.normal(size=UNITS)],
                "Uz": rng.normal(size=(UNITS, UNITS)).tolist(),
                "Ur": rng.normal(size=(UNITS, UNITS)).tolist(),
                "Uc": rng.normal(size=(UNITS, UNITS)).tolist(),
                "bz": rng.normal(size=UNITS).tolist(),
                "br": rng.normal(size=UNITS).tolist(),
                "bc": rng.normal(size=UNITS).tolist(),
            },
            "dense": {"W": rng.normal(size=UNITS).tolist(),
                      "b": float(rng.normal())},
        })
    return doc


# ---------------------------------------------------------------------------
# sigmoid
# ---------------------------------------------------------------------------

def test_sigmoid_zero_is_half():
    assert sigmoid(0.0) == 0.5


def test_sigmoid_known_value():
    assert abs(sigmoid(1.0) - 0.7310585786) < 1e-9


def test_sigmoid_saturates():
    assert abs(sigmoid(100.0) - 1.0) < 1e-12
    assert sigmoid(-100.0) < 1e-12
    # no overflow at extreme arguments, stays inside the closed unit interval
    for x in (-800.0, -50.0, 50.0, 800.0):
        s = sigmoid(x)
        assert math.isfinite(s) and 0.0 <= s <= 1.0


def test_sigmoid_complement_and_monotone():
    xs = np.linspace(-30.0, 30.0, 601)
    vals = [sigmoid(float(x)) for x in xs]
    for x, s in zip(xs, vals):
        assert abs(s + sigmoid(float(-x)) - 1.0) < 1e-15
    assert all(b > a for a, b in zip(vals, vals[1:]))


# ---------------------------------------------------------------------------
# gru_step / dense_forward
# ---------------------------------------------------------------------------

def test_zero_weights_halve_the_state():
    model = zero_model()
    rng = np.random.default_rng(3)
    h0 = rng.uniform(-1.0, 1.0, UNITS)
    model.h = h0.copy()
    h1 = gru_step(model, 0.7)
    # z = 1/2 and c = 0 exactly, and halving is exact in binary floats
    assert np.array_equal(h1, 0.5 * h0)
    for n in range(2, 30):
        gru_step(model, float(n))
    assert np.max(np.abs(model.h - h0 * 0.5 ** 29)) < 1e-12


def test_zero_everything_stays_zero():
    model = zero_model()
    for _ in range(50):
        h = gru_step(model, 1.0)
    assert np.array_equal(h, np.zeros(UNITS))
    assert dense_forward(model.dense, h) == 0.0


def test_gru_matches_direct_equations_20_seeds():
    for seed in range(20):
        model = random_model(seed)
        rng = np.random.default_rng(1000 + seed)
        xs = rng.uniform(-1.0, 1.0, 1000)
        states, ys = oracle_run(clone(model), xs)
        worst_h = 0.0
        worst_y = 0.0
        for k, x in enumerate(xs):
            h = gru_step(model, float(x))
            y = dense_forward(model.dense, h)
            worst_h = max(worst_h, float(np.max(np.abs(h - states[k]))))
            worst_y = max(worst_y, abs(y - ys[k]))
        assert worst_h < 1e-6
        assert worst_y < 1e-6


def test_bank_kernel_matches_direct_equations():
    bank = random_bank(7)
    rng = np.random.default_rng(77)
    xs = rng.uniform(-1.0, 1.0, 1000)
    solo = [oracle_run(clone(m), xs)[1] for m in bank.models]
    for gain in (0.0, 0.4, 1.0):
        bank.reset()
        got = bank.process_block(xs, gain)
        lo, fade = crossfade_weights(gain)
        want = (1.0 - fade) * solo[lo] + fade * solo[lo + 1]
        assert np.max(np.abs(got - want)) < 1e-6


def test_hidden_state_stays_in_unit_box():
    # h is a convex combination of h_prev and tanh output; with h0 = 0 every
    # component stays inside [-1, 1] (one ulp of slack for the blend rounding)
    for seed, scale in ((2, 1.0), (3, 6.0), (4, 20.0)):
        model = random_model(seed, scale)
        rng = np.random.default_rng(seed + 50)
        for x in rng.uniform(-3.0, 3.0, 500):
            h = gru_step(model, float(x))
            assert np.max(np.abs(h)) <= 1.0 + 1e-15


def test_dense_forward_examples():
    e1 = np.zeros(UNITS)
    e1[0] = 1.0
    w = DenseWeights(w=e1, b=0.0)
    assert dense_forward(w, e1) == 1.0
    h = np.arange(UNITS, dtype=float)
    assert dense_forward(w, h) == 0.0
    const = DenseWeights(w=np.zeros(UNITS), b=0.3)
    assert dense_forward(const, h) == 0.3
    assert dense_forward(const, -h) == 0.3


def test_dense_forward_matches_dot_oracle():
    rng = np.random.default_rng(8)
    for _ in range(50):
        w = DenseWeights(w=rng.normal(size=UNITS), b=float(rng.normal()))
        h = rng.normal(size=UNITS)
        want = sum(w.w[i] * h[i] for i in range(UNITS)) + w.b
        assert abs(dense_forward(w, h) - want) < 1e-12


# ---------------------------------------------------------------------------
# crossfade law
# ---------------------------------------------------------------------------

def test_crossfade_grid_points_are_exact():
    assert crossfade_weights(0.0) == (0, 0.0)
    assert crossfade_weights(0.25) == (1, 0.0)
    assert crossfade_weights(0.5) == (2, 0.0)
    assert crossfade_weights(0.75) == (3, 0.0)
    # top of the grid folds into the last segment with full weight
    assert crossfade_weights(1.0) == (3, 1.0)


def test_crossfade_midpoints_are_exact():
    assert crossfade_weights(0.125) == (0, 0.5)
    assert crossfade_weights(0.375) == (1, 0.5)
    assert crossfade_weights(0.625) == (2, 0.5)
    assert crossfade_weights(0.875) == (3, 0.5)


def test_crossfade_rejects_out_of_range():
    for bad in (-0.01, 1.01, math.nan, math.inf, -math.inf):
        with pytest.raises(ValueError):
            crossfade_weights(bad)


# ---------------------------------------------------------------------------
# model bank
# ---------------------------------------------------------------------------

def test_bank_requires_exactly_five_models():
    models = [random_model(k) for k in range(4)]
    with pytest.raises(BankGridError):
        ModelBank(models)
    models.append(random_model(4))
    with pytest.raises(BankGridError):
        ModelBank(models, gains=(0.0, 0.2, 0.5, 0.75, 1.0))


def test_grid_point_equals_single_model_sample_path():
    bank = random_bank(21)
    rng = np.random.default_rng(22)
    xs = rng.uniform(-1.0, 1.0, 200)
    for gain, idx in ((0.0, 0), (0.25, 1), (1.0, 4)):
        bank.reset()
        solo = clone(bank.models[idx])
        for x in xs:
            assert bank_process(bank, gain, float(x)) == model_step(solo, float(x))


def test_grid_point_equals_single_model_kernel_path():
    bank = random_bank(23)
    rng = np.random.default_rng(24)
    xs = rng.uniform(-1.0, 1.0, 1000)
    for gain, idx in ((0.75, 3), (1.0, 4)):
        bank.reset()
        got = bank.process_block(xs, gain)
        want = uniform_bank(bank.models[idx]).process_block(xs, 0.0)
        assert np.array_equal(got, want)


def test_midpoint_is_the_exact_even_blend():
    bank = random_bank(25)
    rng = np.random.default_rng(26)
    xs = rng.uniform(-1.0, 1.0, 500)

    a = uniform_bank(bank.models[0]).process_block(xs, 0.0)
    b = uniform_bank(bank.models[1]).process_block(xs, 0.0)
    got = bank.process_block(xs, 0.125)
    assert np.array_equal(got, 0.5 * a + 0.5 * b)

    solo0, solo1 = clone(bank.models[0]), clone(bank.models[1])
    bank.reset()
    for x in xs[:100]:
        want = 0.5 * model_step(solo0, float(x)) + 0.5 * model_step(solo1, float(x))
        assert bank_process(bank, 0.125, float(x)) == want


def test_gain_sweep_has_no_discontinuity():
    bank = random_bank(27)
    n = 44100
    xs = np.full(n, 0.5)
    gains = np.linspace(0.0, 1.0, n)

    solo = [uniform_bank(m).process_block(xs, 0.0) for m in bank.models]
    out = np.empty(n)
    one = np.empty(1)
    for k in range(n):
        one[0] = xs[k]
        out[k] = bank.process_block(one, float(gains[k]))[0]

    # the swept output must be the per-sample two-model blend, bit for bit
    expect = np.empty(n)
    for k in range(n):
        lo, fade = crossfade_weights(float(gains[k]))
        expect[k] = (1.0 - fade) * solo[lo][k] + fade * solo[lo + 1][k]
    assert np.array_equal(out, expect)

    # jumps are bounded by the largest adjacent-model gap plus per-model drift
    gap = max(float(np.max(np.abs(solo[k] - solo[k + 1])))
              for k in range(len(solo) - 1))
    drift = max(float(np.max(np.abs(np.diff(s)))) for s in solo)
    assert float(np.max(np.abs(np.diff(out)))) <= gap + drift + 1e-12


def test_block_splitting_is_exact():
    bank = random_bank(29)
    rng = np.random.default_rng(30)
    xs = rng.uniform(-1.0, 1.0, 1000)
    whole = bank.process_block(xs, 0.37)

    bank.reset()
    parts = []
    pos = 0
    for size in (8, 64, 500, 428):
        parts.append(bank.process_block(xs[pos:pos + size], 0.37))
        pos += size
    assert np.array_equal(whole, np.concatenate(parts))

    bank.reset()
    single = np.array([bank.process_block(xs[k:k + 1], 0.37)[0]
                       for k in range(len(xs))])
    assert np.array_equal(whole, single)


def test_sample_and_block_paths_agree():
    bank = random_bank(31)
    rng = np.random.default_rng(32)
    xs = rng.uniform(-1.0, 1.0, 1000)
    block = bank.process_block(xs, 0.6)
    bank.reset()
    sample = np.array([bank_process(bank, 0.6, float(x)) for x in xs])
    # different arithmetic orders (BLAS vs scalar loops), same recurrence
    assert np.max(np.abs(block - sample)) < 1e-9


def test_reset_erases_history():
    bank = random_bank(33)
    rng = np.random.default_rng(34)
    xs = rng.uniform(-1.0, 1.0, 400)
    first = bank.process_block(xs, 0.5)
    bank.process_block(rng.uniform(-1.0, 1.0, 321), 0.9)
    bank.reset()
    again = bank.process_block(xs, 0.5)
    assert np.array_equal(first, again)


def test_identical_construction_is_deterministic():
    xs = np.random.default_rng(36).uniform(-1.0, 1.0, 600)
    a = random_bank(35).process_block(xs, 0.42)
    b = random_bank(35).process_block(xs, 0.42)
    assert np.array_equal(a, b)


# ---------------------------------------------------------------------------
# weight files
# ---------------------------------------------------------------------------

def test_save_load_round_trip(tmp_path):
    bank = demo_bank()
    path = tmp_path / "weights.json"
    save_model_bank(bank, path)
    loaded = load_model_bank(path)
    for orig, back in zip(bank.models, loaded.models):
        for name in ("wz", "wr", "wc", "uz", "ur", "uc", "bz", "br", "bc"):
            assert np.array_equal(getattr(orig.gru, name), getattr(back.gru, name))
        assert np.array_equal(orig.dense.w, back.dense.w)
        assert orig.dense.b == back.dense.b
    xs = np.random.default_rng(40).uniform(-1.0, 1.0, 500)
    assert np.array_equal(bank.process_block(xs, 0.3), loaded.process_block(xs, 0.3))


def test_load_accepts_path_file_object_and_parsed_list(tmp_path):
    doc = bank_document()
    path = tmp_path / "w.json"
    path.write_text(json.dumps(doc))
    xs = np.random.default_rng(41).uniform(-1.0, 1.0, 200)
    from_path = load_model_bank(path).process_block(xs, 0.8)
    with open(path) as fh:
        from_file = load_model_bank(fh).process_block(xs, 0.8)
    from_list = load_model_bank(doc).process_block(xs, 0.8)
    assert np.array_equal(from_path, from_file)
    assert np.array_equal(from_path, from_list)


def test_load_orders_models_by_gain():
    doc = bank_document()
    shuffled = [doc[3], doc[0], doc[4], doc[2], doc[1]]
    xs = np.random.default_rng(42).uniform(-1.0, 1.0, 200)
    a = load_model_bank(bank_document()).process_block(xs, 0.25)
    b = load_model_bank(shuffled).process_block(xs, 0.25)
    assert np.array_equal(a, b)


def test_load_rejects_four_models():
    with pytest.raises(BankGridError, match="4"):
        load_model_bank(bank_document()[:4])


def test_load_rejects_off_grid_gain():
    doc = bank_document()
    doc[1]["gain"] = 0.3
    with pytest.raises(BankGridError, match="grid"):
        load_model_bank(doc)


def test_load_rejects_duplicate_gain():
    doc = bank_document()
    doc[1]["gain"] = 0.5
    with pytest.raises(BankGridError):
        load_model_bank(doc)


def test_load_rejects_missing_gain():
    doc = bank_document()
    del doc[2]["gain"]
    with pytest.raises(BankGridError, match="gain"):
        load_model_bank(doc)


def test_load_rejects_wrong_recurrent_shape():
    doc = bank_document()
    doc[0]["gru"]["Uz"] = [row[:7] for row in doc[0]["gru"]["Uz"]]
    with pytest.raises(WeightDimensionError, match="Uz"):
        load_model_bank(doc)


def test_load_rejects_non_finite_entries():
    doc = bank_document()
    doc[0]["gru"]["Ur"][2][3] = math.nan
    with pytest.raises(NonFiniteWeightError, match="Ur"):
        load_model_bank(doc)
    doc = bank_document()
    doc[4]["dense"]["W"][0] = math.inf
    with pytest.raises(NonFiniteWeightError, match="dense"):
        load_model_bank(doc)


def test_load_rejects_missing_matrix():
    doc = bank_document()
    del doc[0]["gru"]["Wr"]
    with pytest.raises(WeightFormatError, match="is missing"):
        load_model_bank(doc)


def test_load_rejects_non_numeric_bias():
    doc = bank_document()
    doc[3]["dense"]["b"] = "loud"
    with pytest.raises(WeightFormatError):
        load_model_bank(doc)


def test_load_rejects_malformed_json(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{not json at all")
    with pytest.raises(WeightFormatError, match="JSON"):
        load_model_bank(path)


def test_load_rejects_non_array_top_level():
    with pytest.raises(WeightFormatError, match="array"):
        load_model_bank({"models": []})


def test_load_accepts_flat_input_kernels():
    doc = bank_document()
    flat = bank_document()
    for entry in flat:
        for key in ("Wz", "Wr", "Wc"):
            entry["gru"][key] = [col[0] for col in entry["gru"][key]]
    xs = np.random.default_rng(43).uniform(-1.0, 1.0, 200)
    a = load_model_bank(doc).process_block(xs, 0.55)
    b = load_model_bank(flat).process_block(xs, 0.55)
    assert np.array_equal(a, b)


def test_weight_error_taxonomy():
    assert issubclass(WeightFormatError, ValueError)
    for cls in (BankGridError, WeightDimensionError, NonFiniteWeightError):
        assert issubclass(cls, WeightFormatError)
    # loader failures are catchable as one family without masking ValueErrors
    assert BankGridError is not WeightDimensionError


# ---------------------------------------------------------------------------
# demonstration weights
# ---------------------------------------------------------------------------

def test_demo_bank_is_deterministic():
    a, b = demo_bank(), demo_bank()
    for ma, mb in zip(a.models, b.models):
        assert np.array_equal(ma.gru.wc, mb.gru.wc)
        assert np.array_equal(ma.dense.w, mb.dense.w)
    xs = np.random.default_rng(44).uniform(-1.0, 1.0, 300)
    assert np.array_equal(a.process_block(xs, 0.77), b.process_block(xs, 0.77))


def test_demo_bank_silence_is_exact_fixed_point():
    bank = demo_bank()
    zeros = np.zeros(512)
    for gain in GAIN_GRID:
        bank.reset()
        out = bank.process_block(zeros, gain)
        # all biases are zero, so h = 0 maps to h = 0 and y = 0 exactly
        assert not np.any(out)


def test_demo_bank_distorts_harder_up_the_grid():
    bank = demo_bank()
    t = np.arange(4096) / 44100.0
    xs = 0.5 * np.sin(2.0 * np.pi * 441.0 * t)
    nonlin = []
    for model in bank.models:
        y = uniform_bank(model).process_block(xs, 0.0)[1024:]
        ref = xs[1024:]
        # fraction of output energy not explained by a scaled copy of the input
        scale = float(np.dot(y, ref) / np.dot(ref, ref))
        resid = y - scale * ref
        nonlin.append(float(np.dot(resid, resid) / np.dot(y, y)))
    assert nonlin[-1] > nonlin[0]


def test_packaged_demo_weights_match_generator():
    packaged = load_demo_bank()
    generated = demo_bank()
    xs = np.random.default_rng(45).uniform(-1.0, 1.0, 400)
    for gain in (0.0, 0.5, 1.0):
        packaged.reset()
        generated.reset()
        assert np.array_equal(packaged.process_block(xs, gain),
                              generated.process_block(xs, gain))
