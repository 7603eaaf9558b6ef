"""Compiled per-sample kernels.

The engines are sample-recursive (filter and wave states, a nonlinear root
solve, gated recurrences), so they cannot be vectorised across time; these
numba kernels keep the per-sample loops off the interpreter. Every kernel is
a literal transcription of the corresponding pure-Python implementation
(`wdf`, `filters`, `rnn`) and is compiled without fastmath so results are
deterministic and independent of block splits.

Trees are flattened to parallel arrays in child-before-parent order: `kind`
selects the element law, `ca`/`cb` index adaptor children, `g1`/`g2` hold the
scattering coefficients, `state` holds capacitor wave memories and `vs` the
source values. The body's top node is always the last entry; the root element
(ideal source or diode pair) is described separately.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

KIND_RESISTOR = 0
KIND_CAPACITOR = 1
KIND_VSOURCE = 2
KIND_SERIES = 3
KIND_PARALLEL = 4

ROOT_IDEAL_V = 0
ROOT_DIODE = 1
ROOT_OPEN = 2

TAP_VOLTAGE = 0
TAP_CURRENT = 1


@njit(cache=True)
def df1_block(x, b0, b1, a1, state):
    """First-order direct-form recurrence y[n] = b0 x[n] + b1 x[n-1] - a1 y[n-1].

    `state` is [x1, y1] and is updated in place so consecutive blocks chain
    exactly like one long block.
    """
    y = np.empty_like(x)
    x1 = state[0]
    y1 = state[1]
    for n in range(x.shape[0]):
        xn = x[n]
        yn = b0 * xn + b1 * x1 - a1 * y1
        y[n] = yn
        x1 = xn
        y1 = yn
    state[0] = x1
    state[1] = y1
    return y


@njit(cache=True)
def diode_reflect(a, r0, isat, nvt, tol, max_iter):
    """Antiparallel-diode-pair wave reflection (see wdf.diode_pair_reflect).

    Bisection-safeguarded Newton on [0, min(|a|, asinh bound)]; mirrored for
    negative a so the result is exactly odd. The asinh bound keeps the sinh
    argument finite at any drive level, and the residual tolerance is
    guaranteed reachable because the bracket halves whenever Newton steps
    outside it.
    """
    if a == 0.0:
        return 0.0
    sign = 1.0 if a > 0.0 else -1.0
    amag = abs(a)
    tol = tol * max(1.0, amag)  # |a|*eps is the residual noise floor
    two_r0_isat = 2.0 * r0 * isat
    g0 = 2.0 * isat / nvt
    lo = 0.0
    hi = amag
    if two_r0_isat > 0.0:
        hi = min(hi, nvt * math.asinh(amag / two_r0_isat))
    v = min(amag / (1.0 + r0 * g0), hi)
    f = v + two_r0_isat * math.sinh(min(v / nvt, 600.0)) - amag
    it = 0
    while abs(f) > tol and it < max_iter:
        if f > 0.0:
            hi = v
        else:
            lo = v
        slope = 1.0 + (two_r0_isat / nvt) * math.cosh(min(v / nvt, 600.0))
        v_new = v - f / slope
        if not (lo < v_new < hi):
            v_new = 0.5 * (lo + hi)
        v = v_new
        f = v + two_r0_isat * math.sinh(min(v / nvt, 600.0)) - amag
        it += 1
    return sign * (2.0 * v - amag)


@njit(cache=True)
def tree_step(kind, ca, cb, g1, g2, r0, state, vs, aw, bw,
              root_kind, rp1, rp2, drive, vin):
    """One up-root-down evaluation; waves land in aw/bw, caps in state."""
    n = kind.shape[0]
    if drive >= 0:
        vs[drive] = vin
    for i in range(n):
        k = kind[i]
        if k == KIND_RESISTOR:
            bw[i] = 0.0
        elif k == KIND_CAPACITOR:
            bw[i] = state[i]
        elif k == KIND_VSOURCE:
            bw[i] = vs[i]
        elif k == KIND_SERIES:
            bw[i] = -(bw[ca[i]] + bw[cb[i]])
        else:
            bw[i] = g1[i] * bw[ca[i]] + g2[i] * bw[cb[i]]
    top = n - 1
    if root_kind == ROOT_IDEAL_V:
        aw[top] = 2.0 * vin - bw[top]
    elif root_kind == ROOT_DIODE:
        aw[top] = diode_reflect(bw[top], r0[top], rp1, rp2, 1e-12, 100)
    else:
        aw[top] = bw[top]
    for i in range(n - 1, -1, -1):
        k = kind[i]
        if k == KIND_SERIES:
            s = bw[ca[i]] + bw[cb[i]] + aw[i]
            aw[ca[i]] = bw[ca[i]] - g1[i] * s
            aw[cb[i]] = bw[cb[i]] - g2[i] * s
        elif k == KIND_PARALLEL:
            a0 = g1[i] * bw[ca[i]] + g2[i] * bw[cb[i]] + aw[i]
            aw[ca[i]] = a0 - bw[ca[i]]
            aw[cb[i]] = a0 - bw[cb[i]]
        elif k == KIND_CAPACITOR:
            state[i] = aw[i]


@njit(cache=True)
def tree_block(kind, ca, cb, g1, g2, r0, state, vs, aw, bw,
               root_kind, rp1, rp2, drive, x,
               tap_idx, tap_kind, tap_sign, out):
    """Process a block through one tree, recording taps (ntaps, nsamples)."""
    for n in range(x.shape[0]):
        tree_step(kind, ca, cb, g1, g2, r0, state, vs, aw, bw,
                  root_kind, rp1, rp2, drive, x[n])
        for t in range(tap_idx.shape[0]):
            i = tap_idx[t]
            if tap_kind[t] == TAP_VOLTAGE:
                out[t, n] = tap_sign[t] * 0.5 * (aw[i] + bw[i])
            else:
                out[t, n] = tap_sign[t] * (aw[i] - bw[i]) / (2.0 * r0[i])


@njit(cache=True)
def gain_stage_block(
    x,
    # joint FF-1 / pre-amp tree (ideal-source root)
    k1, c1a, c1b, g1a, g1b, r01, st1, vs1, aw1, bw1,
    pre_idx, rail_idx, sign_pre, sign_ff1,
    # clipper tree (diode-pair root, driven leaf source)
    k2, c2a, c2b, g2a, g2b, r02, st2, vs2, aw2, bw2, d2, isat, nvt,
    clip_idx, sign_clip,
    # FF-2 tree (ideal-source root)
    k3, c3a, c3b, g3a, g3b, r03, st3, vs3, aw3, bw3,
    ff2_idx, sign_ff2,
    # fc = [amp b0, b1, a1, sum b0, b1, a1, rin]; fstate = [ax1, ay1, sx1, sy1]
    fc, fstate,
    out,
):
    """Fused traditional gain stage.

    Per sample: vin drives the joint FF-1/pre-amp tree; the pre-amp voltage
    tap feeds the nodal amp stage; the amp output drives the clipper and FF-2
    trees; the three branch currents sum into the nodal summing amplifier.
    `out` is (6, nsamples): output voltage, then the internal taps v_pre,
    v_amp, i_ff1, i_clip, i_ff2 for inspection.
    """
    ax1 = fstate[0]
    ay1 = fstate[1]
    sx1 = fstate[2]
    sy1 = fstate[3]
    for n in range(x.shape[0]):
        tree_step(k1, c1a, c1b, g1a, g1b, r01, st1, vs1, aw1, bw1,
                  ROOT_IDEAL_V, 0.0, 0.0, -1, x[n])
        v_pre = sign_pre * 0.5 * (aw1[pre_idx] + bw1[pre_idx])
        i_ff1 = sign_ff1 * (aw1[rail_idx] - bw1[rail_idx]) / (2.0 * r01[rail_idx])

        v_amp = fc[0] * v_pre + fc[1] * ax1 - fc[2] * ay1
        ax1 = v_pre
        ay1 = v_amp

        tree_step(k2, c2a, c2b, g2a, g2b, r02, st2, vs2, aw2, bw2,
                  ROOT_DIODE, isat, nvt, d2, v_amp)
        i_clip = sign_clip * (aw2[clip_idx] - bw2[clip_idx]) / (2.0 * r02[clip_idx])

        tree_step(k3, c3a, c3b, g3a, g3b, r03, st3, vs3, aw3, bw3,
                  ROOT_IDEAL_V, 0.0, 0.0, -1, v_amp)
        i_ff2 = sign_ff2 * (aw3[ff2_idx] - bw3[ff2_idx]) / (2.0 * r03[ff2_idx])

        u = (i_ff1 + i_clip + i_ff2) * fc[6]
        y = fc[3] * u + fc[4] * sx1 - fc[5] * sy1
        sx1 = u
        sy1 = y
        out[0, n] = y
        out[1, n] = v_pre
        out[2, n] = v_amp
        out[3, n] = i_ff1
        out[4, n] = i_clip
        out[5, n] = i_ff2
    fstate[0] = ax1
    fstate[1] = ay1
    fstate[2] = sx1
    fstate[3] = sy1


@njit(cache=True)
def gru_bank_block(x, wz, wr, wc, uz, ur, uc, bz, br, bc, wd, bd,
                   h, lo, fade, out):
    """Gain bank of GRU models with linear output crossfade.

    All models step on every sample (states stay warm); the output blends the
    bracketing models `lo` and `lo + 1` with weight `fade`. Weight layout:
    wz/wr/wc (models, units) input weights, uz/ur/uc (models, units, units)
    recurrent weights, bz/br/bc (models, units) biases, wd (models, units) and
    bd (models,) the dense head, h (models, units) hidden state.
    """
    nm, units = h.shape
    y = np.empty(nm)
    z = np.empty(units)
    r = np.empty(units)
    c = np.empty(units)
    for n in range(x.shape[0]):
        xn = x[n]
        for m in range(nm):
            for i in range(units):
                sz = 0.0
                sr = 0.0
                for j in range(units):
                    hj = h[m, j]
                    sz += uz[m, i, j] * hj
                    sr += ur[m, i, j] * hj
                z[i] = 1.0 / (1.0 + math.exp(-(wz[m, i] * xn + sz + bz[m, i])))
                r[i] = 1.0 / (1.0 + math.exp(-(wr[m, i] * xn + sr + br[m, i])))
            for i in range(units):
                sc = 0.0
                for j in range(units):
                    sc += uc[m, i, j] * h[m, j]
                c[i] = math.tanh(wc[m, i] * xn + r[i] * sc + bc[m, i])
            acc = bd[m]
            for i in range(units):
                hi = z[i] * h[m, i] + (1.0 - z[i]) * c[i]
                h[m, i] = hi
                acc += wd[m, i] * hi
            y[m] = acc
        out[n] = (1.0 - fade) * y[lo] + fade * y[lo + 1]
