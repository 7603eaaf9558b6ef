"""Wave-domain sub-circuits of the Centaur gain stage.

Netlist (AC convention: the 4.5 V rail is signal ground, coupling caps start
uncharged). Three trees plus two first-order nodal stages:

* FF-1 / pre-amp joint tree, rooted in the input voltage:
      Vin -- C3 -- node A
      node A -- Rload -- gnd            (pre-amp input load; v_pre tap)
      node A -- R7 -- node B
      node B -- C16 -- gnd
      node B -- R19 -- Rrail -- gnd     (rail branch; i_ff1 tap at Rrail)
  as a tree: S1{ C3, P0{ Rload, S2{ R7, P1{ C16, S3{ R19, Rrail }}}}}.
* Amp stage (nodal): non-inverting op-amp, H(s) = 1 + Rf / (Rg + RV1a + 1/sCg)
  with RV1a the upper segment of the gain pot; v_pre in, v_amp out.
* Clipper tree, rooted in the diode pair:
      v_amp -- Rdrive -- Cin -- node D
      node D -- diode pair -- gnd
      node D -- Rout -- gnd             (i_clip tap at Rout)
  as a tree: diodes over P{ S{ Vsrc(Rdrive), Cin }, Rout }.
* FF-2 tree, rooted in the amp output voltage:
      v_amp -- Rsrc -- C12 -- Rout -- gnd   (i_ff2 tap at Rout)
  where Rsrc = R13-equivalent + the lower gain-pot segment.
* Summing amplifier (nodal): inverting, v_out = -Zf * (i_ff1 + i_clip + i_ff2)
  with Zf = Rf || 1/sCf, realized as a first-order section driven by the
  summed current scaled by a reference resistance.

The MNA reference simulation in the tests consumes this same netlist; the
trees are correct exactly when they reproduce it.

Tap signs: series adaptors orient child ports around the loop, so a tap's
wave-domain quantity can be the negative of the schematic quantity. The
builders pin each tap's sign to the schematic convention (current flowing
from the node into the tap element toward ground, voltages node-to-ground);
signs were fixed by comparing against the MNA reference once and are asserted
by the oracle tests permanently.
"""

from __future__ import annotations

import numpy as np

from . import kernels
from .filters import (
    FirstOrderCoeffs,
    MissingComponentError,
    StageConfig,
    stage_coeffs,
)
from .wdf import (
    Capacitor,
    DiodePair,
    IdealVoltageSource,
    ParallelAdaptor,
    Resistor,
    ResistiveVoltageSource,
    SeriesAdaptor,
    TreeStructureError,
    WdfNode,
    WdfTree,
)

TAP_KINDS = ("voltage", "current")

# Minimum resistance for either potentiometer segment. Keeps every port
# resistance positive at the track ends.
MIN_SEGMENT_OHMS = 1.0


class Tap:
    """A named probe on a tree node: schematic voltage or branch current."""

    def __init__(self, node: WdfNode, kind: str, sign: float):
        if kind not in TAP_KINDS:
            raise ValueError(f"unknown tap kind {kind!r}")
        self.node = node
        self.kind = kind
        self.sign = sign

    def read(self) -> float:
        value = self.node.voltage() if self.kind == "voltage" else self.node.current()
        return self.sign * value


def _component(config: dict, key: str) -> float:
    try:
        return float(config[key])
    except KeyError:
        raise MissingComponentError(f"missing component value {key!r}") from None


def gain_split(gain: float, rv1: float) -> tuple[float, float]:
    """Split the gain pot into (upper, lower) track segments, each >= 1 ohm.

    The upper segment sits in the amp stage's feedback leg, the lower in
    series with FF-2's source resistor; gain=1 minimizes the upper segment
    (maximum amp gain).
    """
    if not 0.0 <= gain <= 1.0:
        raise ValueError(f"gain must be in [0, 1], got {gain}")
    upper = max((1.0 - gain) * rv1, MIN_SEGMENT_OHMS)
    lower = max(gain * rv1, MIN_SEGMENT_OHMS)
    return upper, lower


def amp_stage_coeffs(config: dict, gain: float, fs: float) -> FirstOrderCoeffs:
    """Digital coefficients of the non-inverting amp at a gain setting."""
    upper, _ = gain_split(gain, _component(config, "gain.rv1"))
    cfg = StageConfig(
        "amp_stage",
        {
            "rf": _component(config, "amp.rf"),
            "rg": _component(config, "amp.rg"),
            "cg": _component(config, "amp.cg"),
            "rv1a": upper,
        },
    )
    return stage_coeffs(cfg, fs)


def summing_stage_coeffs(config: dict, fs: float) -> FirstOrderCoeffs:
    """Digital coefficients of the inverting summing amplifier."""
    cfg = StageConfig(
        "summing_amp",
        {
            "rf": _component(config, "sum.rf"),
            "rin": _component(config, "sum.rin"),
            "cf": _component(config, "sum.cf"),
        },
    )
    return stage_coeffs(cfg, fs)


def build_ff1_preamp(config: dict, fs: float) -> WdfTree:
    """Joint FF-1 / pre-amp input tree (shared input capacitor).

    Taps: ``v_pre`` (voltage into the amp stage) and ``i_ff1`` (current into
    the summing node through the rail branch).
    """
    c3 = Capacitor(_component(config, "ff1.c3"), fs)
    rload = Resistor(_component(config, "pre.rload"))
    r7 = Resistor(_component(config, "ff1.r7"))
    c16 = Capacitor(_component(config, "ff1.c16"), fs)
    r19 = Resistor(_component(config, "ff1.r19"))
    rail = Resistor(_component(config, "ff1.rrail"))

    s3 = SeriesAdaptor(r19, rail)
    p1 = ParallelAdaptor(c16, s3)
    s2 = SeriesAdaptor(r7, p1)
    p0 = ParallelAdaptor(rload, s2)
    s1 = SeriesAdaptor(c3, p0)
    tree = WdfTree(IdealVoltageSource(), s1)
    # Children of S1 carry loop-oriented port voltages: the parallel section's
    # port reads -(node A voltage). Current into the rail branch keeps the
    # element orientation through S3's loop.
    tree.taps = {
        "v_pre": Tap(rload, "voltage", -1.0),
        "i_ff1": Tap(rail, "current", -1.0),
    }
    return tree


def build_clipper(config: dict, fs: float) -> WdfTree:
    """Diode-pair clipping stage driven by the amp output.

    Taps: ``i_clip`` (current into the summing node through Rout) and
    ``v_diode`` (voltage across the pair).
    """
    source = ResistiveVoltageSource(0.0, _component(config, "clip.rdrive"))
    cin = Capacitor(_component(config, "clip.cin"), fs)
    rout = Resistor(_component(config, "clip.rout"))
    root = DiodePair(
        isat=_component(config, "clip.isat"),
        vt=_component(config, "clip.vt"),
        ideality=_component(config, "clip.ideality"),
    )

    drive_leg = SeriesAdaptor(source, cin)
    body = ParallelAdaptor(drive_leg, rout)
    tree = WdfTree(root, body, drive=source)
    tree.taps = {
        "i_clip": Tap(rout, "current", -1.0),
        "v_diode": Tap(rout, "voltage", -1.0),
    }
    return tree


def build_ff2(config: dict, gain: float, fs: float) -> WdfTree:
    """Second feed-forward branch; source resistance tracks the gain split.

    Tap: ``i_ff2`` (current into the summing node through Rout). The
    gain-dependent resistor is exposed as ``tree.source_resistor`` so the
    split can be retuned without rebuilding.
    """
    _, lower = gain_split(gain, _component(config, "gain.rv1"))
    rsrc = Resistor(_component(config, "ff2.rsrc") + lower)
    c12 = Capacitor(_component(config, "ff2.c12"), fs)
    rout = Resistor(_component(config, "ff2.rout"))

    inner = SeriesAdaptor(c12, rout)
    body = SeriesAdaptor(rsrc, inner)
    tree = WdfTree(IdealVoltageSource(), body)
    tree.taps = {"i_ff2": Tap(rout, "current", 1.0)}
    tree.source_resistor = rsrc
    return tree


# ---------------------------------------------------------------------------
# flattening for the compiled kernels
# ---------------------------------------------------------------------------

def _postorder(node: WdfNode):
    for child in (getattr(node, "left", None), getattr(node, "right", None)):
        if child is not None:
            yield from _postorder(child)
    yield node


class FlatTree:
    """Parallel-array image of a tree body, evaluated by kernels.tree_step.

    Owns the live capacitor states for kernel processing; ``sync`` refreshes
    coefficients after re-adaptation without touching state. ``open_root``
    replaces the root law with an open circuit (used for bound estimation).
    """

    def __init__(self, tree: WdfTree, open_root: bool = False):
        self.tree = tree
        order = list(_postorder(tree.body))
        self._index = {id(node): i for i, node in enumerate(order)}
        self.order = order
        n = len(order)
        self.kind = np.empty(n, dtype=np.int64)
        self.ca = np.full(n, -1, dtype=np.int64)
        self.cb = np.full(n, -1, dtype=np.int64)
        self.g1 = np.zeros(n)
        self.g2 = np.zeros(n)
        self.r0 = np.zeros(n)
        self.state = np.zeros(n)
        self.vs = np.zeros(n)
        self.aw = np.zeros(n)
        self.bw = np.zeros(n)

        for i, node in enumerate(order):
            if isinstance(node, Resistor):
                self.kind[i] = kernels.KIND_RESISTOR
            elif isinstance(node, Capacitor):
                self.kind[i] = kernels.KIND_CAPACITOR
            elif isinstance(node, ResistiveVoltageSource):
                self.kind[i] = kernels.KIND_VSOURCE
            elif isinstance(node, SeriesAdaptor):
                self.kind[i] = kernels.KIND_SERIES
            elif isinstance(node, ParallelAdaptor):
                self.kind[i] = kernels.KIND_PARALLEL
            else:
                raise TreeStructureError(
                    f"cannot flatten body element {type(node).__name__}"
                )
            if isinstance(node, (SeriesAdaptor, ParallelAdaptor)):
                self.ca[i] = self._index[id(node.left)]
                self.cb[i] = self._index[id(node.right)]

        root = tree.root
        self.rp1 = 0.0
        self.rp2 = 0.0
        if open_root:
            self.root_kind = kernels.ROOT_OPEN
        elif isinstance(root, IdealVoltageSource):
            self.root_kind = kernels.ROOT_IDEAL_V
        elif isinstance(root, DiodePair):
            self.root_kind = kernels.ROOT_DIODE
            self.rp1 = root.isat
            self.rp2 = root.ideality * root.vt
        else:
            raise TreeStructureError(
                f"cannot flatten root element {type(root).__name__}"
            )

        if tree.drive is None or tree.drive is root:
            self.drive = -1
            if self.root_kind != kernels.ROOT_IDEAL_V and tree.drive is root:
                raise TreeStructureError("root drive requires an ideal source root")
        else:
            self.drive = self._index[id(tree.drive)]
        self.sync()

    def index_of(self, node: WdfNode) -> int:
        return self._index[id(node)]

    def sync(self) -> None:
        """Refresh scattering coefficients and source values from the tree."""
        for i, node in enumerate(self.order):
            self.r0[i] = node.r0
            if isinstance(node, (SeriesAdaptor, ParallelAdaptor)):
                self.g1[i] = node.g1
                self.g2[i] = node.g2
            elif isinstance(node, ResistiveVoltageSource):
                self.vs[i] = node.vs

    def reset(self) -> None:
        self.state[:] = 0.0
        self.aw[:] = 0.0
        self.bw[:] = 0.0

    def step(self, vin: float = 0.0) -> None:
        kernels.tree_step(
            self.kind, self.ca, self.cb, self.g1, self.g2, self.r0,
            self.state, self.vs, self.aw, self.bw,
            self.root_kind, self.rp1, self.rp2, self.drive, vin,
        )

    def tap_arrays(self, taps: list[Tap]) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        idx = np.array([self.index_of(t.node) for t in taps], dtype=np.int64)
        kind = np.array(
            [kernels.TAP_VOLTAGE if t.kind == "voltage" else kernels.TAP_CURRENT
             for t in taps],
            dtype=np.int64,
        )
        sign = np.array([t.sign for t in taps])
        return idx, kind, sign

    def process_block(self, x: np.ndarray, taps: list[Tap]) -> np.ndarray:
        """Run a block, returning one row of tap readings per tap."""
        x = np.ascontiguousarray(x, dtype=np.float64)
        tap_idx, tap_kind, tap_sign = self.tap_arrays(taps)
        out = np.empty((len(taps), x.shape[0]))
        kernels.tree_block(
            self.kind, self.ca, self.cb, self.g1, self.g2, self.r0,
            self.state, self.vs, self.aw, self.bw,
            self.root_kind, self.rp1, self.rp2, self.drive, x,
            tap_idx, tap_kind, tap_sign, out,
        )
        return out

    def root_waves(self) -> tuple[float, float]:
        """(a, b) seen by the root after the last step."""
        top = len(self.order) - 1
        return self.bw[top], self.aw[top]


class GainStageCircuits:
    """The three wave-domain trees of the gain stage plus their kernel images.

    Holds the filter states of the nodal amp and summing stages so block
    processing chains exactly; their coefficients are supplied per call (they
    follow the smoothed gain control).
    """

    def __init__(self, config: dict, fs: float, gain: float = 0.5):
        self.config = dict(config)
        self.fs = fs
        self.ff1_preamp = build_ff1_preamp(config, fs)
        self.clipper = build_clipper(config, fs)
        self.ff2 = build_ff2(config, gain, fs)
        self.gain = gain

        self._flat_ff1 = FlatTree(self.ff1_preamp)
        self._flat_clip = FlatTree(self.clipper)
        self._flat_ff2 = FlatTree(self.ff2)

        t1 = self.ff1_preamp.taps
        self._pre_idx = self._flat_ff1.index_of(t1["v_pre"].node)
        self._rail_idx = self._flat_ff1.index_of(t1["i_ff1"].node)
        self._sign_pre = t1["v_pre"].sign
        self._sign_ff1 = t1["i_ff1"].sign
        t2 = self.clipper.taps
        self._clip_idx = self._flat_clip.index_of(t2["i_clip"].node)
        self._sign_clip = t2["i_clip"].sign
        t3 = self.ff2.taps
        self._ff2_idx = self._flat_ff2.index_of(t3["i_ff2"].node)
        self._sign_ff2 = t3["i_ff2"].sign

        self._rin = _component(config, "sum.rin")
        self._fc = np.zeros(7)
        self._fstate = np.zeros(4)

    def set_gain(self, gain: float) -> None:
        """Move the gain pot: retunes FF-2's source resistance and re-adapts."""
        rv1 = _component(self.config, "gain.rv1")
        _, lower = gain_split(gain, rv1)
        self.ff2.source_resistor.r = _component(self.config, "ff2.rsrc") + lower
        self.ff2.adapt()
        self._flat_ff2.sync()
        self.gain = gain

    def reset(self) -> None:
        for tree, flat in (
            (self.ff1_preamp, self._flat_ff1),
            (self.clipper, self._flat_clip),
            (self.ff2, self._flat_ff2),
        ):
            tree.reset()
            flat.reset()
        self._fstate[:] = 0.0

    def process_block_with_taps(
        self,
        amp_coeffs: FirstOrderCoeffs,
        summing_coeffs: FirstOrderCoeffs,
        block: np.ndarray,
    ) -> np.ndarray:
        """Full gain stage over a block.

        Returns a (6, n) array: rows are output, v_pre, v_amp, i_ff1, i_clip,
        i_ff2.
        """
        x = np.ascontiguousarray(block, dtype=np.float64)
        fc = self._fc
        fc[0] = amp_coeffs.b0
        fc[1] = amp_coeffs.b1
        fc[2] = amp_coeffs.a1
        fc[3] = summing_coeffs.b0
        fc[4] = summing_coeffs.b1
        fc[5] = summing_coeffs.a1
        fc[6] = self._rin
        out = np.empty((6, x.shape[0]))
        f1, f2, f3 = self._flat_ff1, self._flat_clip, self._flat_ff2
        kernels.gain_stage_block(
            x,
            f1.kind, f1.ca, f1.cb, f1.g1, f1.g2, f1.r0, f1.state, f1.vs,
            f1.aw, f1.bw, self._pre_idx, self._rail_idx,
            self._sign_pre, self._sign_ff1,
            f2.kind, f2.ca, f2.cb, f2.g1, f2.g2, f2.r0, f2.state, f2.vs,
            f2.aw, f2.bw, f2.drive, f2.rp1, f2.rp2,
            self._clip_idx, self._sign_clip,
            f3.kind, f3.ca, f3.cb, f3.g1, f3.g2, f3.r0, f3.state, f3.vs,
            f3.aw, f3.bw, self._ff2_idx, self._sign_ff2,
            fc, self._fstate, out,
        )
        return out


def gain_stage_process_traditional(
    circuits: GainStageCircuits,
    amp_coeffs: FirstOrderCoeffs,
    summing_coeffs: FirstOrderCoeffs,
    block: np.ndarray,
) -> np.ndarray:
    """Process a block through the traditional gain stage; returns the output."""
    return circuits.process_block_with_taps(amp_coeffs, summing_coeffs, block)[0]
