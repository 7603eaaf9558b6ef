"""Wave digital filter building blocks.

Voltages and currents at a port with reference resistance R0 map to wave
variables

    a = v + R0 * i        (incident)
    b = v - R0 * i        (reflected)

so v = (a + b) / 2 and i = (a - b) / (2 * R0). One-port elements reflect
incident waves according to their discretised constitutive law (capacitors use
the bilinear transform, which makes a capacitor a unit delay in the wave
domain). Three-port series/parallel adaptors connect elements into a tree
whose upward-facing ports are adapted (reflection-free), so one upward pass,
one root reflection and one downward pass evaluate the whole circuit per
sample with no delay-free loops.

The single non-adaptable element of a circuit (an ideal voltage source, or
the diode pair nonlinearity) must sit at the root of the tree.

Sign convention: `i` is the current flowing into an element from its port.
Port quantities of series-adaptor children carry the series-loop orientation,
so a tap may need an explicit sign to express a schematic-oriented quantity;
circuit builders own those signs.
"""

from __future__ import annotations

import math


class WdfError(Exception):
    """Base class for wave-domain structural and numerical errors."""


class TreeStructureError(WdfError):
    """Invalid tree: misplaced non-adaptable element or malformed node."""


class ConvergenceError(WdfError):
    """Nonlinear root solve failed to reach the residual tolerance."""

    def __init__(self, residual: float, iterations: int):
        self.residual = residual
        self.iterations = iterations
        super().__init__(
            f"diode solve stopped after {iterations} iterations "
            f"with |residual| = {residual:.3e}"
        )


def wave_to_voltage(a: float, b: float) -> float:
    return 0.5 * (a + b)


def wave_to_current(a: float, b: float, r0: float) -> float:
    if r0 <= 0.0:
        raise ValueError(f"port resistance must be positive, got {r0}")
    return (a - b) / (2.0 * r0)


def voltage_current_to_waves(v: float, i: float, r0: float) -> tuple[float, float]:
    if r0 <= 0.0:
        raise ValueError(f"port resistance must be positive, got {r0}")
    return v + r0 * i, v - r0 * i


def diode_pair_reflect(
    a: float,
    r0: float,
    isat: float = 2.52e-9,
    vt: float = 25.85e-3,
    ideality: float = 1.75,
    tol: float = 1e-12,
    max_iter: int = 100,
) -> float:
    """Reflected wave of an antiparallel diode pair terminating a port.

    Solves  v + 2*R0*Is*sinh(v / (n*Vt)) = a  for the port voltage v and
    returns b = 2*v - a. Newton iteration with a bisection fallback on the
    bracket [0, min(|a|, n*Vt*asinh(|a| / (2*R0*Is)))]; f is strictly
    increasing there and both ends of the bracket bound the root, so the
    sinh never overflows and the bracket never fails. Solved for |a| and
    mirrored, which makes the result exactly odd in a.
    """
    if r0 <= 0.0:
        raise ValueError(f"port resistance must be positive, got {r0}")
    if a == 0.0:
        return 0.0
    sign = 1.0 if a > 0.0 else -1.0
    amag = abs(a)
    nvt = ideality * vt
    two_r0_isat = 2.0 * r0 * isat

    def residual(v: float) -> float:
        return v + two_r0_isat * math.sinh(min(v / nvt, 600.0)) - amag

    # the residual is computed against amag, so |a|*eps is its noise floor;
    # scale the tolerance accordingly for very hot drives
    tol = tol * max(1.0, amag)
    lo, hi = 0.0, amag
    if two_r0_isat > 0.0:
        hi = min(hi, nvt * math.asinh(amag / two_r0_isat))
    # seed at the tighter of the small-signal and hard-clipping asymptotes
    g0 = 2.0 * isat / nvt
    v = min(amag / (1.0 + r0 * g0), hi)
    f = residual(v)
    it = 0
    while abs(f) > tol and it < max_iter:
        if f > 0.0:
            hi = v
        else:
            lo = v
        slope = 1.0 + (two_r0_isat / nvt) * math.cosh(min(v / nvt, 600.0))
        v_new = v - f / slope
        if not lo < v_new < hi:
            v_new = 0.5 * (lo + hi)
        v = v_new
        f = residual(v)
        it += 1
    if abs(f) > tol:
        raise ConvergenceError(abs(f), it)
    b = 2.0 * v - amag
    return sign * b


# ---------------------------------------------------------------------------
# one-port elements
# ---------------------------------------------------------------------------

class WdfNode:
    """Common port state: upward resistance r0 and the last (a, b) waves."""

    adaptable = True

    def __init__(self):
        self.r0 = 0.0
        self.a = 0.0
        self.b = 0.0

    # tree evaluation interface
    def adapt(self) -> None:
        raise NotImplementedError

    def reflected(self) -> float:
        raise NotImplementedError

    def incident(self, a: float) -> None:
        raise NotImplementedError

    # taps
    def voltage(self) -> float:
        return wave_to_voltage(self.a, self.b)

    def current(self) -> float:
        return wave_to_current(self.a, self.b, self.r0)


class Resistor(WdfNode):
    """R0 = R makes the port matched: nothing reflects."""

    def __init__(self, r: float):
        super().__init__()
        if r <= 0.0:
            raise ValueError(f"resistance must be positive, got {r}")
        self.r = r

    def adapt(self) -> None:
        self.r0 = self.r

    def reflected(self) -> float:
        self.b = 0.0
        return self.b

    def incident(self, a: float) -> None:
        self.a = a

    def reflect_root(self, a: float, r0_up: float) -> float:
        # unmatched root resistor: classic reflection coefficient
        rho = (self.r - r0_up) / (self.r + r0_up)
        self.a = a
        self.b = rho * a
        self.r0 = r0_up
        return self.b


class Capacitor(WdfNode):
    """Bilinear-transform capacitor: R0 = T / (2C), a pure unit delay."""

    def __init__(self, c: float, fs: float):
        super().__init__()
        if c <= 0.0 or fs <= 0.0:
            raise ValueError("capacitance and sample rate must be positive")
        self.c = c
        self.fs = fs
        self.state = 0.0

    def adapt(self) -> None:
        self.r0 = 1.0 / (2.0 * self.fs * self.c)

    def reflected(self) -> float:
        self.b = self.state
        return self.b

    def incident(self, a: float) -> None:
        self.a = a
        self.state = a

    def reset(self) -> None:
        self.state = 0.0


class ResistiveVoltageSource(WdfNode):
    """Thevenin source: R0 = Rs absorbs the match, reflected wave is Vs."""

    def __init__(self, vs: float, rs: float):
        super().__init__()
        if rs <= 0.0:
            raise ValueError(f"source resistance must be positive, got {rs}")
        self.vs = vs
        self.rs = rs

    def adapt(self) -> None:
        self.r0 = self.rs

    def reflected(self) -> float:
        self.b = self.vs
        return self.b

    def incident(self, a: float) -> None:
        self.a = a


class IdealVoltageSource(WdfNode):
    """Zero-impedance source; reflection depends on the incident wave, so it
    can only live at the root."""

    adaptable = False

    def __init__(self, vs: float = 0.0):
        super().__init__()
        self.vs = vs

    def reflect_root(self, a: float, r0_up: float) -> float:
        self.a = a
        self.b = 2.0 * self.vs - a
        self.r0 = r0_up
        return self.b


class DiodePair(WdfNode):
    """Antiparallel Shockley pair; instantaneous nonlinearity, root only."""

    adaptable = False

    def __init__(self, isat: float = 2.52e-9, vt: float = 25.85e-3,
                 ideality: float = 1.75):
        super().__init__()
        self.isat = isat
        self.vt = vt
        self.ideality = ideality

    def reflect_root(self, a: float, r0_up: float) -> float:
        self.a = a
        self.r0 = r0_up
        self.b = diode_pair_reflect(a, r0_up, self.isat, self.vt, self.ideality)
        return self.b


# ---------------------------------------------------------------------------
# three-port adaptors
# ---------------------------------------------------------------------------

class SeriesAdaptor(WdfNode):
    """Series connection of two children; upward port adapted to R1 + R2."""

    def __init__(self, left: WdfNode, right: WdfNode):
        super().__init__()
        self.left = left
        self.right = right
        self.g1 = 0.0
        self.g2 = 0.0
        self._b1 = 0.0
        self._b2 = 0.0

    def adapt(self) -> None:
        self.left.adapt()
        self.right.adapt()
        r1 = self.left.r0
        r2 = self.right.r0
        self.r0 = r1 + r2
        self.g1 = r1 / (r1 + r2)
        self.g2 = r2 / (r1 + r2)

    def reflected(self) -> float:
        self._b1 = self.left.reflected()
        self._b2 = self.right.reflected()
        self.b = -(self._b1 + self._b2)
        return self.b

    def incident(self, a: float) -> None:
        self.a = a
        s = self._b1 + self._b2 + a
        self.left.incident(self._b1 - self.g1 * s)
        self.right.incident(self._b2 - self.g2 * s)


class ParallelAdaptor(WdfNode):
    """Parallel connection of two children; upward port adapted to G1 + G2."""

    def __init__(self, left: WdfNode, right: WdfNode):
        super().__init__()
        self.left = left
        self.right = right
        self.g1 = 0.0
        self.g2 = 0.0
        self._b1 = 0.0
        self._b2 = 0.0

    def adapt(self) -> None:
        self.left.adapt()
        self.right.adapt()
        gl = 1.0 / self.left.r0
        gr = 1.0 / self.right.r0
        self.r0 = 1.0 / (gl + gr)
        self.g1 = gl / (gl + gr)
        self.g2 = gr / (gl + gr)

    def reflected(self) -> float:
        self._b1 = self.left.reflected()
        self._b2 = self.right.reflected()
        self.b = self.g1 * self._b1 + self.g2 * self._b2
        return self.b

    def incident(self, a: float) -> None:
        self.a = a
        a0 = self.g1 * self._b1 + self.g2 * self._b2 + a
        self.left.incident(a0 - self._b1)
        self.right.incident(a0 - self._b2)


# ---------------------------------------------------------------------------
# tree assembly and evaluation
# ---------------------------------------------------------------------------

def _walk(node: WdfNode):
    yield node
    for child in (getattr(node, "left", None), getattr(node, "right", None)):
        if child is not None:
            yield from _walk(child)


class WdfTree:
    """A root element facing an adapted body of elements and adaptors.

    `drive` names the element whose source value tracks the input sample: the
    root itself when the root is an ideal voltage source, or any resistive
    source leaf for nonlinear-rooted trees.
    """

    def __init__(self, root: WdfNode, body: WdfNode,
                 drive: WdfNode | None = None):
        self.root = root
        self.body = body
        if drive is None and isinstance(root, IdealVoltageSource):
            drive = root
        self.drive = drive
        self.taps: dict = {}  # named probes, attached by circuit builders
        self._validate()
        self.adapt()

    def _validate(self) -> None:
        if not hasattr(self.root, "reflect_root"):
            raise TreeStructureError(
                f"{type(self.root).__name__} cannot act as a tree root"
            )
        for node in _walk(self.body):
            if not node.adaptable:
                raise TreeStructureError(
                    f"non-adaptable element {type(node).__name__} inside the "
                    "body; ideal sources and diode pairs must be the root"
                )
        if self.drive is not None and not isinstance(
                self.drive, (ResistiveVoltageSource, IdealVoltageSource)):
            raise TreeStructureError("drive must be a voltage source element")

    def adapt(self) -> None:
        self.body.adapt()

    def nodes(self) -> list[WdfNode]:
        return list(_walk(self.body))

    def reset(self) -> None:
        for node in _walk(self.body):
            if isinstance(node, Capacitor):
                node.reset()

    def process_sample(self, vin: float = 0.0) -> tuple[float, float]:
        """Evaluate one sample; returns the root (a, b) waves."""
        if self.drive is not None:
            self.drive.vs = vin
        b_top = self.body.reflected()
        a_top = self.root.reflect_root(b_top, self.body.r0)
        self.body.incident(a_top)
        return self.root.a, self.root.b
