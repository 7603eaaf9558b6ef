"""Trapezoidal modified-nodal-analysis circuit simulation.

Brute-force time-domain reference for validating the wave-digital circuits:
build the same netlist node by node, integrate capacitors with the
trapezoidal rule (companion conductance 2C/T plus a history source), treat
op-amps as ideal (v+ = v- constraint with a free output current) and solve
antiparallel diode pairs by per-sample Newton iteration on the full system.

This module intentionally knows nothing about wave variables or adaptors; it
shares no code with `wdf`/`circuits` so the two routes stay independent.

Node 0 is ground. Extra unknowns are appended for voltage-source and op-amp
output currents. `i_src` follows the MNA convention (current flowing into the
positive terminal), so the current a source delivers is its negative.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import lu_factor, lu_solve


class MnaError(Exception):
    pass


@dataclass
class MnaResult:
    v: np.ndarray        # (nsamples, nnodes + 1), column 0 is ground
    i_src: np.ndarray    # (nsamples, nsources)
    i_cap: np.ndarray    # (nsamples, ncaps), positive from n1 to n2
    i_diode: np.ndarray  # (nsamples, ndiodes), positive from n1 to n2


class MnaCircuit:
    def __init__(self, n_nodes: int):
        if n_nodes < 1:
            raise MnaError("need at least one non-ground node")
        self.n_nodes = n_nodes
        self.resistors: list[tuple[int, int, float]] = []
        self.capacitors: list[tuple[int, int, float]] = []
        self.sources: list[tuple[int, int]] = []
        self.opamps: list[tuple[int, int, int]] = []
        self.diodes: list[tuple[int, int, float, float, float]] = []

    def _check_node(self, n: int) -> None:
        if not 0 <= n <= self.n_nodes:
            raise MnaError(f"node {n} out of range 0..{self.n_nodes}")

    def resistor(self, n1: int, n2: int, r: float) -> int:
        self._check_node(n1)
        self._check_node(n2)
        if r <= 0:
            raise MnaError(f"resistance must be positive, got {r}")
        self.resistors.append((n1, n2, r))
        return len(self.resistors) - 1

    def capacitor(self, n1: int, n2: int, c: float) -> int:
        self._check_node(n1)
        self._check_node(n2)
        if c <= 0:
            raise MnaError(f"capacitance must be positive, got {c}")
        self.capacitors.append((n1, n2, c))
        return len(self.capacitors) - 1

    def vsource(self, n_plus: int, n_minus: int) -> int:
        self._check_node(n_plus)
        self._check_node(n_minus)
        self.sources.append((n_plus, n_minus))
        return len(self.sources) - 1

    def opamp(self, n_plus: int, n_minus: int, n_out: int) -> int:
        for n in (n_plus, n_minus, n_out):
            self._check_node(n)
        self.opamps.append((n_plus, n_minus, n_out))
        return len(self.opamps) - 1

    def diode_pair(self, n1: int, n2: int, isat: float = 2.52e-9,
                   vt: float = 25.85e-3, ideality: float = 1.75) -> int:
        self._check_node(n1)
        self._check_node(n2)
        self.diodes.append((n1, n2, isat, vt, ideality))
        return len(self.diodes) - 1

    # -- assembly helpers ---------------------------------------------------

    def _stamp_conductance(self, a: np.ndarray, n1: int, n2: int, g: float) -> None:
        if n1 > 0:
            a[n1 - 1, n1 - 1] += g
        if n2 > 0:
            a[n2 - 1, n2 - 1] += g
        if n1 > 0 and n2 > 0:
            a[n1 - 1, n2 - 1] -= g
            a[n2 - 1, n1 - 1] -= g

    def _base_matrix(self, fs: float) -> np.ndarray:
        n = self.n_nodes
        m = n + len(self.sources) + len(self.opamps)
        a = np.zeros((m, m))
        for n1, n2, r in self.resistors:
            self._stamp_conductance(a, n1, n2, 1.0 / r)
        for n1, n2, c in self.capacitors:
            self._stamp_conductance(a, n1, n2, 2.0 * c * fs)
        for k, (np_, nm_) in enumerate(self.sources):
            row = n + k
            if np_ > 0:
                a[np_ - 1, row] += 1.0
                a[row, np_ - 1] += 1.0
            if nm_ > 0:
                a[nm_ - 1, row] -= 1.0
                a[row, nm_ - 1] -= 1.0
        for k, (np_, nm_, nout) in enumerate(self.opamps):
            row = n + len(self.sources) + k
            if nout > 0:
                a[nout - 1, row] += 1.0
            if np_ > 0:
                a[row, np_ - 1] += 1.0
            if nm_ > 0:
                a[row, nm_ - 1] -= 1.0
        return a

    # -- simulation ---------------------------------------------------------

    def simulate(self, fs: float, nsamples: int,
                 sources: dict[int, np.ndarray | float] | None = None,
                 newton_tol: float = 1e-12, newton_max_iter: int = 300
                 ) -> MnaResult:
        """Run `nsamples` trapezoidal steps from a zero initial state.

        `sources` maps a source index to a waveform array or a constant;
        unspecified sources stay at zero.
        """
        n = self.n_nodes
        nsrc = len(self.sources)
        ncap = len(self.capacitors)
        ndio = len(self.diodes)
        m = n + nsrc + len(self.opamps)

        waves = np.zeros((nsrc, nsamples))
        if sources:
            for k, value in sources.items():
                if not 0 <= k < nsrc:
                    raise MnaError(f"no source with index {k}")
                waves[k, :] = value

        a0 = self._base_matrix(fs)
        linear = ndio == 0
        if linear:
            lu = lu_factor(a0)

        geq = np.array([2.0 * c * fs for _, _, c in self.capacitors])
        vcap = np.zeros(ncap)
        icap = np.zeros(ncap)
        vdio = np.zeros(ndio)

        out_v = np.zeros((nsamples, n + 1))
        out_isrc = np.zeros((nsamples, nsrc))
        out_icap = np.zeros((nsamples, ncap))
        out_idio = np.zeros((nsamples, ndio))

        def node_v(x: np.ndarray, node: int) -> float:
            return x[node - 1] if node > 0 else 0.0

        for t in range(nsamples):
            rhs0 = np.zeros(m)
            for k in range(nsrc):
                rhs0[n + k] = waves[k, t]
            ihist = np.empty(ncap)
            for k, (n1, n2, _) in enumerate(self.capacitors):
                ihist[k] = -geq[k] * vcap[k] - icap[k]
                if n1 > 0:
                    rhs0[n1 - 1] -= ihist[k]
                if n2 > 0:
                    rhs0[n2 - 1] += ihist[k]

            if linear:
                x = lu_solve(lu, rhs0)
            else:
                x = self._solve_nonlinear(a0, rhs0, vdio, node_v,
                                          newton_tol, newton_max_iter, t)

            out_v[t, 1:] = x[:n]
            out_isrc[t, :] = x[n:n + nsrc]
            for k, (n1, n2, _) in enumerate(self.capacitors):
                vd = node_v(x, n1) - node_v(x, n2)
                icap[k] = geq[k] * vd + ihist[k]
                vcap[k] = vd
                out_icap[t, k] = icap[k]
            for k, (n1, n2, isat, vt, ideality) in enumerate(self.diodes):
                vd = node_v(x, n1) - node_v(x, n2)
                vdio[k] = vd
                nvt = ideality * vt
                out_idio[t, k] = 2.0 * isat * math.sinh(
                    max(min(vd / nvt, 600.0), -600.0))

        return MnaResult(v=out_v, i_src=out_isrc, i_cap=out_icap,
                         i_diode=out_idio)

    def _solve_nonlinear(self, a0, rhs0, vdio, node_v, tol, max_iter, t):
        n = self.n_nodes
        vd = vdio.copy()
        x = None
        for _ in range(max_iter):
            a = a0.copy()
            rhs = rhs0.copy()
            for k, (n1, n2, isat, vt, ideality) in enumerate(self.diodes):
                nvt = ideality * vt
                arg = max(min(vd[k] / nvt, 600.0), -600.0)
                i0 = 2.0 * isat * math.sinh(arg)
                g = 2.0 * isat * math.cosh(arg) / nvt
                ieq = i0 - g * vd[k]
                self._stamp_conductance(a, n1, n2, g)
                if n1 > 0:
                    rhs[n1 - 1] -= ieq
                if n2 > 0:
                    rhs[n2 - 1] += ieq
            x = np.linalg.solve(a, rhs)
            delta = 0.0
            for k, (n1, n2, *_rest) in enumerate(self.diodes):
                vd_new = node_v(x, n1) - node_v(x, n2)
                delta = max(delta, abs(vd_new - vd[k]))
                # damp large excursions to keep sinh linearisation sane
                step = vd_new - vd[k]
                if abs(step) > 0.1:
                    step = math.copysign(0.1, step)
                vd[k] += step
            if delta < tol:
                vdio[:] = vd
                return x
        raise MnaError(
            f"diode Newton iteration did not converge at sample {t} "
            f"(last delta {delta:.3e})"
        )
