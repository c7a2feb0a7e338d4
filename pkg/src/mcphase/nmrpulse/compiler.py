"""Lower gate-level circuits to pulse sequences for a weakly coupled spin system."""

from __future__ import annotations

import itertools
import logging
import math
from typing import Mapping, Sequence

import numpy as np

from ..gatelib import (
    Circuit,
    ControlledPhasePrimitive,
    ControlledZRot,
    GlobalPhase,
    Hadamard,
    MultiControlledNot,
    PauliX,
    XRot,
    YRot,
    ZRot,
    circuit_unitary,
)
from ..qstate import distance_up_to_global_phase, embed_operator
from .dynamics import CompileError, sequence_unitary
from .sequence import Delay, HardPulse, JDelay, PulseSequence, SpinSelectivePulse, TransitionSelectivePulse
from .system import SpinSystem

log = logging.getLogger(__name__)


def zrot_pulses(spins: tuple[int, ...], angle: float) -> list:
    """Composite z-rotation ``exp(-i*angle*Iz)`` on each spin from three hard pulses."""
    return [
        HardPulse(spins, math.pi / 2, "y"),
        HardPulse(spins, angle, "x"),
        HardPulse(spins, -math.pi / 2, "y"),
    ]


def selective_zrot_sequence(sys: SpinSystem, spin, refocus, angle: float,
                            pulse_width: float = 0.0) -> PulseSequence:
    """``exp(-i*angle*Iz)`` on ``spin`` from free precession, refocusing ``refocus``.

    Emits ``t - [pi]_y(refocus) - 2t - [-pi]_y(refocus) - t``. Over the net
    ``4t`` only the Zeeman term of ``spin`` survives, giving a rotation of
    ``8*pi*nu*t`` where ``nu`` is its offset from the carrier. ``t`` is wrapped
    into one ``4*pi`` period so it is never negative. ``pulse_width`` shortens
    each outer delay by half a pulse for finite-length refocusing pulses; the
    simulator itself treats pulses as instantaneous.
    """
    i, j = sys.index(spin), sys.index(refocus)
    if i == j:
        raise ValueError("spin and refocusing spin must differ")
    others = [k for k in sys.active if k not in (i, j)]
    if others:
        raise ValueError(f"decouple {[sys.labels[k] for k in others]} before a delay-based z-rotation")
    if not (sys.is_active(i) and sys.is_active(j)):
        raise ValueError("both spins must be active")
    nu = sys.offsets[i]
    if nu == sys.offsets[j] or nu == 0:
        raise ValueError(f"zero frequency difference for {sys.labels[i]}; it cannot precess selectively")
    period = 1 / (2 * abs(nu))
    t = (-angle / (8 * math.pi * nu)) % period
    t -= pulse_width / 2
    if t < 0:
        t += period
    elements = [
        Delay(t),
        SpinSelectivePulse(j, math.pi, "y"),
        Delay(2 * t),
        SpinSelectivePulse(j, -math.pi, "y"),
        Delay(t),
    ]
    return PulseSequence(sys, elements)


def _spin_map(c: Circuit, sys: SpinSystem, qubit_map) -> list[int]:
    if qubit_map is None:
        if c.n_qubits > sys.n_spins:
            raise CompileError(f"{c.n_qubits} qubits do not fit on {sys.n_spins} spins")
        return list(range(c.n_qubits))
    if isinstance(qubit_map, Mapping):
        spins = [sys.index(qubit_map[q]) for q in range(c.n_qubits)]
    else:
        spins = [sys.index(s) for s in qubit_map]
    if len(spins) != c.n_qubits or len(set(spins)) != len(spins):
        raise CompileError("qubit map must send each circuit qubit to a distinct spin")
    return spins


def _group_single_qubit(ops):
    """Yield ``(first_index, [gates])`` merging runs of identical single-qubit gates."""
    k = 0
    while k < len(ops):
        g = ops[k]
        group = [g]
        if isinstance(g, (XRot, YRot, ZRot, Hadamard, PauliX)):
            used = {g.qubit}
            while k + len(group) < len(ops):
                h = ops[k + len(group)]
                if type(h) is not type(g) or getattr(h, "angle", None) != getattr(g, "angle", None) \
                        or h.qubit in used:
                    break
                group.append(h)
                used.add(h.qubit)
        yield k, group
        k += len(group)


class _Emitter:
    def __init__(self, sys, spins, physical_delays, exact_mcx):
        self.sys = sys
        self.spins = spins
        self.physical_delays = physical_delays
        self.exact_mcx = exact_mcx
        self.elements = []
        self.phase = 0.0
        self.notes = []

    def jdelay(self, a, b, tau, index):
        if self.sys.coupling(a, b) == 0:
            raise CompileError(f"spins {self.sys.labels[a]} and {self.sys.labels[b]} are not coupled",
                               index)
        if not self.physical_delays:
            self.elements.append(JDelay((a, b), tau))
            return
        others = [k for k in self.sys.active if k not in (a, b)]
        if others:
            raise CompileError(
                f"physical delays need {[self.sys.labels[k] for k in others]} decoupled", index)
        # exp(-i 2 pi J tau IzIz) repeats up to a sign every 2/J
        period = 2 / abs(self.sys.coupling(a, b))
        wrapped = tau % period
        turns = round((wrapped - tau) / period)
        if turns:
            self.phase += turns * math.pi
            self.notes.append(f"op {index}: coupling delay {tau!r} s wrapped to {wrapped!r} s")
            log.info("wrapped coupling delay %r -> %r", tau, wrapped)
        self.elements += [
            Delay(wrapped / 2),
            HardPulse((a, b), math.pi, "y"),
            Delay(wrapped / 2),
            HardPulse((a, b), -math.pi, "y"),
        ]

    def phase_gate(self, pattern: str, angle: float, spins: Sequence[int], index):
        """exp(i*angle) on the basis states where ``spins`` read ``pattern``."""
        signs = [1 if b == "1" else -1 for b in pattern]
        if len(spins) == 1:
            self.elements += zrot_pulses((spins[0],), signs[0] * angle)
            self.phase += angle / 2
        elif len(spins) == 2:
            a, b = spins
            coupling = self.sys.coupling(a, b)
            if coupling == 0:
                raise CompileError(f"spins {self.sys.labels[a]} and {self.sys.labels[b]} are not coupled",
                                   index)
            self.jdelay(a, b, -signs[0] * signs[1] * angle / (2 * math.pi * coupling), index)
            if signs[0] == signs[1]:
                self.elements += zrot_pulses((a, b), signs[0] * angle / 2)
            else:
                self.elements += zrot_pulses((a,), signs[0] * angle / 2)
                self.elements += zrot_pulses((b,), signs[1] * angle / 2)
            self.phase += angle / 4
        else:
            raise CompileError(f"phase gate on {len(spins)} spins has no native realization", index)

    def gate(self, index, group):
        g = group[0]
        spins = tuple(self.spins[h.qubit] for h in group) if hasattr(g, "qubit") else ()
        if isinstance(g, ZRot):
            self.elements += zrot_pulses(spins, g.angle)
        elif isinstance(g, XRot):
            self.elements.append(HardPulse(spins, g.angle, "x"))
        elif isinstance(g, YRot):
            self.elements.append(HardPulse(spins, g.angle, "y"))
        elif isinstance(g, PauliX):
            self.elements.append(HardPulse(spins, math.pi, "x"))
            self.phase += len(spins) * math.pi / 2
        elif isinstance(g, Hadamard):
            self.elements += [HardPulse(spins, math.pi / 2, "y"), HardPulse(spins, -math.pi, "x")]
            self.phase -= len(spins) * math.pi / 2
        elif isinstance(g, GlobalPhase):
            self.phase += g.angle
            log.debug("global phase %r recorded, no pulses emitted", g.angle)
        elif isinstance(g, ControlledPhasePrimitive):
            self.phase_gate(g.pattern, g.angle, [self.spins[q] for q in g.on()], index)
        elif isinstance(g, ControlledZRot):
            if len(g.controls) != 1:
                raise CompileError("controlled z-rotation with several controls; expand it first", index)
            (cq, pol), = g.controls
            c, t = self.spins[cq], self.spins[g.target]
            sign = 1 if pol else -1
            coupling = self.sys.coupling(c, t)
            if coupling == 0:
                raise CompileError(f"spins {self.sys.labels[c]} and {self.sys.labels[t]} are not coupled",
                                   index)
            self.jdelay(c, t, -sign * g.angle / (2 * math.pi * coupling), index)
            self.elements += zrot_pulses((t,), g.angle / 2)
        elif isinstance(g, MultiControlledNot):
            self.mcx(g, index)
        else:
            raise CompileError(f"no pulse rule for {type(g).__name__}", index)

    def mcx(self, g: MultiControlledNot, index):
        n = self.sys.n_spins
        fixed = {self.spins[q]: p for q, p in g.controls}
        target = self.spins[g.target]
        free = [k for k in range(n) if k not in fixed and k != target]
        for values in itertools.product((0, 1), repeat=len(free)):
            bits = dict(fixed)
            bits.update(zip(free, values))
            a = "".join(str(bits.get(k, 0)) if k != target else "0" for k in range(n))
            b = a[:target] + "1" + a[target + 1:]
            self.elements.append(TransitionSelectivePulse(a, b, math.pi, "x"))
        if self.exact_mcx:
            # each line pulse leaves -i on its two-level subspace
            pattern = "".join(str(p) for _, p in g.controls)
            self.phase_gate(pattern, math.pi / 2, [self.spins[q] for q, _ in g.controls], index)
        else:
            self.notes.append(f"op {index}: line-selective NOT keeps a -i phase on its transition")


def compile_circuit(c: Circuit, sys: SpinSystem, qubit_map=None, *, physical_delays: bool = False,
                    exact_mcx: bool = True) -> PulseSequence:
    """Lower ``c`` to pulses; circuit qubit ``q`` lives on spin ``qubit_map[q]``.

    ``physical_delays`` replaces idealized coupling evolutions by refocused free
    precession, wrapping negative durations forward by whole periods.
    ``exact_mcx=False`` leaves multi-controlled NOTs as bare line-selective
    pi pulses, which differ from the gate by a phase on the flipped transition.
    """
    spins = _spin_map(c, sys, qubit_map)
    em = _Emitter(sys, spins, physical_delays, exact_mcx)
    for index, group in _group_single_qubit(list(c.ops)):
        em.gate(index, group)
    return PulseSequence(sys, em.elements, em.phase, em.notes)


def circuit_on_spins(c: Circuit, sys: SpinSystem, qubit_map=None) -> np.ndarray:
    """Circuit unitary lifted onto the full spin register."""
    return embed_operator(circuit_unitary(c), _spin_map(c, sys, qubit_map), sys.n_spins)


def compiled_deviation(seq: PulseSequence, c: Circuit, qubit_map=None) -> tuple[float, float]:
    """``(exact, up_to_global_phase)`` max-entry deviation of a compiled sequence."""
    target = circuit_on_spins(c, seq.system, qubit_map)
    u = sequence_unitary(seq)
    exact = float(np.abs(np.exp(1j * seq.global_phase) * u - target).max())
    return exact, distance_up_to_global_phase(u, target)
