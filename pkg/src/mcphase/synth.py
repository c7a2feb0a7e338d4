"""Recursive modular synthesis of the multi-qubit controlled phase gate.

``I(s, phi)`` multiplies basis state ``|s>`` by ``e^{i phi}``. With the last
qubit as target it factors as a controlled z-rotation on the target followed
by a compensatory ``I(s[:-1], phi/2)`` on the control qubits, which is
synthesized the same way. The one-qubit base case is ``ZRot`` plus an explicit
``GlobalPhase``; dropping that phase breaks every controlled level above it.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

import numpy as np

from .gatelib import (
    Circuit,
    ControlledPhasePrimitive,
    ControlledZRot,
    GlobalPhase,
    MultiControlledNot,
    PauliX,
    ZRot,
    circuit_unitary,
    controlled_phase_dense,
)
from .qstate import basis_index, distance_up_to_global_phase

EXACT_TOL = 1e-10


def decompose_controlled_phase(n: int, s: str, phi: float) -> Circuit:
    """Circuit equal to ``controlled_phase_dense(n, s, phi)``, global phase included.

    Level ``k`` (counting from the full register) rotates the target of an
    ``n-k``-qubit sub-pattern by ``+-phi/2**k``; the rotation sense flips when
    the target bit of the pattern is 0 so the phase lands on the matching branch.
    """
    if not s:
        raise ValueError("empty bit string")
    basis_index(s)
    if len(s) != n:
        raise ValueError(f"bit string {s!r} does not have length {n}")
    ops = []
    angle = float(phi)
    for k in range(n, 0, -1):
        sense = 1.0 if s[k - 1] == "1" else -1.0
        if k == 1:
            ops += [ZRot(0, sense * angle), GlobalPhase(angle / 2)]
        else:
            controls = tuple((q, int(b)) for q, b in enumerate(s[: k - 1]))
            ops.append(ControlledZRot(controls, k - 1, sense * angle))
        angle /= 2
    return Circuit(n, ops)


def expand_controlled_zrot(c: Circuit) -> Circuit:
    """Replace each controlled z-rotation by two multi-controlled NOTs and two rotations."""
    ops = []
    for g in c.ops:
        if isinstance(g, ControlledZRot):
            mcx = MultiControlledNot(g.controls, g.target)
            ops += [ZRot(g.target, g.angle / 2), mcx, ZRot(g.target, -g.angle / 2), mcx]
        else:
            ops.append(g)
    return Circuit(c.n_qubits, ops)


def rewrite_negative_controls(c: Circuit) -> Circuit:
    """Conjugate every zero-polarity control with X so all controls fire on |1>."""
    ops = []
    for g in c.ops:
        if isinstance(g, (MultiControlledNot, ControlledZRot)):
            flips = [PauliX(q) for q, p in g.controls if p == 0]
            positive = tuple((q, 1) for q, _ in g.controls)
            if isinstance(g, MultiControlledNot):
                core = MultiControlledNot(positive, g.target)
            else:
                core = ControlledZRot(positive, g.target, g.angle)
        elif isinstance(g, ControlledPhasePrimitive):
            flips = [PauliX(q) for q, b in zip(g.on(), g.pattern) if b == "0"]
            core = ControlledPhasePrimitive("1" * len(g.pattern), g.angle, g.on())
        else:
            ops.append(g)
            continue
        ops += flips + [core] + flips
    return Circuit(c.n_qubits, ops)


def strip_global_phase(c: Circuit) -> Circuit:
    """Drop GlobalPhase gates, for targets where an overall phase is unobservable."""
    return Circuit(c.n_qubits, [g for g in c.ops if not isinstance(g, GlobalPhase)])


@dataclass(frozen=True)
class DecompositionReport:
    n: int
    s: str
    phi: float
    circuit: Circuit
    recursion_depth: int
    gate_counts: dict
    deviation_exact: float
    deviation_phase: float
    mode: str

    @property
    def deviation(self) -> float:
        return self.deviation_exact if self.mode == "exact" else self.deviation_phase

    @property
    def passed(self) -> bool:
        return self.deviation <= EXACT_TOL

    def as_text(self) -> str:
        lines = [
            f"n = {self.n}",
            f"pattern = {self.s}",
            f"phi = {self.phi!r}",
            f"mode = {self.mode}",
            f"recursion_depth = {self.recursion_depth}",
            f"gates = {len(self.circuit)}",
        ]
        lines += [f"count.{name} = {k}" for name, k in sorted(self.gate_counts.items())]
        lines += [
            f"deviation_exact = {self.deviation_exact:.3e}",
            f"deviation_up_to_global_phase = {self.deviation_phase:.3e}",
            f"verified = {'yes' if self.passed else 'no'}",
        ]
        return "\n".join(lines) + "\n"


def gate_counts(c: Circuit) -> dict:
    return dict(Counter(type(g).__name__ for g in c.ops))


def verify(c: Circuit, n: int, s: str, phi: float, mode: str = "exact") -> DecompositionReport:
    """Compare a circuit against the dense controlled-phase oracle."""
    if mode not in ("exact", "up_to_global_phase"):
        raise ValueError(f"unknown verification mode {mode!r}")
    if c.n_qubits != n:
        raise ValueError(f"circuit has {c.n_qubits} qubits, expected {n}")
    u = circuit_unitary(c)
    oracle = controlled_phase_dense(n, s, phi)
    return DecompositionReport(
        n=n,
        s=s,
        phi=float(phi),
        circuit=c,
        recursion_depth=len(s),
        gate_counts=gate_counts(c),
        deviation_exact=float(np.abs(u - oracle).max()),
        deviation_phase=distance_up_to_global_phase(u, oracle),
        mode=mode,
    )
