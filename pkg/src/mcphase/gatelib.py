"""Gate set, circuit IR and dense-matrix semantics.

Qubits are zero-based; qubit 0 is the most significant bit of a basis index.
Controls carry a polarity: ``(q, 1)`` fires on ``|1>``, ``(q, 0)`` on ``|0>``.

Text format, one op per line::

    QUBITS 3
    CRZ target=2 controls=0:+,1:- angle=1.5707963267948966
    GPHASE angle=0.39269908169872414
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .angles import parse_angle
from .qstate import IX, IY, basis_index, single_qubit_op

Controls = tuple[tuple[int, int], ...]


def zrot_matrix(angle: float) -> np.ndarray:
    """``exp(-i*angle*Iz)`` = diag(e^{-i angle/2}, e^{+i angle/2})."""
    return np.diag([np.exp(-0.5j * angle), np.exp(0.5j * angle)])


def xrot_matrix(angle: float) -> np.ndarray:
    return np.cos(angle / 2) * np.eye(2) - 2j * np.sin(angle / 2) * IX


def yrot_matrix(angle: float) -> np.ndarray:
    return np.cos(angle / 2) * np.eye(2) - 2j * np.sin(angle / 2) * IY


HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)


def _check_angle(angle):
    if not math.isfinite(angle):
        raise ValueError(f"angle must be finite, got {angle!r}")


def _normalize_controls(controls) -> Controls:
    out = tuple((int(q), int(p)) for q, p in controls)
    if not out:
        raise ValueError("at least one control is required")
    qubits = [q for q, _ in out]
    if len(set(qubits)) != len(qubits):
        raise ValueError(f"duplicate control qubits in {out}")
    if any(p not in (0, 1) for _, p in out):
        raise ValueError(f"control polarity must be 0 or 1: {out}")
    return out


@dataclass(frozen=True)
class XRot:
    qubit: int
    angle: float

    def __post_init__(self):
        _check_angle(self.angle)


@dataclass(frozen=True)
class YRot:
    qubit: int
    angle: float

    def __post_init__(self):
        _check_angle(self.angle)


@dataclass(frozen=True)
class ZRot:
    qubit: int
    angle: float

    def __post_init__(self):
        _check_angle(self.angle)


@dataclass(frozen=True)
class GlobalPhase:
    angle: float

    def __post_init__(self):
        _check_angle(self.angle)


@dataclass(frozen=True)
class Hadamard:
    qubit: int


@dataclass(frozen=True)
class PauliX:
    qubit: int


@dataclass(frozen=True)
class MultiControlledNot:
    controls: Controls
    target: int

    def __post_init__(self):
        object.__setattr__(self, "controls", _normalize_controls(self.controls))
        if self.target in [q for q, _ in self.controls]:
            raise ValueError("target qubit cannot also be a control")


@dataclass(frozen=True)
class ControlledZRot:
    controls: Controls
    target: int
    angle: float

    def __post_init__(self):
        object.__setattr__(self, "controls", _normalize_controls(self.controls))
        if self.target in [q for q, _ in self.controls]:
            raise ValueError("target qubit cannot also be a control")
        _check_angle(self.angle)


@dataclass(frozen=True)
class ControlledPhasePrimitive:
    """Phase ``e^{i angle}`` on the basis states whose ``qubits`` read ``pattern``.

    ``qubits=None`` means the leading ``len(pattern)`` qubits, i.e. the whole
    register when the pattern is as long as the circuit.
    """

    pattern: str
    angle: float
    qubits: tuple[int, ...] | None = None

    def __post_init__(self):
        basis_index(self.pattern)
        _check_angle(self.angle)
        if self.qubits is not None:
            qubits = tuple(int(q) for q in self.qubits)
            if len(qubits) != len(self.pattern) or len(set(qubits)) != len(qubits):
                raise ValueError("qubits must be distinct and match the pattern length")
            object.__setattr__(self, "qubits", None if qubits == tuple(range(len(qubits))) else qubits)

    def on(self) -> tuple[int, ...]:
        return self.qubits if self.qubits is not None else tuple(range(len(self.pattern)))


Gate = Union[
    XRot, YRot, ZRot, GlobalPhase, Hadamard, PauliX,
    MultiControlledNot, ControlledZRot, ControlledPhasePrimitive,
]
SINGLE_QUBIT = (XRot, YRot, ZRot, Hadamard, PauliX)


def gate_qubits(g: Gate) -> tuple[int, ...]:
    if isinstance(g, SINGLE_QUBIT):
        return (g.qubit,)
    if isinstance(g, (MultiControlledNot, ControlledZRot)):
        return tuple(q for q, _ in g.controls) + (g.target,)
    if isinstance(g, ControlledPhasePrimitive):
        return g.on()
    if isinstance(g, GlobalPhase):
        return ()
    raise TypeError(f"not a gate: {g!r}")


@dataclass(frozen=True)
class Circuit:
    """Ordered gate list; ``ops[0]`` is applied to the state first."""

    n_qubits: int
    ops: tuple = field(default_factory=tuple)

    def __post_init__(self):
        if self.n_qubits < 1:
            raise ValueError("a circuit needs at least one qubit")
        ops = tuple(self.ops)
        for k, g in enumerate(ops):
            qubits = gate_qubits(g)
            if any(not 0 <= q < self.n_qubits for q in qubits):
                raise ValueError(f"op {k} ({g}) addresses a qubit outside 0..{self.n_qubits - 1}")
        object.__setattr__(self, "ops", ops)

    def __iter__(self):
        return iter(self.ops)

    def __len__(self):
        return len(self.ops)

    def then(self, *ops: Gate) -> "Circuit":
        return Circuit(self.n_qubits, self.ops + tuple(ops))


def controlled_phase_dense(n: int, s: str, phi: float) -> np.ndarray:
    """Diagonal matrix with ``e^{i phi}`` at ``|s>`` and 1 elsewhere."""
    if len(s) != n:
        raise ValueError(f"bit string {s!r} does not have length {n}")
    diag = np.ones(2**n, dtype=complex)
    diag[basis_index(s)] = np.exp(1j * phi)
    return np.diag(diag)


def _bit(index, qubit, n):
    return (index >> (n - 1 - qubit)) & 1


def _matches(index, controls, n):
    return all(_bit(index, q, n) == p for q, p in controls)


def gate_matrix(g: Gate, n: int) -> np.ndarray:
    """Full ``2^n x 2^n`` matrix of one gate."""
    if any(not 0 <= q < n for q in gate_qubits(g)):
        raise ValueError(f"{g} addresses a qubit outside a {n}-qubit register")
    dim = 2**n
    if isinstance(g, XRot):
        return single_qubit_op(xrot_matrix(g.angle), g.qubit, n)
    if isinstance(g, YRot):
        return single_qubit_op(yrot_matrix(g.angle), g.qubit, n)
    if isinstance(g, ZRot):
        return single_qubit_op(zrot_matrix(g.angle), g.qubit, n)
    if isinstance(g, Hadamard):
        return single_qubit_op(HADAMARD, g.qubit, n)
    if isinstance(g, PauliX):
        return single_qubit_op(PAULI_X, g.qubit, n)
    if isinstance(g, GlobalPhase):
        return np.exp(1j * g.angle) * np.eye(dim)
    if isinstance(g, MultiControlledNot):
        u = np.zeros((dim, dim), dtype=complex)
        flip = 1 << (n - 1 - g.target)
        for i in range(dim):
            u[i ^ flip if _matches(i, g.controls, n) else i, i] = 1
        return u
    if isinstance(g, ControlledZRot):
        rz = zrot_matrix(g.angle)
        diag = np.ones(dim, dtype=complex)
        for i in range(dim):
            if _matches(i, g.controls, n):
                t = _bit(i, g.target, n)
                diag[i] = rz[t, t]
        return np.diag(diag)
    if isinstance(g, ControlledPhasePrimitive):
        pattern = tuple(zip(g.on(), (int(b) for b in g.pattern)))
        diag = np.array([np.exp(1j * g.angle) if _matches(i, pattern, n) else 1
                         for i in range(dim)], dtype=complex)
        return np.diag(diag)
    raise TypeError(f"not a gate: {g!r}")


def circuit_unitary(c: Circuit) -> np.ndarray:
    u = np.eye(2**c.n_qubits, dtype=complex)
    for g in c.ops:
        u = gate_matrix(g, c.n_qubits) @ u
    return u


# -- text format -------------------------------------------------------------

_NAMES = {
    XRot: "XROT", YRot: "YROT", ZRot: "ZROT", GlobalPhase: "GPHASE",
    Hadamard: "H", PauliX: "X", MultiControlledNot: "MCX",
    ControlledZRot: "CRZ", ControlledPhasePrimitive: "CPHASE",
}
_KINDS = {name: kind for kind, name in _NAMES.items()}


def _fmt_controls(controls) -> str:
    return ",".join(f"{q}:{'+' if p else '-'}" for q, p in controls)


def format_gate(g: Gate) -> str:
    name = _NAMES[type(g)]
    if isinstance(g, SINGLE_QUBIT):
        fields = [f"target={g.qubit}"]
    elif isinstance(g, (MultiControlledNot, ControlledZRot)):
        fields = [f"target={g.target}", f"controls={_fmt_controls(g.controls)}"]
    elif isinstance(g, ControlledPhasePrimitive):
        fields = [f"controls={_fmt_controls(zip(g.on(), (int(b) for b in g.pattern)))}"]
    else:
        fields = []
    if hasattr(g, "angle"):
        fields.append(f"angle={g.angle!r}")
    return " ".join([name] + fields)


def format_circuit(c: Circuit) -> str:
    return "\n".join([f"QUBITS {c.n_qubits}"] + [format_gate(g) for g in c.ops]) + "\n"


def _parse_controls(text: str) -> Controls:
    out = []
    for item in text.split(","):
        q, _, sign = item.partition(":")
        if sign not in ("+", "-"):
            raise ValueError(f"bad control {item!r}; expected <qubit>:+ or <qubit>:-")
        out.append((int(q), 1 if sign == "+" else 0))
    return tuple(out)


def parse_gate(line: str) -> Gate:
    name, *rest = line.split()
    if name not in _KINDS:
        raise ValueError(f"unknown gate {name!r}")
    fields = {}
    for token in rest:
        key, sep, value = token.partition("=")
        if not sep:
            raise ValueError(f"expected key=value, got {token!r}")
        fields[key] = value
    kind = _KINDS[name]
    needs_angle = kind not in (Hadamard, PauliX, MultiControlledNot)
    if needs_angle and "angle" not in fields:
        raise ValueError(f"{name} needs angle=")
    angle = parse_angle(fields["angle"]) if needs_angle else None
    if kind in (XRot, YRot, ZRot):
        return kind(int(fields["target"]), angle)
    if kind in (Hadamard, PauliX):
        return kind(int(fields["target"]))
    if kind is GlobalPhase:
        return GlobalPhase(angle)
    controls = _parse_controls(fields["controls"])
    if kind is MultiControlledNot:
        return MultiControlledNot(controls, int(fields["target"]))
    if kind is ControlledZRot:
        return ControlledZRot(controls, int(fields["target"]), angle)
    pattern = "".join(str(p) for _, p in controls)
    return ControlledPhasePrimitive(pattern, angle, tuple(q for q, _ in controls))


def parse_circuit(text: str) -> Circuit:
    n = None
    ops = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            if line.startswith("QUBITS"):
                n = int(line.split()[1])
            else:
                ops.append(parse_gate(line))
        except (ValueError, KeyError, IndexError) as exc:
            raise ValueError(f"line {lineno}: {exc}") from exc
    if n is None:
        raise ValueError("missing QUBITS header")
    return Circuit(n, ops)

