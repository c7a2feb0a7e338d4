"""Pulse-sequence IR and its line-oriented text form.

Rotation sense: a pulse of angle ``theta`` about phase axis ``alpha`` is
``exp(-i*theta*(cos(alpha)*Ix + sin(alpha)*Iy))``. Much of the NMR literature
writes pulses with the opposite sense; such sequences transcribe here with
every pulse angle negated.

Spin indices are zero-based in Python and one-based in text, so
``pulse spins=1,2 angle=pi/4 axis=x`` acts on the first two spins.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

from ..angles import parse_angle
from .system import SpinSystem

AXIS_PHASE = {"x": 0.0, "y": math.pi / 2, "-x": math.pi, "-y": 3 * math.pi / 2}


def _check_axis(axis):
    if axis not in AXIS_PHASE:
        raise ValueError(f"axis must be one of {sorted(AXIS_PHASE)}, got {axis!r}")


def _check_finite(value, what):
    if not math.isfinite(value):
        raise ValueError(f"{what} must be finite, got {value!r}")


@dataclass(frozen=True)
class HardPulse:
    spins: tuple[int, ...]
    angle: float
    axis: str = "x"

    def __post_init__(self):
        spins = tuple(int(k) for k in self.spins)
        if not spins or len(set(spins)) != len(spins):
            raise ValueError("a hard pulse needs distinct spins")
        object.__setattr__(self, "spins", spins)
        _check_axis(self.axis)
        _check_finite(self.angle, "pulse angle")


@dataclass(frozen=True)
class SpinSelectivePulse:
    spin: int
    angle: float
    axis: str = "x"

    def __post_init__(self):
        _check_axis(self.axis)
        _check_finite(self.angle, "pulse angle")


@dataclass(frozen=True)
class Delay:
    """Free evolution under the full active Hamiltonian."""

    duration: float

    def __post_init__(self):
        _check_finite(self.duration, "delay")
        if self.duration < 0:
            raise ValueError(f"delay must be non-negative, got {self.duration}")


@dataclass(frozen=True)
class JDelay:
    """Idealized evolution under one coupling only; ``tau`` may be negative."""

    pair: tuple[int, int]
    tau: float

    def __post_init__(self):
        pair = tuple(int(k) for k in self.pair)
        if len(pair) != 2 or pair[0] == pair[1]:
            raise ValueError(f"jdelay needs two distinct spins, got {self.pair}")
        object.__setattr__(self, "pair", pair)
        _check_finite(self.tau, "jdelay tau")


@dataclass(frozen=True)
class GradientZ:
    """Ideal z-gradient: removes coherences of nonzero order, or all of them if ``strict``."""

    strict: bool = False


@dataclass(frozen=True)
class TransitionSelectivePulse:
    state_a: str
    state_b: str
    angle: float
    axis: str = "x"

    def __post_init__(self):
        a, b = self.state_a, self.state_b
        if len(a) != len(b) or not a or set(a + b) - {"0", "1"}:
            raise ValueError(f"bad transition {a!r} <-> {b!r}")
        if sum(x != y for x, y in zip(a, b)) != 1:
            raise ValueError(f"{a} and {b} must differ in exactly one bit")
        _check_axis(self.axis)
        _check_finite(self.angle, "pulse angle")

    @property
    def flipped_spin(self) -> int:
        return next(k for k, (x, y) in enumerate(zip(self.state_a, self.state_b)) if x != y)


PulseElement = Union[HardPulse, SpinSelectivePulse, Delay, JDelay, GradientZ, TransitionSelectivePulse]


def element_spins(el: PulseElement) -> tuple[int, ...]:
    if isinstance(el, HardPulse):
        return el.spins
    if isinstance(el, SpinSelectivePulse):
        return (el.spin,)
    if isinstance(el, JDelay):
        return el.pair
    return ()


@dataclass(frozen=True)
class PulseSequence:
    """Ordered pulse elements for one spin system.

    ``global_phase`` records phases the compiler moved out of the pulses: the
    source circuit equals ``exp(i*global_phase)`` times the sequence unitary.
    """

    system: SpinSystem
    elements: tuple = field(default_factory=tuple)
    global_phase: float = 0.0
    notes: tuple[str, ...] = ()

    def __post_init__(self):
        elements = tuple(self.elements)
        n = self.system.n_spins
        for k, el in enumerate(elements):
            if any(not 0 <= s < n for s in element_spins(el)):
                raise ValueError(f"element {k} ({el}) addresses a spin outside 0..{n - 1}")
            if isinstance(el, TransitionSelectivePulse) and len(el.state_a) != n:
                raise ValueError(f"element {k}: transition states need {n} bits")
        object.__setattr__(self, "elements", elements)
        object.__setattr__(self, "notes", tuple(self.notes))

    def __len__(self):
        return len(self.elements)

    def __iter__(self):
        return iter(self.elements)

    def __add__(self, other: "PulseSequence") -> "PulseSequence":
        if other.system != self.system:
            raise ValueError("cannot concatenate sequences for different spin systems")
        return PulseSequence(self.system, self.elements + other.elements,
                             self.global_phase + other.global_phase, self.notes + other.notes)

    def then(self, *elements: PulseElement) -> "PulseSequence":
        return PulseSequence(self.system, self.elements + elements, self.global_phase, self.notes)

    def to_text(self) -> str:
        lines = [format_element(el) for el in self.elements]
        if self.global_phase:
            lines.append(f"gphase angle={self.global_phase!r}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str, system: SpinSystem) -> "PulseSequence":
        elements = []
        phase = 0.0
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            try:
                el = parse_element(line)
            except (ValueError, KeyError) as exc:
                raise ValueError(f"line {lineno}: {exc}") from exc
            if isinstance(el, float):
                phase += el
            else:
                elements.append(el)
        return cls(system, elements, phase)


def _spins_text(spins) -> str:
    return ",".join(str(k + 1) for k in spins)


def format_element(el: PulseElement) -> str:
    if isinstance(el, HardPulse):
        return f"pulse spins={_spins_text(el.spins)} angle={el.angle!r} axis={el.axis}"
    if isinstance(el, SpinSelectivePulse):
        return f"selpulse spin={el.spin + 1} angle={el.angle!r} axis={el.axis}"
    if isinstance(el, Delay):
        return f"delay t={el.duration!r}"
    if isinstance(el, JDelay):
        return f"jdelay pair={_spins_text(el.pair)} tau={el.tau!r}"
    if isinstance(el, GradientZ):
        return "grad mode=strict" if el.strict else "grad"
    if isinstance(el, TransitionSelectivePulse):
        return f"linepulse a={el.state_a} b={el.state_b} angle={el.angle!r} axis={el.axis}"
    raise TypeError(f"not a pulse element: {el!r}")


def _spins_parse(text):
    return tuple(int(k) - 1 for k in text.split(","))


def parse_element(line: str):
    """Parse one line; a ``gphase`` line returns its angle as a float."""
    kind, *rest = line.split()
    f = {}
    for token in rest:
        key, sep, value = token.partition("=")
        if not sep:
            raise ValueError(f"expected key=value, got {token!r}")
        f[key] = value
    if kind == "pulse":
        return HardPulse(_spins_parse(f["spins"]), parse_angle(f["angle"]), f.get("axis", "x"))
    if kind == "selpulse":
        return SpinSelectivePulse(int(f["spin"]) - 1, parse_angle(f["angle"]), f.get("axis", "x"))
    if kind == "delay":
        return Delay(float(f["t"]))
    if kind == "jdelay":
        return JDelay(_spins_parse(f["pair"]), float(f["tau"]))
    if kind == "grad":
        mode = f.get("mode", "order")
        if mode not in ("order", "strict"):
            raise ValueError(f"unknown gradient mode {mode!r}")
        return GradientZ(strict=mode == "strict")
    if kind == "linepulse":
        return TransitionSelectivePulse(f["a"], f["b"], parse_angle(f["angle"]), f.get("axis", "x"))
    if kind == "gphase":
        return parse_angle(f["angle"])
    raise ValueError(f"unknown pulse element {kind!r}")
