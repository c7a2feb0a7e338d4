"""Simulated NMR benchmarks of the controlled phase gate on 13C-labelled trichloroethylene.

Two-qubit runs use the carbons (C1, C2) with the proton decoupled; the
three-qubit run switches the proton back on as the second control. Every run
starts from a gradient-prepared pseudo-pure deviation matrix, which is
calibrated against its target expression by a signed real scale (the receiver
phase reference of a real spectrometer) before the gate is applied.

Peak ids read ``<label>:<passive bits>``, the passive bits being the other
active spins in register order. ``C2:0`` is the C2 line with C1 in ``|0>``.
"""

from __future__ import annotations

import csv
import io
import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .gatelib import Circuit, ControlledPhasePrimitive, Hadamard, MultiControlledNot, ZRot, circuit_unitary
from .nmrpulse import (
    Delay,
    GradientZ,
    HardPulse,
    PulseSequence,
    SpinSystem,
    compile_circuit,
    equilibrium_deviation,
    selective_zrot_sequence,
    simulate,
)
from .qstate import IZ, DensityMatrix, fit_real_scale, single_qubit_op

AMPLITUDE_FLOOR = 1e-12
PROTON_CARBON_RATIO = 4.0
THREE_QUBIT_SWEEP_DEGREES = (0.0, 25.2, 38.2, 90.0, 141.8, 154.7)
TWO_QUBIT_SWEEP = (math.pi / 4, math.pi / 2, 3 * math.pi / 4, math.pi)


# -- spectra ---------------------------------------------------------------------


@dataclass(frozen=True)
class Peak:
    peak_id: str
    observed_spin: int
    frequency: float
    amplitude: complex
    source_cells: tuple[tuple[int, int], ...]

    def __post_init__(self):
        if not math.isfinite(self.frequency):
            raise ValueError(f"peak {self.peak_id} has a non-finite frequency")

    @property
    def magnitude(self) -> float:
        return abs(self.amplitude)

    @property
    def phase(self) -> float:
        return float(np.angle(self.amplitude))


@dataclass(frozen=True)
class Spectrum:
    """Peaks plus an optional reference peak whose phase is subtracted from all."""

    peaks: tuple[Peak, ...]
    reference_peak: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "peaks", tuple(self.peaks))
        ids = [p.peak_id for p in self.peaks]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate peak ids")
        if self.reference_peak is not None and self.reference_peak not in ids:
            raise ValueError(f"reference peak {self.reference_peak!r} is not in the spectrum")

    def __getitem__(self, peak_id: str) -> Peak:
        for p in self.peaks:
            if p.peak_id == peak_id:
                return p
        raise KeyError(peak_id)

    def __contains__(self, peak_id) -> bool:
        return any(p.peak_id == peak_id for p in self.peaks)

    def __len__(self):
        return len(self.peaks)

    @property
    def ids(self) -> list[str]:
        return [p.peak_id for p in self.peaks]

    def relative_phase(self, peak_id: str) -> float:
        """Phase of ``peak_id`` minus the reference phase, wrapped to (-pi, pi]."""
        amp = self[peak_id].amplitude
        if self.reference_peak is None:
            return float(np.angle(amp))
        if peak_id == self.reference_peak:
            return 0.0
        return float(np.angle(amp * np.conj(self[self.reference_peak].amplitude)))

    def with_reference(self, peak_id: str | None) -> "Spectrum":
        return Spectrum(self.peaks, peak_id)



def extract_spectrum(rho, sys: SpinSystem, spins, reference: str | None = "auto") -> Spectrum:
    """Single-quantum lines of ``spins`` read off the deviation matrix.

    A line of spin ``k`` sums ``rho[a, b]`` over the states that agree on the
    active passive spins, where ``b`` is ``a`` with bit ``k`` raised; decoupled
    spins do not split lines. ``reference="auto"`` picks the first spin's line
    with every active partner in ``|0>``; ``None`` reports absolute phases.
    """
    data = np.asarray(rho)
    n = sys.n_spins
    if data.shape != (2**n, 2**n):
        raise ValueError(f"state dimension does not match {n} spins")
    spins = [spins] if isinstance(spins, (int, str, np.integer)) else list(spins)
    spins = [sys.index(k) for k in spins]
    if not spins:
        raise ValueError("no observed spin given")
    peaks = []
    for k in spins:
        partners = [j for j in sys.active if j != k]
        lines: dict[str, list] = {}
        for bits in itertools.product("01", repeat=n - 1):
            a = "".join(bits[:k]) + "0" + "".join(bits[k:])
            b = a[:k] + "1" + a[k + 1:]
            key = "".join(a[j] for j in partners)
            lines.setdefault(key, []).append((int(a, 2), int(b, 2)))
        for key in sorted(lines):
            cells = tuple(lines[key])
            amp = complex(sum(data[i, j] for i, j in cells))
            if abs(amp) <= AMPLITUDE_FLOOR:
                continue
            freq = sys.offset(k) + sum(
                sys.coupling(k, j) * (0.5 if m == "0" else -0.5) for j, m in zip(partners, key))
            peaks.append(Peak(f"{sys.labels[k]}:{key}", k, freq, amp, cells))
    if reference == "auto":
        k = spins[0]
        reference = f"{sys.labels[k]}:{'0' * (len(sys.active) - (1 if sys.is_active(k) else 0))}"
        if reference not in {p.peak_id for p in peaks}:
            reference = None
    return Spectrum(peaks, reference)


# -- fitting ---------------------------------------------------------------------


@dataclass(frozen=True)
class SweepResult:
    """Linear fit of phase against angle; ``phases`` are the unwrapped values."""

    angles: tuple[float, ...]
    phases: tuple[float, ...]
    slope: float
    intercept: float
    residual: float

    @property
    def n_points(self) -> int:
        return len(self.angles)

    def as_text(self) -> str:
        def fixed(v):
            text = f"{v:.6f}"
            return text[1:] if text == "-0.000000" else text
        return (f"slope = {fixed(self.slope)}\nintercept = {fixed(self.intercept)}\n"
                f"residual = {self.residual:.3e}\nn_points = {self.n_points}\n")


def fit_phase_slope(points: Sequence[tuple[float, float]]) -> SweepResult:
    """Least-squares line through ``(angle, phase)`` pairs after phase unwrapping.

    Points are sorted by angle and each phase is shifted by whole turns to stay
    within pi of its predecessor.
    """
    pts = sorted((float(a), float(p)) for a, p in points)
    if len(pts) < 3:
        raise ValueError(f"a slope fit needs at least 3 points, got {len(pts)}")
    x = np.array([a for a, _ in pts])
    if np.ptp(x) == 0:
        raise ValueError("all sweep angles are identical")
    y = np.unwrap([p for _, p in pts])
    slope, intercept = np.polyfit(x, y, 1)
    residual = float(np.abs(y - (slope * x + intercept)).max())
    return SweepResult(tuple(x), tuple(float(v) for v in y), float(slope), float(intercept), residual)


# -- state preparation -------------------------------------------------------------


def default_system() -> SpinSystem:
    return SpinSystem.tce()


def carbon_pair(sys: SpinSystem | None = None) -> SpinSystem:
    """Two-spin register of the carbons with every other spin decoupled and dropped."""
    sys = default_system() if sys is None else sys
    if sys.n_spins == 2 and not sys.decoupled:
        return sys
    if sys.n_spins > 2 and len(sys.active) > 2:
        sys = sys.decouple(*[k for k in sys.active[2:]])
    sub = sys.active_subsystem()
    if sub.n_spins != 2:
        raise ValueError(f"need exactly two active spins, have {sub.n_spins}")
    return sub


def pseudo_pure_model(n: int = 2) -> np.ndarray:
    """``Iz1/2 + Iz2/2 + Iz1*Iz2`` on the first two of ``n`` spins: ``|00><00| - I/4`` there."""
    z1, z2 = single_qubit_op(IZ, 0, n), single_qubit_op(IZ, 1, n)
    return z1 / 2 + z2 / 2 + z1 @ z2


def rho2_model() -> np.ndarray:
    """Target of the three-spin preparation: half the two-spin pseudo-pure term, H3 unpolarized."""
    return pseudo_pure_model(3) / 2


def _gradient(mode: str) -> GradientZ:
    if mode not in ("strict", "order"):
        raise ValueError(f"gradient mode must be 'strict' or 'order', got {mode!r}")
    return GradientZ(strict=mode == "strict")


def pps2_sequence(sys: SpinSystem, gradient: str = "strict") -> PulseSequence:
    """Spatial-averaging preparation of ``|00>`` on a coupled pair.

    Literature form (opposite rotation sense, hence the negated angles here):
    ``[pi/4]x - 1/4J - [pi]y - 1/4J - [-pi]y - [-5pi/6]y - grad``.
    """
    if sys.n_spins != 2:
        raise ValueError("the two-spin preparation needs a two-spin register")
    both = (0, 1)
    quarter = 1 / (4 * abs(sys.coupling(0, 1)))
    return PulseSequence(sys, [
        HardPulse(both, -math.pi / 4, "x"),
        Delay(quarter),
        HardPulse(both, -math.pi, "y"),
        Delay(quarter),
        HardPulse(both, math.pi, "y"),
        HardPulse(both, 5 * math.pi / 6, "y"),
        _gradient(gradient),
    ])


def rho2_sequence(sys: SpinSystem, gradient: str = "strict") -> PulseSequence:
    """Three-spin preparation: saturate H3, then the pair preparation with H3 refocused."""
    if sys.n_spins != 3 or len(sys.active) != 3:
        raise ValueError("the three-spin preparation needs three active spins")
    eighth = 1 / (8 * abs(sys.coupling(0, 1)))
    pair, every = (0, 1), (0, 1, 2)
    return PulseSequence(sys, [
        HardPulse((2,), -math.pi / 2, "y"),
        _gradient(gradient),
        HardPulse(pair, -math.pi / 4, "x"),
        Delay(eighth),
        HardPulse((2,), -math.pi, "y"),
        Delay(eighth),
        HardPulse(every, -math.pi, "y"),
        Delay(eighth),
        HardPulse((2,), math.pi, "y"),
        Delay(eighth),
        HardPulse(every, math.pi, "y"),
        HardPulse(pair, 5 * math.pi / 6, "y"),
        _gradient(gradient),
    ])


def prep_pseudo_pure_2(sys: SpinSystem | None = None, gradient: str = "strict") -> DensityMatrix:
    """Raw simulated deviation after the two-spin preparation from ``Iz1 + Iz2``."""
    sys = carbon_pair(sys)
    return simulate(pps2_sequence(sys, gradient), equilibrium_deviation(sys))


def prep_rho2_3(sys: SpinSystem | None = None, proton_ratio: float = PROTON_CARBON_RATIO,
                gradient: str = "strict") -> DensityMatrix:
    """Raw simulated deviation after the three-spin preparation from ``Iz1 + Iz2 + r*Iz3``."""
    sys = default_system() if sys is None else sys
    rho0 = equilibrium_deviation(sys, [1.0, 1.0, proton_ratio])
    return simulate(rho2_sequence(sys, gradient), rho0)


def calibrate(rho: DensityMatrix, model) -> tuple[DensityMatrix, float, float]:
    """Divide ``rho`` by its signed best-fit scale against ``model``.

    Returns ``(rho / c, c, max residual of rho - c*model)``.
    """
    c, residual = fit_real_scale(rho.data, model)
    if c == 0:
        raise ValueError("prepared state has no component along the model")
    return DensityMatrix(rho.data / c, kind=rho.kind), c, residual


# -- experiments -------------------------------------------------------------------


def phase2_circuit(phi: float) -> Circuit:
    return Circuit(2, [Hadamard(0), Hadamard(1), ControlledPhasePrimitive("11", phi)])


def phase2_sequence(sys: SpinSystem, phi: float) -> PulseSequence:
    return compile_circuit(phase2_circuit(phi), sys, physical_delays=True)


def no_compensation_sequence(sys: SpinSystem, phi: float) -> PulseSequence:
    """Phase-gate run followed by the delay-based z-rotation that undoes the compensation."""
    return phase2_sequence(sys, phi) + selective_zrot_sequence(sys, 0, 1, -phi / 2)


def _two_qubit_run(seq_fn, phi, sys):
    sys = carbon_pair(sys)
    rho, _, _ = calibrate(prep_pseudo_pure_2(sys), pseudo_pure_model())
    rho = simulate(seq_fn(sys, phi), rho)
    return rho, extract_spectrum(rho, sys, (0, 1), reference=f"{sys.labels[1]}:0")


def experiment_phase2(phi: float, sys: SpinSystem | None = None) -> tuple[DensityMatrix, Spectrum]:
    """Hadamard on both carbons, then the |11> phase gate; C1 and C2 lines referenced to C2:0."""
    return _two_qubit_run(phase2_sequence, phi, sys)


def experiment_no_compensation(phi: float, sys: SpinSystem | None = None) -> tuple[DensityMatrix, Spectrum]:
    """As :func:`experiment_phase2` with the compensating C1 rotation cancelled."""
    return _two_qubit_run(no_compensation_sequence, phi, sys)


CCNOT_MODES = ("exact", "line_selective")
SUPERPOSE_TARGETS = (1, 2)


def phase3_circuit(phi: float) -> Circuit:
    """Toffoli - Rz(C2) - Toffoli - Rz(C2): phase -phi/2 on |001>, +phi/2 on |011>."""
    ccnot = MultiControlledNot(((0, 0), (2, 1)), 1)
    return Circuit(3, [ccnot, ZRot(1, -phi / 2), ccnot, ZRot(1, phi / 2)])


def phase3_target(phi: float) -> np.ndarray:
    d = np.ones(8, dtype=complex)
    d[0b001] = np.exp(-0.5j * phi)
    d[0b011] = np.exp(0.5j * phi)
    return np.diag(d)


def phase3_sequence(sys: SpinSystem, phi: float, ccnot_mode: str = "exact") -> PulseSequence:
    if ccnot_mode not in CCNOT_MODES:
        raise ValueError(f"ccnot_mode must be one of {CCNOT_MODES}, got {ccnot_mode!r}")
    superpose = PulseSequence(sys, [HardPulse(SUPERPOSE_TARGETS, -math.pi / 2, "y")])
    return superpose + compile_circuit(phase3_circuit(phi), sys, exact_mcx=ccnot_mode == "exact")


def experiment_phase3(phi: float, ccnot_mode: str = "exact", sys: SpinSystem | None = None,
                      proton_ratio: float = PROTON_CARBON_RATIO) -> tuple[DensityMatrix, Spectrum]:
    """Three-spin run: prepared state, C2/H3 superposition, network; C2 lines referenced to C2:00."""
    sys = default_system() if sys is None else sys
    rho, _, _ = calibrate(prep_rho2_3(sys, proton_ratio), rho2_model())
    rho = simulate(phase3_sequence(sys, phi, ccnot_mode), rho)
    return rho, extract_spectrum(rho, sys, 1)


# -- sweeps --------------------------------------------------------------------------


@dataclass(frozen=True)
class ExperimentSpec:
    """How a CLI experiment maps a sweep angle onto its run and which peak it tracks."""

    name: str
    run: Callable | None
    phi_of_angle: Callable[[float], float] | None
    tracked_peak: str | None
    description: str
    takes_mode: bool = False


EXPERIMENTS = {
    "pps2": ExperimentSpec("pps2", None, None, None, "two-spin pseudo-pure preparation"),
    "rho2prep": ExperimentSpec("rho2prep", None, None, None, "three-spin preparation"),
    "phase2": ExperimentSpec("phase2", experiment_phase2, lambda a: -2 * a, "C1:1",
                             "Hadamards + |11> phase gate; angle is -phi/2"),
    "nocomp2": ExperimentSpec("nocomp2", experiment_no_compensation, lambda a: -2 * a, "C1:1",
                              "phase2 without compensation; angle is -phi/2"),
    "phase3": ExperimentSpec("phase3", experiment_phase3, lambda a: 2 * a, "C2:01",
                             "three-spin network; angle is phi/2", takes_mode=True),
}


@dataclass(frozen=True)
class SweepRun:
    experiment: str
    angles: tuple[float, ...]
    spectra: tuple[Spectrum, ...]
    tracked_peak: str | None
    fit: SweepResult | None
    notes: tuple[str, ...] = field(default_factory=tuple)

    def rows(self):
        """CSV rows in angle order, peaks in spectrum order."""
        for angle, spec in zip(self.angles, self.spectra):
            for p in spec.peaks:
                yield (angle, p.peak_id, p.observed_spin, p.frequency, p.magnitude, p.phase,
                       spec.relative_phase(p.peak_id))


def run_sweep(name: str, angles: Sequence[float] = (), ccnot_mode: str = "exact",
              sys: SpinSystem | None = None) -> SweepRun:
    """Run ``name`` at every angle; preparation experiments ignore ``angles``."""
    if name not in EXPERIMENTS:
        raise ValueError(f"unknown experiment {name!r}; choose from {sorted(EXPERIMENTS)}")
    spec = EXPERIMENTS[name]
    if spec.run is None:
        if name == "pps2":
            rho, model = prep_pseudo_pure_2(sys), pseudo_pure_model()
        else:
            rho, model = prep_rho2_3(sys), rho2_model()
        c, residual = fit_real_scale(rho.data, model)
        note = f"scale = {c:.12g}\nresidual = {residual:.3e}"
        return SweepRun(name, (), (), None, None, (note,))
    angles = tuple(float(a) for a in angles)
    if not angles:
        raise ValueError("the angle list is empty")
    kwargs = {"ccnot_mode": ccnot_mode} if spec.takes_mode else {}
    spectra = tuple(spec.run(spec.phi_of_angle(a), sys=sys, **kwargs)[1] for a in angles)
    fit = None
    if len(angles) >= 3 and len(set(angles)) > 1:
        fit = fit_phase_slope([(a, s.relative_phase(spec.tracked_peak)) for a, s in zip(angles, spectra)])
    return SweepRun(name, angles, spectra, spec.tracked_peak, fit)


CSV_COLUMNS = ("angle_rad", "peak_id", "observed_spin", "freq_hz", "magnitude", "phase_rad", "phase_ref_rad")


def _fmt(value) -> str:
    if isinstance(value, float):
        text = f"{value:.12g}"
        return "0" if text == "-0" else text
    return str(value)


def sweep_csv(run: SweepRun) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in run.rows():
        writer.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def circuit_matches_target(phi: float) -> float:
    """Max-entry deviation of the three-qubit network from its diagonal target."""
    return float(np.abs(circuit_unitary(phase3_circuit(phi)) - phase3_target(phi)).max())
