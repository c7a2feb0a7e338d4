"""Propagators for pulse elements and density-matrix simulation of sequences.

Hamiltonian (angular units, hbar = 1), summed over active spins only::

    H = sum_k -2*pi*nu_k*Iz_k + sum_{i<j} 2*pi*J_ij*Iz_i*Iz_j
"""

from __future__ import annotations

import numpy as np

from ..qstate import I2, IX, IY, DensityMatrix, basis_index, kron_all, popcounts, single_qubit_op, IZ
from .sequence import (
    AXIS_PHASE,
    Delay,
    GradientZ,
    HardPulse,
    JDelay,
    PulseSequence,
    SpinSelectivePulse,
    TransitionSelectivePulse,
)
from .system import SpinSystem


class CompileError(ValueError):
    """A gate or element that cannot be realized on the target spin system."""

    def __init__(self, message: str, op_index: int | None = None):
        super().__init__(message if op_index is None else f"op {op_index}: {message}")
        self.op_index = op_index


def _iz_eigen(n: int) -> np.ndarray:
    """Row ``i`` holds the Iz eigenvalue of each spin in basis state ``i``."""
    idx = np.arange(2**n)
    bits = (idx[:, None] >> (n - 1 - np.arange(n))[None, :]) & 1
    return 0.5 - bits


def hamiltonian_diagonal(sys: SpinSystem) -> np.ndarray:
    m = _iz_eigen(sys.n_spins)
    h = np.zeros(2**sys.n_spins)
    active = sys.active
    for k in active:
        h += -2 * np.pi * sys.offsets[k] * m[:, k]
    for a, i in enumerate(active):
        for j in active[a + 1:]:
            h += 2 * np.pi * sys.couplings[i][j] * m[:, i] * m[:, j]
    return h


def hamiltonian_matrix(sys: SpinSystem) -> np.ndarray:
    return np.diag(hamiltonian_diagonal(sys)).astype(complex)


def free_evolution(sys: SpinSystem, tau: float) -> np.ndarray:
    """``exp(-i H tau)`` for a non-negative delay ``tau`` in seconds."""
    if tau < 0:
        raise ValueError(f"free evolution needs tau >= 0, got {tau}")
    return np.diag(np.exp(-1j * hamiltonian_diagonal(sys) * tau))


def j_coupling_evolution(sys: SpinSystem, i, j, tau: float) -> np.ndarray:
    """``exp(-i 2 pi J_ij tau Iz_i Iz_j)``; negative ``tau`` is a formal angle."""
    i, j = sys.index(i), sys.index(j)
    if i == j:
        raise ValueError("coupling evolution needs two distinct spins")
    coupling = sys.coupling(i, j)
    if coupling == 0 and tau != 0:
        raise CompileError(f"spins {sys.labels[i]} and {sys.labels[j]} are not coupled")
    m = _iz_eigen(sys.n_spins)
    return np.diag(np.exp(-2j * np.pi * coupling * tau * m[:, i] * m[:, j]))


def _rotation(angle: float, axis: str) -> np.ndarray:
    alpha = AXIS_PHASE[axis]
    gen = np.cos(alpha) * IX + np.sin(alpha) * IY
    return np.cos(angle / 2) * I2 - 2j * np.sin(angle / 2) * gen


def hard_pulse(sys: SpinSystem, spins, angle: float, axis: str = "x") -> np.ndarray:
    """Instantaneous rotation of every listed spin about ``axis``."""
    if axis not in AXIS_PHASE:
        raise ValueError(f"unknown axis {axis!r}")
    targets = {sys.index(k) for k in spins}
    r = _rotation(angle, axis)
    return kron_all(r if k in targets else I2 for k in range(sys.n_spins))


def spin_selective_pulse(sys: SpinSystem, spin, angle: float, axis: str = "x") -> np.ndarray:
    return hard_pulse(sys, [spin], angle, axis)


def transition_selective(sys: SpinSystem, a: str, b: str, angle: float, axis: str = "x") -> np.ndarray:
    """Rotation confined to span{|a>, |b>}; identity on every other basis state."""
    if a == b:
        raise ValueError("transition needs two different states")
    el = TransitionSelectivePulse(a, b, angle, axis)
    if len(a) != sys.n_spins:
        raise ValueError(f"transition states need {sys.n_spins} bits")
    ia, ib = basis_index(el.state_a), basis_index(el.state_b)
    alpha = AXIS_PHASE[axis]
    c, s = np.cos(angle / 2), np.sin(angle / 2)
    u = np.eye(2**sys.n_spins, dtype=complex)
    u[ia, ia] = u[ib, ib] = c
    u[ia, ib] = -1j * s * np.exp(-1j * alpha)
    u[ib, ia] = -1j * s * np.exp(1j * alpha)
    return u


def transition_frequency(sys: SpinSystem, a: str, b: str) -> float:
    """Line position (Hz) of the single-spin transition ``a <-> b``."""
    el = TransitionSelectivePulse(a, b, np.pi)
    k = el.flipped_spin
    freq = sys.offset(k)
    for j in range(sys.n_spins):
        if j != k:
            freq += sys.coupling(k, j) * (0.5 if a[j] == "0" else -0.5)
    return freq


def gradient_apply(rho, strict: bool = False) -> DensityMatrix:
    """Ideal z-gradient dephasing.

    Keeps elements of coherence order ``popcount(j) - popcount(i) == 0``; with
    ``strict`` only the diagonal survives.
    """
    if not isinstance(rho, DensityMatrix):
        rho = DensityMatrix(rho, kind="deviation")
    data = rho.data
    if strict:
        keep = np.eye(data.shape[0], dtype=bool)
    else:
        pc = popcounts(rho.n_qubits)
        keep = pc[:, None] == pc[None, :]
    return DensityMatrix(np.where(keep, data, 0), kind=rho.kind)


def element_unitary(sys: SpinSystem, el) -> np.ndarray:
    if isinstance(el, HardPulse):
        return hard_pulse(sys, el.spins, el.angle, el.axis)
    if isinstance(el, SpinSelectivePulse):
        return spin_selective_pulse(sys, el.spin, el.angle, el.axis)
    if isinstance(el, Delay):
        return free_evolution(sys, el.duration)
    if isinstance(el, JDelay):
        return j_coupling_evolution(sys, el.pair[0], el.pair[1], el.tau)
    if isinstance(el, TransitionSelectivePulse):
        return transition_selective(sys, el.state_a, el.state_b, el.angle, el.axis)
    if isinstance(el, GradientZ):
        raise ValueError("a gradient is not unitary")
    raise TypeError(f"not a pulse element: {el!r}")


def sequence_unitary(seq: PulseSequence) -> np.ndarray:
    """Product of element propagators, first element rightmost."""
    u = np.eye(2**seq.system.n_spins, dtype=complex)
    for el in seq.elements:
        u = element_unitary(seq.system, el) @ u
    return u


def simulate(seq: PulseSequence, rho: DensityMatrix) -> DensityMatrix:
    """Propagate a density matrix through every element, gradients included.

    Each intermediate state is rebuilt as a ``DensityMatrix`` so Hermiticity
    and trace are checked after every step.
    """
    if rho.data.shape[0] != 2**seq.system.n_spins:
        raise ValueError("state dimension does not match the spin system")
    for el in seq.elements:
        if isinstance(el, GradientZ):
            rho = gradient_apply(rho, strict=el.strict)
        else:
            u = element_unitary(seq.system, el)
            rho = DensityMatrix(u @ rho.data @ u.conj().T, kind=rho.kind)
    return rho


def equilibrium_deviation(sys: SpinSystem, weights=None) -> DensityMatrix:
    """High-temperature equilibrium ``sum_k w_k Iz_k``; ``w_k`` tracks gyromagnetic ratios."""
    n = sys.n_spins
    weights = np.ones(n) if weights is None else np.asarray(weights, dtype=float)
    if weights.shape != (n,):
        raise ValueError(f"need one weight per spin ({n})")
    data = sum(w * single_qubit_op(IZ, k, n) for k, w in enumerate(weights))
    return DensityMatrix(data, kind="deviation")
