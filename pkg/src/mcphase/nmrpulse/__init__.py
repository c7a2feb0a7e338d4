"""Spin systems, pulse sequences, their simulation and gate compilation."""

from .compiler import (
    circuit_on_spins,
    compile_circuit,
    compiled_deviation,
    selective_zrot_sequence,
    zrot_pulses,
)
from .dynamics import (
    CompileError,
    equilibrium_deviation,
    free_evolution,
    gradient_apply,
    hamiltonian_diagonal,
    hamiltonian_matrix,
    hard_pulse,
    j_coupling_evolution,
    sequence_unitary,
    simulate,
    spin_selective_pulse,
    transition_frequency,
    transition_selective,
)
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

__all__ = [
    "AXIS_PHASE", "CompileError", "Delay", "GradientZ", "HardPulse", "JDelay", "PulseSequence",
    "SpinSelectivePulse", "SpinSystem", "TransitionSelectivePulse", "circuit_on_spins",
    "compile_circuit", "compiled_deviation", "equilibrium_deviation", "free_evolution",
    "gradient_apply", "hamiltonian_diagonal", "hamiltonian_matrix", "hard_pulse",
    "j_coupling_evolution", "selective_zrot_sequence", "sequence_unitary", "simulate",
    "spin_selective_pulse", "transition_frequency", "transition_selective", "zrot_pulses",
]
