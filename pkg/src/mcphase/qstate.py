"""Dense linear-algebra kernel and quantum-state containers.

Basis convention: the computational basis state ``|q1 q2 ... qn>`` sits at
index ``sum(q_i * 2**(n - i))``, so the first qubit owns the most significant
bit. The spin-1/2 operator ``IZ`` has ``IZ|0> = +1/2 |0>``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from typing import Iterable, Sequence

import numpy as np

I2 = np.eye(2, dtype=complex)
IX = 0.5 * np.array([[0, 1], [1, 0]], dtype=complex)
IY = 0.5 * np.array([[0, -1j], [1j, 0]], dtype=complex)
IZ = 0.5 * np.array([[1, 0], [0, -1]], dtype=complex)

HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-10
UNITARY_TOL = 1e-10
NORM_TOL = 1e-12


def n_qubits_of(dim: int) -> int:
    n = int(dim).bit_length() - 1
    if dim < 2 or 2**n != dim:
        raise ValueError(f"dimension {dim} is not a power of two >= 2")
    return n


def basis_index(bits: str) -> int:
    """Index of the computational basis state written as a bit string."""
    if not bits or set(bits) - {"0", "1"}:
        raise ValueError(f"not a bit string: {bits!r}")
    return int(bits, 2)


def index_bits(index: int, n: int) -> str:
    return format(index, f"0{n}b")


def popcounts(n: int) -> np.ndarray:
    return np.array([bin(i).count("1") for i in range(2**n)])


def tensor_product(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product; ``a`` owns the most significant index bits."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or b.ndim != 2 or b.shape[0] != b.shape[1]:
        raise ValueError("tensor_product expects square matrices")
    return np.kron(a, b)


def kron_all(ops: Iterable[np.ndarray]) -> np.ndarray:
    return reduce(tensor_product, ops)


def single_qubit_op(op: np.ndarray, qubit: int, n: int) -> np.ndarray:
    """Embed a 2x2 operator acting on ``qubit`` (zero-based) of an n-qubit register."""
    if not 0 <= qubit < n:
        raise ValueError(f"qubit {qubit} out of range for {n} qubits")
    return kron_all(op if k == qubit else I2 for k in range(n))


def permute_qubits(matrix: np.ndarray, order: Sequence[int]) -> np.ndarray:
    """Relabel qubits: qubit ``k`` of ``matrix`` becomes qubit ``order[k]`` of the result."""
    n = n_qubits_of(matrix.shape[0])
    if sorted(order) != list(range(n)):
        raise ValueError(f"{order} is not a permutation of {n} qubits")
    tensor = matrix.reshape((2,) * (2 * n))
    # axis order[k] of the result comes from axis k of the input
    inverse = np.argsort(order)
    axes = list(inverse) + [n + k for k in inverse]
    return tensor.transpose(axes).reshape(matrix.shape)


def embed_operator(op: np.ndarray, positions: Sequence[int], n: int) -> np.ndarray:
    """Lift an operator on ``len(positions)`` qubits into an n-qubit register.

    Qubit ``k`` of ``op`` lands on register qubit ``positions[k]``; every other
    register qubit sees the identity.
    """
    m = n_qubits_of(op.shape[0])
    if len(positions) != m or len(set(positions)) != m:
        raise ValueError("positions must list one distinct register qubit per operator qubit")
    rest = [q for q in range(n) if q not in positions]
    full = np.kron(op, np.eye(2 ** len(rest), dtype=complex))
    return permute_qubits(full, list(positions) + rest)


def _frozen(data: np.ndarray) -> np.ndarray:
    arr = np.array(data, dtype=complex, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class StateVector:
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = _frozen(self.amplitudes)
        if amps.ndim != 1:
            raise ValueError("amplitudes must be one-dimensional")
        n_qubits_of(amps.size)
        if not np.all(np.isfinite(amps)):
            raise ValueError("amplitudes must be finite")
        norm = float(np.vdot(amps, amps).real)
        if abs(norm - 1.0) > NORM_TOL:
            raise ValueError(f"state norm {norm!r} differs from 1")
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def basis(cls, bits: str) -> "StateVector":
        amps = np.zeros(2 ** len(bits), dtype=complex)
        amps[basis_index(bits)] = 1.0
        return cls(amps)

    @property
    def n_qubits(self) -> int:
        return n_qubits_of(self.amplitudes.size)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.amplitudes, dtype=dtype)

    def density(self) -> "DensityMatrix":
        return DensityMatrix(np.outer(self.amplitudes, self.amplitudes.conj()))


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Hermitian state matrix.

    ``kind="full"`` is a physical state (unit trace, positive semidefinite);
    ``kind="deviation"`` is the traceless part NMR actually observes.
    """

    data: np.ndarray
    kind: str = "full"

    def __post_init__(self):
        rho = _frozen(self.data)
        if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
            raise ValueError("density matrix must be square")
        n_qubits_of(rho.shape[0])
        if not np.all(np.isfinite(rho)):
            raise ValueError("density matrix must be finite")
        scale = max(1.0, float(np.abs(rho).max()))
        if np.abs(rho - rho.conj().T).max() > HERMITIAN_TOL * scale:
            raise ValueError("density matrix is not Hermitian")
        tr = np.trace(rho)
        if self.kind == "full":
            if abs(tr - 1.0) > TRACE_TOL:
                raise ValueError(f"full density matrix has trace {tr}")
            if np.linalg.eigvalsh(rho).min() < -TRACE_TOL:
                raise ValueError("full density matrix has a negative eigenvalue")
        elif self.kind == "deviation":
            if abs(tr) > TRACE_TOL * scale:
                raise ValueError(f"deviation matrix has trace {tr}")
        else:
            raise ValueError(f"unknown density-matrix kind {self.kind!r}")
        object.__setattr__(self, "data", rho)

    @property
    def n_qubits(self) -> int:
        return n_qubits_of(self.data.shape[0])

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.data, dtype=dtype)

    def __getitem__(self, cell):
        return self.data[cell]

    def scaled(self, factor: float) -> "DensityMatrix":
        if self.kind == "full":
            raise ValueError("only deviation matrices can be rescaled")
        return DensityMatrix(self.data * factor, kind=self.kind)

    def deviation(self) -> "DensityMatrix":
        """Traceless part of the state."""
        dim = self.data.shape[0]
        return DensityMatrix(self.data - np.trace(self.data) / dim * np.eye(dim), kind="deviation")


@dataclass(frozen=True, eq=False)
class UnitaryMatrix:
    data: np.ndarray

    def __post_init__(self):
        u = _frozen(self.data)
        if u.ndim != 2 or u.shape[0] != u.shape[1]:
            raise ValueError("unitary must be square")
        n_qubits_of(u.shape[0])
        if not is_unitary(u):
            raise ValueError("matrix is not unitary")
        object.__setattr__(self, "data", u)

    @property
    def n_qubits(self) -> int:
        return n_qubits_of(self.data.shape[0])

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.data, dtype=dtype)


def is_unitary(u: np.ndarray, tol: float = UNITARY_TOL) -> bool:
    u = np.asarray(u)
    return bool(np.abs(u.conj().T @ u - np.eye(u.shape[0])).max() <= tol)


def _as_unitary(u) -> np.ndarray:
    return u.data if isinstance(u, UnitaryMatrix) else UnitaryMatrix(u).data


def apply_unitary_state(u, psi: StateVector) -> StateVector:
    u = _as_unitary(u)
    if u.shape[0] != psi.amplitudes.size:
        raise ValueError(f"dimension mismatch: {u.shape[0]} vs {psi.amplitudes.size}")
    return StateVector(u @ psi.amplitudes)


def apply_unitary_density(u, rho: DensityMatrix) -> DensityMatrix:
    u = _as_unitary(u)
    if u.shape != rho.data.shape:
        raise ValueError(f"dimension mismatch: {u.shape} vs {rho.data.shape}")
    return DensityMatrix(u @ rho.data @ u.conj().T, kind=rho.kind)


def distance_up_to_global_phase(a, b) -> float:
    """Max-entry distance between ``a`` and ``c*b`` with a unit-modulus ``c``.

    ``c`` is anchored on the entry where ``|a|*|b|`` is largest, which keeps the
    measure symmetric in its arguments. It is zero exactly when ``a = c*b``.
    """
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    k = np.unravel_index(np.argmax(np.abs(a) * np.abs(b)), a.shape)
    overlap = a[k] * np.conj(b[k])
    c = overlap / abs(overlap) if abs(overlap) > 0 else 1.0
    return float(np.abs(a - c * b).max())


def fidelity_observables(rho, sigma, cells: Sequence[tuple[int, int]]) -> float:
    """Compare two matrices on a few observable cells, up to a positive scale.

    Each side is divided by its largest magnitude among ``cells`` (zero-based
    index pairs) before taking the max absolute difference.
    """
    if not cells:
        raise ValueError("at least one cell is required")
    a = np.array([np.asarray(rho)[i, j] for i, j in cells], dtype=complex)
    b = np.array([np.asarray(sigma)[i, j] for i, j in cells], dtype=complex)
    ma, mb = np.abs(a).max(), np.abs(b).max()
    if ma == 0 and mb == 0:
        return 0.0
    if ma > 0:
        a = a / ma
    if mb > 0:
        b = b / mb
    return float(np.abs(a - b).max())


def fit_real_scale(data, model) -> tuple[float, float]:
    """Least-squares real ``c`` with ``data ~ c*model``; returns ``(c, max residual)``."""
    d = np.asarray(data, dtype=complex).ravel()
    m = np.asarray(model, dtype=complex).ravel()
    denom = float(np.vdot(m, m).real)
    if denom == 0:
        raise ValueError("model is identically zero")
    c = float(np.vdot(m, d).real) / denom
    return c, float(np.abs(d - c * m).max())
