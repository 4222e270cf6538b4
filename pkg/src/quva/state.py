"""Dense statevector simulation.

Basis index convention: qubit 0 is the most significant bit of the basis
index ``g``, so for three qubits ``|j k l>`` has ``g = 4j + 2k + l``. All
qubit arguments are 0-based under that convention.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import _kernels
from .errors import ConsistencyError, ValidationError

MAX_QUBITS = 12
NORM_TOL = 1e-10
UNITARY_TOL = 1e-10

DenseOperator = np.ndarray


def _freeze(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Statevector:
    """Normalised complex amplitude vector of an ``n``-qubit register."""

    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=np.complex128).reshape(-1)
        dim = amps.shape[0]
        n = dim.bit_length() - 1
        if dim < 2 or (1 << n) != dim:
            raise ValidationError(f"length {dim} is not a power of two >= 2")
        if n > MAX_QUBITS:
            raise ValidationError(f"{n} qubits exceeds the cap of {MAX_QUBITS}")
        norm = float(np.vdot(amps, amps).real)
        if abs(norm - 1.0) > NORM_TOL:
            raise ValidationError(f"state is not normalised (norm^2 = {norm!r})")
        object.__setattr__(self, "amplitudes", _freeze(amps))

    @classmethod
    def normalized(cls, amplitudes) -> "Statevector":
        amps = np.asarray(amplitudes, dtype=np.complex128)
        nrm = np.linalg.norm(amps)
        if nrm == 0:
            raise ValidationError("cannot normalise the zero vector")
        return cls(amps / nrm)

    @property
    def n_qubits(self) -> int:
        return self.amplitudes.shape[0].bit_length() - 1

    @property
    def dim(self) -> int:
        return self.amplitudes.shape[0]

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def tensor(self, other: "Statevector") -> "Statevector":
        return Statevector(np.kron(self.amplitudes, other.amplitudes))

    def __len__(self):
        return self.dim

    def __repr__(self):
        return f"Statevector(n_qubits={self.n_qubits}, amplitudes={self.amplitudes!r})"


@dataclass(frozen=True, eq=False)
class DiagonalMixedState:
    """Density matrix that is diagonal in the computational basis."""

    diag: np.ndarray

    def __post_init__(self):
        d = np.array(self.diag, dtype=np.float64).reshape(-1)
        dim = d.shape[0]
        n = dim.bit_length() - 1
        if dim < 2 or (1 << n) != dim:
            raise ValidationError(f"length {dim} is not a power of two >= 2")
        if np.any(d < -1e-15):
            raise ValidationError("diagonal entries must be non-negative")
        if abs(d.sum() - 1.0) > 1e-12:
            raise ValidationError(f"diagonal must sum to 1 (got {d.sum()!r})")
        object.__setattr__(self, "diag", _freeze(np.clip(d, 0.0, None)))

    @property
    def n_qubits(self) -> int:
        return self.diag.shape[0].bit_length() - 1

    def to_matrix(self) -> np.ndarray:
        return np.diag(self.diag).astype(np.complex128)


# ---------------------------------------------------------------- gates

_SQ2 = 1.0 / np.sqrt(2.0)
H = np.array([[_SQ2, _SQ2], [_SQ2, -_SQ2]], dtype=np.complex128)
X = np.array([[0, 1], [1, 0]], dtype=np.complex128)
Y = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
Z = np.array([[1, 0], [0, -1]], dtype=np.complex128)
I2 = np.eye(2, dtype=np.complex128)


def RX(theta: float) -> np.ndarray:
    return np.cos(theta / 2) * I2 - 1j * np.sin(theta / 2) * X


def RY(theta: float) -> np.ndarray:
    return np.cos(theta / 2) * I2 - 1j * np.sin(theta / 2) * Y


def RZ(theta: float) -> np.ndarray:
    return np.cos(theta / 2) * I2 - 1j * np.sin(theta / 2) * Z


def zero_state(n_qubits: int) -> Statevector:
    if not 1 <= n_qubits <= MAX_QUBITS:
        raise ValidationError(f"n_qubits must be in [1, {MAX_QUBITS}], got {n_qubits}")
    amps = np.zeros(1 << n_qubits, dtype=np.complex128)
    amps[0] = 1.0
    return Statevector(amps)


def basis_state(n_qubits: int, index: int) -> Statevector:
    amps = np.zeros(1 << n_qubits, dtype=np.complex128)
    amps[index] = 1.0
    return Statevector(amps)


def uniform_state(n_qubits: int) -> Statevector:
    dim = 1 << n_qubits
    return Statevector(np.full(dim, 1.0 / np.sqrt(dim), dtype=np.complex128))


def fourier_state(n_qubits: int, k: int) -> Statevector:
    """(1/sqrt(M)) sum_g exp(2 pi i g k / M) |g>,  M = 2**n_qubits."""
    dim = 1 << n_qubits
    g = np.arange(dim)
    return Statevector(np.exp(2j * np.pi * g * k / dim) / np.sqrt(dim))


def _check_qubit(state: Statevector, q: int) -> None:
    if not 0 <= q < state.n_qubits:
        raise IndexError(f"qubit {q} outside register of {state.n_qubits} qubits")


def apply_1q_gate(state: Statevector, gate: np.ndarray, target: int) -> Statevector:
    """Apply a 2x2 unitary to ``target``."""
    _check_qubit(state, target)
    mat = np.ascontiguousarray(gate, dtype=np.complex128)
    if mat.shape != (2, 2):
        raise ValidationError(f"single-qubit gate must be 2x2, got {mat.shape}")
    return Statevector(_kernels.apply_1q(state.amplitudes, mat, target, state.n_qubits))


def apply_cnot(state: Statevector, control: int, target: int) -> Statevector:
    _check_qubit(state, control)
    _check_qubit(state, target)
    if control == target:
        raise ValueError("control and target must differ")
    return Statevector(_kernels.apply_cx(state.amplitudes, control, target, state.n_qubits))


def is_unitary(op: np.ndarray, tol: float = UNITARY_TOL) -> bool:
    op = np.asarray(op)
    if op.ndim != 2 or op.shape[0] != op.shape[1]:
        return False
    return bool(np.allclose(op.conj().T @ op, np.eye(op.shape[0]), atol=tol, rtol=0))


def apply_operator(amps: np.ndarray, op: np.ndarray, qubits: Sequence[int], n: int) -> np.ndarray:
    """Apply a dense ``2^k x 2^k`` matrix to the listed qubits (any order).

    No unitarity or normalisation check; returns a raw amplitude array.
    """
    qubits = list(qubits)
    k = len(qubits)
    psi = np.moveaxis(np.asarray(amps).reshape((2,) * n), qubits, range(k))
    shape = psi.shape
    psi = (np.asarray(op) @ psi.reshape(1 << k, -1)).reshape(shape)
    return np.moveaxis(psi, range(k), qubits).reshape(-1)


def apply_controlled_unitary(
    state: Statevector, op: np.ndarray, control: int, system: Sequence[int], check_unitary: bool = True
) -> Statevector:
    """|0><0|_c (x) I + |1><1|_c (x) op acting on the ``system`` qubits.

    ``check_unitary=False`` skips the O(dim^3) check for operators the caller
    built as permutations.
    """
    system = list(system)
    _check_qubit(state, control)
    for q in system:
        _check_qubit(state, q)
    if control in system or len(set(system)) != len(system):
        raise ValueError("system qubits must be distinct and exclude the control")
    op = np.asarray(op, dtype=np.complex128)
    if op.shape != (1 << len(system),) * 2:
        raise ValidationError(f"operator shape {op.shape} does not match {len(system)} qubits")
    if check_unitary and not is_unitary(op):
        raise ValidationError("controlled operation requires a unitary operator")
    n = state.n_qubits
    psi = np.moveaxis(state.amplitudes.reshape((2,) * n), control, 0).copy()
    psi[1] = apply_operator(psi[1].reshape(-1), op, [q - (q > control) for q in system], n - 1).reshape(
        psi[1].shape
    )
    return Statevector(np.moveaxis(psi, 0, control).reshape(-1))


def apply_multi_controlled(
    state: Statevector, gate: np.ndarray, controls: Sequence[int], target: int
) -> Statevector:
    """Apply ``gate`` to ``target`` on the subspace where every control is 1."""
    n = state.n_qubits
    for q in (*controls, target):
        _check_qubit(state, q)
    psi = state.amplitudes.reshape((2,) * n).copy()
    sel = [slice(None)] * n
    for c in controls:
        sel[c] = 1
    sel = tuple(sel)
    sub = psi[sel]
    remaining = [q for q in range(n) if q not in controls]
    t = remaining.index(target)
    psi[sel] = apply_operator(sub.reshape(-1), gate, [t], len(remaining)).reshape(sub.shape)
    return Statevector(psi.reshape(-1))


def z_expectation(state: Statevector, qubit: int) -> float:
    """Exact <Z> on one qubit."""
    _check_qubit(state, qubit)
    p = state.probabilities().reshape((2,) * state.n_qubits)
    p = np.moveaxis(p, qubit, 0).reshape(2, -1).sum(axis=1)
    return float(np.clip(p[0] - p[1], -1.0, 1.0))


def sample_z_from_expectation(z: float, shots: int, rng_seed: int) -> float:
    if shots < 1:
        raise ValueError("shots must be >= 1")
    p_up = min(max((1.0 + z) / 2.0, 0.0), 1.0)
    ups = np.random.default_rng(rng_seed).binomial(shots, p_up)
    return (2.0 * ups - shots) / shots


def sample_z(state: Statevector, qubit: int, shots: int, rng_seed: int) -> float:
    """Mean of ``shots`` simulated +-1 Z outcomes on ``qubit``."""
    return sample_z_from_expectation(z_expectation(state, qubit), shots, rng_seed)


# ---------------------------------------------------------------- decoherence


def decohere_circuit(state: Statevector) -> np.ndarray:
    """Run the pairwise-CNOT + ancilla-discard channel and return rho_S.

    Each system qubit i is copied onto a fresh ancilla with CNOT(i, n + i);
    tracing the ancillas out leaves the reduced density matrix of the system.
    """
    n = state.n_qubits
    joint = state.tensor(zero_state(n))
    for i in range(n):
        joint = apply_cnot(joint, i, n + i)
    m = joint.amplitudes.reshape(1 << n, 1 << n)
    return m @ m.conj().T


def decohere_to_diagonal(state: Statevector, method: str = "shortcut") -> DiagonalMixedState:
    """Diagonal mixed state with entries |C_g|^2.

    ``method="circuit"`` simulates the ancilla construction (at most
    ``MAX_QUBITS // 2`` system qubits) and checks it against the shortcut.
    """
    direct = state.probabilities()
    if method == "shortcut":
        return DiagonalMixedState(direct / direct.sum())
    if method != "circuit":
        raise ValueError(f"unknown method {method!r}")
    rho = decohere_circuit(state)
    diag = rho.diagonal().real
    off = rho - np.diag(rho.diagonal())
    if np.max(np.abs(off), initial=0.0) > 1e-12 or np.max(np.abs(diag - direct)) > 1e-12:
        raise ConsistencyError("decoherence circuit disagrees with |amplitude|^2")
    return DiagonalMixedState(diag / diag.sum())
