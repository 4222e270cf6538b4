"""Finite-difference operators on the periodic grid x_g = g / 2^N.

Amplitude ``C_g`` stores ``f(g * dL)``. Translating the argument by ``-dL``
moves every value one index up, so the subtractor acts as
``A_dag |g> = |g + 1 mod 2^N>`` and the adder ``A`` is its transpose.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

from .errors import ValidationError
from .state import DiagonalMixedState, Statevector, decohere_to_diagonal

MAX_DERIVATIVE_ORDER = 4

# Direction of the basis-index shift applied by the subtractor. Only the
# verify command's negative control changes this.
_SHIFT = 1


@dataclass(frozen=True)
class DEProblem:
    """Coefficients of (k2 d2/dx2 + k1 d/dx + k0 + V(x) + kn |f|^2) f = 0."""

    kappa2: float = 1.0
    kappa1: float = 0.0
    kappa0: float = 0.0
    v_max: float = 0.0
    kappa_n: float = 0.0
    n_qubits: int = 3
    depth: int = 0

    def __post_init__(self):
        if self.n_qubits < 1:
            raise ValidationError("n_qubits must be >= 1")
        if self.v_max < 0:
            raise ValidationError("v_max must be >= 0")
        if self.depth < 0:
            raise ValidationError("depth must be >= 0")

    @property
    def delta_l(self) -> float:
        return 2.0 ** -self.n_qubits

    @property
    def dim(self) -> int:
        return 1 << self.n_qubits


class PotentialKind(enum.Enum):
    HARMONIC = "harmonic"
    CUSTOM = "custom"


@dataclass(frozen=True)
class PotentialSpec:
    """Diagonal potential. ``values`` is only used by ``CUSTOM``."""

    kind: PotentialKind = PotentialKind.HARMONIC
    v_max: float = 0.0
    values: Optional[Tuple[float, ...]] = field(default=None)

    def __post_init__(self):
        kind = self.kind
        if isinstance(kind, str):
            kind = PotentialKind(kind.lower())
            object.__setattr__(self, "kind", kind)
        if kind is PotentialKind.CUSTOM:
            if self.values is None:
                raise ValidationError("custom potential needs explicit values")
            object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        elif self.v_max < 0:
            raise ValidationError("harmonic v_max must be >= 0")

    def diag(self, n_qubits: int) -> np.ndarray:
        if self.kind is PotentialKind.HARMONIC:
            return harmonic_potential_diag(n_qubits, self.v_max)[0]
        vals = np.asarray(self.values, dtype=np.float64)
        if vals.shape[0] != 1 << n_qubits:
            raise ValidationError(f"custom potential has {vals.shape[0]} values, need {1 << n_qubits}")
        return vals


def no_potential() -> PotentialSpec:
    return PotentialSpec(PotentialKind.HARMONIC, 0.0)


# ---------------------------------------------------------------- shifts


def subtractor(n_qubits: int) -> np.ndarray:
    """Dense cyclic permutation A_dag with A_dag |g> = |g + 1 mod 2^N>."""
    dim = 1 << n_qubits
    g = np.arange(dim)
    op = np.zeros((dim, dim), dtype=np.complex128)
    op[(g + _SHIFT) % dim, g] = 1.0
    return op


def adder(n_qubits: int) -> np.ndarray:
    return subtractor(n_qubits).T.copy()


def apply_subtractor(amps: np.ndarray, power: int = 1) -> np.ndarray:
    """O(2^N) application of A_dag^power to a raw amplitude vector."""
    return np.roll(amps, _SHIFT * power)


# ---------------------------------------------------------------- derivatives


def second_derivative_op(n_qubits: int) -> np.ndarray:
    dl = 2.0 ** -n_qubits
    a_dag = subtractor(n_qubits)
    return (a_dag.T + a_dag - 2.0 * np.eye(1 << n_qubits)) / dl**2


def first_derivative_op(n_qubits: int) -> np.ndarray:
    """Backward difference (f_g - f_{g-1}) / dL."""
    dl = 2.0 ** -n_qubits
    return (np.eye(1 << n_qubits) - subtractor(n_qubits)) / dl


def derivative_power(n_qubits: int, order: int) -> np.ndarray:
    """First-derivative operator composed ``order`` times."""
    if order < 1:
        raise ValueError("order must be >= 1 (use the identity for order 0)")
    if order > MAX_DERIVATIVE_ORDER:
        raise ValueError(f"order must be <= {MAX_DERIVATIVE_ORDER}")
    return np.linalg.matrix_power(first_derivative_op(n_qubits), order)


def circulant_spectrum(n_qubits: int) -> np.ndarray:
    """Eigenvalues (2/dL^2)(cos(2 pi k / 2^N) - 1) of the second-derivative op."""
    dim = 1 << n_qubits
    k = np.arange(dim)
    return 2.0 * dim**2 * (np.cos(2.0 * np.pi * k / dim) - 1.0)


# ---------------------------------------------------------------- potentials


def harmonic_weights(n_qubits: int) -> np.ndarray:
    """(1 - 2 x_g)^2 on the grid, scaled to unit trace.

    For three qubits this is (4/11)(1 - g/4)^2.
    """
    dim = 1 << n_qubits
    x = np.arange(dim) / dim
    w = (1.0 - 2.0 * x) ** 2
    return w / w.sum()


def harmonic_potential_diag(n_qubits: int, v_max: float) -> Tuple[np.ndarray, np.ndarray]:
    """Harmonic well diagonal ``V_g`` and its dense matrix (trace = v_max)."""
    diag = v_max * harmonic_weights(n_qubits)
    return diag, np.diag(diag).astype(np.complex128)


def potential_mixed_state(n_qubits: int) -> DiagonalMixedState:
    """rho_chi = V / V_max for the harmonic well."""
    return DiagonalMixedState(harmonic_weights(n_qubits))


def nonlinear_density_op(system: Statevector) -> DiagonalMixedState:
    """rho_D = sum_g |C_g|^2 |g><g| for the current system state."""
    return decohere_to_diagonal(system)


# ---------------------------------------------------------------- assembly


def derivative_operator(problem: DEProblem) -> np.ndarray:
    n = problem.n_qubits
    return (
        problem.kappa2 * second_derivative_op(n)
        + problem.kappa1 * first_derivative_op(n)
        + problem.kappa0 * np.eye(1 << n)
    )


def total_operator(
    problem: DEProblem, potential: Optional[PotentialSpec] = None, system: Optional[Statevector] = None
) -> np.ndarray:
    """Dense k2 O_d2 + k1 O_d1 + k0 I + V + kn rho_D for oracle use.

    Without ``potential`` the harmonic well of height ``problem.v_max`` is used.
    """
    n = problem.n_qubits
    op = derivative_operator(problem).astype(np.complex128)
    if potential is None:
        potential = PotentialSpec(PotentialKind.HARMONIC, problem.v_max)
    op += np.diag(potential.diag(n))
    if problem.kappa_n != 0.0:
        if system is None:
            raise ValueError("a system state is required when kappa_n != 0")
        if system.n_qubits != n:
            raise ValidationError("system size does not match the problem")
        op += problem.kappa_n * nonlinear_density_op(system).to_matrix()
    return op


def separable_2d_ops(n_qubits_x: int, n_qubits_y: int) -> Tuple[np.ndarray, np.ndarray]:
    """Kronecker-sum Laplacian and gradient-sum operators on an x-y grid."""
    if n_qubits_x != n_qubits_y:
        raise ValidationError("equal grid spacing in x and y requires equal qubit counts")
    ix, iy = np.eye(1 << n_qubits_x), np.eye(1 << n_qubits_y)
    lap = np.kron(second_derivative_op(n_qubits_x), iy) + np.kron(ix, second_derivative_op(n_qubits_y))
    grad = np.kron(first_derivative_op(n_qubits_x), iy) + np.kron(ix, first_derivative_op(n_qubits_y))
    return lap, grad
