"""Control-qubit measurement protocols and the assembled total expectation.

Every protocol is simulated at circuit level: a control qubit prepared in
``|+phi> = e^{-i phi/2} RZ(phi) H |0>``, a controlled unitary on the
registers, a final Hadamard, then the control's Z statistics. ``Exact`` mode
returns the exact control <Z>; shot mode draws binomial outcomes from it.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from functools import lru_cache
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .ansatz import AnsatzSpec, Layout, build_ansatz, parameter_count
from .errors import ValidationError
from .operators import (
    DEProblem,
    PotentialKind,
    PotentialSpec,
    apply_subtractor,
    harmonic_weights,
    nonlinear_density_op,
    subtractor,
)
from .state import (
    MAX_QUBITS,
    RY,
    RZ,
    DiagonalMixedState,
    H,
    Statevector,
    X,
    apply_1q_gate,
    apply_cnot,
    apply_controlled_unitary,
    apply_multi_controlled,
    basis_state,
    sample_z_from_expectation,
    z_expectation,
    zero_state,
)

PHI_REAL = 0.0
PHI_IMAG = -np.pi / 2


@dataclass(frozen=True)
class MeasurementConfig:
    """``shots=None`` means exact control-qubit statistics.

    ``mixed_path`` selects how diagonal mixed states enter the SWAP test:
    ``"direct"`` injects the mixture, ``"purified"`` prepares a pure state and
    decoheres it with ancillas first.
    """

    shots: Optional[int] = None
    seed: int = 0
    phase_phi: float = PHI_REAL
    mixed_path: str = "direct"

    def __post_init__(self):
        if self.shots is not None and self.shots < 1:
            raise ValidationError("shots must be >= 1")
        if self.mixed_path not in ("direct", "purified"):
            raise ValidationError(f"unknown mixed_path {self.mixed_path!r}")

    @property
    def exact(self) -> bool:
        return self.shots is None

    @property
    def mode(self) -> str:
        return "exact" if self.exact else "shots"


EXACT = MeasurementConfig()


@dataclass(frozen=True)
class ExpectationBreakdown:
    re_a_dagger: float
    im_a_dagger: float
    pot_overlap: float
    nl_overlap: float
    total: float

    def __post_init__(self):
        for name in ("re_a_dagger", "im_a_dagger", "pot_overlap", "nl_overlap", "total"):
            object.__setattr__(self, name, float(getattr(self, name)))


def _sub_seed(seed: int, tag: int) -> int:
    return int(np.random.SeedSequence(entropy=seed, spawn_key=(tag,)).generate_state(1)[0])


def _readout(z: float, cfg: MeasurementConfig, tag: int = 0) -> float:
    if cfg.exact:
        return z
    return sample_z_from_expectation(z, cfg.shots, _sub_seed(cfg.seed, tag))


def _prepare_control(joint: Statevector, control: int, phi: float) -> Statevector:
    joint = apply_1q_gate(joint, H, control)
    joint = apply_1q_gate(joint, np.exp(-0.5j * phi) * RZ(phi), control)
    return joint


def control_z(
    registers: Statevector, op: np.ndarray, system: Sequence[int], phi: float = PHI_REAL,
    check_unitary: bool = True,
) -> float:
    """Exact control <Z> of the Hadamard-test circuit.

    ``registers`` excludes the control qubit, which is prepended as qubit 0;
    ``system`` indexes into ``registers``.
    """
    joint = zero_state(1).tensor(registers)
    joint = _prepare_control(joint, 0, phi)
    joint = apply_controlled_unitary(joint, op, 0, [q + 1 for q in system], check_unitary)
    joint = apply_1q_gate(joint, H, 0)
    return z_expectation(joint, 0)


def hadamard_test(system: Statevector, op: np.ndarray, cfg: MeasurementConfig = EXACT, tag: int = 0) -> float:
    """Re (phi = 0) or Im (phi = -pi/2) of <psi|op|psi> for unitary ``op``."""
    z = control_z(system, op, range(system.n_qubits), cfg.phase_phi)
    return _readout(z, cfg, tag)


# ---------------------------------------------------------------- SWAP tests


def swap_gate(n_total: int, a: int, b: int) -> np.ndarray:
    """Dense SWAP of qubits ``a`` and ``b`` inside an ``n_total``-qubit register."""
    dim = 1 << n_total
    idx = np.arange(dim)
    sa, sb = n_total - 1 - a, n_total - 1 - b
    bit_a, bit_b = (idx >> sa) & 1, (idx >> sb) & 1
    swapped = idx ^ ((bit_a ^ bit_b) << sa) ^ ((bit_a ^ bit_b) << sb)
    op = np.zeros((dim, dim), dtype=np.complex128)
    op[swapped, idx] = 1.0
    return op


@lru_cache(maxsize=None)
def block_swap(n_qubits: int) -> np.ndarray:
    """W_tot = W_{A1,B1} W_{A2,B2} ... exchanging two n-qubit registers."""
    op = np.eye(1 << (2 * n_qubits), dtype=np.complex128)
    for i in range(n_qubits):
        op = swap_gate(2 * n_qubits, i, n_qubits + i) @ op
    op.setflags(write=False)
    return op


def _check_pair(a_qubits: int, b_qubits: int) -> None:
    if a_qubits != b_qubits:
        raise ValidationError(f"register sizes differ ({a_qubits} vs {b_qubits})")


def swap_overlap(a: Statevector, b: Statevector, cfg: MeasurementConfig = EXACT, tag: int = 0) -> float:
    """|<a|b>|^2 from the controlled block-SWAP test."""
    _check_pair(a.n_qubits, b.n_qubits)
    n = a.n_qubits
    z = control_z(a.tensor(b), block_swap(n), range(2 * n), PHI_REAL, check_unitary=False)
    return _readout(z, cfg, tag)


def _swap_mixed_direct(pure: Statevector, mixed: DiagonalMixedState) -> float:
    # Control statistics are linear in the injected state: run the circuit
    # for every basis state of the mixture and weight the outcomes.
    n = pure.n_qubits
    z = 0.0
    for g in np.flatnonzero(mixed.diag):
        z += mixed.diag[g] * control_z(pure.tensor(basis_state(n, int(g))), block_swap(n), range(2 * n),
                                         check_unitary=False)
    return z


def _swap_mixed_purified(pure: Statevector, chi: Statevector) -> float:
    # Registers: A (pure), B (chi), Q (ancillas). CNOT B_i -> Q_i decoheres B.
    n = pure.n_qubits
    if 3 * n + 1 > MAX_QUBITS:
        raise ValidationError(f"purified SWAP test needs {3 * n + 1} qubits (cap {MAX_QUBITS})")
    regs = pure.tensor(chi).tensor(zero_state(n))
    for i in range(n):
        regs = apply_cnot(regs, n + i, 2 * n + i)
    return control_z(regs, block_swap(n), range(2 * n), check_unitary=False)


def swap_mixed(
    pure: Statevector,
    mixed: DiagonalMixedState,
    cfg: MeasurementConfig = EXACT,
    tag: int = 0,
    purification: Optional[Statevector] = None,
) -> float:
    """<chi| rho |chi> for a pure state and a diagonal mixed state.

    With ``cfg.mixed_path == "purified"`` the mixture is built on the fly from
    ``purification`` (or from sqrt(diag) via :func:`prepare_target_state`).
    """
    _check_pair(pure.n_qubits, mixed.n_qubits)
    if cfg.mixed_path == "direct":
        z = _swap_mixed_direct(pure, mixed)
    else:
        if purification is None:
            purification = prepare_target_state(np.sqrt(mixed.diag))[1]
        _check_pair(pure.n_qubits, purification.n_qubits)
        z = _swap_mixed_purified(pure, purification)
    return _readout(z, cfg, tag)


# ---------------------------------------------------------------- state prep


def prepare_target_state(amplitudes: Sequence[float]) -> Tuple[List[tuple], Statevector]:
    """Controlled-RY cascade preparing a real normalised target from |0..0>.

    Qubit k is rotated conditioned on every value of qubits 0..k-1; a
    condition on 0 is realised by X gates around an all-ones control.
    Gates are ``("RY", q, angle)``, ``("X", q)`` or
    ``("CRY", controls, q, angle)``.
    """
    a = np.asarray(amplitudes)
    if np.iscomplexobj(a):
        if np.max(np.abs(a.imag)) > 1e-12:
            raise ValidationError("target amplitudes must be real")
        a = a.real
    a = a.astype(np.float64).reshape(-1)
    dim = a.shape[0]
    n = dim.bit_length() - 1
    if dim < 2 or (1 << n) != dim:
        raise ValidationError(f"length {dim} is not a power of two >= 2")
    if abs(float(a @ a) - 1.0) > 1e-10:
        raise ValidationError("target amplitudes are not normalised")

    gates: List[tuple] = []
    for k in range(n):
        blocks = a.reshape(1 << k, 2, -1)
        if k == n - 1:
            angles = 2.0 * np.arctan2(blocks[:, 1, 0], blocks[:, 0, 0])
        else:
            norms = np.linalg.norm(blocks, axis=2)
            angles = 2.0 * np.arctan2(norms[:, 1], norms[:, 0])
        if k == 0:
            gates.append(("RY", 0, float(angles[0])))
            continue
        controls = tuple(range(k))
        top = (1 << k) - 1
        for prefix in [top, *range(top)]:
            flips = [q for q in controls if not (prefix >> (k - 1 - q)) & 1]
            gates += [("X", q) for q in flips]
            gates.append(("CRY", controls, k, float(angles[prefix])))
            gates += [("X", q) for q in flips]

    state = zero_state(n)
    for gate in gates:
        if gate[0] == "RY":
            state = apply_1q_gate(state, RY(gate[2]), gate[1])
        elif gate[0] == "X":
            state = apply_1q_gate(state, X, gate[1])
        else:
            state = apply_multi_controlled(state, RY(gate[3]), gate[1], gate[2])
    return gates, state


def potential_target_amplitudes(n_qubits: int = 3) -> np.ndarray:
    """sqrt of the harmonic-well weights; for 3 qubits (4,3,2,1,0,1,2,3)/(2 sqrt 11)."""
    return np.sqrt(harmonic_weights(n_qubits))


# ---------------------------------------------------------------- assembly


def derivative_expectations(
    system: Statevector, cfg: MeasurementConfig = EXACT
) -> Tuple[float, float, float, float]:
    """(Re<A_dag>, Im<A_dag>, <O_d1>, <O_d2>) from two Hadamard tests.

    ``<O_d1>`` uses the printed first-derivative estimate
    (1 - Re - Im) / dL, which coincides with the real part of the exact
    expectation only when Im<A_dag> = 0 (real states). ``<O_d2>`` is exact.
    """
    n = system.n_qubits
    dl = 2.0 ** -n
    a_dag = subtractor(n)
    re = hadamard_test(system, a_dag, replace(cfg, phase_phi=PHI_REAL), tag=1)
    im = hadamard_test(system, a_dag, replace(cfg, phase_phi=PHI_IMAG), tag=2)
    d1 = (1.0 - re - im) / dl
    d2 = 2.0 * (re - 1.0) / dl**2
    return re, im, d1, d2


def _potential_scale(problem: DEProblem, potential: Optional[PotentialSpec]):
    """Return (scale, rho_chi) with <V> = scale * <rho_chi>, or (0, None)."""
    n = problem.n_qubits
    if potential is None:
        potential = PotentialSpec(PotentialKind.HARMONIC, problem.v_max)
    if potential.kind is PotentialKind.HARMONIC:
        if potential.v_max == 0.0:
            return 0.0, None
        return potential.v_max, DiagonalMixedState(harmonic_weights(n))
    vals = potential.diag(n)
    if np.any(vals < 0):
        raise ValidationError("custom potentials must be non-negative (fold offsets into kappa0)")
    trace = float(vals.sum())
    if trace == 0.0:
        return 0.0, None
    return trace, DiagonalMixedState(vals / trace)


def assemble_total(problem: DEProblem, re: float, im: float, pot_term: float, nl_overlap: float) -> float:
    """Scalar <O_tot> from the per-protocol outcomes.

    (2 k2/dL^2 - k1/dL) Re - (k1/dL) Im + k0 + k1/dL - 2 k2/dL^2 + <V> + kn <rho_D>
    """
    dl = problem.delta_l
    k2, k1 = problem.kappa2, problem.kappa1
    return (
        (2.0 * k2 / dl**2 - k1 / dl) * re
        - (k1 / dl) * im
        + problem.kappa0
        + k1 / dl
        - 2.0 * k2 / dl**2
        + pot_term
        + problem.kappa_n * nl_overlap
    )


def expectation_breakdown(
    problem: DEProblem,
    potential: Optional[PotentialSpec],
    system: Statevector,
    cfg: MeasurementConfig = EXACT,
) -> ExpectationBreakdown:
    """Run every sub-protocol on ``system`` and assemble <O_tot>.

    Terms whose coefficient is zero are not measured and reported as 0.
    """
    if system.n_qubits != problem.n_qubits:
        raise ValidationError("system size does not match the problem")
    re, im, _, _ = derivative_expectations(system, cfg)
    scale, rho_chi = _potential_scale(problem, potential)
    pot = 0.0
    if rho_chi is not None:
        chi = None
        if cfg.mixed_path == "purified":
            chi = prepare_target_state(np.sqrt(rho_chi.diag))[1]
        pot = swap_mixed(system, rho_chi, cfg, tag=3, purification=chi)
    nl = 0.0
    if problem.kappa_n != 0.0:
        # The purified route decoheres a second copy of the system state.
        nl = swap_mixed(system, nonlinear_density_op(system), cfg, tag=4, purification=system)
    total = assemble_total(problem, re, im, scale * pot, nl)
    return ExpectationBreakdown(re, im, pot, nl, total)


def layout_for(params: Sequence[float]) -> Layout:
    k = len(params)
    for layout in Layout:
        if parameter_count(layout) == k:
            return layout
    raise ValueError(f"no ansatz layout takes {k} parameters")


def total_expectation(
    problem: DEProblem,
    potential: Optional[PotentialSpec],
    params: Sequence[float],
    cfg: MeasurementConfig = EXACT,
    layout: Optional[Layout] = None,
) -> ExpectationBreakdown:
    """Build the depth-``problem.depth`` ansatz and evaluate <O_tot>."""
    spec = AnsatzSpec(problem.n_qubits, problem.depth, layout or layout_for(params))
    return expectation_breakdown(problem, potential, build_ansatz(spec, params), cfg)


def shift_expectation_fast(system: Statevector) -> complex:
    """<psi|A_dag|psi> by an O(2^N) index roll (no circuit)."""
    amps = system.amplitudes
    return complex(np.vdot(amps, apply_subtractor(amps)))
