"""Self-check suite run by ``quva verify``.

Every check compares two independently computed quantities and returns a
named pass/fail line. The suite is seeded, so repeated runs print the same
report.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, List

import numpy as np

from . import gpr, operators
from .ansatz import AnsatzSpec, build_ansatz, random_parameters
from .expectation import (
    PHI_IMAG,
    MeasurementConfig,
    expectation_breakdown,
    hadamard_test,
    potential_target_amplitudes,
    prepare_target_state,
    swap_mixed,
)
from .operators import DEProblem, circulant_spectrum, harmonic_weights, second_derivative_op, subtractor, total_operator
from .oracles import (
    analytic_2o_solution,
    direct_expectation,
    discretize,
    periodic_solution,
    quantum_residual,
)
from .state import DiagonalMixedState, Statevector, decohere_to_diagonal


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'}  {self.name}: {self.detail}"


def _random_state(rng, n) -> Statevector:
    v = rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)
    return Statevector.normalized(v)


def _random_unitary(rng, dim) -> np.ndarray:
    z = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def check_translation() -> CheckResult:
    rng = np.random.default_rng(101)
    worst = 0.0
    for n in (3, 4, 5):
        dl = 2.0**-n
        for _ in range(5):
            a, b = rng.normal(size=3), rng.normal(size=3)

            def f(x, a=a, b=b):
                k = np.arange(1, 4)
                return float(a @ np.cos(2 * np.pi * k * x) + b @ np.sin(2 * np.pi * k * x))

            shifted = subtractor(n).real @ discretize(f, n)
            expected = discretize(lambda x: f(x - dl), n)
            worst = max(worst, float(np.max(np.abs(shifted - expected))))
    return CheckResult("translation: A_dag f(x) = f(x - dL)", worst <= 1e-12, f"max error {worst:.2e}")


def check_spectrum() -> CheckResult:
    worst = 0.0
    for n in range(1, 6):
        eig = np.sort(np.linalg.eigvalsh(second_derivative_op(n).real))
        worst = max(worst, float(np.max(np.abs(eig - np.sort(circulant_spectrum(n))))))
    return CheckResult("circulant spectrum of O_d2", worst <= 1e-9, f"max error {worst:.2e}")


def check_hadamard_protocol() -> CheckResult:
    rng = np.random.default_rng(102)
    worst = 0.0
    for n in (1, 2, 3, 4):
        for _ in range(3):
            psi = _random_state(rng, n)
            u = _random_unitary(rng, 1 << n)
            want = direct_expectation(psi, u)
            re = hadamard_test(psi, u)
            im = hadamard_test(psi, u, MeasurementConfig(phase_phi=PHI_IMAG))
            worst = max(worst, abs(re - want.real), abs(im - want.imag))
    return CheckResult("Hadamard-test circuit vs direct <psi|U|psi>", worst <= 1e-12, f"max error {worst:.2e}")


def check_total_expectation() -> CheckResult:
    rng = np.random.default_rng(103)
    families = [
        lambda: DEProblem(1.0, 0.0, rng.uniform(-50, 50), depth=int(rng.integers(0, 4))),
        lambda: DEProblem(1.0, rng.uniform(-50, 50), rng.uniform(-50, 50), rng.uniform(0, 50),
                          depth=int(rng.integers(0, 4))),
        lambda: DEProblem(1.0, rng.uniform(-5, 5), rng.uniform(-50, 50), rng.uniform(0, 50),
                          rng.uniform(0, 500), depth=int(rng.integers(0, 4))),
    ]
    worst = 0.0
    for make in families:
        for _ in range(10):
            p = make()
            spec = AnsatzSpec(3, p.depth)
            psi = build_ansatz(spec, random_parameters(spec, rng))
            got = expectation_breakdown(p, None, psi).total
            want = direct_expectation(psi, total_operator(p, None, psi)).real
            worst = max(worst, abs(got - want) / max(1.0, abs(want)))
    return CheckResult("protocol <O_tot> vs dense expectation", worst <= 1e-9, f"max rel error {worst:.2e}")


def check_residual_identity() -> CheckResult:
    rng = np.random.default_rng(104)
    worst, violations = 0.0, 0
    for _ in range(50):
        n = int(rng.integers(1, 5))
        psi = _random_state(rng, n)
        op = rng.normal(size=(1 << n, 1 << n)) * rng.uniform(0.1, 100)
        rep = quantum_residual(psi, op)
        worst = max(worst, abs(rep.total_expectation.real - rep.delta_overlap_re) / max(1.0, abs(rep.delta_overlap_re)))
        violations += abs(rep.total_expectation) ** 2 > rep.res_q * (1 + 1e-12)
    ok = worst <= 1e-12 and violations == 0
    return CheckResult("residual identity and Cauchy-Schwarz bound", ok,
                       f"max rel error {worst:.2e}, violations {violations}")


def check_potential_state() -> CheckResult:
    _, chi = prepare_target_state(potential_target_amplitudes(3))
    rho = decohere_to_diagonal(chi, method="circuit").to_matrix()
    target = np.diag(harmonic_weights(3))
    err_rho = float(np.max(np.abs(rho - target)))
    rng = np.random.default_rng(105)
    err_swap = 0.0
    for _ in range(10):
        psi = _random_state(rng, 3)
        w = rng.dirichlet(np.ones(8))
        mixed = DiagonalMixedState(w)
        want = float(np.sum(w * np.abs(psi.amplitudes) ** 2))
        for path in ("direct", "purified"):
            got = swap_mixed(psi, mixed, MeasurementConfig(mixed_path=path))
            err_swap = max(err_swap, abs(got - want))
    ok = err_rho <= 1e-10 and err_swap <= 1e-12
    return CheckResult("potential state prep, decoherence and mixed SWAP", ok,
                       f"rho error {err_rho:.2e}, swap error {err_swap:.2e}")


def check_degenerate_first_order() -> CheckResult:
    rng = np.random.default_rng(106)
    p = DEProblem(1.0, 16.0, 7.0, depth=2)
    spec = AnsatzSpec(3, 2)
    worst = 0.0
    for _ in range(10):
        psi = build_ansatz(spec, random_parameters(spec, rng))
        worst = max(worst, abs(expectation_breakdown(p, None, psi).total - 7.0))
    return CheckResult("kappa1 = 16 gives <O_tot> = kappa0", worst <= 1e-9, f"max error {worst:.2e}")


def check_oracles() -> CheckResult:
    p = DEProblem(1.0, -1.0, 8.0, depth=2)
    exact = analytic_2o_solution(-1.0, 8.0, -1.0)
    shoot = periodic_solution(p, None, -1.0)
    err = float(np.max(np.abs(exact.samples - shoot.samples)))
    return CheckResult("closed-form solution vs RK4 shooting", err <= 1e-8, f"max error {err:.2e}")


def check_gpr_interpolation() -> CheckResult:
    rng = np.random.default_rng(107)
    x = rng.uniform(0, 2 * np.pi, size=(20, 3))
    y = np.sin(x[:, 0]) + np.cos(x[:, 1] - x[:, 2])
    model = gpr.fit(x, y, kernel=gpr.KernelParams(float(np.var(y)), 1.0, 1e-14))
    mean, std = model.posterior(x)
    err = float(np.max(np.abs(mean - y)))
    return CheckResult("GP interpolates its training data", err <= 1e-8, f"max error {err:.2e}")


CHECKS: List[Callable[[], CheckResult]] = [
    check_translation,
    check_spectrum,
    check_hadamard_protocol,
    check_total_expectation,
    check_residual_identity,
    check_potential_state,
    check_degenerate_first_order,
    check_oracles,
    check_gpr_interpolation,
]


def run_checks(corrupt_shift: bool = False) -> List[CheckResult]:
    """Run every check; ``corrupt_shift`` reverses the subtractor as a negative control."""
    saved = operators._SHIFT
    if corrupt_shift:
        operators._SHIFT = -saved
    try:
        results = []
        for check in CHECKS:
            try:
                results.append(check())
            except Exception as exc:  # a crashing check is a failing check
                results.append(CheckResult(check.__name__, False, f"raised {type(exc).__name__}: {exc}"))
        return results
    finally:
        operators._SHIFT = saved
