import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import random_state, random_unitary
from quva.ansatz import AnsatzSpec, Layout, build_ansatz, random_parameters
from quva.errors import ValidationError
from quva.expectation import (
    EXACT,
    PHI_IMAG,
    MeasurementConfig,
    block_swap,
    derivative_expectations,
    expectation_breakdown,
    hadamard_test,
    potential_target_amplitudes,
    prepare_target_state,
    shift_expectation_fast,
    swap_gate,
    swap_mixed,
    swap_overlap,
    total_expectation,
)
from quva.operators import DEProblem, PotentialSpec, first_derivative_op, subtractor, total_operator
from quva.oracles import direct_expectation
from quva.state import DiagonalMixedState, Statevector, decohere_to_diagonal


@given(st.integers(1, 5), st.integers(0, 2**31 - 1))
def test_hadamard_test_matches_direct(n, seed):
    rng = np.random.default_rng(seed)
    psi = random_state(rng, n)
    u = random_unitary(rng, 1 << n)
    want = direct_expectation(psi, u)
    assert hadamard_test(psi, u) == pytest.approx(want.real, abs=1e-12)
    im = hadamard_test(psi, u, MeasurementConfig(phase_phi=PHI_IMAG))
    assert im == pytest.approx(want.imag, abs=1e-12)


def test_hadamard_test_rejects_non_unitary(rng):
    with pytest.raises(ValidationError):
        hadamard_test(random_state(rng, 2), np.eye(4) * 2)


def test_swap_gate_exchanges_qubits():
    op = swap_gate(2, 0, 1).real
    np.testing.assert_array_equal(op @ np.array([0, 1, 0, 0]), [0, 0, 1, 0])


@given(st.integers(1, 4), st.integers(0, 2**31 - 1))
def test_swap_overlap_is_squared_overlap(n, seed):
    rng = np.random.default_rng(seed)
    a, b = random_state(rng, n), random_state(rng, n)
    assert swap_overlap(a, b) == pytest.approx(abs(np.vdot(a.amplitudes, b.amplitudes)) ** 2, abs=1e-12)


def test_block_swap_is_involution():
    w = block_swap(2)
    np.testing.assert_allclose(w @ w, np.eye(16))
    assert not w.flags.writeable


@pytest.mark.parametrize("path", ["direct", "purified"])
def test_swap_mixed_against_direct_sum(path, rng):
    for _ in range(10):
        psi = random_state(rng, 3)
        w = rng.dirichlet(np.ones(8))
        got = swap_mixed(psi, DiagonalMixedState(w), MeasurementConfig(mixed_path=path))
        assert got == pytest.approx(float(np.sum(w * psi.probabilities())), abs=1e-12)


def test_swap_mixed_size_mismatch(rng):
    with pytest.raises(ValidationError):
        swap_mixed(random_state(rng, 2), DiagonalMixedState(np.ones(8) / 8))


def test_prepared_potential_state_amplitudes():
    _, chi = prepare_target_state(potential_target_amplitudes(3))
    want = np.array([4, 3, 2, 1, 0, 1, 2, 3]) / (2 * np.sqrt(11))
    np.testing.assert_allclose(chi.amplitudes, want, atol=1e-14)


def test_prepared_state_decoheres_to_potential_operator():
    _, chi = prepare_target_state(potential_target_amplitudes(3))
    rho = decohere_to_diagonal(chi, "circuit").to_matrix()
    g = np.arange(8)
    np.testing.assert_allclose(rho, np.diag(4 / 11 * (1 - g / 4) ** 2), atol=1e-10)


@given(st.integers(1, 4), st.integers(0, 2**31 - 1))
def test_prepare_arbitrary_real_target(n, seed):
    rng = np.random.default_rng(seed)
    target = rng.normal(size=1 << n)
    target[rng.random(1 << n) < 0.3] = 0.0
    if not target.any():
        target[0] = 1.0
    target /= np.linalg.norm(target)
    gates, psi = prepare_target_state(target)
    np.testing.assert_allclose(psi.amplitudes, target, atol=1e-12)
    assert all(g[0] in ("RY", "X", "CRY") for g in gates)


def test_prepare_rejects_bad_targets():
    with pytest.raises(ValidationError):
        prepare_target_state([1.0, 1.0])
    with pytest.raises(ValidationError):
        prepare_target_state([1j, 0])


def test_derivative_expectations_real_state(rng):
    psi = build_ansatz(AnsatzSpec(3, 2), random_parameters(AnsatzSpec(), rng))
    re, im, d1, d2 = derivative_expectations(psi)
    shift = shift_expectation_fast(psi)
    assert re == pytest.approx(shift.real, abs=1e-12)
    assert im == pytest.approx(0.0, abs=1e-12)
    assert d1 == pytest.approx(direct_expectation(psi, first_derivative_op(3)).real, abs=1e-9)
    assert d2 == pytest.approx(2 * (shift.real - 1) * 64, abs=1e-9)


def test_printed_first_derivative_form_differs_for_complex_states():
    # The "1 - Re - Im" estimate is only exact for real amplitudes.
    psi = Statevector.normalized(np.exp(2j * np.pi * np.arange(8) / 8))
    _, im, d1, _ = derivative_expectations(psi)
    exact = direct_expectation(psi, first_derivative_op(3)).real
    assert abs(im) > 0.1
    assert abs(d1 - exact) > 0.1


FAMILIES = [
    DEProblem(1, 0, 25, depth=2),
    DEProblem(1, 3, 25, 32, depth=3),
    DEProblem(1, 1, 40, 40, 500, depth=1),
]


@pytest.mark.parametrize("problem", FAMILIES)
@pytest.mark.parametrize("path", ["direct", "purified"])
def test_total_matches_dense(problem, path, rng):
    spec = AnsatzSpec(3, problem.depth)
    for _ in range(5):
        psi = build_ansatz(spec, random_parameters(spec, rng))
        got = expectation_breakdown(problem, None, psi, MeasurementConfig(mixed_path=path)).total
        want = direct_expectation(psi, total_operator(problem, None, psi)).real
        assert got == pytest.approx(want, abs=1e-9)


def test_total_for_complex_state_uses_printed_form(rng):
    p = DEProblem(1, 3, 5)
    psi = random_state(rng, 3)
    br = expectation_breakdown(p, None, psi)
    dense = direct_expectation(psi, total_operator(p)).real
    # The printed form subtracts (k1/dL) Im where the dense value has none.
    assert br.total == pytest.approx(dense - 3 * 8 * br.im_a_dagger, abs=1e-9)


def test_custom_potential_matches_dense(rng):
    vals = rng.uniform(0, 10, 8)
    pot = PotentialSpec("custom", values=vals)
    p = DEProblem(1, -1, 8)
    psi = build_ansatz(AnsatzSpec(3, 1), random_parameters(AnsatzSpec(), rng))
    got = expectation_breakdown(p, pot, psi).total
    assert got == pytest.approx(direct_expectation(psi, total_operator(p, pot)).real, abs=1e-9)
    with pytest.raises(ValidationError):
        expectation_breakdown(p, PotentialSpec("custom", values=-vals), psi)


def test_zero_coefficient_terms_skipped(rng):
    psi = build_ansatz(AnsatzSpec(3, 1), random_parameters(AnsatzSpec(), rng))
    br = expectation_breakdown(DEProblem(1, 0, 3), None, psi)
    assert br.pot_overlap == 0.0 and br.nl_overlap == 0.0
    assert isinstance(br.total, float)


@pytest.mark.parametrize("kappa0", [-7.0, 0.0, 13.5])
def test_first_order_degenerate_case(kappa0, rng):
    p = DEProblem(1, 16, kappa0, depth=2)
    for lam in random_parameters(AnsatzSpec(), rng, 20):
        assert total_expectation(p, None, lam).total == pytest.approx(kappa0, abs=1e-9)


def test_shots_mode_close_to_exact(rng):
    psi = random_state(rng, 3)
    u = subtractor(3)
    exact = hadamard_test(psi, u)
    cfg = MeasurementConfig(shots=10_000, seed=4)
    assert abs(hadamard_test(psi, u, cfg) - exact) < 0.05
    assert hadamard_test(psi, u, cfg) == hadamard_test(psi, u, cfg)


def test_measurement_config_validation():
    assert EXACT.exact and EXACT.mode == "exact"
    with pytest.raises(ValidationError):
        MeasurementConfig(shots=0)
    with pytest.raises(ValidationError):
        MeasurementConfig(mixed_path="teleport")


def test_three_param_layout_total(rng):
    p = DEProblem(1, -1, 8, depth=2)
    lam = rng.uniform(0, 2 * np.pi, 3)
    br = total_expectation(p, None, lam)
    psi = build_ansatz(AnsatzSpec(3, 2, Layout.THREE_PARAM), lam)
    assert br.total == pytest.approx(direct_expectation(psi, total_operator(p)).real, abs=1e-9)
