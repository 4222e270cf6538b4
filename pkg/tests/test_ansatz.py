import numpy as np
import pytest
from hypothesis import given, strategies as st

from quva.ansatz import (
    AnsatzSpec,
    Layout,
    build_ansatz,
    gate_sequence,
    parameter_count,
    random_parameters,
)
from quva.errors import ValidationError

angles = st.lists(st.floats(0, 2 * np.pi), min_size=6, max_size=6)


def ry(t):
    c, s = np.cos(t / 2), np.sin(t / 2)
    return np.array([[c, -s], [s, c]])


def cx(control, target):
    op = np.zeros((8, 8))
    for g in range(8):
        bits = [(g >> 2) & 1, (g >> 1) & 1, g & 1]
        if bits[control]:
            bits[target] ^= 1
        op[4 * bits[0] + 2 * bits[1] + bits[2], g] = 1
    return op


def u_p(a, b, c):
    return np.kron(np.kron(ry(a), ry(b)), ry(c))


# Entangler E = CX13 CX32 CX21 with 1-based labels; rightmost acts first.
E = cx(0, 2) @ cx(2, 1) @ cx(1, 0)


def reference(lam, depth, layout):
    zero = np.zeros(8)
    zero[0] = 1
    if layout is Layout.SIX_PARAM:
        unit = E @ u_p(*lam[:3]) @ E @ u_p(*lam[3:6])
    else:
        unit = u_p(*lam[:3]) @ E
    return np.linalg.matrix_power(unit, depth) @ u_p(*lam[:3]) @ zero


@given(angles, st.integers(0, 3))
def test_six_param_matches_matrix_product(lam, depth):
    psi = build_ansatz(AnsatzSpec(3, depth, Layout.SIX_PARAM), lam)
    np.testing.assert_allclose(psi.amplitudes, reference(lam, depth, Layout.SIX_PARAM), atol=1e-12)


@given(angles, st.integers(0, 3))
def test_three_param_matches_matrix_product(lam, depth):
    psi = build_ansatz(AnsatzSpec(3, depth, Layout.THREE_PARAM), lam[:3])
    np.testing.assert_allclose(psi.amplitudes, reference(lam[:3], depth, Layout.THREE_PARAM), atol=1e-12)


@given(angles, st.integers(0, 3))
def test_amplitudes_are_real(lam, depth):
    psi = build_ansatz(AnsatzSpec(3, depth), lam)
    assert np.max(np.abs(psi.amplitudes.imag)) == 0.0


def test_depth_zero_is_product_state():
    lam = [0.3, 1.1, 2.0, 0, 0, 0]
    psi = build_ansatz(AnsatzSpec(3, 0), lam).amplitudes.real
    want = np.kron(np.kron(ry(0.3)[:, 0], ry(1.1)[:, 0]), ry(2.0)[:, 0])
    np.testing.assert_allclose(psi, want, atol=1e-15)


def test_zero_angles_give_all_zero_state():
    psi = build_ansatz(AnsatzSpec(3, 2), np.zeros(6))
    assert psi.amplitudes[0] == pytest.approx(1)


def test_gate_sequence_shape():
    gates = list(gate_sequence(AnsatzSpec(3, 2), np.arange(6.0)))
    assert sum(g[0] == "RY" for g in gates) == 3 + 2 * 6
    assert sum(g[0] == "CX" for g in gates) == 2 * 6
    assert gates[3:6] == [("RY", 0, 3.0), ("RY", 1, 4.0), ("RY", 2, 5.0)]


def test_parameter_count_and_errors():
    assert parameter_count(Layout.SIX_PARAM) == 6
    assert parameter_count("three_param") == 3
    with pytest.raises(ValueError):
        AnsatzSpec(3, 1, "seven_param")
    with pytest.raises(ValueError):
        build_ansatz(AnsatzSpec(3, 1), [0.1] * 5)
    with pytest.raises(ValidationError):
        AnsatzSpec(3, -1)
    with pytest.raises(ValidationError):
        AnsatzSpec(4, 1)


def test_random_parameters_domain():
    lam = random_parameters(AnsatzSpec(), np.random.default_rng(0), 1000)
    assert lam.shape == (1000, 6)
    assert lam.min() >= 0 and lam.max() < 2 * np.pi
