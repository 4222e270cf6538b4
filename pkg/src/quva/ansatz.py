"""Real-amplitude RY/CNOT variational ansatz for three system qubits.

    |psi^d(lam)> = [U_unit(lam)]^d  U_p(lam_1, lam_2, lam_3) |000>

``U_p(a, b, c) = RY(a) (x) RY(b) (x) RY(c)``. The entangling block
``E = CX_13 CX_32 CX_21`` (CX_21 acts first) is shared by both layouts:

* ``THREE_PARAM``: ``U_unit = U_p(lam_1..3) E``
* ``SIX_PARAM``:   ``U_unit = E U_p(lam_1..3) E U_p(lam_4..6)``

The same parameters are reused by every repeated unit block.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .errors import ValidationError
from .state import RY, Statevector, apply_1q_gate, apply_cnot, zero_state


class Layout(enum.Enum):
    THREE_PARAM = "three_param"
    SIX_PARAM = "six_param"


_PARAM_COUNT = {Layout.THREE_PARAM: 3, Layout.SIX_PARAM: 6}

# CX_21, CX_32, CX_13 in application order, as (control, target), 0-based.
_ENTANGLER = ((1, 0), (2, 1), (0, 2))


@dataclass(frozen=True)
class AnsatzSpec:
    n_qubits: int = 3
    depth: int = 0
    layout: Layout = Layout.SIX_PARAM

    def __post_init__(self):
        layout = self.layout
        if isinstance(layout, str):
            try:
                layout = Layout(layout.lower())
            except ValueError:
                raise ValueError(f"unknown ansatz layout {self.layout!r}") from None
            object.__setattr__(self, "layout", layout)
        if not isinstance(layout, Layout):
            raise ValueError(f"unknown ansatz layout {layout!r}")
        if self.depth < 0:
            raise ValidationError("depth must be >= 0")
        if self.n_qubits != 3:
            raise ValidationError("built-in layouts are defined for 3 qubits only")


def parameter_count(spec: AnsatzSpec | Layout | str) -> int:
    layout = spec.layout if isinstance(spec, AnsatzSpec) else spec
    if isinstance(layout, str):
        try:
            layout = Layout(layout.lower())
        except ValueError:
            raise ValueError(f"unknown ansatz layout {layout!r}") from None
    if layout not in _PARAM_COUNT:
        raise ValueError(f"unknown ansatz layout {layout!r}")
    return _PARAM_COUNT[layout]


def check_params(spec: AnsatzSpec, params: Sequence[float]) -> np.ndarray:
    lam = np.asarray(params, dtype=np.float64).reshape(-1)
    k = parameter_count(spec)
    if lam.shape[0] != k:
        raise ValueError(f"{spec.layout.value} layout takes {k} parameters, got {lam.shape[0]}")
    if not np.all(np.isfinite(lam)):
        raise ValidationError("parameters must be finite")
    return lam


def gate_sequence(spec: AnsatzSpec, params: Sequence[float]) -> Iterator[tuple]:
    """Yield ``("RY", qubit, angle)`` and ``("CX", control, target)`` in order."""
    lam = check_params(spec, params)

    def rotations(angles):
        for q, a in enumerate(angles):
            yield ("RY", q, float(a))

    def entangle():
        for c, t in _ENTANGLER:
            yield ("CX", c, t)

    yield from rotations(lam[:3])
    for _ in range(spec.depth):
        if spec.layout is Layout.THREE_PARAM:
            yield from entangle()
            yield from rotations(lam[:3])
        else:
            yield from rotations(lam[3:6])
            yield from entangle()
            yield from rotations(lam[:3])
            yield from entangle()


def run_gates(state: Statevector, gates) -> Statevector:
    for gate in gates:
        if gate[0] == "RY":
            state = apply_1q_gate(state, RY(gate[2]), gate[1])
        elif gate[0] == "CX":
            state = apply_cnot(state, gate[1], gate[2])
        else:
            raise ValueError(f"unsupported gate {gate[0]!r}")
    return state


def build_ansatz(spec: AnsatzSpec, params: Sequence[float]) -> Statevector:
    """Prepare the ansatz state for ``params`` (radians)."""
    return run_gates(zero_state(spec.n_qubits), gate_sequence(spec, params))


def random_parameters(spec: AnsatzSpec, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    k = parameter_count(spec)
    shape = (k,) if size is None else (size, k)
    return rng.uniform(0.0, 2.0 * np.pi, size=shape)
