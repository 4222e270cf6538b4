"""Variational solver for periodic 1D differential equations on a simulated qubit register.

Submodules: ``state`` and ``ansatz`` (statevector and circuits), ``operators``
(finite-difference operators), ``expectation`` (Hadamard and SWAP test
protocols), ``oracles`` (classical references), ``gpr`` and ``search``
(surrogate-guided parameter search), ``cli`` (the ``quva`` command).
"""

__version__ = "0.1.0"
