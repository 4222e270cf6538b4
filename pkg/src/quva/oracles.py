"""Classical ground truth for the quantum protocols.

Dense expectations and residuals, periodic solutions of the 1D
second-order problem (closed form when linear and potential-free, RK4
shooting otherwise), discretisation and fidelity.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Union

import numpy as np
from scipy import stats

from . import _kernels
from .ansatz import AnsatzSpec, Layout, build_ansatz, random_parameters
from .errors import ConsistencyError, ValidationError
from .operators import DEProblem, PotentialKind, PotentialSpec, total_operator
from .state import Statevector

RK4_STEPS = 1 << 12
DIVERGENCE_LIMIT = 1e6


@dataclass
class ClassicalSolution:
    """Solution samples f(g / 2^N), g = 0 .. 2^N - 1.

    ``periodicity_residue`` is f(1) - f(0) before normalisation. When
    ``feasible`` is False the samples are NaN and ``message`` says why.
    """

    f0: float
    samples: np.ndarray
    normalized: bool = False
    fp0: float = float("nan")
    periodicity_residue: float = float("nan")
    feasible: bool = True
    message: str = ""
    x_fine: Optional[np.ndarray] = field(default=None, repr=False)
    f_fine: Optional[np.ndarray] = field(default=None, repr=False)

    def normalize(self) -> "ClassicalSolution":
        if not self.feasible:
            return self
        scale = np.linalg.norm(self.samples)
        if scale == 0:
            raise ValidationError("cannot normalise an all-zero solution")
        return ClassicalSolution(
            self.f0, self.samples / scale, True, self.fp0, self.periodicity_residue,
            True, self.message, self.x_fine,
            None if self.f_fine is None else self.f_fine / scale,
        )


@dataclass(frozen=True)
class ResidualReport:
    res_q: float
    total_expectation: complex
    delta_overlap_re: float


# ---------------------------------------------------------------- dense


def direct_expectation(system: Union[Statevector, np.ndarray], op: np.ndarray) -> complex:
    psi = system.amplitudes if isinstance(system, Statevector) else np.asarray(system)
    op = np.asarray(op)
    if op.shape != (psi.shape[0], psi.shape[0]):
        raise ValidationError(f"operator {op.shape} does not act on a {psi.shape[0]}-vector")
    return complex(np.vdot(psi, op @ psi))


def quantum_residual(system: Statevector, op_total: np.ndarray, tol: float = 1e-12) -> ResidualReport:
    """Res_Q = <delta|delta> with delta = O_tot |psi>.

    Also checks Re<psi|O|psi> == Re<delta|psi>; the two sides are computed
    independently (bilinear form vs. inner product with delta).
    """
    psi = system.amplitudes
    op = np.asarray(op_total)
    if op.shape != (psi.shape[0], psi.shape[0]):
        raise ValidationError("operator and state sizes differ")
    delta = op @ psi
    res_q = float(np.vdot(delta, delta).real)
    total = complex(np.einsum("i,ij,j->", psi.conj(), op, psi))
    overlap = float(np.vdot(delta, psi).real)
    if abs(total.real - overlap) > tol * max(1.0, abs(overlap)):
        raise ConsistencyError(
            f"Re<O_tot> = {total.real!r} but Re<delta|psi> = {overlap!r}; operator assembly is inconsistent"
        )
    return ResidualReport(res_q, total, overlap)


def residual_expansion(system: Statevector, op_total: np.ndarray) -> float:
    """Re<O_tot> recovered from ||(O + I) psi||^2 = 1 + 2 Re<delta|psi> + Res_Q."""
    psi = system.amplitudes
    shifted = np.asarray(op_total) @ psi + psi
    delta = shifted - psi
    return 0.5 * (float(np.vdot(shifted, shifted).real) - 1.0 - float(np.vdot(delta, delta).real))


# ---------------------------------------------------------------- stencils


def periodic_stencil_matrix(n_points: int, weights: Dict[int, float], scale: float = 1.0) -> np.ndarray:
    """Matrix M with (M f)_g = scale * sum_o weights[o] f_{(g + o) mod n}."""
    m = np.zeros((n_points, n_points))
    for g in range(n_points):
        for offset, w in weights.items():
            m[g, (g + offset) % n_points] += w * scale
    return m


def discretize(f, n_qubits: int) -> np.ndarray:
    """Samples f(g / 2^N) on the left-endpoint grid."""
    dim = 1 << n_qubits
    return np.asarray([f(g / dim) for g in range(dim)], dtype=np.float64)


# ---------------------------------------------------------------- analytic


def _basis_functions(kappa2: float, kappa1: float, kappa0: float):
    """u1, u2 with u1(0)=1, u1'(0)=0 and u2(0)=0, u2'(0)=1 (real-valued)."""
    b, c = kappa1 / kappa2, kappa0 / kappa2
    disc = complex(b * b - 4.0 * c)
    r1 = (-b + np.sqrt(disc)) / 2.0
    r2 = (-b - np.sqrt(disc)) / 2.0
    if abs(r1 - r2) < 1e-8:
        r = -b / 2.0

        def u1(x):
            return (1.0 - r * x) * np.exp(r * x)

        def u2(x):
            return x * np.exp(r * x)

        return u1, u2

    def u1(x):
        return ((r1 * np.exp(r2 * x) - r2 * np.exp(r1 * x)) / (r1 - r2)).real

    def u2(x):
        return ((np.exp(r1 * x) - np.exp(r2 * x)) / (r1 - r2)).real

    return u1, u2


def analytic_2o_solution(
    kappa1: float,
    kappa0: float,
    f0: float,
    n_qubits: int = 3,
    kappa2: float = 1.0,
    normalize: bool = True,
    fine_points: int = 257,
) -> ClassicalSolution:
    """Closed-form periodic solution of k2 f'' + k1 f' + k0 f = 0, f(0) = f(1) = f0."""
    u1, u2 = _basis_functions(kappa2, kappa1, kappa0)
    dim = 1 << n_qubits
    u1_end, u2_end = float(u1(1.0)), float(u2(1.0))
    if abs(u2_end) < 1e-12:
        if abs(1.0 - u1_end) > 1e-9:
            return _infeasible(f0, dim, "no periodic solution: f(1) is fixed by f(0) and differs from it")
        slope = 0.0
    else:
        slope = f0 * (1.0 - u1_end) / u2_end

    def f(x):
        return f0 * u1(x) + slope * u2(x)

    x = np.arange(dim) / dim
    xf = np.linspace(0.0, 1.0, fine_points)
    sol = ClassicalSolution(
        f0, np.asarray(f(x), dtype=np.float64), False, slope, float(f(1.0)) - f0,
        x_fine=xf, f_fine=np.asarray(f(xf), dtype=np.float64),
    )
    return sol.normalize() if normalize else sol


def _infeasible(f0: float, dim: int, message: str) -> ClassicalSolution:
    return ClassicalSolution(f0, np.full(dim, np.nan), feasible=False, message=message)


# ---------------------------------------------------------------- RK4


def continuous_potential(
    problem: DEProblem, potential: Optional[PotentialSpec], x: np.ndarray, scaling: str = "matched"
) -> np.ndarray:
    """V(x) for the classical ODE.

    ``scaling="matched"`` uses the grid normalisation of the quantum operator,
    so V(g / 2^N) equals the operator diagonal (4/11 V_max (1 - 2x)^2 for 3
    qubits). ``scaling="peak"`` uses V_max (1 - 2x)^2. Custom potentials are
    linearly interpolated on the periodic grid.
    """
    n = problem.n_qubits
    if potential is None:
        potential = PotentialSpec(PotentialKind.HARMONIC, problem.v_max)
    if potential.kind is PotentialKind.CUSTOM:
        vals = potential.diag(n)
        dim = vals.shape[0]
        grid = np.arange(dim + 1) / dim
        return np.interp(x, grid, np.append(vals, vals[0]))
    shape = (1.0 - 2.0 * x) ** 2
    if scaling == "peak":
        return potential.v_max * shape
    if scaling != "matched":
        raise ValueError(f"unknown potential scaling {scaling!r}")
    dim = 1 << n
    norm = 1.0 / ((1.0 - 2.0 * np.arange(dim) / dim) ** 2).sum()
    return potential.v_max * norm * shape


def _integrate(problem, potential, f0, slopes, n_steps, stride, scaling):
    h = 1.0 / n_steps
    v_half = continuous_potential(problem, potential, np.arange(2 * n_steps + 1) * (h / 2.0), scaling)
    return _kernels.rk4_batch(
        problem.kappa2, problem.kappa1, problem.kappa0, problem.kappa_n,
        v_half, f0, np.atleast_1d(np.asarray(slopes, dtype=np.float64)), n_steps, stride,
    )


def classical_ode_solve(
    problem: DEProblem,
    potential: Optional[PotentialSpec],
    f0: float,
    fp0: float,
    normalize: bool = False,
    n_steps: int = RK4_STEPS,
    scaling: str = "matched",
    fine_points: int = 257,
) -> ClassicalSolution:
    """Fixed-step RK4 initial-value solve of

        k2 f'' + k1 f' + (k0 + V(x) + kn f^2) f = 0,  f(0) = f0, f'(0) = fp0.
    """
    dim = problem.dim
    if n_steps % dim:
        raise ValidationError(f"n_steps must be a multiple of {dim}")
    fine_stride = max(1, n_steps // (fine_points - 1))
    if n_steps % fine_stride:
        fine_stride = n_steps // dim
    traj, _, peak = _integrate(problem, potential, f0, [fp0], n_steps, fine_stride, scaling)
    if not np.isfinite(peak[0]) or peak[0] > DIVERGENCE_LIMIT:
        return _infeasible(f0, dim, f"integration diverged (max |f| = {peak[0]:.3g})")
    traj = traj[0]
    n_fine = traj.shape[0] - 1
    samples = traj[:: n_fine // dim][:dim].copy()
    sol = ClassicalSolution(
        f0, samples, False, fp0, float(traj[-1] - f0),
        x_fine=np.linspace(0.0, 1.0, n_fine + 1), f_fine=traj.copy(),
    )
    return sol.normalize() if normalize else sol


def periodicity_residue(problem, potential, f0, slopes, n_steps=RK4_STEPS, scaling="matched"):
    """f(1) - f0 for each initial slope (vectorised)."""
    traj, _, peak = _integrate(problem, potential, f0, slopes, n_steps, n_steps, scaling)
    res = traj[:, -1] - f0
    res[~np.isfinite(peak) | (peak > DIVERGENCE_LIMIT)] = np.nan
    return res


def periodic_slopes(
    problem: DEProblem,
    potential: Optional[PotentialSpec],
    f0: float,
    bracket: Sequence[float] = (-100.0, 100.0),
    n_scan: int = 2001,
    tol: float = 1e-10,
    n_steps: int = RK4_STEPS,
    scaling: str = "matched",
) -> np.ndarray:
    """Initial slopes f'(0) giving f(1) = f(0) = f0, sorted by magnitude.

    Linear problems have an affine residue, solved from two integrations.
    Nonlinear problems are scanned over ``bracket`` and every sign change is
    bisected to ``tol``. Returns an empty array when no root is bracketed.
    """
    if problem.kappa_n == 0.0:
        r0, r1 = periodicity_residue(problem, potential, f0, [0.0, 1.0], n_steps, scaling)
        if r1 == r0:
            return np.array([]) if r0 != 0 else np.array([0.0])
        return np.array([-r0 / (r1 - r0)])
    grid = np.linspace(bracket[0], bracket[1], n_scan)
    res = periodicity_residue(problem, potential, f0, grid, n_steps, scaling)
    ok = np.isfinite(res[:-1]) & np.isfinite(res[1:])
    idx = np.flatnonzero(ok & (np.sign(res[:-1]) * np.sign(res[1:]) <= 0) & (res[:-1] != res[1:]))
    if idx.size == 0:
        return np.array([])
    lo, hi = grid[idx].copy(), grid[idx + 1].copy()
    r_lo = res[idx].copy()
    while np.max(hi - lo) > tol:
        mid = 0.5 * (lo + hi)
        r_mid = periodicity_residue(problem, potential, f0, mid, n_steps, scaling)
        left = np.sign(r_mid) == np.sign(r_lo)
        lo = np.where(left, mid, lo)
        r_lo = np.where(left, r_mid, r_lo)
        hi = np.where(left, hi, mid)
    roots = 0.5 * (lo + hi)
    return roots[np.argsort(np.abs(roots), kind="stable")]


def periodic_solution(
    problem: DEProblem,
    potential: Optional[PotentialSpec],
    f0: float,
    normalize: bool = True,
    root: int = 0,
    scaling: str = "matched",
    **kwargs,
) -> ClassicalSolution:
    """Periodic solution f(0) = f(1) = f0 via the shooting closure.

    Without a bracketed root the slope minimising |f(1) - f0| on the scan is
    used and the solution carries its residue with ``message`` set.
    """
    slopes = periodic_slopes(problem, potential, f0, scaling=scaling, **kwargs)
    message = ""
    if slopes.size == 0:
        bracket = kwargs.get("bracket", (-100.0, 100.0))
        grid = np.linspace(bracket[0], bracket[1], kwargs.get("n_scan", 2001))
        res = periodicity_residue(problem, potential, f0, grid, scaling=scaling)
        if not np.any(np.isfinite(res)):
            return _infeasible(f0, problem.dim, "every trial slope diverged")
        best = grid[np.nanargmin(np.abs(res))]
        message = "no periodic root bracketed; using the least-residue slope"
        fp0 = float(best)
    else:
        fp0 = float(slopes[min(root, slopes.size - 1)])
    sol = classical_ode_solve(problem, potential, f0, fp0, normalize=normalize, scaling=scaling)
    if message and sol.feasible:
        sol.message = message
    return sol


# ---------------------------------------------------------------- fidelity


def fidelity(a: Union[Statevector, np.ndarray], b: Union[ClassicalSolution, Statevector, np.ndarray]) -> float:
    """|<a|b>|^2 between a state and a normalised reference."""
    av = a.amplitudes if isinstance(a, Statevector) else np.asarray(a)
    if isinstance(b, ClassicalSolution):
        if not b.feasible:
            raise ValidationError(f"reference solution is infeasible: {b.message}")
        bv = b.samples
    elif isinstance(b, Statevector):
        bv = b.amplitudes
    else:
        bv = np.asarray(b)
    if av.shape != bv.shape:
        raise ValidationError(f"length mismatch ({av.shape[0]} vs {bv.shape[0]})")
    if abs(float(np.vdot(bv, bv).real) - 1.0) > 1e-10:
        raise ValidationError("reference is not normalised")
    return float(min(1.0, abs(np.vdot(av, bv)) ** 2))


# ---------------------------------------------------------------- correlation study


@dataclass
class CorrelationData:
    depth: int
    kappa1: np.ndarray
    kappa0: np.ndarray
    params: np.ndarray
    total: np.ndarray
    res_q: np.ndarray

    @property
    def spearman(self) -> float:
        return float(stats.spearmanr(np.abs(self.total), self.res_q)[0])

    @property
    def cauchy_schwarz_violations(self) -> int:
        return int(np.sum(self.total**2 > self.res_q * (1.0 + 1e-12) + 1e-12))


def correlation_study(
    n_samples: int = 500,
    depths: Sequence[int] = (0, 1, 2, 3),
    seed: int = 0,
    kappa_range: float = 50.0,
    layout: Layout = Layout.SIX_PARAM,
) -> List[CorrelationData]:
    """Sample (k1, k0, lambda) and record (<O_tot>, Res_Q) per depth, k2 = 1."""
    if n_samples < 100:
        raise ValidationError("n_samples must be >= 100")
    rng = np.random.default_rng(seed)
    out = []
    for d in depths:
        spec = AnsatzSpec(3, d, layout)
        k1 = rng.uniform(-kappa_range, kappa_range, n_samples)
        k0 = rng.uniform(-kappa_range, kappa_range, n_samples)
        params = random_parameters(spec, rng, n_samples)
        total = np.empty(n_samples)
        res = np.empty(n_samples)
        for i in range(n_samples):
            psi = build_ansatz(spec, params[i])
            op = total_operator(DEProblem(1.0, k1[i], k0[i], n_qubits=3, depth=d))
            rep = quantum_residual(psi, op)
            total[i] = rep.total_expectation.real
            res[i] = rep.res_q
        data = CorrelationData(d, k1, k0, params, total, res)
        if data.cauchy_schwarz_violations:
            raise ConsistencyError(f"Cauchy-Schwarz bound violated at depth {d}")
        out.append(data)
    return out
