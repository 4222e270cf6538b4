"""Gaussian-process surrogate and zero-level acquisition over angle vectors.

Angles are lifted to (cos l_j, sin l_j) pairs before the isotropic RBF
kernel is applied, so the surrogate is periodic in every angle with period
2 pi.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy import optimize
from scipy.linalg import cho_solve, solve_triangular
from scipy.spatial import cKDTree
from scipy.special import ndtr

from . import _kernels
from .errors import NumericalError, ValidationError

TWO_PI = 2.0 * np.pi
DEDUP_TOL = 1e-9
MIN_EIG = 1e-10
MAX_JITTER_STEPS = 12


@dataclass(frozen=True)
class KernelParams:
    signal_variance: float = 1.0
    length_scale: float = 1.0
    noise_variance: float = 1e-12

    def __post_init__(self):
        if self.signal_variance <= 0 or self.length_scale <= 0 or self.noise_variance < 0:
            raise ValidationError(f"invalid kernel hyperparameters {self}")


def lift(angles) -> np.ndarray:
    """Map (m, k) angles to (m, 2k) points on a product of unit circles."""
    a = np.atleast_2d(np.asarray(angles, dtype=np.float64))
    return np.concatenate([np.cos(a), np.sin(a)], axis=1)


def rbf(xa: np.ndarray, xb: np.ndarray, kernel: KernelParams) -> np.ndarray:
    """sigma_f^2 exp(-|a - b|^2 / (2 l^2)) on already-lifted points."""
    return _kernels.rbf_cross(xa, xb, kernel.length_scale, kernel.signal_variance)


def default_kernel(values: np.ndarray, length_scale: float = 1.0, noise_std: Optional[float] = None) -> KernelParams:
    sigma_f = float(np.std(values))
    if not np.isfinite(sigma_f) or sigma_f == 0.0:
        sigma_f = 1.0
    noise = 1e-6 * sigma_f if noise_std is None else max(noise_std, 1e-6 * sigma_f)
    return KernelParams(sigma_f**2, length_scale, noise**2)


def _dedup(inputs: np.ndarray, values: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    lifted = lift(inputs)
    pairs = cKDTree(lifted).query_pairs(DEDUP_TOL, p=np.inf, output_type="ndarray")
    if pairs.size == 0:
        return inputs, values
    near = [[] for _ in range(lifted.shape[0])]
    for i, j in pairs:
        near[min(i, j)].append(max(i, j))
    keep = np.ones(lifted.shape[0], dtype=bool)
    for i in range(lifted.shape[0] - 1, -1, -1):
        if any(keep[j] for j in near[i]):
            keep[i] = False
    return inputs[keep], values[keep]


def _factorize(gram: np.ndarray, kernel: KernelParams) -> Tuple[np.ndarray, float]:
    """Cholesky of gram + noise I, adding jitter until the spectrum clears MIN_EIG."""
    n = gram.shape[0]
    floor = MIN_EIG * kernel.signal_variance
    mat = gram + kernel.noise_variance * np.eye(n)
    jitter = 0.0
    lam_min = float(np.linalg.eigvalsh(mat)[0]) if n <= 4000 else floor
    if lam_min < floor:
        jitter = floor - lam_min
    for _ in range(MAX_JITTER_STEPS):
        try:
            chol = np.linalg.cholesky(mat + jitter * np.eye(n))
            return chol, jitter
        except np.linalg.LinAlgError:
            jitter = max(10.0 * jitter, floor)
    raise NumericalError(
        f"kernel matrix not positive definite after jitter {jitter:.3g} "
        f"(n={n}, smallest eigenvalue {lam_min:.3g}, {kernel})"
    )


class GPRModel:
    """Exact GP regression with a constant prior mean.

    ``training_inputs`` are raw angle vectors, ``training_values`` the
    observed targets. The Cholesky factor of the (jittered) gram matrix is
    cached; :meth:`condition` appends one point with an O(n^2) update.
    """

    def __init__(self, inputs, values, kernel: KernelParams, prior_mean: float = 0.0):
        self.training_inputs = np.atleast_2d(np.asarray(inputs, dtype=np.float64))
        self.training_values = np.asarray(values, dtype=np.float64).reshape(-1)
        if self.training_inputs.shape[0] != self.training_values.shape[0]:
            raise ValidationError("inputs and values differ in length")
        self.kernel = kernel
        self.prior_mean = float(prior_mean)
        self._lifted = lift(self.training_inputs)
        gram = rbf(self._lifted, self._lifted, kernel)
        self._chol, self.jitter = _factorize(gram, kernel)
        self._alpha = cho_solve((self._chol, True), self.training_values - self.prior_mean)

    @property
    def n_points(self) -> int:
        return self.training_values.shape[0]

    @property
    def dim(self) -> int:
        return self.training_inputs.shape[1]

    def posterior(self, query) -> Tuple[np.ndarray, np.ndarray]:
        """Predictive mean and std at one or many angle vectors."""
        q = lift(query)
        k_star = rbf(q, self._lifted, self.kernel)
        mean = self.prior_mean + k_star @ self._alpha
        v = solve_triangular(self._chol, k_star.T, lower=True, check_finite=False)
        var = self.kernel.signal_variance - np.einsum("ij,ij->j", v, v)
        std = np.sqrt(np.maximum(var, 0.0))
        if np.ndim(query) == 1:
            return float(mean[0]), float(std[0])
        return mean, std

    def log_marginal_likelihood(self) -> float:
        y = self.training_values - self.prior_mean
        return float(
            -0.5 * y @ self._alpha - np.log(np.diag(self._chol)).sum() - 0.5 * y.shape[0] * np.log(TWO_PI)
        )

    def condition(self, x, y: float) -> "GPRModel":
        """New model with one extra observation, reusing the factorisation."""
        x = np.asarray(x, dtype=np.float64).reshape(1, -1)
        xl = lift(x)
        k_vec = rbf(self._lifted, xl, self.kernel)[:, 0]
        k_self = self.kernel.signal_variance + self.kernel.noise_variance + self.jitter
        row = solve_triangular(self._chol, k_vec, lower=True, check_finite=False)
        d2 = k_self - row @ row
        floor = MIN_EIG * self.kernel.signal_variance
        new = object.__new__(GPRModel)
        new.kernel = self.kernel
        new.prior_mean = self.prior_mean
        new.jitter = self.jitter
        new.training_inputs = np.vstack([self.training_inputs, x])
        new.training_values = np.append(self.training_values, float(y))
        new._lifted = np.vstack([self._lifted, xl])
        n = self.n_points
        chol = np.zeros((n + 1, n + 1))
        chol[:n, :n] = self._chol
        chol[n, :n] = row
        chol[n, n] = np.sqrt(max(d2, floor))
        new._chol = chol
        new._alpha = cho_solve((chol, True), new.training_values - new.prior_mean)
        return new


def fit(
    inputs: Sequence[Sequence[float]],
    values: Sequence[float],
    hyperparameter_mode: str = "fixed",
    kernel: Optional[KernelParams] = None,
    prior_mean: float = 0.0,
    n_restarts: int = 4,
    seed: int = 0,
) -> GPRModel:
    """Fit a GP to (angles, values).

    ``hyperparameter_mode`` is ``"fixed"`` (use ``kernel`` or the defaults)
    or ``"evidence"`` (multistart Nelder-Mead on the log marginal likelihood,
    starting from ``kernel``). Near-duplicate inputs keep the latest value.
    """
    x = np.atleast_2d(np.asarray(inputs, dtype=np.float64))
    y = np.asarray(values, dtype=np.float64).reshape(-1)
    if x.shape[0] != y.shape[0]:
        raise ValidationError("inputs and values differ in length")
    if not np.all(np.isfinite(y)):
        raise ValidationError("training values must be finite")
    x, y = _dedup(x, y)
    if x.shape[0] < 2:
        raise ValidationError("need at least two distinct training points")
    kernel = kernel or default_kernel(y)
    if hyperparameter_mode == "fixed":
        return GPRModel(x, y, kernel, prior_mean)
    if hyperparameter_mode != "evidence":
        raise ValueError(f"unknown hyperparameter mode {hyperparameter_mode!r}")
    return _maximize_evidence(x, y, kernel, prior_mean, n_restarts, seed)


def _maximize_evidence(x, y, start: KernelParams, prior_mean, n_restarts, seed) -> GPRModel:
    sf = np.sqrt(start.signal_variance)
    lo = np.log([1e-3 * sf, 0.05, 1e-8 * sf])
    hi = np.log([1e3 * sf, 20.0, 1.0 * sf])

    def unpack(theta):
        theta = np.clip(theta, lo, hi)
        s, ell, sn = np.exp(theta)
        return KernelParams(s * s, ell, sn * sn)

    def objective(theta):
        try:
            return -GPRModel(x, y, unpack(theta), prior_mean).log_marginal_likelihood()
        except NumericalError:
            return np.inf

    rng = np.random.default_rng(seed)
    sn0 = max(np.sqrt(start.noise_variance), 1e-8 * sf)
    starts = [np.log([sf, start.length_scale, sn0])]
    starts += [rng.uniform(lo, hi) for _ in range(n_restarts)]
    best = None
    for theta0 in starts:
        res = optimize.minimize(objective, theta0, method="Nelder-Mead",
                                options={"xatol": 1e-3, "fatol": 1e-6, "maxiter": 400})
        if best is None or res.fun < best.fun:
            best = res
    return GPRModel(x, y, unpack(best.x), prior_mean)


# ---------------------------------------------------------------- acquisition


def _pdf(t):
    return np.exp(-0.5 * t * t) / math.sqrt(2.0 * math.pi)


def expected_feasibility(mean, std, band: float = 2.0):
    """Expected feasibility at the zero level with half-width ``band * std``.

    Equals E[max(band*std - |G|, 0)] for G ~ N(mean, std^2): largest for a
    zero mean, growing with std, vanishing as std -> 0 or |mean| -> inf.
    """
    mean = np.asarray(mean, dtype=np.float64)
    std = np.asarray(std, dtype=np.float64)
    safe = np.where(std > 0, std, 1.0)
    m = np.abs(mean) / safe
    t_lo, t_mid, t_hi = -band - m, -m, band - m
    value = safe * (
        m * (2.0 * ndtr(t_mid) - ndtr(t_lo) - ndtr(t_hi))
        - (2.0 * _pdf(t_mid) - _pdf(t_lo) - _pdf(t_hi))
        + band * (ndtr(t_hi) - ndtr(t_lo))
    )
    value = np.where(std > 0, np.maximum(value, 0.0), 0.0)
    return float(value) if value.ndim == 0 else value


def acquisition(model: GPRModel, query) -> np.ndarray:
    mean, std = model.posterior(query)
    return expected_feasibility(mean, std)


def propose_next(
    model: GPRModel,
    pool_size: int = 1000,
    seed: int = 0,
    anchors: Optional[np.ndarray] = None,
    local_fraction: float = 0.5,
    local_scale: Tuple[float, float] = (0.02, 0.5),
    refine_steps: int = 40,
    initial_step: float = 0.5,
    min_step: float = 1e-3,
) -> np.ndarray:
    """Maximise the acquisition over a seeded random pool, then polish the
    winner by compass search along each angle. Deterministic in ``seed``.

    Without ``anchors`` the pool is uniform on [0, 2 pi)^k. With anchors, a
    ``local_fraction`` share of the pool is Gaussian perturbations of the
    anchor rows, with per-point scales log-uniform in ``local_scale``.
    """
    rng = np.random.default_rng(seed)
    k = model.dim
    n_local = 0 if anchors is None or len(anchors) == 0 else int(round(local_fraction * pool_size))
    pool = rng.uniform(0.0, TWO_PI, size=(pool_size - n_local, k))
    if n_local:
        anchors = np.atleast_2d(np.asarray(anchors, dtype=np.float64))
        base = anchors[rng.integers(anchors.shape[0], size=n_local)]
        scale = np.exp(rng.uniform(np.log(local_scale[0]), np.log(local_scale[1]), size=(n_local, 1)))
        pool = np.vstack([pool, np.mod(base + scale * rng.normal(size=(n_local, k)), TWO_PI)])
    scores = acquisition(model, pool)
    best = pool[int(np.argmax(scores))].copy()
    best_score = float(np.max(scores))
    step = initial_step
    eye = np.eye(k)
    for _ in range(refine_steps):
        if step < min_step:
            break
        trial = np.vstack([best + step * eye, best - step * eye])
        trial_scores = acquisition(model, trial)
        j = int(np.argmax(trial_scores))
        if trial_scores[j] > best_score:
            best, best_score = trial[j], float(trial_scores[j])
        else:
            step *= 0.5
    return np.mod(best, TWO_PI)
