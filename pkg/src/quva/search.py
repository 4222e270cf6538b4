"""Random-then-guided search for parameter vectors with <O_tot> near zero."""
from __future__ import annotations

import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Callable, List, Optional

import numpy as np

from . import gpr
from .ansatz import AnsatzSpec, build_ansatz, random_parameters
from .errors import NumericalError, QuvaError, ValidationError
from .expectation import EXACT, MeasurementConfig, _sub_seed, expectation_breakdown
from .oracles import ClassicalSolution, fidelity, quantum_residual
from .operators import DEProblem, PotentialSpec, total_operator

log = logging.getLogger(__name__)

PHASE_RANDOM = "random"
PHASE_GUIDED = "guided"


@dataclass(frozen=True)
class SearchConfig:
    """Search budget and surrogate settings.

    ``prior_mean`` is ``"data"`` (GP reverts to the mean of the observed
    totals away from data) or ``"zero"``.
    """

    n_random_init: int = 600
    n_guided: int = 600
    p_c: float = 4.0
    candidate_pool_size: int = 1000
    seed: int = 0
    refit_every: int = 25
    length_scale: float = 1.0
    hyperparameter_mode: str = "fixed"
    prior_mean: str = "data"
    n_anchors: int = 20
    local_fraction: float = 0.5

    def __post_init__(self):
        for name in ("n_random_init", "candidate_pool_size", "refit_every"):
            if getattr(self, name) < 1:
                raise ValidationError(f"{name} must be >= 1")
        if self.n_guided < 0:
            raise ValidationError("n_guided must be >= 0")
        if self.n_random_init < 2 and self.n_guided > 0:
            raise ValidationError("guided search needs at least two random evaluations")
        if not self.p_c > 0:
            raise ValidationError("p_c must be > 0")
        if self.length_scale <= 0:
            raise ValidationError("length_scale must be > 0")
        if self.hyperparameter_mode not in ("fixed", "evidence"):
            raise ValidationError(f"unknown hyperparameter_mode {self.hyperparameter_mode!r}")
        if self.n_anchors < 0 or not 0.0 <= self.local_fraction <= 1.0:
            raise ValidationError("n_anchors must be >= 0 and local_fraction in [0, 1]")
        if self.prior_mean not in ("data", "zero"):
            raise ValidationError(f"unknown prior_mean {self.prior_mean!r}")


@dataclass
class CandidateRecord:
    eval_index: int
    params: np.ndarray
    re_a_dagger: float
    pot_overlap: float
    nl_overlap: float
    total: float
    res_q: float
    fidelity_vs_oracle: Optional[float]
    flagged: bool
    phase: str
    error: str = ""

    @property
    def ok(self) -> bool:
        return not self.error


def thread_count() -> int:
    raw = os.environ.get("QUVA_THREADS", "")
    try:
        n = int(raw)
    except ValueError:
        n = os.cpu_count() or 1
    return max(1, n)


def evaluate(
    problem: DEProblem,
    potential: Optional[PotentialSpec],
    spec: AnsatzSpec,
    params: np.ndarray,
    p_c: float,
    eval_index: int,
    phase: str,
    measurement: MeasurementConfig = EXACT,
    oracle: Optional[ClassicalSolution] = None,
) -> CandidateRecord:
    """One full protocol evaluation. Failures come back as records with ``error`` set."""
    params = np.mod(np.asarray(params, dtype=np.float64), 2.0 * np.pi)
    try:
        state = build_ansatz(spec, params)
        cfg = measurement if measurement.exact else replace(measurement, seed=_sub_seed(measurement.seed, eval_index))
        br = expectation_breakdown(problem, potential, state, cfg)
        if not math.isfinite(br.total):
            raise QuvaError(f"non-finite total {br.total}")
        res = quantum_residual(state, total_operator(problem, potential, state))
        fid = fidelity(state, oracle) if oracle is not None and oracle.feasible else None
    except (QuvaError, ValueError, FloatingPointError) as exc:
        log.warning("evaluation %d failed: %s", eval_index, exc)
        nan = float("nan")
        return CandidateRecord(eval_index, params, nan, nan, nan, nan, nan, None, False, phase, str(exc))
    return CandidateRecord(
        eval_index, params, br.re_a_dagger, br.pot_overlap, br.nl_overlap, br.total,
        res.res_q, fid, abs(br.total) <= p_c, phase,
    )


def shot_noise_std(problem: DEProblem, potential: Optional[PotentialSpec], shots: int) -> float:
    """Binomial standard error of the assembled total (worst case per readout)."""
    from .expectation import _potential_scale

    dl = problem.delta_l
    coeffs = [
        2.0 * problem.kappa2 / dl**2 - problem.kappa1 / dl,
        problem.kappa1 / dl,
        _potential_scale(problem, potential)[0],
        problem.kappa_n,
    ]
    # Each readout is a Z average with variance <= 1/shots; overlaps halve it.
    return float(math.sqrt(sum(c * c for c in coeffs) / shots))


def _fit(records: List[CandidateRecord], cfg: SearchConfig, noise_std: Optional[float], seed: int) -> gpr.GPRModel:
    good = [r for r in records if r.ok]
    if len(good) < 2:
        raise NumericalError(f"only {len(good)} of {len(records)} evaluations succeeded")
    x = np.array([r.params for r in good])
    y = np.array([r.total for r in good])
    kernel = gpr.default_kernel(y, cfg.length_scale, noise_std)
    prior = float(np.mean(y)) if cfg.prior_mean == "data" else 0.0
    return gpr.fit(x, y, cfg.hyperparameter_mode, kernel, prior, seed=seed)


def _anchors(records: List[CandidateRecord], n: int) -> Optional[np.ndarray]:
    """Parameters of the ``n`` successful records with the smallest |total|."""
    good = [r for r in records if r.ok]
    if n == 0 or not good:
        return None
    good.sort(key=lambda r: (abs(r.total), r.eval_index))
    return np.array([r.params for r in good[:n]])


def run_search(
    problem: DEProblem,
    potential: Optional[PotentialSpec],
    spec: AnsatzSpec,
    cfg: SearchConfig,
    measurement: MeasurementConfig = EXACT,
    oracle: Optional[ClassicalSolution] = None,
    on_batch: Optional[Callable[[List[CandidateRecord]], None]] = None,
) -> List[CandidateRecord]:
    """Evaluate ``n_random_init`` uniform draws, then ``n_guided`` GP proposals.

    Proposals are made in batches of ``refit_every``: inside a batch each
    proposal is added to the surrogate at its predicted mean before the next
    one is chosen, so one batch can be evaluated concurrently. Records are
    returned in evaluation-index order. ``on_batch`` sees each finished batch.
    """
    if spec.depth != problem.depth:
        spec = replace(spec, depth=problem.depth)
    rng = np.random.default_rng(cfg.seed)
    noise = None if measurement.exact else shot_noise_std(problem, potential, measurement.shots)
    records: List[CandidateRecord] = []
    workers = thread_count()

    def run_batch(param_list, phase):
        start = len(records)
        jobs = [(start + i, p) for i, p in enumerate(param_list)]

        def one(job):
            return evaluate(problem, potential, spec, job[1], cfg.p_c, job[0], phase, measurement, oracle)

        if workers > 1 and len(jobs) > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                batch = list(pool.map(one, jobs))
        else:
            batch = [one(j) for j in jobs]
        records.extend(batch)
        if on_batch is not None:
            on_batch(batch)

    init = random_parameters(spec, rng, cfg.n_random_init)
    for lo in range(0, cfg.n_random_init, cfg.refit_every):
        run_batch(list(init[lo:lo + cfg.refit_every]), PHASE_RANDOM)

    done = 0
    while done < cfg.n_guided:
        n_batch = min(cfg.refit_every, cfg.n_guided - done)
        try:
            model = _fit(records, cfg, noise, _sub_seed(cfg.seed, len(records)))
        except NumericalError as exc:
            raise NumericalError(f"surrogate fit before record index {len(records)}: {exc}") from exc
        anchors = _anchors(records, cfg.n_anchors)
        proposals = []
        for j in range(n_batch):
            idx = len(records) + j
            x = gpr.propose_next(model, cfg.candidate_pool_size, _sub_seed(cfg.seed, idx),
                                 anchors, cfg.local_fraction)
            proposals.append(x)
            model = model.condition(x, model.posterior(x)[0])
        run_batch(proposals, PHASE_GUIDED)
        done += n_batch
    return records


def candidates(records: List[CandidateRecord]) -> List[CandidateRecord]:
    return [r for r in records if r.flagged]


def best_candidate(records: List[CandidateRecord]) -> Optional[CandidateRecord]:
    """Flagged record with the highest oracle fidelity, else the smallest |total|."""
    flagged = candidates(records)
    if not flagged:
        return None
    if all(r.fidelity_vs_oracle is not None for r in flagged):
        return max(flagged, key=lambda r: r.fidelity_vs_oracle)
    return min(flagged, key=lambda r: abs(r.total))
