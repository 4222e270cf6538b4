"""Command-line entry point: ``quva run|verify|correlation``.

Exit codes: 0 success, 1 verify failure, 2 configuration error,
3 numerical failure.
"""
from __future__ import annotations

import argparse
import logging
import sys
import time
from dataclasses import replace
from pathlib import Path
from typing import List, Optional

import numpy as np

from . import _kernels
from .config import ConfigError, ExperimentConfig, dump_fields, load_config
from .errors import NumericalError
from .expectation import total_expectation
from .io import RecordWriter, write_columns_csv, write_json
from .oracles import correlation_study, periodic_solution
from .search import best_candidate, candidates, run_search

log = logging.getLogger("quva")

EXIT_OK, EXIT_VERIFY, EXIT_CONFIG, EXIT_NUMERICAL = 0, 1, 2, 3


def _apply_overrides(cfg: ExperimentConfig, args) -> ExperimentConfig:
    if getattr(args, "seed", None) is not None:
        cfg.search = replace(cfg.search, seed=args.seed)
        cfg.measurement = replace(cfg.measurement, seed=args.seed)
        cfg.correlation = replace(cfg.correlation, seed=args.seed)
    if getattr(args, "shots", None) is not None:
        cfg.measurement = replace(cfg.measurement, shots=args.shots)
    if getattr(args, "output_dir", None) is not None:
        cfg.output_dir = Path(args.output_dir)
    if getattr(args, "no_plots", False):
        cfg.emit_plots = False
    return cfg


def _load(args, strict: bool = True) -> ExperimentConfig:
    cfg = _apply_overrides(load_config(args.config, strict), args)
    try:
        cfg.output_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"output_dir {cfg.output_dir} is not writable: {exc.strerror}") from None
    (cfg.output_dir / cfg.source_name).write_text(cfg.source_text)
    return cfg


def cmd_run(args) -> int:
    cfg = _load(args)
    out = cfg.output_dir
    oracle = None
    if cfg.oracle is not None:
        oracle = periodic_solution(cfg.problem, cfg.potential, cfg.oracle.f0,
                                   root=cfg.oracle.root, scaling=cfg.oracle.scaling)
        if not oracle.feasible:
            log.warning("oracle infeasible (%s); fidelities are omitted", oracle.message)
            oracle = None
        elif oracle.message:
            log.warning("oracle: %s", oracle.message)

    writer = RecordWriter(out, len(_param_names(cfg)))
    start = time.perf_counter()
    try:
        records = run_search(cfg.problem, cfg.potential, cfg.ansatz, cfg.search,
                             cfg.measurement, oracle, on_batch=writer.append)
    except NumericalError as exc:
        writer.close()
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    writer.close()
    elapsed = time.perf_counter() - start

    flagged = candidates(records)
    best = best_candidate(records)
    failed = [r for r in records if not r.ok]
    summary = {
        "best_fidelity": None if best is None or best.fidelity_vs_oracle is None else best.fidelity_vs_oracle,
        "best_eval_index": None if best is None else best.eval_index,
        "best_lambda": None if best is None else [float(v) for v in best.params],
        "best_total": None if best is None else best.total,
        "candidate_count": len(flagged),
        "n_evaluations": len(records),
        "n_failed": len(failed),
        "seeds": {"search": cfg.search.seed, "measurement": cfg.measurement.seed},
        "measurement_mode": cfg.measurement.mode,
        "oracle": None if oracle is None else {
            "f0": oracle.f0, "fp0": oracle.fp0, "samples": [float(v) for v in oracle.samples],
            "periodicity_residue": oracle.periodicity_residue, "message": oracle.message,
        },
        "config": dump_fields(cfg),
        "config_file": cfg.source_name,
    }
    write_json(out / "summary.json", summary)

    if cfg.emit_plots:
        _run_plots(cfg, records, best, oracle)

    fid = summary["best_fidelity"]
    print(f"{len(records)} evaluations, {len(flagged)} candidates (|<O_tot>| <= {cfg.search.p_c:g}), "
          f"best fidelity {'n/a' if fid is None else f'{fid:.4f}'}, {elapsed:.1f} s, backend {_kernels.backend_name()}")
    print(f"results written to {out}")
    if failed:
        print(f"numerical failure at record index {failed[0].eval_index}: {failed[0].error}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


def _param_names(cfg: ExperimentConfig) -> List[str]:
    from .ansatz import parameter_count

    return [f"lambda_{j + 1}" for j in range(parameter_count(cfg.ansatz))]


def _run_plots(cfg, records, best, oracle) -> None:
    from . import plots
    from .ansatz import build_ansatz

    out = cfg.output_dir
    plots.search_trace_plot(out / "trace.svg", [r.total for r in records], [r.flagged for r in records],
                            cfg.search.n_random_init)
    if best is None:
        return
    psi = build_ansatz(cfg.ansatz, best.params).amplitudes.real
    ref = None if oracle is None else oracle.samples
    if ref is not None and float(psi @ ref) < 0:
        psi = -psi  # global sign is unobservable
    title = f"eval {best.eval_index}, <O_tot> = {best.total:.3g}"
    plots.solution_plot(out / "solution.svg", psi, ref, title)
    plots.landscape_plot(
        out / "landscape.svg", np.asarray(best.params),
        lambda lam: total_expectation(cfg.problem, cfg.potential, lam, layout=cfg.ansatz.layout).total,
        cfg.search.p_c,
    )


def cmd_verify(args) -> int:
    from .verify import run_checks

    results = run_checks(corrupt_shift=args.corrupt_shift)
    for r in results:
        print(r.line())
    n_ok = sum(r.passed for r in results)
    print(f"{n_ok}/{len(results)} checks passed")
    return EXIT_OK if n_ok == len(results) else EXIT_VERIFY


def cmd_correlation(args) -> int:
    cfg = _load(args, strict=False)
    cc = cfg.correlation
    data = correlation_study(cc.n_samples, cc.depths, cc.seed, cc.kappa_range, cfg.ansatz.layout)
    out = cfg.output_dir
    summary = []
    for d in data:
        k = d.params.shape[1]
        header = ["kappa1", "kappa0"] + [f"lambda_{j + 1}" for j in range(k)] + ["total", "abs_total", "res_q"]
        cols = [d.kappa1, d.kappa0, *d.params.T, d.total, np.abs(d.total), d.res_q]
        write_columns_csv(out / f"correlation_d{d.depth}.csv", header, cols)
        if cfg.emit_plots:
            from . import plots

            plots.correlation_plot(out / f"correlation_d{d.depth}.svg", d.total, d.res_q, d.depth, d.spearman)
        summary.append({"depth": d.depth, "n_samples": int(d.total.shape[0]), "spearman": d.spearman,
                        "cauchy_schwarz_violations": d.cauchy_schwarz_violations})
        print(f"d={d.depth}: Spearman {d.spearman:.3f}, Cauchy-Schwarz violations {d.cauchy_schwarz_violations}")
    write_json(out / "correlation_summary.json", {"seed": cc.seed, "panels": summary})
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="quva", description="Variational DE solver experiments.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="random + guided search for one DE")
    run.add_argument("config", help="INI experiment file")
    run.add_argument("--seed", type=int, help="override search and measurement seeds")
    run.add_argument("--output-dir", help="override [output] output_dir")
    run.add_argument("--shots", type=int, help="shots per readout (default: exact)")
    run.add_argument("--no-plots", action="store_true", help="skip SVG output")
    run.set_defaults(func=cmd_run)

    ver = sub.add_parser("verify", help="run the invariant self-checks")
    ver.add_argument("--corrupt-shift", action="store_true", help=argparse.SUPPRESS)
    ver.set_defaults(func=cmd_verify)

    cor = sub.add_parser("correlation", help="<O_tot> vs residual scatter per depth")
    cor.add_argument("config", help="INI experiment file (uses [correlation] and [output])")
    cor.add_argument("--seed", type=int, help="override [correlation] seed")
    cor.add_argument("--output-dir", help="override [output] output_dir")
    cor.add_argument("--no-plots", action="store_true", help="skip SVG output")
    cor.set_defaults(func=cmd_correlation)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
