"""Command-line interface.

Subcommands:

* ``run``        - execute one experiment spec file (JSON).
* ``sweep``      - build a cartesian (N, theta, p, chi) sweep from flags.
* ``oracle-check`` - randomized small-N equivalence suite against the
  dense statevector oracle.
* ``chi-scan``   - rerun one ensemble at several bond dimensions with
  identical seeds.
* ``fit``        - scaling fits of S_inf against N from stats files.

`MONITORED_MPS_MAX_WORKERS` caps the worker count when no explicit
``--workers`` flag is given; the flag always wins.  BLAS pools are pinned
to one thread before numpy loads so runs are reproducible and workers do
not oversubscribe the machine.
"""

from __future__ import annotations

import argparse
import os
import sys


def _parse_int_list(text: str) -> list[int]:
    return [int(x) for x in text.split(",") if x]


def _parse_str_list(text: str) -> list[str]:
    return [x for x in text.split(",") if x]


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="monitored-mps", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="execute an experiment spec file")
    run.add_argument("--spec", required=True, help="path to the spec JSON")
    run.add_argument("--output-dir", default=None, help="override the spec's output dir")
    run.add_argument("--workers", "-j", type=int, default=None)
    run.add_argument("--master-seed", type=int, default=None, help="override the spec's seed")

    sweep = sub.add_parser("sweep", help="run a sweep described by flags")
    sweep.add_argument("--n", required=True, type=_parse_int_list, help="e.g. 8,12,16")
    sweep.add_argument("--theta", required=True, type=_parse_str_list, help="e.g. pi/3,pi/6")
    sweep.add_argument("--p", default="1.0", help="comma-separated probabilities")
    sweep.add_argument("--chi", default="256", type=_parse_int_list)
    sweep.add_argument("--cutoff", type=float, default=1e-6)
    sweep.add_argument("--t-max", type=int, default=30)
    sweep.add_argument("--t-cutoff", type=int, default=20)
    sweep.add_argument("--n-traj", type=int, default=100)
    sweep.add_argument("--seed", type=int, default=7)
    sweep.add_argument("--order", default="UMUM", choices=["UMUM", "UUMM"])
    sweep.add_argument("--method", default="sweep", choices=["sweep", "direct"])
    sweep.add_argument("--output-dir", required=True)
    sweep.add_argument("--workers", "-j", type=int, default=None)

    oracle = sub.add_parser("oracle-check", help="small-N equivalence suite vs dense oracle")
    oracle.add_argument("--cases", type=int, default=200)
    oracle.add_argument("--max-n", type=int, default=8)
    oracle.add_argument("--seed", type=int, default=0)

    scan = sub.add_parser("chi-scan", help="bond-dimension convergence scan")
    scan.add_argument("--n", type=int, required=True)
    scan.add_argument("--theta", required=True)
    scan.add_argument("--p", type=float, default=1.0)
    scan.add_argument("--chi", required=True, type=_parse_int_list, help="e.g. 64,128,256")
    scan.add_argument("--cutoff", type=float, default=1e-6)
    scan.add_argument("--t-max", type=int, default=30)
    scan.add_argument("--t-cutoff", type=int, default=20)
    scan.add_argument("--n-traj", type=int, default=100)
    scan.add_argument("--seed", type=int, default=7)
    scan.add_argument("--output-dir", required=True)
    scan.add_argument("--workers", "-j", type=int, default=None)

    fit = sub.add_parser("fit", help="fit S_inf scaling against N from stats files")
    fit.add_argument("stats", nargs="+", help="stats_*.json files")
    fit.add_argument("--model", default="log", choices=["log", "linear"])
    fit.add_argument("--output", default=None, help="write fit parameters to this JSON")

    return parser


def _resolve_workers(flag_value: int | None, configured: int) -> int:
    """Explicit --workers wins; otherwise the env var caps the configured value."""
    from ._procenv import WORKERS_ENV

    if flag_value is not None:
        return max(1, flag_value)
    cap = os.environ.get(WORKERS_ENV)
    workers = max(1, configured)
    if cap:
        workers = min(workers, max(1, int(cap)))
    return workers


def _cmd_run(args) -> int:
    from dataclasses import replace
    from pathlib import Path

    from .harness import load_spec, run_experiment

    spec = load_spec(args.spec)
    if args.output_dir is not None:
        spec.output_dir = Path(args.output_dir)
    if args.master_seed is not None:
        spec.configs = [replace(c, master_seed=args.master_seed) for c in spec.configs]
    spec.workers = _resolve_workers(args.workers, spec.workers)
    stats = run_experiment(spec)
    bad = [s.config_id for s in stats.values() if s.failed]
    for s in stats.values():
        sem = f" +- {s.s_inf_sem:.4f}" if s.s_inf_sem is not None else ""
        print(f"{s.config_id}: S_inf = {s.s_inf:.4f}{sem}  (peak chi {s.peak_bond})")
    if bad:
        print(f"FAILED configs: {bad}", file=sys.stderr)
        return 1
    return 0


def _cmd_sweep(args) -> int:
    from .harness import ExperimentSpec, build_sweep, run_experiment

    configs = build_sweep(
        args.n,
        args.theta,
        [float(x) for x in args.p.split(",")],
        args.chi,
        cutoff=args.cutoff,
        t_max=args.t_max,
        t_cutoff=args.t_cutoff,
        n_trajectories=args.n_traj,
        master_seed=args.seed,
        layer_order=args.order,
        measure_method=args.method,
    )
    spec = ExperimentSpec(
        configs=configs,
        output_dir=args.output_dir,
        workers=_resolve_workers(args.workers, 1),
    )
    stats = run_experiment(spec)
    bad = []
    for s in stats.values():
        sem = f" +- {s.s_inf_sem:.4f}" if s.s_inf_sem is not None else ""
        print(f"{s.config_id}: S_inf = {s.s_inf:.4f}{sem}  (peak chi {s.peak_bond})")
        if s.failed:
            bad.append(s.config_id)
    if bad:
        print(f"FAILED configs: {bad}", file=sys.stderr)
        return 1
    return 0


def _cmd_oracle_check(args) -> int:
    import numpy as np

    from .dense import dense_weak_measure_layer, fidelity, random_dense
    from .mps import MpsState, TruncationParams
    from .sampler import LayerPlan, sample_measurement_layer

    rng = np.random.default_rng(args.seed)
    params = TruncationParams(chi_max=2 ** (args.max_n // 2 + 1), cutoff=0.0)
    worst_dp, worst_f = 0.0, 1.0
    for _ in range(args.cases):
        n = int(rng.integers(2, args.max_n + 1))
        theta = float(rng.uniform(0.0, np.pi / 2))
        v = random_dense(n, rng)
        measured = [bool(rng.random() < 0.7) for _ in range(n)]
        sampled = MpsState.from_statevector(v.amplitudes, params)
        rec = sample_measurement_layer(sampled, LayerPlan(measured, theta), rng=rng)
        outcomes = [o if o is not None else 0 for o in rec.outcomes()]
        forced_state = MpsState.from_statevector(v.amplitudes, params)
        rec2 = sample_measurement_layer(forced_state, LayerPlan(measured, theta), forced=outcomes)
        dense_state, joint = dense_weak_measure_layer(v, measured, theta, outcomes)
        worst_dp = max(worst_dp, abs(rec2.joint_probability() - joint))
        worst_f = min(worst_f, fidelity(forced_state.to_statevector(), dense_state.amplitudes))
    ok = worst_dp <= 1e-10 and worst_f >= 1.0 - 1e-10
    print(
        f"oracle-check: {args.cases} cases, max |dP| = {worst_dp:.3e}, "
        f"min fidelity = {worst_f:.12f} -> {'PASS' if ok else 'FAIL'}"
    )
    return 0 if ok else 1


def _cmd_chi_scan(args) -> int:
    from .circuit import CircuitConfig
    from .harness import chi_convergence_scan, make_config_id, parse_theta

    theta, label = parse_theta(args.theta)
    base = CircuitConfig(
        n_qubits=args.n,
        p=args.p,
        theta=theta,
        chi_max=max(args.chi),
        cutoff=args.cutoff,
        t_max=args.t_max,
        t_cutoff=args.t_cutoff,
        master_seed=args.seed,
        n_trajectories=args.n_traj,
        config_id=make_config_id(args.n, label, args.p, max(args.chi)) + "_scan",
        theta_label=label,
    )
    scan = chi_convergence_scan(
        base, args.chi, args.output_dir, workers=_resolve_workers(args.workers, 1)
    )
    for chi, s_inf, sem in scan:
        sem_txt = f" +- {sem:.4f}" if sem is not None else ""
        print(f"chi={chi}: S_inf = {s_inf:.4f}{sem_txt}")
    return 0


def _cmd_fit(args) -> int:
    from pathlib import Path

    from .harness import fit_scaling, load_stats, write_fit

    groups: dict[str, list[tuple[float, float, float | None]]] = {}
    for path in args.stats:
        s = load_stats(path)
        key = s.theta_label or repr(s.theta)
        groups.setdefault(key, []).append((float(s.n_qubits), s.s_inf, s.s_inf_sem))
    fits = {}
    for key, points in sorted(groups.items()):
        points.sort()
        fit = fit_scaling(points, args.model)
        fits[key] = fit
        print(
            f"theta={key} [{args.model}]: slope = {fit.slope:.6f}, "
            f"intercept = {fit.intercept:.6f}, max |resid| = {max(abs(r) for r in fit.residuals):.3e}"
        )
    if args.output:
        write_fit(Path(args.output), fits)
    return 0


def main(argv: list[str] | None = None) -> int:
    # Pin BLAS pools before numpy is imported anywhere in this process.
    from ._procenv import limit_blas_threads

    limit_blas_threads()

    import logging

    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")

    args = _build_parser().parse_args(argv)
    handlers = {
        "run": _cmd_run,
        "sweep": _cmd_sweep,
        "oracle-check": _cmd_oracle_check,
        "chi-scan": _cmd_chi_scan,
        "fit": _cmd_fit,
    }
    return handlers[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
