"""Experiment orchestration: parallel ensembles, statistics, and file output.

File schemas (all written under the experiment's output directory):

* ``raw_<config_id>.csv`` - one row per (trajectory, time step) with header
  ``config_id,trajectory,t,S_cut_left,S_cut_right,S_mean``.  Rows are
  sorted by (trajectory, t) and floats use shortest round-trip formatting,
  so the bytes are identical regardless of worker count.
* ``records_<config_id>_t<index>.txt`` - measurement records, one line per
  layer: ``<t> <layer> <triple per site>`` where a triple is
  ``1:<outcome>:<probability>`` for a measured site and ``0:-:-``
  otherwise.
* ``stats_<config_id>.json`` - the aggregated `EnsembleStats` document.
* ``fit_<name>.json`` / ``chi_scan_<config_id>.json`` - scaling-fit
  parameters and bond-dimension scan summaries for the plotting scripts.

Statistics conventions: the two cut entropies are averaged per trajectory
per time step before any ensemble statistics; variances use the unbiased
(n-1) denominator; the long-time entropy is the per-trajectory mean over
t >= t_cutoff, averaged over trajectories, with the standard error taken
across trajectories.  The standard error is omitted for single-trajectory
ensembles.
"""

from __future__ import annotations

import concurrent.futures
import itertools
import json
import logging
import math
import multiprocessing
import re
import time
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from ._procenv import WORKERS_ENV, limit_blas_threads  # noqa: F401 - re-exported
from .circuit import CircuitConfig, TrajectoryResult, run_trajectory
from .sampler import MeasurementRecord

logger = logging.getLogger(__name__)

#: A config whose failed-trajectory fraction exceeds this is marked failed.
FAILURE_BUDGET = 0.01


@dataclass
class ExperimentSpec:
    configs: list[CircuitConfig]
    output_dir: Path
    workers: int = 1

    def __post_init__(self) -> None:
        if not self.configs:
            raise ValueError("experiment spec has no configs")
        self.output_dir = Path(self.output_dir)
        ids = [c.config_id for c in self.configs]
        if len(set(ids)) != len(ids):
            raise ValueError("config ids must be distinct")


@dataclass
class EnsembleStats:
    """Aggregated ensemble results for one config; round-trips via JSON."""

    config_id: str
    n_qubits: int
    theta: float
    theta_label: str | None
    p: float
    chi_max: int
    n_trajectories: int
    n_failed: int
    times: list[int]
    mean_s: list[float]
    std_s: list[float]
    sem_s: list[float] | None
    s_inf: float
    s_inf_sem: float | None
    peak_bond: int
    wall_time: float
    failed: bool


# -- spec files ---------------------------------------------------------------

_SWEEP_KEYS = {"n_qubits", "theta", "p", "chi_max"}
_TOP_KEYS = {
    "sweep",
    "cutoff",
    "t_max",
    "t_cutoff",
    "n_trajectories",
    "master_seed",
    "layer_order",
    "measure_method",
    "output_dir",
    "workers",
}

_PI_RE = re.compile(r"^\s*(\d+)?\s*\*?\s*pi\s*(?:/\s*(\d+))?\s*$", re.IGNORECASE)


def parse_theta(value) -> tuple[float, str]:
    """Accept a number or an exact pi-fraction string like ``pi/3``."""
    if isinstance(value, (int, float)):
        return float(value), repr(float(value))
    m = _PI_RE.match(str(value))
    if not m:
        raise ValueError(f"cannot parse theta {value!r}; use a number or 'a*pi/b'")
    num = int(m.group(1) or 1)
    den = int(m.group(2) or 1)
    label = ("" if num == 1 else str(num)) + "pi" + ("" if den == 1 else f"/{den}")
    return num * math.pi / den, label


def _id_fragment(theta_label: str) -> str:
    return theta_label.replace("/", "o").replace("*", "")


def make_config_id(n: int, theta_label: str, p: float, chi: int) -> str:
    return f"N{n}_th{_id_fragment(theta_label)}_p{p:g}_chi{chi}"


def build_sweep(
    n_values: list[int],
    theta_values: list,
    p_values: list[float],
    chi_values: list[int],
    *,
    cutoff: float,
    t_max: int,
    t_cutoff: int,
    n_trajectories: int,
    master_seed: int,
    layer_order: str = "UMUM",
    measure_method: str = "sweep",
) -> list[CircuitConfig]:
    """Cartesian sweep over (N, theta, p, chi) with shared scalar settings."""
    configs = []
    for n, theta_raw, p, chi in itertools.product(n_values, theta_values, p_values, chi_values):
        theta, label = parse_theta(theta_raw)
        configs.append(
            CircuitConfig(
                n_qubits=n,
                p=p,
                theta=theta,
                chi_max=chi,
                cutoff=cutoff,
                t_max=t_max,
                t_cutoff=t_cutoff,
                master_seed=master_seed,
                n_trajectories=n_trajectories,
                layer_order=layer_order,
                measure_method=measure_method,
                config_id=make_config_id(n, label, p, chi),
                theta_label=label,
            )
        )
    return configs


def load_spec(path: str | Path) -> ExperimentSpec:
    """Parse an experiment spec JSON document; unknown keys are errors."""
    with open(path) as fh:
        doc = json.load(fh)
    unknown = set(doc) - _TOP_KEYS
    if unknown:
        raise ValueError(f"unknown spec keys: {sorted(unknown)}")
    missing = {"sweep", "t_max", "t_cutoff", "n_trajectories", "master_seed", "output_dir"} - set(doc)
    if missing:
        raise ValueError(f"missing spec keys: {sorted(missing)}")
    sweep = doc["sweep"]
    unknown = set(sweep) - _SWEEP_KEYS
    if unknown:
        raise ValueError(f"unknown sweep keys: {sorted(unknown)}")
    missing = _SWEEP_KEYS - set(sweep)
    if missing:
        raise ValueError(f"missing sweep keys: {sorted(missing)}")
    configs = build_sweep(
        sweep["n_qubits"],
        sweep["theta"],
        sweep["p"],
        sweep["chi_max"],
        cutoff=doc.get("cutoff", 1e-6),
        t_max=doc["t_max"],
        t_cutoff=doc["t_cutoff"],
        n_trajectories=doc["n_trajectories"],
        master_seed=doc["master_seed"],
        layer_order=doc.get("layer_order", "UMUM"),
        measure_method=doc.get("measure_method", "sweep"),
    )
    return ExperimentSpec(
        configs=configs,
        output_dir=Path(doc["output_dir"]),
        workers=int(doc.get("workers", 1)),
    )


# -- execution ----------------------------------------------------------------


def _trajectory_task(config: CircuitConfig, index: int):
    try:
        return ("ok", config.config_id, index, run_trajectory(config, index))
    except Exception as exc:  # noqa: BLE001 - failures are excluded with a warning
        return ("err", config.config_id, index, str(exc))


def _format_float(x: float) -> str:
    return repr(float(x))


def _write_raw(path: Path, config_id: str, results: list[TrajectoryResult]) -> None:
    lines = ["config_id,trajectory,t,S_cut_left,S_cut_right,S_mean"]
    for res in results:
        for t in range(len(res.s_left)):
            lines.append(
                f"{config_id},{res.trajectory_index},{t + 1},"
                f"{_format_float(res.s_left[t])},{_format_float(res.s_right[t])},"
                f"{_format_float(res.s_mean[t])}"
            )
    path.write_text("\n".join(lines) + "\n")


def _record_line(t: int, layer: int, record: MeasurementRecord) -> str:
    triples = []
    for s in record.sites:
        if s.measured:
            triples.append(f"1:{s.outcome}:{_format_float(s.probability)}")
        else:
            triples.append("0:-:-")
    return f"{t} {layer} " + " ".join(triples)


def _write_records(path: Path, res: TrajectoryResult) -> None:
    lines = []
    for t, layer_records in enumerate(res.records, start=1):
        for layer, rec in enumerate(layer_records):
            lines.append(_record_line(t, layer, rec))
    path.write_text("\n".join(lines) + ("\n" if lines else ""))


def read_raw(path: str | Path) -> dict[int, np.ndarray]:
    """Parse a raw CSV back into {trajectory: array of [t, S_l, S_r, S_mean]}."""
    out: dict[int, list[list[float]]] = {}
    with open(path) as fh:
        header = fh.readline().strip()
        if header != "config_id,trajectory,t,S_cut_left,S_cut_right,S_mean":
            raise ValueError(f"unexpected raw header: {header}")
        for line in fh:
            _, traj, t, sl, sr, sm = line.strip().split(",")
            out.setdefault(int(traj), []).append([float(t), float(sl), float(sr), float(sm)])
    return {k: np.array(v) for k, v in out.items()}


def aggregate(
    config: CircuitConfig, results: list[TrajectoryResult], n_failed: int, wall_time: float
) -> EnsembleStats:
    n = len(results)
    if n == 0:
        raise ValueError(f"no successful trajectories for {config.config_id}")
    series = np.stack([r.s_mean for r in results])  # (n_traj, t_max)
    mean_s = series.mean(axis=0)
    if n >= 2:
        std_s = series.std(axis=0, ddof=1)
        sem_s: list[float] | None = [float(x) for x in std_s / math.sqrt(n)]
    else:
        std_s = np.zeros(series.shape[1])
        sem_s = None
    start = max(config.t_cutoff, 1) - 1
    per_traj_inf = series[:, start:].mean(axis=1) if series.shape[1] else np.zeros(n)
    s_inf = float(per_traj_inf.mean()) if series.shape[1] else 0.0
    s_inf_sem = (
        float(per_traj_inf.std(ddof=1) / math.sqrt(n)) if n >= 2 and series.shape[1] else None
    )
    total = n + n_failed
    return EnsembleStats(
        config_id=config.config_id,
        n_qubits=config.n_qubits,
        theta=config.theta,
        theta_label=config.theta_label,
        p=config.p,
        chi_max=config.chi_max,
        n_trajectories=n,
        n_failed=n_failed,
        times=list(range(1, series.shape[1] + 1)),
        mean_s=[float(x) for x in mean_s],
        std_s=[float(x) for x in std_s],
        sem_s=sem_s,
        s_inf=s_inf,
        s_inf_sem=s_inf_sem,
        peak_bond=max(r.peak_bond for r in results),
        wall_time=wall_time,
        failed=(n_failed / total) > FAILURE_BUDGET,
    )


def write_stats(path: Path, stats: EnsembleStats) -> None:
    path.write_text(json.dumps(asdict(stats), indent=1, sort_keys=True) + "\n")


def load_stats(path: str | Path) -> EnsembleStats:
    with open(path) as fh:
        return EnsembleStats(**json.load(fh))


def run_experiment(
    spec: ExperimentSpec, write_record_files: bool = True
) -> dict[str, EnsembleStats]:
    """Execute every (config, trajectory) task and write all output files.

    Trajectories run in a spawn-based process pool with BLAS pinned to one
    thread per worker, making the raw outputs byte-identical for any
    worker count.  Failed trajectories are excluded with a warning; a
    config whose failure fraction exceeds FAILURE_BUDGET is marked failed.
    """
    spec.output_dir.mkdir(parents=True, exist_ok=True)
    workers = max(1, spec.workers)
    by_config = {c.config_id: c for c in spec.configs}
    results: dict[str, dict[int, TrajectoryResult]] = {cid: {} for cid in by_config}
    failures: dict[str, dict[int, str]] = {cid: {} for cid in by_config}
    started = time.monotonic()
    finished_at: dict[str, float] = {}

    tasks = [
        (cfg, idx) for cfg in spec.configs for idx in range(cfg.n_trajectories)
    ]
    ctx = multiprocessing.get_context("spawn")
    with concurrent.futures.ProcessPoolExecutor(
        max_workers=workers, mp_context=ctx, initializer=limit_blas_threads
    ) as pool:
        futures = [pool.submit(_trajectory_task, cfg, idx) for cfg, idx in tasks]
        for fut in concurrent.futures.as_completed(futures):
            status, cid, idx, payload = fut.result()
            if status == "ok":
                results[cid][idx] = payload
            else:
                logger.warning("trajectory %s/%d failed: %s", cid, idx, payload)
                failures[cid][idx] = payload
            done = len(results[cid]) + len(failures[cid])
            if done == by_config[cid].n_trajectories:
                finished_at[cid] = time.monotonic() - started

    all_stats: dict[str, EnsembleStats] = {}
    for cid, cfg in by_config.items():
        ok = [results[cid][i] for i in sorted(results[cid])]
        stats = aggregate(cfg, ok, n_failed=len(failures[cid]), wall_time=finished_at.get(cid, 0.0))
        _write_raw(spec.output_dir / f"raw_{cid}.csv", cid, ok)
        if write_record_files:
            for res in ok:
                _write_records(
                    spec.output_dir / f"records_{cid}_t{res.trajectory_index:04d}.txt", res
                )
        write_stats(spec.output_dir / f"stats_{cid}.json", stats)
        logger.info(
            "config %s: %d ok, %d failed, S_inf=%.4f, peak chi=%d",
            cid, stats.n_trajectories, stats.n_failed, stats.s_inf, stats.peak_bond,
        )
        all_stats[cid] = stats
    return all_stats


# -- analysis -----------------------------------------------------------------


@dataclass
class FitResult:
    model: str
    slope: float
    intercept: float
    residuals: list[float]
    points: list[tuple[float, float, float | None]] = field(default_factory=list)

    def slope_stderr(self) -> float | None:
        """Weighted-least-squares standard error of the slope."""
        xs = np.array([p[0] for p in self.points], dtype=float)
        sems = [p[2] for p in self.points]
        if any(s is None or s <= 0 for s in sems):
            return None
        x = np.log(xs) if self.model == "log" else xs
        w = 1.0 / np.array(sems, dtype=float) ** 2
        sw, swx, swxx = w.sum(), (w * x).sum(), (w * x * x).sum()
        det = sw * swxx - swx**2
        if det <= 0:
            return None
        return float(math.sqrt(sw / det))


def fit_scaling(points: list[tuple[float, float, float | None]], model: str) -> FitResult:
    """Weighted least squares of S_inf against ln(N) ("log") or N ("linear").

    ``points`` holds (N, S_inf, sem) triples; weights are 1/sem^2 when all
    standard errors are positive, otherwise the fit is unweighted.
    """
    if model not in ("log", "linear"):
        raise ValueError("model must be 'log' or 'linear'")
    if len(points) < 3:
        raise ValueError("need at least 3 points to fit")
    ns = np.array([p[0] for p in points], dtype=float)
    ys = np.array([p[1] for p in points], dtype=float)
    sems = [p[2] for p in points]
    x = np.log(ns) if model == "log" else ns
    if any(s is None or s <= 0 for s in sems):
        w = np.ones_like(ys)
    else:
        w = 1.0 / np.array(sems, dtype=float) ** 2
    a = np.stack([x, np.ones_like(x)], axis=1)
    sw = np.sqrt(w)
    sol, _, rank, _ = np.linalg.lstsq(a * sw[:, None], ys * sw, rcond=None)
    if rank < 2:
        raise ValueError("degenerate design matrix (all abscissae equal?)")
    slope, intercept = float(sol[0]), float(sol[1])
    residuals = [float(r) for r in ys - (slope * x + intercept)]
    return FitResult(
        model=model, slope=slope, intercept=intercept, residuals=residuals, points=list(points)
    )


def write_fit(path: Path, fits: dict[str, FitResult]) -> None:
    doc = {
        key: {
            "model": f.model,
            "slope": f.slope,
            "intercept": f.intercept,
            "residuals": f.residuals,
            "points": [[p[0], p[1], p[2]] for p in f.points],
        }
        for key, f in fits.items()
    }
    path.write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n")


def chi_convergence_scan(
    base: CircuitConfig, chis: list[int], output_dir: str | Path, workers: int = 1
) -> list[tuple[int, float, float | None]]:
    """Rerun the same ensemble (identical seeds) at each bond dimension.

    Returns (chi, S_inf, sem) per entry and writes a summary JSON next to
    the per-chi stats files.
    """
    output_dir = Path(output_dir)
    configs = [
        replace(
            base,
            chi_max=chi,
            config_id=f"{base.config_id}_chi{chi}",
            seed_id=base.seed_id or base.config_id,
        )
        for chi in chis
    ]
    stats = run_experiment(
        ExperimentSpec(configs=configs, output_dir=output_dir, workers=workers),
        write_record_files=False,
    )
    scan = [
        (chi, stats[f"{base.config_id}_chi{chi}"].s_inf, stats[f"{base.config_id}_chi{chi}"].s_inf_sem)
        for chi in chis
    ]
    doc = {
        "config_id": base.config_id,
        "chi": [c for c, _, _ in scan],
        "s_inf": [s for _, s, _ in scan],
        "sem": [e for _, _, e in scan],
    }
    (output_dir / f"chi_scan_{base.config_id}.json").write_text(
        json.dumps(doc, indent=1, sort_keys=True) + "\n"
    )
    return scan
