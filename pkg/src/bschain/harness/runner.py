"""Replica fan-out with deterministic fan-in, budget guard, and run driver."""

from __future__ import annotations

import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from ..errors import BudgetError
from .config import ExperimentSpec
from .report import RunReport

DEFAULT_CHUNK = 256


@dataclass
class EnsembleStats:
    """Componentwise mean and standard error over replicas."""

    count: int
    mean: np.ndarray
    se: np.ndarray
    total: np.ndarray
    total_sq: np.ndarray


def default_workers() -> int:
    return max(1, min(8, os.cpu_count() or 1))


def parallel_map(fn, items, workers: int):
    """Map preserving item order; tasks may run on worker threads."""
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def ensemble_stats(replica_fn, n_replicas: int, workers: int, chunk: int = DEFAULT_CHUNK) -> EnsembleStats:
    """Run replica_fn(i) for i in range(n_replicas) and reduce to mean/SE.

    Replicas are grouped into fixed chunks; partial sums are accumulated
    inside each chunk in replica order and combined across chunks in chunk
    order, so the result is identical for every worker count. A replica
    failure aborts the run with the replica index recorded.
    """
    if n_replicas < 1:
        raise ValueError("need at least one replica")
    starts = list(range(0, n_replicas, chunk))

    def run_chunk(start):
        stop = min(start + chunk, n_replicas)
        first = np.asarray(replica_fn(start), dtype=float)
        total = first.copy()
        total_sq = first * first
        for i in range(start + 1, stop):
            try:
                y = np.asarray(replica_fn(i), dtype=float)
            except Exception as exc:
                raise RuntimeError(f"replica {i} failed: {exc}") from exc
            total += y
            total_sq += y * y
        return total, total_sq

    partials = parallel_map(run_chunk, starts, workers)
    total = partials[0][0].copy()
    total_sq = partials[0][1].copy()
    for t, t2 in partials[1:]:
        total += t
        total_sq += t2
    mean = total / n_replicas
    if n_replicas > 1:
        var = np.maximum(total_sq - n_replicas * mean**2, 0.0) / (n_replicas - 1)
        se = np.sqrt(var / n_replicas)
    else:
        se = np.full_like(mean, np.nan)
    return EnsembleStats(count=n_replicas, mean=mean, se=se, total=total, total_sq=total_sq)


def enforce_budget(projected_events: float, ceiling: float) -> None:
    if projected_events > ceiling:
        raise BudgetError(
            f"projected {projected_events:.3g} swap events exceed the configured "
            f"ceiling {ceiling:.3g}; raise budget_max_events or shrink the run"
        )


def run(spec: ExperimentSpec, workers: int | None = None) -> RunReport:
    """Execute a validated spec and return its report (outputs not yet written)."""
    from . import experiments

    exp = experiments.REGISTRY[spec.experiment]
    params = exp.resolve_params(spec.params)
    enforce_budget(exp.projected_events(params), spec.budget_max_events)
    w = workers or spec.workers or default_workers()
    report = RunReport(experiment=spec.experiment, seed=spec.seed, params=params,
                       spec_source=spec.source)
    t0 = time.perf_counter()
    exp.execute(params, spec.seed, w, report)
    report.wall_time_s = time.perf_counter() - t0
    return report
