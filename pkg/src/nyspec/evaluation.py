"""Clustering accuracy and the benchmark sweep harness.

A sweep runs every (sampler, fraction, repetition) cell of an experiment
with a seed derived from a stable hash, so reruns are bit-identical and
changing one cell's seed affects only that cell. Failures are recorded as
failed rows and never abort the sweep.
"""

from __future__ import annotations

import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from . import kernel, nystrom
from .clustering import ClusterAssignment, spectral_cluster
from .errors import LengthMismatch, NyspecError
from .kernel import FeatureMatrix, KernelSpec
from .sampling import SamplerConfig
from .seeds import derive_seed

log = logging.getLogger(__name__)

DEFAULT_FRACTIONS = (0.02, 0.04, 0.06, 0.08, 0.10)


@dataclass
class ExperimentSpec:
    """A benchmark sweep: samplers x sampling fractions x repetitions."""

    dataset: FeatureMatrix
    samplers: tuple
    fractions: tuple = DEFAULT_FRACTIONS
    repetitions: int = 10
    k: int | None = None                  # default: the dataset's class count
    ensemble_p: int | None = None         # experts for ensemble-* samplers, 2..10
    base_seed: int = 0
    kernel: KernelSpec = field(default_factory=KernelSpec)
    gamma: float = 0.1
    record_error: bool = True             # exact Frobenius error at desk scale
    desk_scale_n: int = 3000
    jobs: int = 1

    def __post_init__(self):
        self.samplers = tuple(self.samplers)
        self.fractions = tuple(float(f) for f in self.fractions)
        if not self.samplers:
            raise ValueError("samplers must be nonempty")
        if not self.fractions:
            raise ValueError("fractions must be nonempty")
        for f in self.fractions:
            if not 0.0 < f <= 1.0:
                raise ValueError(f"fraction {f} outside (0, 1]")
            if math.ceil(f * self.dataset.n) < 2:
                raise ValueError(f"fraction {f} yields fewer than 2 landmarks")
        if self.repetitions < 1:
            raise ValueError("repetitions must be >= 1")
        if self.ensemble_p is not None and not 2 <= self.ensemble_p <= 10:
            raise ValueError("ensemble_p must be in 2..10")
        needs_p = [s for s in self.samplers if s.startswith("ensemble-")]
        if needs_p and self.ensemble_p is None:
            raise ValueError(f"samplers {needs_p} require ensemble_p")


@dataclass
class ResultRecord:
    """One (dataset, sampler, fraction, repetition) outcome."""

    dataset: str
    sampler: str
    fraction: float
    repetition: int
    seed: int
    accuracy: float          # nan when the dataset has no labels or the cell failed
    frobenius_error: float   # nan when not recorded
    wall_time_ms: float
    switch_branch: str = ""  # cms3 | ms3 for cms3-tuned cells
    error: str = ""          # nonempty marks a failed row


@dataclass
class AggregateRecord:
    """Mean +- sample std per (sampler, fraction); fraction None pools fractions."""

    dataset: str
    sampler: str
    fraction: float | None
    count: int
    accuracy_mean: float
    accuracy_std: float
    frobenius_error_mean: float
    frobenius_error_std: float


def clustering_accuracy(pred, truth) -> float:
    """Fraction of points matched under the best bijection of cluster labels.

    The contingency matrix between predicted and true labels is padded
    square and matched with the Hungarian algorithm (optimal assignment),
    so the metric is invariant to label permutations.
    """
    labels = pred.labels if isinstance(pred, ClusterAssignment) else np.asarray(pred)
    truth = np.asarray(truth)
    if labels.shape != truth.shape:
        raise LengthMismatch(f"pred has {labels.shape}, truth has {truth.shape}")
    if labels.size == 0:
        raise LengthMismatch("empty label vectors")
    side = int(max(labels.max(), truth.max())) + 1
    contingency = np.zeros((side, side))
    np.add.at(contingency, (labels, truth), 1.0)
    rows, cols = linear_sum_assignment(contingency, maximize=True)
    return float(contingency[rows, cols].sum() / labels.size)


def landmark_count(n: int, fraction: float) -> int:
    """Landmarks for a sampling fraction: ceil(fraction * n), at least 2."""
    return max(2, math.ceil(fraction * n))


def run_experiment(spec: ExperimentSpec):
    """Run the full sweep; returns (records, aggregates) in canonical order."""
    data = spec.dataset
    k = spec.k if spec.k is not None else data.n_classes
    if k is None:
        raise ValueError("k not given and the dataset has no labels")
    if k < 2:
        raise ValueError("k must be at least 2")
    cells = [
        (sampler, fraction, rep)
        for sampler in spec.samplers
        for fraction in spec.fractions
        for rep in range(spec.repetitions)
    ]
    if spec.jobs > 1:
        with ThreadPoolExecutor(max_workers=spec.jobs) as pool:
            records = list(pool.map(lambda c: _run_cell(spec, k, *c), cells))
    else:
        records = [_run_cell(spec, k, *cell) for cell in cells]
    records.sort(key=lambda r: (r.dataset, r.sampler, r.fraction, r.repetition))
    return records, aggregate(records)


def aggregate(records) -> list[AggregateRecord]:
    """Mean and sample standard deviation per (sampler, fraction) plus pooled rows."""
    ok = [r for r in records if not r.error]
    keys = sorted({(r.dataset, r.sampler, r.fraction) for r in ok})
    pooled = sorted({(r.dataset, r.sampler, None) for r in ok})
    out = []
    for dataset, sampler, fraction in keys + pooled:
        group = [
            r for r in ok
            if r.dataset == dataset and r.sampler == sampler
            and (fraction is None or r.fraction == fraction)
        ]
        acc_mean, acc_std = _mean_std([r.accuracy for r in group])
        err_mean, err_std = _mean_std([r.frobenius_error for r in group])
        out.append(AggregateRecord(dataset, sampler, fraction, len(group),
                                   acc_mean, acc_std, err_mean, err_std))
    return out


def _mean_std(values) -> tuple[float, float]:
    arr = np.asarray([v for v in values if np.isfinite(v)])
    if arr.size == 0:
        return float("nan"), float("nan")
    mean = float(arr.mean())
    std = float(arr.std(ddof=1)) if arr.size > 1 else float("nan")
    return mean, std


def _split_ensemble(sampler: str, ensemble_p: int | None):
    if sampler.startswith("ensemble-"):
        return sampler[len("ensemble-"):], ensemble_p
    return sampler, None


def _run_cell(spec: ExperimentSpec, k: int, sampler: str, fraction: float,
              rep: int) -> ResultRecord:
    data = spec.dataset
    seed = derive_seed(spec.base_seed, sampler, fraction, rep)
    start = time.perf_counter()
    try:
        base, p = _split_ensemble(sampler, spec.ensemble_p)
        cfg = SamplerConfig(m=landmark_count(data.n, fraction), gamma=spec.gamma, seed=seed)
        assignment, details = spectral_cluster(
            data, k, mode="nystrom", sampler=base, cfg=cfg, spec=spec.kernel,
            seed=seed, ensemble_p=p, return_details=True,
        )
        accuracy = (
            clustering_accuracy(assignment, data.labels)
            if data.labels is not None else float("nan")
        )
        error_value = _cell_frobenius_error(spec, details, k)
        wall = (time.perf_counter() - start) * 1e3
        return ResultRecord(data.name, sampler, fraction, rep, seed, accuracy,
                            error_value, wall, details.switch_branch, "")
    except Exception as exc:  # failed rows must never abort the sweep
        log.warning("cell (%s, %g, %d) failed: %s", sampler, fraction, rep, exc)
        wall = (time.perf_counter() - start) * 1e3
        return ResultRecord(data.name, sampler, fraction, rep, seed, float("nan"),
                            float("nan"), wall, "", f"{type(exc).__name__}: {exc}")


def _cell_frobenius_error(spec: ExperimentSpec, details, k: int) -> float:
    data = spec.dataset
    if not spec.record_error or data.n > spec.desk_scale_n:
        return float("nan")
    if data.n * data.n > kernel.memory_budget():
        return float("nan")
    try:
        if details.expert_landmarks is not None:
            models = [nystrom.fit(data, lm, k, spec.kernel)
                      for lm in details.expert_landmarks]
            ensemble = nystrom.EnsembleNystrom(models, details.expert_weights, 0)
            return nystrom.ensemble_error(data, ensemble, spec.kernel)
        model = nystrom.fit(data, details.landmarks, k, spec.kernel)
        return nystrom.frobenius_error(data, model, spec.kernel)
    except NyspecError as exc:
        log.warning("frobenius error skipped: %s", exc)
        return float("nan")
