"""Command-line surface: ingest CSV datasets, cluster, benchmark, diagnose.

Subcommands: cluster, benchmark, spectrum, error-curve. Exit codes: 0 on
success, 2 for configuration errors (bad flags, unreadable or malformed
data), 3 for runtime failures. All result files are CSV or JSON with
floats serialized to 6 significant digits.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import nystrom, sampling
from .clustering import spectral_cluster
from .errors import EmptyDataset, NyspecError, ParseError, RaggedRows
from .evaluation import (
    ExperimentSpec,
    ResultRecord,
    clustering_accuracy,
    landmark_count,
    run_experiment,
)
from .kernel import FeatureMatrix, KernelSpec, memory_budget
from .sampling import SAMPLERS, SamplerConfig, get_sampler
from .seeds import derive_seed

log = logging.getLogger(__name__)

RECORD_COLUMNS = (
    "dataset", "sampler", "fraction", "repetition", "seed",
    "accuracy", "frobenius_error", "switch_branch", "error", "wall_time_ms",
)
AGGREGATE_COLUMNS = (
    "dataset", "sampler", "fraction", "count",
    "accuracy_mean", "accuracy_std", "frobenius_error_mean", "frobenius_error_std",
)
SCALE_MODES = ("none", "standard", "minmax")
DEFAULT_FRACTION_TEXT = "0.02,0.04,0.06,0.08,0.10"


@dataclass
class DatasetManifest:
    """Where and how to read a CSV dataset.

    label_column may be a header name or a 0-based column index; when None
    the file has no labels. feature_columns (names or indices) default to
    every non-label column.
    """

    path: str
    format: str = "csv"
    label_column: str | int | None = None
    delimiter: str = ","
    has_header: bool = True
    feature_columns: list | None = None

    def __post_init__(self):
        if self.format != "csv":
            raise ValueError(f"unsupported dataset format {self.format!r}")
        if len(self.delimiter) != 1:
            raise ValueError("delimiter must be a single character")


def resolve_manifest(arg: str) -> DatasetManifest:
    """A .json argument is parsed as a manifest; anything else is a bare CSV path."""
    if arg.endswith(".json"):
        with open(arg) as fh:
            raw = json.load(fh)
        unknown = set(raw) - set(DatasetManifest.__dataclass_fields__)
        if unknown:
            raise ValueError(f"manifest has unknown keys {sorted(unknown)}")
        if "path" not in raw:
            raise ValueError("manifest needs a 'path' key")
        manifest = DatasetManifest(**raw)
        if not os.path.isabs(manifest.path):
            manifest.path = str(Path(arg).parent / manifest.path)
        return manifest
    return DatasetManifest(path=arg)


def load_dataset(manifest: DatasetManifest, scale: str = "none") -> FeatureMatrix:
    """Read a CSV dataset into a FeatureMatrix.

    Labels are factor-encoded to 0..C-1 in first-appearance order. Parse
    errors name the offending cell with 1-based file row numbers (the
    header, when present, is row 1). scale applies optional per-column
    feature scaling: 'standard' (z-score) or 'minmax'.
    """
    if scale not in SCALE_MODES:
        raise ValueError(f"unknown scale mode {scale!r}")
    with open(manifest.path, newline="") as fh:
        reader = csv.reader(fh, delimiter=manifest.delimiter)
        rows = [(i, row) for i, row in enumerate(reader, start=1) if row]
    header = None
    if manifest.has_header:
        if not rows:
            raise EmptyDataset(f"{manifest.path} is empty")
        header = [cell.strip() for cell in rows[0][1]]
        rows = rows[1:]
    if not rows:
        raise EmptyDataset(f"{manifest.path} has no data rows")

    width = len(rows[0][1])
    for line_no, row in rows:
        if len(row) != width:
            raise RaggedRows(f"row {line_no} has {len(row)} cells, expected {width}")
    if header is not None and len(header) != width:
        raise RaggedRows(f"header has {len(header)} cells, data rows have {width}")

    label_pos = _resolve_column(manifest.label_column, header, width, "label_column")
    if manifest.feature_columns is not None:
        feature_pos = [
            _resolve_column(c, header, width, "feature_columns")
            for c in manifest.feature_columns
        ]
    else:
        feature_pos = [j for j in range(width) if j != label_pos]
    if not feature_pos:
        raise ValueError("no feature columns left after excluding the label column")

    points = np.empty((len(rows), len(feature_pos)))
    for i, (line_no, row) in enumerate(rows):
        for jj, j in enumerate(feature_pos):
            cell = row[j].strip()
            try:
                points[i, jj] = float(cell)
            except ValueError:
                name = header[j] if header else str(j)
                raise ParseError(
                    f"row {line_no}, column {name!r}: {cell!r} is not numeric"
                ) from None

    labels = None
    if label_pos is not None:
        seen: dict[str, int] = {}
        encoded = np.empty(len(rows), dtype=np.intp)
        for i, (_, row) in enumerate(rows):
            encoded[i] = seen.setdefault(row[label_pos].strip(), len(seen))
        labels = encoded

    points = _scale_features(points, scale)
    name = Path(manifest.path).stem
    data = FeatureMatrix(points, labels=labels, name=name)
    log.info("loaded %s: n=%d d=%d classes=%s", name, data.n, data.d, data.n_classes)
    return data


def _resolve_column(column, header, width: int, what: str):
    if column is None:
        return None
    if isinstance(column, bool):
        raise ValueError(f"{what} must be a name or index")
    if isinstance(column, int):
        if not -width <= column < width:
            raise ValueError(f"{what} index {column} outside 0..{width - 1}")
        return column % width
    if header is None:
        raise ValueError(f"{what} {column!r} needs has_header=true")
    try:
        return header.index(column)
    except ValueError:
        raise ValueError(f"{what} {column!r} not found in header {header}") from None


def _scale_features(points: np.ndarray, scale: str) -> np.ndarray:
    if scale == "standard":
        mean = points.mean(axis=0)
        std = points.std(axis=0)
        return (points - mean) / np.where(std > 0, std, 1.0)
    if scale == "minmax":
        lo = points.min(axis=0)
        span = points.max(axis=0) - lo
        return (points - lo) / np.where(span > 0, span, 1.0)
    return points


def fmt(x) -> str:
    """6-significant-digit float serialization used in every CSV."""
    return f"{float(x):.6g}"


def write_records_csv(path, records) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(RECORD_COLUMNS)
        for r in records:
            writer.writerow([
                r.dataset, r.sampler, fmt(r.fraction), r.repetition, r.seed,
                fmt(r.accuracy), fmt(r.frobenius_error), r.switch_branch,
                r.error, fmt(r.wall_time_ms),
            ])


def parse_records_csv(path) -> list[ResultRecord]:
    """Inverse of write_records_csv at the 6-digit float contract."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != RECORD_COLUMNS:
            raise ParseError(f"unexpected records header {header}")
        out = []
        for row in reader:
            out.append(ResultRecord(
                dataset=row[0], sampler=row[1], fraction=float(row[2]),
                repetition=int(row[3]), seed=int(row[4]), accuracy=float(row[5]),
                frobenius_error=float(row[6]), switch_branch=row[7], error=row[8],
                wall_time_ms=float(row[9]),
            ))
    return out


def write_aggregates_csv(path, aggregates) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(AGGREGATE_COLUMNS)
        for a in aggregates:
            writer.writerow([
                a.dataset, a.sampler,
                "pooled" if a.fraction is None else fmt(a.fraction),
                a.count, fmt(a.accuracy_mean), fmt(a.accuracy_std),
                fmt(a.frobenius_error_mean), fmt(a.frobenius_error_std),
            ])


def _write_json(path, payload) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


class _ConfigError(Exception):
    """Flag/input validation failure; maps to exit code 2."""


def _config_phase(fn, *args):
    try:
        return fn(*args)
    except (NyspecError, ValueError, OSError, json.JSONDecodeError) as exc:
        raise _ConfigError(str(exc)) from exc


def _load(args) -> FeatureMatrix:
    manifest = resolve_manifest(args.data)
    return load_dataset(manifest, scale=args.scale)


def _parse_sampler(name: str, ensemble_p: int | None):
    base = name[len("ensemble-"):] if name.startswith("ensemble-") else name
    if base not in SAMPLERS:
        raise ValueError(f"--samplers: unknown sampler {name!r}")
    if name.startswith("ensemble-") and ensemble_p is None:
        raise ValueError(f"--ensemble-p: required for sampler {name!r}")
    return base, (ensemble_p if name.startswith("ensemble-") else None)


def _parse_fractions(text: str) -> tuple[float, ...]:
    try:
        fractions = tuple(float(tok) for tok in text.split(",") if tok.strip())
    except ValueError:
        raise ValueError(f"--fractions: cannot parse {text!r}") from None
    if not fractions:
        raise ValueError("--fractions: empty list")
    for f in fractions:
        if not 0.0 < f <= 1.0:
            raise ValueError(f"--fractions: {f} outside (0, 1]")
    return fractions


def cmd_cluster(args) -> int:
    def prepare():
        data = _load(args)
        if not 2 <= args.k <= data.n:
            raise ValueError(f"--k: {args.k} outside 2..{data.n}")
        if args.exact:
            if args.save_model:
                raise ValueError("--save-model: needs a landmark run, not --exact")
            return data, None, None
        base, p = _parse_sampler(args.sampler, args.ensemble_p)
        if p is not None and args.save_model:
            raise ValueError("--save-model: unsupported for ensemble samplers")
        if not 0.0 < args.fraction <= 1.0:
            raise ValueError(f"--fraction: {args.fraction} outside (0, 1]")
        m = landmark_count(data.n, args.fraction)
        if args.k > m:
            raise ValueError(f"--k: {args.k} exceeds landmark count m={m}")
        cfg = SamplerConfig(m=m, r=args.r, gamma=args.gamma, seed=args.seed)
        return data, (base, p), cfg

    try:
        data, sampler_info, cfg = _config_phase(prepare)
    except _ConfigError as exc:
        print(f"nyspec cluster: config error: {exc}", file=sys.stderr)
        return 2

    try:
        start = time.perf_counter()
        if args.exact:
            assignment, details = spectral_cluster(
                data, args.k, mode="exact", spec=KernelSpec(), seed=args.seed,
                embedding=args.embedding, return_details=True)
        else:
            base, p = sampler_info
            assignment, details = spectral_cluster(
                data, args.k, mode="nystrom", sampler=base, cfg=cfg,
                spec=KernelSpec(), seed=args.seed, embedding=args.embedding,
                ensemble_p=p, return_details=True)
        wall_ms = (time.perf_counter() - start) * 1e3

        out = Path(args.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        with open(out, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["point_index", "label"])
            for i, label in enumerate(assignment.labels):
                writer.writerow([i, int(label)])

        model_path = None
        if args.save_model:
            model = nystrom.fit(data, details.landmarks, args.k, KernelSpec())
            model_path = str(nystrom.save_model(model, args.save_model))

        accuracy = None
        if data.labels is not None:
            accuracy = clustering_accuracy(assignment, data.labels)
        summary = {
            "command": "cluster",
            "dataset": {"name": data.name, "n": data.n, "d": data.d,
                        "classes": data.n_classes},
            "config": {
                "k": args.k, "sampler": None if args.exact else args.sampler,
                "fraction": None if args.exact else args.fraction,
                "r": args.r, "gamma": args.gamma, "seed": args.seed,
                "exact": args.exact, "embedding": args.embedding,
                "scale": args.scale,
            },
            "pipeline": assignment.pipeline,
            "switch_branch": details.switch_branch or None,
            "inertia": assignment.inertia,
            "accuracy": accuracy,
            "wall_time_ms": wall_ms,
            "labels_path": str(out),
            "model_path": model_path,
        }
        _write_json(str(out) + ".summary.json", summary)
    except NyspecError as exc:
        print(f"nyspec cluster: runtime error: {exc}", file=sys.stderr)
        return 3
    return 0


def cmd_benchmark(args) -> int:
    def prepare():
        data = _load(args)
        samplers = tuple(tok.strip() for tok in args.samplers.split(",") if tok.strip())
        for name in samplers:
            _parse_sampler(name, args.ensemble_p)
        fractions = _parse_fractions(args.fractions)
        spec = ExperimentSpec(
            dataset=data, samplers=samplers, fractions=fractions,
            repetitions=args.reps, k=args.k, ensemble_p=args.ensemble_p,
            base_seed=args.seed, gamma=args.gamma,
            record_error=not args.no_frobenius, jobs=args.jobs,
        )
        if spec.k is None and data.n_classes is None:
            raise ValueError("--k: required for datasets without labels")
        return spec

    try:
        spec = _config_phase(prepare)
    except _ConfigError as exc:
        print(f"nyspec benchmark: config error: {exc}", file=sys.stderr)
        return 2

    try:
        start = time.perf_counter()
        records, aggregates = run_experiment(spec)
        wall_ms = (time.perf_counter() - start) * 1e3
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        records_path = out_dir / "records.csv"
        aggregates_path = out_dir / "aggregates.csv"
        write_records_csv(records_path, records)
        write_aggregates_csv(aggregates_path, aggregates)
        pooled = {
            a.sampler: {"accuracy_mean": a.accuracy_mean, "accuracy_std": a.accuracy_std,
                        "count": a.count}
            for a in aggregates if a.fraction is None
        }
        summary = {
            "command": "benchmark",
            "dataset": {"name": spec.dataset.name, "n": spec.dataset.n,
                        "d": spec.dataset.d, "classes": spec.dataset.n_classes},
            "config": {
                "samplers": list(spec.samplers), "fractions": list(spec.fractions),
                "repetitions": spec.repetitions, "k": spec.k,
                "ensemble_p": spec.ensemble_p, "seed": spec.base_seed,
                "gamma": spec.gamma, "scale": args.scale, "jobs": spec.jobs,
            },
            "n_records": len(records),
            "failed_rows": sum(1 for r in records if r.error),
            "pooled_accuracy": pooled,
            "wall_time_ms": wall_ms,
            "outputs": {"records": str(records_path), "aggregates": str(aggregates_path)},
        }
        _write_json(out_dir / "summary.json", summary)
    except NyspecError as exc:
        print(f"nyspec benchmark: runtime error: {exc}", file=sys.stderr)
        return 3
    return 0


def cmd_spectrum(args) -> int:
    def prepare():
        data = _load(args)
        if not 0.0 < args.gamma <= 1.0:
            raise ValueError(f"--gamma: {args.gamma} outside (0, 1]")
        return data

    try:
        data = _config_phase(prepare)
    except _ConfigError as exc:
        print(f"nyspec spectrum: config error: {exc}", file=sys.stderr)
        return 2

    try:
        cfg = SamplerConfig(m=2, gamma=args.gamma, seed=args.seed)
        diagnostic = sampling.spectrum_switch(data, cfg, KernelSpec())
        out = Path(args.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        payload = {
            "command": "spectrum",
            "dataset": {"name": data.name, "n": data.n, "d": data.d},
            "gamma": args.gamma,
            "seed": args.seed,
            "subsample_size": int(diagnostic.eigenvalues.size),
            "lambda2": diagnostic.lambda2,
            "tail_term": diagnostic.tail_term,
            "use_cms3": diagnostic.use_cms3,
            "branch": "cms3" if diagnostic.use_cms3 else "ms3",
        }
        _write_json(out, payload)
        curve_path = out.with_suffix(".csv") if out.suffix == ".json" else Path(str(out) + ".csv")
        with open(curve_path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["rank", "eigenvalue"])
            for i, value in enumerate(diagnostic.eigenvalues, start=1):
                writer.writerow([i, fmt(value)])
    except NyspecError as exc:
        print(f"nyspec spectrum: runtime error: {exc}", file=sys.stderr)
        return 3
    return 0


def cmd_error_curve(args) -> int:
    def prepare():
        data = _load(args)
        if data.n * data.n > memory_budget():
            raise ValueError(
                f"--data: n={data.n} exceeds the desk-scale memory budget for exact errors"
            )
        samplers = tuple(tok.strip() for tok in args.samplers.split(",") if tok.strip())
        parsed = [(name, *_parse_sampler(name, args.ensemble_p)) for name in samplers]
        fractions = _parse_fractions(args.fractions)
        if args.reps < 1:
            raise ValueError(f"--reps: {args.reps} must be >= 1")
        return data, parsed, fractions

    try:
        data, parsed, fractions = _config_phase(prepare)
    except _ConfigError as exc:
        print(f"nyspec error-curve: config error: {exc}", file=sys.stderr)
        return 2

    try:
        kspec = KernelSpec()
        k = args.k if args.k is not None else (data.n_classes or 2)
        rows = []
        for name, base, p in parsed:
            fn = get_sampler(base)
            for fraction in fractions:
                m = landmark_count(data.n, fraction)
                errors = []
                for rep in range(args.reps):
                    seed = derive_seed(args.seed, name, fraction, rep)
                    cfg = SamplerConfig(m=m, gamma=args.gamma, seed=seed)
                    try:
                        if p is None:
                            model = nystrom.fit(data, fn(data, cfg, kspec), min(k, m), kspec)
                            errors.append(nystrom.frobenius_error(data, model, kspec))
                        else:
                            ensemble = nystrom.ensemble_fit(
                                data, fn, cfg, p, min(k, m), kspec, seed)
                            errors.append(nystrom.ensemble_error(data, ensemble, kspec))
                    except NyspecError as exc:
                        log.warning("error-curve cell (%s, %g, %d) failed: %s",
                                    name, fraction, rep, exc)
                finite = np.asarray(errors)
                mean = float(finite.mean()) if finite.size else float("nan")
                std = float(finite.std(ddof=1)) if finite.size > 1 else float("nan")
                rows.append((data.name, name, fraction, len(errors), mean, std))
        out = Path(args.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        with open(out, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["dataset", "sampler", "fraction", "reps",
                             "error_mean", "error_std"])
            for dataset, name, fraction, reps, mean, std in rows:
                writer.writerow([dataset, name, fmt(fraction), reps, fmt(mean), fmt(std)])
    except NyspecError as exc:
        print(f"nyspec error-curve: runtime error: {exc}", file=sys.stderr)
        return 3
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nyspec",
        description="Landmark-sampled spectral clustering toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--data", required=True,
                       help="CSV path or JSON dataset manifest")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--scale", choices=SCALE_MODES, default="none",
                       help="optional feature scaling applied at load")

    p = sub.add_parser("cluster", help="cluster one dataset")
    add_common(p)
    p.add_argument("--k", type=int, required=True, help="number of clusters")
    p.add_argument("--sampler", default="rs",
                   help="rs|ks|ss|ms3|cms3|cms3-tuned or ensemble-<base>")
    p.add_argument("--fraction", type=float, default=0.10,
                   help="landmark fraction of n")
    p.add_argument("--r", type=int, default=None,
                   help="MS3 pre-sample size for cms3 (default 2m)")
    p.add_argument("--gamma", type=float, default=0.1,
                   help="candidate-pool fraction for greedy samplers")
    p.add_argument("--exact", action="store_true",
                   help="full-matrix spectral clustering, no sampling")
    p.add_argument("--embedding", choices=("laplacian", "affinity"),
                   default="laplacian")
    p.add_argument("--ensemble-p", type=int, default=5,
                   help="expert count for ensemble-* samplers")
    p.add_argument("--save-model", default=None,
                   help="write the fitted approximation to this .npz path")
    p.add_argument("--out", required=True, help="labels CSV path")
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("benchmark", help="accuracy sweep over samplers and fractions")
    add_common(p)
    p.add_argument("--samplers", required=True, help="comma-separated sampler list")
    p.add_argument("--fractions", default=DEFAULT_FRACTION_TEXT)
    p.add_argument("--reps", type=int, default=10)
    p.add_argument("--k", type=int, default=None,
                   help="clusters (default: dataset class count)")
    p.add_argument("--ensemble-p", type=int, default=None)
    p.add_argument("--gamma", type=float, default=0.1)
    p.add_argument("--jobs", type=int, default=os.cpu_count() or 1)
    p.add_argument("--no-frobenius", action="store_true",
                   help="skip the Frobenius error column")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_benchmark)

    p = sub.add_parser("spectrum", help="eigenspectrum switch diagnostic")
    add_common(p)
    p.add_argument("--gamma", type=float, default=0.1,
                   help="subsample fraction for the probe")
    p.add_argument("--out", required=True, help="diagnostic JSON path")
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("error-curve", help="Frobenius error vs sampling fraction")
    add_common(p)
    p.add_argument("--samplers", required=True)
    p.add_argument("--fractions", default=DEFAULT_FRACTION_TEXT)
    p.add_argument("--reps", type=int, default=10)
    p.add_argument("--k", type=int, default=None,
                   help="approximation rank (default: class count)")
    p.add_argument("--gamma", type=float, default=0.1)
    p.add_argument("--ensemble-p", type=int, default=None)
    p.add_argument("--out", required=True, help="output CSV path")
    p.set_defaults(func=cmd_error_curve)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
