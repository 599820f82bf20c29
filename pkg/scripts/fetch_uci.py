#!/usr/bin/env python3
"""Materialize the benchmark datasets as local CSVs under data/.

Needs network access for the Breast Cancer Wisconsin (Original) file; Wine
is copied from scikit-learn's bundled UCI data when available. The 16
missing values ('?') in the Breast file are imputed with the column
median, keeping all 699 rows; that choice is recorded here and in the
README.

Usage: python scripts/fetch_uci.py [--out data/]
"""

import argparse
import csv
import statistics
import urllib.request
from pathlib import Path

BREAST_URL = (
    "https://archive.ics.uci.edu/ml/machine-learning-databases/"
    "breast-cancer-wisconsin/breast-cancer-wisconsin.data"
)


def fetch_breast(out_dir: Path) -> Path:
    raw = urllib.request.urlopen(BREAST_URL, timeout=60).read().decode("ascii")
    rows = [line.split(",") for line in raw.strip().splitlines()]
    # columns: sample id, 9 integer attributes (1-10, '?' marks missing), class
    features = [[cell for cell in row[1:10]] for row in rows]
    labels = [row[10] for row in rows]
    medians = []
    for j in range(9):
        observed = [int(row[j]) for row in features if row[j] != "?"]
        medians.append(statistics.median(observed))
    path = out_dir / "breast-cancer-wisconsin.csv"
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"v{j + 1}" for j in range(9)] + ["class"])
        for row, label in zip(features, labels):
            values = [row[j] if row[j] != "?" else medians[j] for j in range(9)]
            writer.writerow(values + [label])
    print(f"wrote {path} ({len(rows)} rows, missing values imputed with medians)")
    return path


def fetch_wine(out_dir: Path) -> Path | None:
    try:
        from sklearn.datasets import load_wine
    except ImportError:
        print("scikit-learn not installed; skipping wine.csv")
        return None
    bundle = load_wine()
    path = out_dir / "wine.csv"
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"a{j + 1}" for j in range(bundle.data.shape[1])] + ["class"])
        for row, label in zip(bundle.data, bundle.target):
            writer.writerow([repr(float(v)) for v in row] + [int(label)])
    print(f"wrote {path} ({bundle.data.shape[0]} rows)")
    return path


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="data", help="output directory")
    args = parser.parse_args()
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    fetch_wine(out_dir)
    try:
        fetch_breast(out_dir)
    except OSError as exc:
        print(f"could not download the Breast dataset: {exc}")
        return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
