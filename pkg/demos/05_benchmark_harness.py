"""A miniature benchmark sweep, printed as a Table-I-style comparison.

Sweeps samplers x sampling fractions x repetitions on separable blobs and
prints per-fraction and pooled mean +- std accuracies. With scikit-learn
installed, repeats the sweep on Wine, where the centroid samplers pull
ahead of uniform random sampling.
"""

import numpy as np

from nyspec import FeatureMatrix, KernelSpec
from nyspec.evaluation import ExperimentSpec, run_experiment


def show(data, kernel, samplers=("rs", "ks", "ms3", "cms3", "cms3-tuned"),
         fractions=(0.05, 0.10), reps=5):
    spec = ExperimentSpec(dataset=data, samplers=samplers, fractions=fractions,
                          repetitions=reps, base_seed=0, kernel=kernel,
                          record_error=False)
    records, aggregates = run_experiment(spec)
    failed = sum(1 for r in records if r.error)
    print(f"{data.name}: n={data.n}, d={data.d}, k={data.n_classes}, "
          f"{len(records)} records ({failed} failed)")
    for agg in aggregates:
        tag = "pooled" if agg.fraction is None else f"f={agg.fraction:.2f}"
        std = 0.0 if np.isnan(agg.accuracy_std) else agg.accuracy_std
        print(f"  {agg.sampler:12s} {tag:8s} acc = {agg.accuracy_mean:.4f} +- {std:.4f}")
    print()


from nyspec import synthetic

blobs = synthetic.gaussian_blobs(300, 3, d=3, separation=5.0, seed=9)
show(blobs, KernelSpec(kind="rbf", bandwidth=2.0))

try:
    from sklearn.datasets import load_wine
except ImportError:
    print("scikit-learn not installed; skipping the Wine sweep")
else:
    bundle = load_wine()
    wine = FeatureMatrix(bundle.data, labels=bundle.target, name="wine")
    show(wine, KernelSpec(), fractions=(0.02, 0.06, 0.10), reps=10)
