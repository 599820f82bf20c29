"""The eigenspectrum probe behind cms3-tuned.

Prints the subsample's generalized Laplacian spectrum and the resulting
branch decision for a flat-spectrum dataset (orthogonal one-hot points),
a decaying one (two dominant clusters plus noise), and, when scikit-learn
is installed, the Wine benchmark data.
"""

import numpy as np

from nyspec import FeatureMatrix, KernelSpec, SamplerConfig, spectrum_switch, synthetic

spec = KernelSpec()


def show(name, data, gamma=0.15, seed=3):
    diag = spectrum_switch(data, SamplerConfig(m=2, gamma=gamma, seed=seed), spec)
    ev = diag.eigenvalues
    print(f"{name}: |sm| = {ev.size}")
    print(f"  spectrum (desc): head {np.round(ev[:3], 4)} ... tail {np.round(ev[-3:], 4)}")
    print(f"  switch_term = {diag.switch_term:.4f}  vs  switch_head = {diag.switch_head:.4f}")
    print(f"  branch: {'cms3' if diag.use_cms3 else 'ms3'}\n")


show("flat spectrum (orthogonal one-hots)", synthetic.one_hot_identity(60))
show("decaying spectrum (2 clusters + noise)", synthetic.two_dominant_clusters(20, 8, seed=1))

try:
    from sklearn.datasets import load_wine
except ImportError:
    print("scikit-learn not installed; skipping the Wine probe")
else:
    bundle = load_wine()
    wine = FeatureMatrix(bundle.data, labels=bundle.target, name="wine")
    show("wine (raw features, cosine)", wine, gamma=0.1)
