"""Similarity kernels and on-demand block computation.

Similarity matrices are never materialized unless asked: every consumer
works from rectangular blocks, and any block is bit-identical to the
corresponding slice of the full matrix.
"""

import numpy as np

from nyspec import FeatureMatrix, KernelSpec, full_similarity, kernel_value, similarity_block

rng = np.random.default_rng(0)
data = FeatureMatrix(rng.standard_normal((8, 3)), name="demo")

cosine = KernelSpec()
rbf = KernelSpec(kind="rbf", bandwidth=1.5)

print("pairwise values")
print("  cosine(x0, x1) =", kernel_value(data.points[0], data.points[1], cosine))
print("  rbf(x0, x1)    =", kernel_value(data.points[0], data.points[1], rbf))
print("  cosine((3,4), (4,3)) =", kernel_value((3, 4), (4, 3), cosine), "(= 24/25)")

S = full_similarity(data, cosine).values
print("\nfull 8x8 cosine matrix: symmetric?", np.allclose(S, S.T), "diag:", S.diagonal())

block = similarity_block([5, 2], [0, 3, 7], data, cosine).values
print("\n2x3 block vs full-matrix slice, bitwise equal:",
      np.array_equal(block, S[np.ix_([5, 2], [0, 3, 7])]))

# zero vectors under the default policy: 0 against anything else, 1 with itself
zdata = FeatureMatrix([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 0.0]])
Z = full_similarity(zdata, cosine).values
print("\nzero-vector policy (similarity_zero):")
print(Z)
