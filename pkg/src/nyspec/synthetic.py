"""Synthetic datasets with controllable similarity spectra.

Used by the test suite and the demo scripts: flat spectra (identity-like
similarity), low-rank block structure, well-separated Gaussian blobs and
decaying spectra (dominant clusters plus scattered noise).
"""

from __future__ import annotations

import numpy as np

from .kernel import FeatureMatrix


def one_hot_identity(n: int, name: str = "one-hot-identity") -> FeatureMatrix:
    """n mutually orthogonal unit points: the similarity matrix is exactly I."""
    return FeatureMatrix(np.eye(n), labels=np.arange(n), name=name)


def one_hot_groups(sizes, name: str = "one-hot-groups") -> FeatureMatrix:
    """Repeated one-hot points, one direction per group; similarity rank = #groups."""
    sizes = list(sizes)
    k = len(sizes)
    rows = []
    labels = []
    for g, size in enumerate(sizes):
        row = np.zeros(k)
        row[g] = 1.0
        rows.extend([row] * size)
        labels.extend([g] * size)
    return FeatureMatrix(np.asarray(rows), labels=np.asarray(labels), name=name)


def gaussian_blobs(n: int, k: int, d: int = 3, separation: float = 5.0,
                   seed: int = 0, name: str = "blobs") -> FeatureMatrix:
    """k unit-variance Gaussian blobs with pairwise center distance `separation`.

    Centers sit on the first k coordinate axes at separation/sqrt(2), so d
    must be at least k. Points are split across blobs as evenly as possible.
    """
    if d < k:
        raise ValueError(f"need d >= k axes, got d={d}, k={k}")
    rng = np.random.default_rng(seed)
    counts = [n // k + (1 if i < n % k else 0) for i in range(k)]
    points = []
    labels = []
    radius = separation / np.sqrt(2.0)
    for i, count in enumerate(counts):
        center = np.zeros(d)
        center[i] = radius
        points.append(center + rng.standard_normal((count, d)))
        labels.extend([i] * count)
    return FeatureMatrix(np.vstack(points), labels=np.asarray(labels), name=name)


def rank_one_rays(n: int, d: int = 4, seed: int = 0,
                  name: str = "rank-one") -> FeatureMatrix:
    """Positive scalar multiples of one direction: cosine similarity is all-ones."""
    rng = np.random.default_rng(seed)
    direction = rng.standard_normal(d)
    direction /= np.linalg.norm(direction)
    scales = rng.uniform(0.5, 2.0, size=n)
    return FeatureMatrix(scales[:, None] * direction, name=name)


def two_dominant_clusters(per_cluster: int = 20, n_noise: int = 8, jitter: float = 0.01,
                          seed: int = 0, name: str = "two-clusters") -> FeatureMatrix:
    """Two tight clusters plus mutually orthogonal noise points.

    The cosine similarity matrix has two dominant blocks and a flat tail,
    i.e. a sharply decaying eigenspectrum.
    """
    rng = np.random.default_rng(seed)
    d = 2 + n_noise
    a = np.zeros((per_cluster, d))
    a[:, 0] = 1.0
    b = np.zeros((per_cluster, d))
    b[:, 1] = 1.0
    core = np.vstack([a, b]) + jitter * rng.standard_normal((2 * per_cluster, d))
    noise = np.zeros((n_noise, d))
    for i in range(n_noise):
        noise[i, 2 + i] = 1.0
    labels = np.asarray([0] * per_cluster + [1] * per_cluster + [2] * n_noise)
    return FeatureMatrix(np.vstack([core, noise]), labels=labels, name=name)
