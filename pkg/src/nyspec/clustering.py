"""Spectral clustering pipeline: Laplacian eigenproblem, k-means, orchestration.

The pipeline follows the classic recipe: degree matrix D from the row sums
of the similarity matrix S, Laplacian P = D - S, the generalized problem
P u = lambda D u solved through the symmetric reduction
D^{-1/2} P D^{-1/2} v = lambda v with u = D^{-1/2} v, then k-means on the
rows of the eigenvector matrix.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from . import kernel, nystrom
from .errors import DegenerateClustering, RankDeficientLandmarks, SolverFailure
from .kernel import FeatureMatrix, KernelSpec, SimilarityMatrix
from .seeds import derive_seed


@dataclass
class SpectralEmbedding:
    """Eigenvector coordinates used for clustering."""

    vectors: np.ndarray     # (n, k)
    eigenvalues: np.ndarray  # (k,), in the order they were requested
    source: str             # exact | approximate


@dataclass
class ClusterAssignment:
    """Per-point cluster labels plus run metadata."""

    labels: np.ndarray
    k: int
    inertia: float
    seed: int
    pipeline: str

    def __post_init__(self):
        self.labels = np.asarray(self.labels, dtype=np.intp)
        if self.labels.min() < 0 or self.labels.max() >= self.k:
            raise ValueError("labels outside 0..k-1")


@dataclass
class PipelineDetails:
    """Extras returned by spectral_cluster(return_details=True)."""

    embedding: SpectralEmbedding
    landmarks: object | None = None          # LandmarkSet for single-expert runs
    switch_branch: str = ""                  # cms3 | ms3 for cms3-tuned, else ""
    expert_landmarks: list | None = None     # per-expert LandmarkSets for ensembles
    expert_weights: np.ndarray | None = None


def laplacian_pair(S) -> tuple[np.ndarray, np.ndarray]:
    """Laplacian P = D - S and the degree vector D_ii = sum_j S_ij."""
    values = S.values if isinstance(S, SimilarityMatrix) else np.asarray(S, dtype=np.float64)
    if values.ndim != 2 or values.shape[0] != values.shape[1]:
        raise ValueError("similarity matrix must be square")
    degrees = values.sum(axis=1)
    P = np.diag(degrees) - values
    return P, degrees


def generalized_eigen(P: np.ndarray, degrees: np.ndarray, k: int,
                      order: str = "ascending") -> SpectralEmbedding:
    """Solve P u = lambda D u for k eigenpairs via the symmetric reduction.

    Zero or near-zero degrees are floored at 1e-12 * max(D) (1e-12 absolute
    when all degrees vanish) before inversion. 'ascending' returns the
    smallest eigenvalues first (spectral clustering); 'descending' the
    largest (eigenspectrum diagnostics).
    """
    if order not in ("ascending", "descending"):
        raise ValueError(f"unknown order {order!r}")
    degrees = np.asarray(degrees, dtype=np.float64).ravel()
    n = degrees.size
    if not 1 <= k <= n:
        raise ValueError(f"k={k} outside 1..{n}")
    dmax = degrees.max() if n else 0.0
    eps = max(1e-12 * dmax, 1e-300) if dmax > 0 else 1e-12
    scale = 1.0 / np.sqrt(np.maximum(degrees, eps))
    M = scale[:, None] * P * scale[None, :]
    M = 0.5 * (M + M.T)
    try:
        w, V = scipy.linalg.eigh(M)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - eigh rarely fails
        raise SolverFailure(str(exc)) from exc
    if order == "descending":
        w = w[::-1]
        V = V[:, ::-1]
    U = scale[:, None] * V[:, :k]
    return SpectralEmbedding(U, w[:k].copy(), "exact")


def lloyd(points: np.ndarray, k: int, seed: int, max_iter: int = 300,
          tol: float = 1e-6, history: list | None = None):
    """Lloyd iterations with k-means++ seeding.

    Returns (labels, centroids, inertia). Empty clusters are re-seeded with
    the point farthest from its assigned centroid; ties break to the lowest
    index. Pass a list as `history` to record the objective per iteration.
    """
    X = np.asarray(points, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError("points must be 2-d")
    n = X.shape[0]
    if not 1 <= k <= n:
        raise ValueError(f"k={k} outside 1..{n}")
    if not np.isfinite(X).all():
        raise ValueError("points contain non-finite entries")
    if np.unique(X, axis=0).shape[0] < k:
        raise DegenerateClustering(f"fewer than {k} distinct points")

    rng = np.random.default_rng(seed)
    C = _kmeans_pp(X, k, rng)
    for _ in range(max_iter):
        labels = _assign(X, C)
        if history is not None:
            history.append(_inertia(X, C, labels))
        newC = C.copy()
        for j in range(k):
            members = labels == j
            if members.any():
                newC[j] = X[members].mean(axis=0)
        empty = np.flatnonzero(np.bincount(labels, minlength=k) == 0)
        if empty.size:
            _reseed_empty(X, newC, labels, empty)
        shift = np.sqrt(((newC - C) ** 2).sum(axis=1)).max()
        C = newC
        if shift < tol:
            break
    labels = _assign(X, C)
    labels, C = _fix_empty_final(X, labels, C)
    inertia = _inertia(X, C, labels)
    if history is not None:
        history.append(inertia)
    return labels, C, inertia


def kmeans(points: np.ndarray, k: int, seed: int, max_iter: int = 300,
           tol: float = 1e-6, history: list | None = None) -> ClusterAssignment:
    """k-means clustering of raw coordinates; deterministic given seed."""
    labels, _, inertia = lloyd(points, k, seed, max_iter=max_iter, tol=tol, history=history)
    return ClusterAssignment(labels, k, float(inertia), seed, "kmeans")


def spectral_cluster(data: FeatureMatrix, k: int, mode: str = "exact",
                     sampler=None, cfg=None, spec: KernelSpec | None = None,
                     seed: int = 0, row_normalize: bool = True,
                     embedding: str = "laplacian", ensemble_p: int | None = None,
                     kmeans_restarts: int = 5, return_details: bool = False):
    """Cluster a dataset with exact or landmark-approximated spectral clustering.

    Parameters
    ----------
    data : FeatureMatrix
    k : int
        Number of clusters (and eigenvectors used), >= 2.
    mode : 'exact' | 'nystrom'
        'exact' builds the full similarity matrix; 'nystrom' approximates
        the embedding from a landmark sample.
    sampler : str or callable, required for mode='nystrom'
        A sampler tag ('rs', 'ks', 'ss', 'ms3', 'cms3', 'cms3-tuned') or a
        callable (data, cfg, spec) -> LandmarkSet.
    cfg : SamplerConfig, required for mode='nystrom'
        Carries the landmark count and the sampler seed.
    spec : KernelSpec, default cosine
    seed : int
        Seeds k-means (and the per-expert derivation for ensembles).
    row_normalize : bool
        L2-normalize embedding rows before k-means (default on).
    embedding : 'laplacian' | 'affinity'
        'laplacian' composes the landmark model with the degree
        normalization of the Laplacian pipeline; 'affinity' clusters the
        extended eigenvectors of the raw similarity matrix.
    ensemble_p : int, optional
        Run the sampler p times and average sign-aligned embeddings.
    kmeans_restarts : int
        k-means inits (seeds derived from `seed`); the labeling with the
        lowest inertia wins. Deterministic.

    Returns
    -------
    ClusterAssignment, or (ClusterAssignment, PipelineDetails) when
    return_details is True.
    """
    if spec is None:
        spec = KernelSpec()
    if k < 2:
        raise ValueError("k must be at least 2")
    if mode not in ("exact", "nystrom"):
        raise ValueError(f"unknown mode {mode!r}")
    if embedding not in ("laplacian", "affinity"):
        raise ValueError(f"unknown embedding {embedding!r}")

    details = None
    if mode == "exact":
        S = kernel.full_similarity(data, spec)
        P, degrees = laplacian_pair(S)
        emb = generalized_eigen(P, degrees, k, "ascending")
        details = PipelineDetails(embedding=emb)
        pipeline = "exact"
    else:
        if sampler is None or cfg is None:
            raise ValueError("mode='nystrom' requires a sampler and a SamplerConfig")
        sampler_fn = _resolve_sampler(sampler)
        if ensemble_p is not None:
            emb, details = _ensemble_embedding(data, sampler_fn, cfg, k, spec, ensemble_p)
            pipeline = f"nystrom/ensemble-{_sampler_tag(sampler)}"
        else:
            landmarks = sampler_fn(data, cfg, spec)
            Z, eigvals = _nystrom_embedding(data, landmarks, k, spec, embedding)
            emb = SpectralEmbedding(Z, eigvals, "approximate")
            details = PipelineDetails(embedding=emb, landmarks=landmarks,
                                      switch_branch=_branch_of(landmarks))
            pipeline = f"nystrom/{landmarks.sampler}"

    Z = emb.vectors
    if row_normalize:
        Z = _normalized_rows(Z)
    labels, inertia = _best_kmeans(Z, k, seed, kmeans_restarts)
    assignment = ClusterAssignment(labels, k, float(inertia), seed, pipeline)
    if return_details:
        return assignment, details
    return assignment


def _best_kmeans(X: np.ndarray, k: int, seed: int, restarts: int):
    """Lowest-inertia labeling over seeded k-means restarts; first win on ties."""
    if restarts < 1:
        raise ValueError("kmeans_restarts must be >= 1")
    best = None
    for t in range(restarts):
        run_seed = seed if restarts == 1 else derive_seed(seed, t)
        labels, _, inertia = lloyd(X, k, run_seed)
        if best is None or inertia < best[1]:
            best = (labels, inertia)
    return best


def _resolve_sampler(sampler):
    if callable(sampler):
        return sampler
    from .sampling import get_sampler

    return get_sampler(sampler)


def _sampler_tag(sampler) -> str:
    return sampler if isinstance(sampler, str) else getattr(sampler, "__name__", "custom")


def _branch_of(landmarks) -> str:
    tag = landmarks.sampler
    return tag.split("/", 1)[1] if "/" in tag else ""


def _nystrom_embedding(data: FeatureMatrix, landmarks, k: int, spec: KernelSpec,
                       embedding: str) -> tuple[np.ndarray, np.ndarray]:
    """Embedding rows for all n points from a landmark set.

    The laplacian route composes the rank-k similarity model with the
    degree normalization of the full pipeline: degrees are reconstructed
    from the model itself (diag of S~ 1, an O(nk) product), the normalized
    approximation D~^{-1/2} S~ D~^{-1/2} is eigendecomposed through a k x k
    rotation, and the resulting eigenvectors are mapped back to generalized
    eigenvectors via the D~^{-1/2} scaling. With landmarks covering the
    full dataset and rank(S) <= k this reproduces the exact pipeline.
    """
    model = nystrom.fit(data, landmarks, k, spec)
    U, vals = model.extended_eigvecs, model.landmark_eigvals
    if embedding == "affinity":
        return U, vals

    degrees = U @ (vals * (U.T @ np.ones(data.n)))
    dmax = degrees.max()
    eps = max(1e-12 * dmax, 1e-300) if dmax > 0 else 1e-12
    scale = 1.0 / np.sqrt(np.maximum(degrees, eps))
    W = scale[:, None] * U
    root = np.sqrt(vals)
    C = root[:, None] * (W.T @ W) * root[None, :]
    C = 0.5 * (C + C.T)
    theta, R = scipy.linalg.eigh(C)
    theta = np.maximum(theta[::-1], 1e-30)
    R = R[:, ::-1]
    # columns of V = W diag(root) R theta^{-1/2} are the orthonormal
    # eigenvectors of the normalized approximation, eigenvalues theta
    V = (W @ (root[:, None] * R)) / np.sqrt(theta)[None, :]
    Z = scale[:, None] * V
    # normalized-matrix eigenvalue theta maps to generalized eigenvalue 1 - theta
    return Z, 1.0 - theta


def _ensemble_embedding(data: FeatureMatrix, sampler_fn, cfg, k: int,
                        spec: KernelSpec, p: int):
    """Weighted mean of sign-aligned per-expert embeddings."""
    if p < 1:
        raise ValueError("ensemble_p must be >= 1")
    from dataclasses import replace

    experts = []
    embeddings = []
    for i in range(p):
        cfg_i = replace(cfg, seed=derive_seed(cfg.seed, i))
        landmarks = sampler_fn(data, cfg_i, spec)
        try:
            Z, _ = _nystrom_embedding(data, landmarks, k, spec, "laplacian")
        except RankDeficientLandmarks:
            import warnings

            warnings.warn(f"ensemble expert {i} dropped: rank-deficient landmarks")
            continue
        experts.append(landmarks)
        embeddings.append(nystrom.align_column_signs(Z))
    if not embeddings:
        raise RankDeficientLandmarks("all ensemble experts were rank deficient")
    weights = np.full(len(embeddings), 1.0 / len(embeddings))
    Z = sum(w * E for w, E in zip(weights, embeddings))
    emb = SpectralEmbedding(Z, np.full(k, np.nan), "approximate")
    details = PipelineDetails(embedding=emb, expert_landmarks=experts,
                              expert_weights=weights)
    return emb, details


def _normalized_rows(Z: np.ndarray) -> np.ndarray:
    norms = np.sqrt(np.einsum("ij,ij->i", Z, Z))
    safe = np.where(norms > 0.0, norms, 1.0)
    return Z / safe[:, None]


def _kmeans_pp(X: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = X.shape[0]
    chosen = np.empty(k, dtype=np.intp)
    chosen[0] = rng.integers(n)
    d2 = _sq_dist_to(X, X[chosen[0]])
    for i in range(1, k):
        total = d2.sum()
        if total > 0.0:
            idx = int(rng.choice(n, p=d2 / total))
        else:
            candidates = np.setdiff1d(np.arange(n), chosen[:i])
            idx = int(candidates[rng.integers(candidates.size)])
        chosen[i] = idx
        d2 = np.minimum(d2, _sq_dist_to(X, X[idx]))
    return X[chosen].copy()


def _sq_dist_to(X: np.ndarray, c: np.ndarray) -> np.ndarray:
    diff = X - c
    return np.einsum("ij,ij->i", diff, diff)


def _assign(X: np.ndarray, C: np.ndarray) -> np.ndarray:
    d2 = (
        np.einsum("ij,ij->i", X, X)[:, None]
        + np.einsum("ij,ij->i", C, C)[None, :]
        - 2.0 * X @ C.T
    )
    return np.argmin(d2, axis=1)


def _inertia(X: np.ndarray, C: np.ndarray, labels: np.ndarray) -> float:
    diff = X - C[labels]
    return float(np.einsum("ij,ij->", diff, diff))


def _reseed_empty(X, C, labels, empty) -> None:
    """Move each empty cluster's centroid onto the point farthest from its centroid."""
    d2 = np.einsum("ij,ij->i", X - C[labels], X - C[labels])
    for j in empty:
        p = int(np.argmax(d2))
        C[j] = X[p]
        d2[p] = -np.inf


def _fix_empty_final(X, labels, C):
    """Guarantee every cluster is nonempty in the final labeling."""
    k = C.shape[0]
    counts = np.bincount(labels, minlength=k)
    for j in np.flatnonzero(counts == 0):
        d2 = np.einsum("ij,ij->i", X - C[labels], X - C[labels])
        d2[counts[labels] <= 1] = -np.inf
        p = int(np.argmax(d2))
        if not np.isfinite(d2[p]):
            continue
        counts[labels[p]] -= 1
        labels[p] = j
        counts[j] = 1
        C[j] = X[p]
    return labels, C
