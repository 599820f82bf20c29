"""Landmark-based low-rank approximation of similarity matrices.

Given landmark points L, the landmark block A = sim(L, L) is
eigendecomposed as A = U_A Lambda_A U_A^T and eigenvectors are extended to
the remaining points through B U_A Lambda_A^{-1}, where B holds the
similarities between non-landmark points and landmarks. Reassembling
S~ = U~ Lambda_A U~^T gives the low-rank approximation whose Frobenius
distance to S measures sampling quality.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.linalg

from . import kernel
from .errors import MemoryBudgetExceeded, RankDeficientLandmarks
from .kernel import FeatureMatrix, KernelSpec, SimilarityMatrix
from .seeds import derive_seed

log = logging.getLogger(__name__)

MODEL_FORMAT = "nyspec-model-v1"


@dataclass
class NystromModel:
    """Landmark-block eigenpairs plus the eigenvectors extended to all points."""

    landmark_eigvecs: np.ndarray   # U_A, (m, k), orthonormal columns
    landmark_eigvals: np.ndarray   # (k,), descending, all above the rank cutoff
    extended_eigvecs: np.ndarray   # (n, k), rows in original point order
    landmarks: object              # LandmarkSet
    rank: int
    spec: KernelSpec


@dataclass
class EnsembleNystrom:
    """p independently sampled models combined with mixture weights."""

    models: list
    weights: np.ndarray
    seed: int

    def reconstruct(self) -> SimilarityMatrix:
        """Convex combination of the expert reconstructions."""
        acc = None
        for w, model in zip(self.weights, self.models):
            part = w * reconstruct(model).values
            acc = part if acc is None else acc + part
        n = acc.shape[0]
        ids = np.arange(n)
        return SimilarityMatrix(acc, ids, ids)


def rank_cutoff(eigvals: np.ndarray) -> float:
    """Eigenvalues at or below max(1e-10, 1e-12 * lambda_max) are dropped."""
    lam_max = float(eigvals[0]) if eigvals.size else 0.0
    return max(1e-10, 1e-12 * lam_max)


def top_eigenpairs(M: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Top-k eigenpairs of a symmetric matrix, descending, above the rank cutoff."""
    vals, vecs = scipy.linalg.eigh(M)
    vals = vals[::-1]
    vecs = vecs[:, ::-1]
    available = int((vals > rank_cutoff(vals)).sum())
    if available < k:
        raise RankDeficientLandmarks(
            f"landmark block supports rank {available}, requested {k}; retry with smaller k"
        )
    return vals[:k].copy(), vecs[:, :k].copy()


def landmark_blocks(data: FeatureMatrix, landmarks, spec: KernelSpec):
    """Similarity blocks (A, B) for a landmark set.

    Returns (A, B, idx, rest): for indices-kind landmarks, idx are the
    landmark ids, rest the remaining ids (ascending) and B = sim(rest, L);
    for virtual landmarks idx/rest are None and B = sim(all points, L).
    """
    if landmarks.kind == "indices":
        idx = np.asarray(landmarks.indices, dtype=np.intp)
        A = kernel.similarity_block(idx, idx, data, spec).values
        rest = np.setdiff1d(np.arange(data.n), idx)
        if rest.size:
            B = kernel.similarity_block(rest, idx, data, spec).values
        else:
            B = np.zeros((0, idx.size))
        return A, B, idx, rest
    coords = np.asarray(landmarks.coordinates, dtype=np.float64)
    m = coords.shape[0]
    if data.n * m > kernel.memory_budget():
        raise MemoryBudgetExceeded(
            f"block of {data.n}x{m} entries exceeds budget {kernel.memory_budget()}"
        )
    A = kernel.gram(coords, coords, spec)
    np.fill_diagonal(A, 1.0)
    B = kernel.gram(data.points, coords, spec)
    return A, B, None, None


def fit(data: FeatureMatrix, landmarks, k: int, spec: KernelSpec) -> NystromModel:
    """Fit a rank-k approximation of the similarity matrix from landmarks.

    For indices-kind landmarks the rows of the extended eigenvector matrix
    at landmark positions are the landmark-block eigenvectors themselves;
    all other rows come from the extension formula. Virtual landmarks
    (synthesized centroids) extend every row.

    Raises RankDeficientLandmarks when fewer than k eigenvalues of the
    landmark block exceed the rank cutoff.
    """
    m = landmarks.m
    if not 1 <= k <= m:
        raise ValueError(f"rank k={k} outside 1..{m}")
    A, B, idx, rest = landmark_blocks(data, landmarks, spec)
    vals, vecs = top_eigenpairs(A, k)
    ext = (B @ vecs) / vals[None, :]
    if idx is not None:
        U = np.empty((data.n, k))
        U[idx] = vecs
        if rest.size:
            U[rest] = ext
    else:
        U = ext
    return NystromModel(vecs, vals, U, landmarks, k, spec)


def reconstruct(model: NystromModel) -> SimilarityMatrix:
    """Dense approximation S~ = U~ diag(Lambda_A) U~^T; exactly symmetric."""
    U = model.extended_eigvecs
    n = U.shape[0]
    if n * n > kernel.memory_budget():
        raise MemoryBudgetExceeded(f"{n}x{n} reconstruction exceeds the memory budget")
    R = (U * model.landmark_eigvals) @ U.T
    return SimilarityMatrix(0.5 * (R + R.T), np.arange(n), np.arange(n))


def frobenius_error(data: FeatureMatrix, model: NystromModel, spec: KernelSpec,
                    sample_pairs: int | None = None, seed: int = 0) -> float:
    """Frobenius distance between the similarity matrix and its approximation.

    Exact by default (requires the full matrix within the memory budget).
    With sample_pairs=q, returns sqrt of an unbiased estimate of the squared
    norm from q uniformly sampled entry pairs.
    """
    n = data.n
    U = model.extended_eigvecs
    if sample_pairs is None:
        S = kernel.full_similarity(data, spec).values
        S_hat = reconstruct(model).values
        return float(np.linalg.norm(S - S_hat))
    if sample_pairs < 1:
        raise ValueError("sample_pairs must be positive")
    rng = np.random.default_rng(seed)
    ii = rng.integers(0, n, size=sample_pairs)
    jj = rng.integers(0, n, size=sample_pairs)
    s = kernel.pairwise_values(data.points[ii], data.points[jj], spec)
    s[ii == jj] = 1.0
    s_hat = np.einsum("ij,ij->i", U[ii] * model.landmark_eigvals, U[jj])
    estimate = n * n * float(np.mean((s - s_hat) ** 2))
    log.info("frobenius error estimated from q=%d sampled entry pairs", sample_pairs)
    return float(np.sqrt(max(estimate, 0.0)))


def ensemble_fit(data: FeatureMatrix, sampler, cfg, p: int, k: int,
                 spec: KernelSpec, seed: int) -> EnsembleNystrom:
    """Fit p experts with derived seeds and combine them with uniform weights.

    Experts failing with RankDeficientLandmarks are dropped (with a logged
    warning) and the remaining weights renormalized.
    """
    if p < 1:
        raise ValueError("expert count p must be >= 1")
    if not callable(sampler):
        from .sampling import get_sampler

        sampler = get_sampler(sampler)
    from dataclasses import replace

    models = []
    for i in range(p):
        cfg_i = replace(cfg, seed=derive_seed(seed, i))
        landmarks = sampler(data, cfg_i, spec)
        try:
            models.append(fit(data, landmarks, k, spec))
        except RankDeficientLandmarks as exc:
            log.warning("ensemble expert %d dropped: %s", i, exc)
    if not models:
        raise RankDeficientLandmarks("all ensemble experts were rank deficient")
    weights = np.full(len(models), 1.0 / len(models))
    return EnsembleNystrom(models, weights, seed)


def ensemble_error(data: FeatureMatrix, ensemble: EnsembleNystrom,
                   spec: KernelSpec) -> float:
    """Exact Frobenius error of the ensemble reconstruction (desk scale)."""
    S = kernel.full_similarity(data, spec).values
    return float(np.linalg.norm(S - ensemble.reconstruct().values))


def align_column_signs(Z: np.ndarray) -> np.ndarray:
    """Flip eigenvector columns so each column's largest-magnitude entry is positive."""
    Z = Z.copy()
    for j in range(Z.shape[1]):
        i = int(np.argmax(np.abs(Z[:, j])))
        if Z[i, j] < 0:
            Z[:, j] = -Z[:, j]
    return Z


def save_model(model: NystromModel, path) -> Path:
    """Serialize a model to a .npz archive (format tag nyspec-model-v1).

    Layout: format, rank, kernel_kind, bandwidth, zero_vector_policy,
    U_A, eigvals, U_ext, landmark_kind, sampler, seed, and either
    landmark_indices or landmark_coords.
    """
    path = Path(path)
    landmarks = model.landmarks
    arrays = {
        "format": np.array(MODEL_FORMAT),
        "rank": np.array(model.rank),
        "kernel_kind": np.array(model.spec.kind),
        "bandwidth": np.array(model.spec.bandwidth),
        "zero_vector_policy": np.array(model.spec.zero_vector_policy),
        "U_A": model.landmark_eigvecs,
        "eigvals": model.landmark_eigvals,
        "U_ext": model.extended_eigvecs,
        "landmark_kind": np.array(landmarks.kind),
        "sampler": np.array(landmarks.sampler),
        "seed": np.array(landmarks.seed),
    }
    if landmarks.kind == "indices":
        arrays["landmark_indices"] = np.asarray(landmarks.indices)
    else:
        arrays["landmark_coords"] = np.asarray(landmarks.coordinates)
    np.savez(path, **arrays)
    return path if path.suffix == ".npz" else path.with_name(path.name + ".npz")


def load_model(path) -> NystromModel:
    """Load a model written by save_model."""
    from .sampling import LandmarkSet

    with np.load(path, allow_pickle=False) as archive:
        tag = str(archive["format"])
        if tag != MODEL_FORMAT:
            raise ValueError(f"unsupported model format {tag!r}")
        spec = KernelSpec(
            kind=str(archive["kernel_kind"]),
            bandwidth=float(archive["bandwidth"]),
            zero_vector_policy=str(archive["zero_vector_policy"]),
        )
        kind = str(archive["landmark_kind"])
        landmarks = LandmarkSet(
            kind=kind,
            indices=archive["landmark_indices"] if kind == "indices" else None,
            coordinates=archive["landmark_coords"] if kind == "virtual" else None,
            sampler=str(archive["sampler"]),
            seed=int(archive["seed"]),
        )
        return NystromModel(
            landmark_eigvecs=archive["U_A"],
            landmark_eigvals=archive["eigvals"],
            extended_eigvecs=archive["U_ext"],
            landmarks=landmarks,
            rank=int(archive["rank"]),
            spec=spec,
        )
