"""Similarity kernels: scalar values, rectangular blocks, full matrices.

Blocks are evaluated entrywise through np.einsum rather than BLAS matmul:
einsum's per-entry reduction order does not depend on the block shape, so
any block is bit-identical to the corresponding slice of the full matrix.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateVector, MemoryBudgetExceeded

DEFAULT_MEMORY_BUDGET = 100_000_000

KERNEL_KINDS = ("cosine", "rbf")
ZERO_VECTOR_POLICIES = ("similarity_zero", "error")


def memory_budget() -> int:
    """Dense-entry cap for materialized blocks; NYSPEC_MEM_BUDGET overrides."""
    raw = os.environ.get("NYSPEC_MEM_BUDGET", "")
    return int(raw) if raw else DEFAULT_MEMORY_BUDGET


@dataclass(frozen=True)
class KernelSpec:
    """Similarity kernel selection.

    kind 'cosine' is the default used on benchmark data; 'rbf' with a
    bandwidth exists for synthetic data with controllable spectra.
    zero_vector_policy decides what cosine does with zero-norm vectors:
    'similarity_zero' maps (zero, nonzero) pairs to 0 and (zero, zero)
    pairs to 1 so diagonals stay 1; 'error' raises DegenerateVector.
    """

    kind: str = "cosine"
    bandwidth: float = 1.0
    zero_vector_policy: str = "similarity_zero"

    def __post_init__(self):
        if self.kind not in KERNEL_KINDS:
            raise ValueError(f"unknown kernel kind {self.kind!r}")
        if self.kind == "rbf" and not self.bandwidth > 0:
            raise ValueError("rbf bandwidth must be positive")
        if self.zero_vector_policy not in ZERO_VECTOR_POLICIES:
            raise ValueError(f"unknown zero_vector_policy {self.zero_vector_policy!r}")


@dataclass
class FeatureMatrix:
    """A dataset of n points with d features plus optional ground-truth labels."""

    points: np.ndarray
    labels: np.ndarray | None = None
    name: str = ""

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=np.float64)
        if self.points.ndim != 2:
            raise ValueError("points must be a 2-d array")
        n, d = self.points.shape
        if n < 2 or d < 1:
            raise ValueError(f"need at least 2 points and 1 feature, got {n}x{d}")
        if not np.isfinite(self.points).all():
            raise ValueError("points contain non-finite entries")
        if self.labels is not None:
            self.labels = np.asarray(self.labels)
            if self.labels.shape != (n,):
                raise ValueError("labels length must match point count")
            if not np.issubdtype(self.labels.dtype, np.integer):
                raise ValueError("labels must be integers")
            classes = np.unique(self.labels)
            if not np.array_equal(classes, np.arange(len(classes))):
                raise ValueError("labels must be contiguous integers 0..C-1")

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1]

    @property
    def n_classes(self) -> int | None:
        if self.labels is None:
            return None
        return int(self.labels.max()) + 1


@dataclass
class SimilarityMatrix:
    """A dense block of similarities, indexed by the point ids of its rows/cols."""

    values: np.ndarray
    row_index: np.ndarray
    col_index: np.ndarray

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape


def kernel_value(a, b, spec: KernelSpec) -> float:
    """Similarity of two points; symmetric and deterministic.

    cosine -> a.b / (|a||b|); rbf -> exp(-|a-b|^2 / (2 bandwidth^2)).
    """
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    if a.shape != b.shape:
        raise ValueError("points must have equal dimension")
    if spec.kind == "rbf":
        diff = a - b
        return float(np.exp(-(diff @ diff) / (2.0 * spec.bandwidth**2)))
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        if spec.zero_vector_policy == "error":
            raise DegenerateVector("cosine similarity of a zero-norm vector")
        return 1.0 if (na == 0.0 and nb == 0.0) else 0.0
    return float((a @ b) / (na * nb))


def gram(points_a: np.ndarray, points_b: np.ndarray, spec: KernelSpec) -> np.ndarray:
    """Pairwise kernel values between two coordinate matrices.

    Low-level routine with no point-id bookkeeping; see similarity_block for
    the id-aware variant. Entries are block-consistent: each value depends
    only on its own pair of rows.
    """
    A = np.asarray(points_a, dtype=np.float64)
    B = np.asarray(points_b, dtype=np.float64)
    if A.ndim != 2 or B.ndim != 2 or A.shape[1] != B.shape[1]:
        raise ValueError("coordinate matrices must be 2-d with equal feature count")
    if spec.kind == "rbf":
        return _rbf_gram(A, B, spec.bandwidth)
    return _cosine_gram(A, B, spec.zero_vector_policy)


def pairwise_values(points_a: np.ndarray, points_b: np.ndarray, spec: KernelSpec) -> np.ndarray:
    """Kernel values for matched row pairs: out[i] = k(points_a[i], points_b[i])."""
    A = np.asarray(points_a, dtype=np.float64)
    B = np.asarray(points_b, dtype=np.float64)
    if A.shape != B.shape:
        raise ValueError("matched pairs require equal shapes")
    if spec.kind == "rbf":
        diff = A - B
        sq = np.einsum("ij,ij->i", diff, diff)
        return np.exp(-sq / (2.0 * spec.bandwidth**2))
    Au, az = _unit_rows(A)
    Bu, bz = _unit_rows(B)
    if spec.zero_vector_policy == "error" and (az.any() or bz.any()):
        raise DegenerateVector("cosine similarity of a zero-norm vector")
    vals = np.einsum("ij,ij->i", Au, Bu)
    vals[az & bz] = 1.0
    return vals


def similarity_block(rows, cols, data: FeatureMatrix, spec: KernelSpec) -> SimilarityMatrix:
    """Similarity block between two id sets of a dataset.

    Entry (i, j) equals kernel_value(x_rows[i], x_cols[j], spec); entries
    whose row and column id coincide are set to exactly 1.0 (self-similarity
    of both kernels). Raises MemoryBudgetExceeded when |rows|*|cols| is over
    the entry cap.
    """
    rows = _validated_ids(rows, data.n, "rows")
    cols = _validated_ids(cols, data.n, "cols")
    if rows.size * cols.size > memory_budget():
        raise MemoryBudgetExceeded(
            f"block of {rows.size}x{cols.size} entries exceeds budget {memory_budget()}"
        )
    values = gram(data.points[rows], data.points[cols], spec)
    same = rows[:, None] == cols[None, :]
    if same.any():
        values[same] = 1.0
    return SimilarityMatrix(values, rows, cols)


def full_similarity(data: FeatureMatrix, spec: KernelSpec) -> SimilarityMatrix:
    """The full n x n similarity matrix (desk scale; budget-guarded)."""
    ids = np.arange(data.n)
    return similarity_block(ids, ids, data, spec)


def _validated_ids(ids, n: int, what: str) -> np.ndarray:
    ids = np.asarray(ids, dtype=np.intp).ravel()
    if ids.size == 0:
        raise ValueError(f"{what} must be nonempty")
    if ids.min() < 0 or ids.max() >= n:
        raise ValueError(f"{what} contain ids outside 0..{n - 1}")
    return ids


def _unit_rows(X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    norms = np.sqrt(np.einsum("ij,ij->i", X, X))
    zero = norms == 0.0
    safe = np.where(zero, 1.0, norms)
    return X / safe[:, None], zero


def _cosine_gram(A: np.ndarray, B: np.ndarray, policy: str) -> np.ndarray:
    Au, az = _unit_rows(A)
    Bu, bz = _unit_rows(B)
    if policy == "error" and (az.any() or bz.any()):
        raise DegenerateVector("cosine similarity of a zero-norm vector")
    G = np.einsum("ik,jk->ij", Au, Bu)
    if az.any() and bz.any():
        G[np.ix_(az, bz)] = 1.0
    return G


def _rbf_gram(A: np.ndarray, B: np.ndarray, bandwidth: float) -> np.ndarray:
    out = np.empty((A.shape[0], B.shape[0]))
    denom = 2.0 * bandwidth * bandwidth
    # broadcast in row chunks to bound the (chunk, |B|, d) temporary
    chunk = max(1, 4_000_000 // max(1, B.shape[0] * A.shape[1]))
    for start in range(0, A.shape[0], chunk):
        stop = min(start + chunk, A.shape[0])
        diff = A[start:stop, None, :] - B[None, :, :]
        sq = np.einsum("ijk,ijk->ij", diff, diff)
        out[start:stop] = np.exp(-sq / denom)
    return out
