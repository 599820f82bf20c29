"""Landmark selection strategies.

Implements uniform random sampling (rs), k-means representative sampling
(ks), greedy minimum-similarity sampling (ss), greedy minimum sum of
squared similarities (ms3), its centroid variant (cms3: ms3 pre-sample of
r points clustered down to m virtual centroids) and the eigenspectrum-
switched combination (cms3-tuned), which picks cms3 on flat spectra and
ms3 on decaying ones.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace

import numpy as np

from . import clustering, kernel
from .errors import EmptyCandidatePool, InvalidLandmarkCount
from .kernel import FeatureMatrix, KernelSpec

log = logging.getLogger(__name__)


@dataclass
class LandmarkSet:
    """m selected landmarks: dataset indices or virtual centroid coordinates."""

    kind: str                            # indices | virtual
    indices: np.ndarray | None = None
    coordinates: np.ndarray | None = None
    sampler: str = ""
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("indices", "virtual"):
            raise ValueError(f"unknown landmark kind {self.kind!r}")
        if self.kind == "indices":
            if self.indices is None:
                raise ValueError("indices-kind landmarks need indices")
            self.indices = np.asarray(self.indices, dtype=np.intp)
            if np.unique(self.indices).size != self.indices.size:
                raise ValueError("landmark indices must be distinct")
        else:
            if self.coordinates is None:
                raise ValueError("virtual landmarks need coordinates")
            self.coordinates = np.asarray(self.coordinates, dtype=np.float64)
            if self.coordinates.ndim != 2 or not np.isfinite(self.coordinates).all():
                raise ValueError("coordinates must be a finite 2-d array")

    @property
    def m(self) -> int:
        if self.kind == "indices":
            return int(self.indices.size)
        return int(self.coordinates.shape[0])

    def features(self, data: FeatureMatrix) -> np.ndarray:
        """Landmark coordinates, resolving indices against the dataset."""
        if self.kind == "indices":
            return data.points[self.indices]
        return self.coordinates


@dataclass(frozen=True)
class SamplerConfig:
    """Shared sampler parameters.

    r (the MS3 pre-sample size for cms3) defaults to min(2m, n); the switch
    subsample fraction defaults to gamma, matching how the tuned algorithm
    draws its diagnostic subsample.
    """

    m: int
    r: int | None = None
    gamma: float = 0.1
    sm_fraction: float | None = None
    seed: int = 0
    strict_alg1_bound: bool = False

    def __post_init__(self):
        if self.m < 2:
            raise InvalidLandmarkCount(f"need at least 2 landmarks, got m={self.m}")
        if not 0.0 < self.gamma <= 1.0:
            raise ValueError(f"gamma must be in (0, 1], got {self.gamma}")
        if self.sm_fraction is not None and not 0.0 < self.sm_fraction <= 1.0:
            raise ValueError(f"sm_fraction must be in (0, 1], got {self.sm_fraction}")
        if self.r is not None and self.r < self.m:
            raise InvalidLandmarkCount(f"r={self.r} must be at least m={self.m}")

    def resolved_r(self, n: int) -> int:
        r = self.r if self.r is not None else min(2 * self.m, n)
        if not self.m <= r <= n:
            raise InvalidLandmarkCount(f"r={r} outside m={self.m}..n={n}")
        return r


@dataclass
class SpectrumDiagnostic:
    """Eigenspectrum-shape probe behind the cms3/ms3 switch.

    eigenvalues holds the subsample's generalized Laplacian spectrum,
    descending. lambda2 and tail_term are the printed head/tail quantities
    (second-largest eigenvalue and |sm| * smallest); the decision itself
    compares switch_term = |sm| * (smallest nontrivial eigenvalue, i.e. the
    one above the structural zero) against switch_head (the largest):
    a flat spectrum has no gap at the bottom and selects cms3, a decaying
    one (pronounced cluster structure) selects ms3.
    """

    eigenvalues: np.ndarray   # descending, length |sm|
    lambda2: float
    tail_term: float          # |sm| * lambda_{|sm|}
    use_cms3: bool
    switch_term: float = 0.0  # |sm| * lambda_{|sm|-1}
    switch_head: float = 0.0  # lambda_1

    def __post_init__(self):
        self.eigenvalues = np.asarray(self.eigenvalues, dtype=np.float64)
        if np.any(self.eigenvalues[:-1] < self.eigenvalues[1:]):
            raise ValueError("eigenvalues must be sorted descending")
        if self.use_cms3 != (self.switch_term >= self.switch_head):
            raise ValueError("use_cms3 inconsistent with switch_term >= switch_head")


def random_sample(data: FeatureMatrix, m: int, seed: int) -> LandmarkSet:
    """m distinct indices drawn uniformly without replacement."""
    _validate_m(m, data.n)
    rng = np.random.default_rng(seed)
    idx = rng.choice(data.n, size=m, replace=False)
    return LandmarkSet("indices", indices=idx, sampler="rs", seed=seed)


def kmeans_sample(data: FeatureMatrix, m: int, seed: int) -> LandmarkSet:
    """The data point nearest each of m k-means centroids.

    Ties break to the lowest index; if two centroids share a nearest point
    the later centroid takes the next-nearest unused point.
    """
    _validate_m(m, data.n)
    X = data.points
    labels, _, _ = clustering.lloyd(X, m, seed)
    used = np.zeros(data.n, dtype=bool)
    chosen = np.empty(m, dtype=np.intp)
    for j in range(m):
        centroid = X[labels == j].mean(axis=0)
        diff = X - centroid
        d2 = np.einsum("ij,ij->i", diff, diff)
        for p in np.argsort(d2, kind="stable"):
            if not used[p]:
                chosen[j] = p
                used[p] = True
                break
    return LandmarkSet("indices", indices=chosen, sampler="ks", seed=seed)


def min_similarity_sample(data: FeatureMatrix, m: int, gamma: float,
                          spec: KernelSpec, seed: int) -> LandmarkSet:
    """Greedy argmin of the plain similarity sum over a random candidate pool."""
    return _greedy_min_sum(data, m, gamma, spec, seed, squared=False,
                           strict_bound=False, tag="ss")


def ms3_sample(data: FeatureMatrix, m: int, gamma: float, spec: KernelSpec,
               seed: int, strict_alg1_bound: bool = False) -> LandmarkSet:
    """Greedy minimum sum of squared similarities.

    Two seed landmarks are drawn uniformly; each following landmark is the
    candidate-pool point minimizing sum_j sim^2(x, landmark_j) over all
    previously selected landmarks (the printed summation bound that skips
    the most recent landmark is available as strict_alg1_bound=True). Ties
    break to the lowest point index.
    """
    return _greedy_min_sum(data, m, gamma, spec, seed, squared=True,
                           strict_bound=strict_alg1_bound, tag="ms3")


CENTROID_KMEANS_RESTARTS = 5


def cms3_sample(data: FeatureMatrix, cfg: SamplerConfig, spec: KernelSpec) -> LandmarkSet:
    """MS3 pre-sample of r points, k-means down to m virtual centroids.

    The internal k-means takes the lowest-inertia run over a few inits
    whose seeds derive from the sampler's seed, so centroid quality does
    not hinge on a single initialization. Deterministic.
    """
    from .seeds import derive_seed

    r = cfg.resolved_r(data.n)
    base = ms3_sample(data, r, cfg.gamma, spec, cfg.seed, cfg.strict_alg1_bound)
    Xr = data.points[base.indices]
    distinct = np.unique(Xr, axis=0).shape[0]
    k_eff = min(cfg.m, distinct)
    if k_eff < cfg.m:
        log.warning("MS3 pre-sample holds only %d distinct rows; padding centroids to m=%d",
                    distinct, cfg.m)
    best = None
    for t in range(CENTROID_KMEANS_RESTARTS):
        labels, _, inertia = clustering.lloyd(Xr, k_eff, derive_seed(cfg.seed, t))
        if best is None or inertia < best[1]:
            best = (labels, inertia)
    labels = best[0]
    coords = np.empty((k_eff, data.d))
    for j in range(k_eff):
        coords[j] = Xr[labels == j].mean(axis=0)
    if k_eff < cfg.m:
        coords = coords[np.resize(np.arange(k_eff), cfg.m)]
    return LandmarkSet("virtual", coordinates=coords, sampler="cms3", seed=cfg.seed)


def spectrum_switch(data: FeatureMatrix, cfg: SamplerConfig, spec: KernelSpec) -> SpectrumDiagnostic:
    """Probe the eigenspectrum shape on a random subsample.

    Solves the generalized Laplacian problem on the subsample's similarity
    matrix and sorts the eigenvalues descending. The generalized spectrum
    always contains a structural zero (the constant vector), so the printed
    tail comparison against the literal smallest eigenvalue would never
    fire on connected data; the decision instead scales the smallest
    nontrivial eigenvalue by |sm| and compares it against the largest.
    A flat spectrum (no gap above the structural zero, no pronounced
    cluster structure) selects cms3; a decaying spectrum selects ms3.
    """
    n = data.n
    fraction = cfg.sm_fraction if cfg.sm_fraction is not None else cfg.gamma
    size = max(3, math.ceil(fraction * n))
    if size > n:
        raise ValueError(f"switch subsample size {size} exceeds n={n}")
    rng = np.random.default_rng(cfg.seed)
    ids = np.sort(rng.choice(n, size=size, replace=False))
    S = kernel.similarity_block(ids, ids, data, spec).values
    P, degrees = clustering.laplacian_pair(S)
    emb = clustering.generalized_eigen(P, degrees, size, order="descending")
    eigenvalues = emb.eigenvalues
    lambda2 = float(eigenvalues[1])
    tail_term = float(size * eigenvalues[-1])
    switch_term = float(size * eigenvalues[-2])
    switch_head = float(eigenvalues[0])
    if log.isEnabledFor(logging.DEBUG):
        # companion flatness check on the similarity spectrum itself
        sim_ev = np.linalg.eigvalsh(S)[::-1]
        log.debug("similarity-spectrum check: lambda2=%g, |sm|*lambda_min=%g; "
                  "literal Laplacian check: lambda2=%g, tail=%g",
                  sim_ev[1], size * sim_ev[-1], lambda2, tail_term)
    return SpectrumDiagnostic(eigenvalues, lambda2, tail_term,
                              bool(switch_term >= switch_head),
                              switch_term, switch_head)


def cms3_tuned_sample(data: FeatureMatrix, cfg: SamplerConfig, spec: KernelSpec) -> LandmarkSet:
    """cms3 when the spectrum probe says flat, ms3 otherwise.

    The chosen branch is recorded in the sampler tag
    ('cms3-tuned/cms3' or 'cms3-tuned/ms3'); the selected landmarks are
    bit-identical to running the branch sampler directly with the same seed.
    """
    diagnostic = spectrum_switch(data, cfg, spec)
    if diagnostic.use_cms3:
        chosen = cms3_sample(data, cfg, spec)
        tag = "cms3-tuned/cms3"
    else:
        chosen = ms3_sample(data, cfg.m, cfg.gamma, spec, cfg.seed, cfg.strict_alg1_bound)
        tag = "cms3-tuned/ms3"
    return replace(chosen, sampler=tag)


def _validate_m(m: int, n: int) -> None:
    if not 2 <= m <= n:
        raise InvalidLandmarkCount(f"landmark count m={m} outside 2..{n}")


def _greedy_min_sum(data: FeatureMatrix, m: int, gamma: float, spec: KernelSpec,
                    seed: int, squared: bool, strict_bound: bool, tag: str) -> LandmarkSet:
    _validate_m(m, data.n)
    if not 0.0 < gamma <= 1.0:
        raise ValueError(f"gamma must be in (0, 1], got {gamma}")
    rng = np.random.default_rng(seed)
    seeds = rng.choice(data.n, size=2, replace=False)
    selected = list(seeds)
    taken = np.zeros(data.n, dtype=bool)
    taken[seeds] = True
    while len(selected) < m:
        remaining = np.flatnonzero(~taken)
        if remaining.size == 0:  # unreachable given m <= n, asserted defensively
            raise EmptyCandidatePool("no unselected points left")
        t = max(1, math.ceil(gamma * remaining.size))
        pool = rng.choice(remaining, size=t, replace=False)
        reference = selected[:-1] if strict_bound else selected
        sims = kernel.similarity_block(pool, np.asarray(reference, dtype=np.intp),
                                       data, spec).values
        scores = (sims * sims if squared else sims).sum(axis=1)
        best = np.lexsort((pool, scores))[0]
        pick = int(pool[best])
        selected.append(pick)
        taken[pick] = True
    return LandmarkSet("indices", indices=np.asarray(selected, dtype=np.intp),
                       sampler=tag, seed=seed)


def _rs(data, cfg, spec):
    return random_sample(data, cfg.m, cfg.seed)


def _ks(data, cfg, spec):
    return kmeans_sample(data, cfg.m, cfg.seed)


def _ss(data, cfg, spec):
    return min_similarity_sample(data, cfg.m, cfg.gamma, spec, cfg.seed)


def _ms3(data, cfg, spec):
    return ms3_sample(data, cfg.m, cfg.gamma, spec, cfg.seed, cfg.strict_alg1_bound)


SAMPLERS = {
    "rs": _rs,
    "ks": _ks,
    "ss": _ss,
    "ms3": _ms3,
    "cms3": cms3_sample,
    "cms3-tuned": cms3_tuned_sample,
}


def get_sampler(name: str):
    """Look up a sampler callable (data, cfg, spec) -> LandmarkSet by tag."""
    try:
        return SAMPLERS[name]
    except KeyError:
        raise ValueError(f"unknown sampler {name!r}; expected one of {sorted(SAMPLERS)}") from None
