"""Nystrom-based spectral clustering with eigenspectrum-aware landmark sampling."""

from . import clustering, errors, evaluation, kernel, nystrom, sampling, synthetic
from .clustering import (
    ClusterAssignment,
    SpectralEmbedding,
    generalized_eigen,
    kmeans,
    laplacian_pair,
    spectral_cluster,
)
from .evaluation import (
    AggregateRecord,
    ExperimentSpec,
    ResultRecord,
    clustering_accuracy,
    run_experiment,
)
from .kernel import (
    FeatureMatrix,
    KernelSpec,
    SimilarityMatrix,
    full_similarity,
    kernel_value,
    similarity_block,
)
from .sampling import (
    LandmarkSet,
    SamplerConfig,
    SpectrumDiagnostic,
    cms3_sample,
    cms3_tuned_sample,
    get_sampler,
    kmeans_sample,
    min_similarity_sample,
    ms3_sample,
    random_sample,
    spectrum_switch,
)

__version__ = "0.1.0"
