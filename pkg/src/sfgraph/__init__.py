"""Redundant-feature removal for high-dimensional data.

The package builds a *sparse feature graph* — every feature greedily
expressed as a sparse combination of the others — mines locally compressible
subgraphs (groups of features that stand in for each other) at a weight
threshold, and keeps one representative per group.  An evaluation harness
scores the reduction with spectral clustering against ground-truth labels.
"""

from .errors import (
    DataError,
    DimensionError,
    NumericalError,
    ParameterError,
    ParseError,
    SfgraphError,
)
from .evaluate import (
    KMeansResult,
    McfsResult,
    SimilarityGraph,
    SpectralEmbedding,
    acc,
    gaussian_similarity,
    kmeans,
    mcfs_select,
    njw_cluster,
    nmi,
    spectral_embedding,
)
from .lcs import (
    LcsPartition,
    ReducedFeatureSet,
    find_lcs,
    reduce_matrix,
    save_partition,
    select_representatives,
)
from .matrix import (
    FeatureMatrix,
    load_csv,
    load_labels,
    normalize_features,
    pairwise_euclidean,
    redundancy,
    save_csv,
)
from .omp import OmpConfig, SparseRepresentation, omp, reconstruct
from .pipeline import PipelineConfig, render_report, run_pipeline
from .sfg import (
    AngleReport,
    SparseFeatureGraph,
    angle_histogram,
    build_sfg,
    filter_failed,
    load_sfg,
    representation_angle,
    save_sfg,
)
from .synth import SynthSpec, generate

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # errors
    "SfgraphError",
    "ParameterError",
    "ParseError",
    "DimensionError",
    "DataError",
    "NumericalError",
    # matrix
    "FeatureMatrix",
    "load_csv",
    "load_labels",
    "save_csv",
    "normalize_features",
    "pairwise_euclidean",
    "redundancy",
    # solver
    "OmpConfig",
    "SparseRepresentation",
    "omp",
    "reconstruct",
    # graph
    "SparseFeatureGraph",
    "AngleReport",
    "build_sfg",
    "representation_angle",
    "filter_failed",
    "angle_histogram",
    "save_sfg",
    "load_sfg",
    # subgraphs
    "LcsPartition",
    "ReducedFeatureSet",
    "find_lcs",
    "select_representatives",
    "reduce_matrix",
    "save_partition",
    # evaluation
    "SimilarityGraph",
    "SpectralEmbedding",
    "KMeansResult",
    "McfsResult",
    "gaussian_similarity",
    "spectral_embedding",
    "kmeans",
    "njw_cluster",
    "nmi",
    "acc",
    "mcfs_select",
    # synthetic data
    "SynthSpec",
    "generate",
    # pipeline
    "PipelineConfig",
    "run_pipeline",
    "render_report",
]
