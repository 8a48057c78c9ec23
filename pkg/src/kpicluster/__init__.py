"""Unsupervised clustering of HPC jobs from per-node KPI time series."""

__version__ = "0.1.0"

from .catalog import DEFAULT_CATALOG, Category, KpiId
from .cluster import (
    AgglomerativeClustering,
    KMeans,
    agglomerative,
    cut_dendrogram,
    distance,
    kmeans,
)
from .experiment import (
    SweepConfig,
    compare_kpis,
    experiment_one,
    experiment_two,
    run_sweep,
    validation_harness,
)
from .ingest import (
    build_job_registry,
    filter_jobs,
    node_count_histogram,
    parse_kpi_records,
)
from .pipeline import PreparedDataset, prepare_dataset
from .preprocess import ColumnStandardizer, assemble_matrix, standardize
from .reduce import FixedPCA, flatten_job, pca2, retained_info_table
from .synth import SynthSpec, generate
from .validate import (
    calinski_harabasz,
    davies_bouldin,
    select_optimal_k,
    silhouette,
)

__all__ = [
    "AgglomerativeClustering",
    "Category",
    "ColumnStandardizer",
    "DEFAULT_CATALOG",
    "FixedPCA",
    "KMeans",
    "KpiId",
    "PreparedDataset",
    "SweepConfig",
    "SynthSpec",
    "agglomerative",
    "assemble_matrix",
    "build_job_registry",
    "calinski_harabasz",
    "compare_kpis",
    "cut_dendrogram",
    "davies_bouldin",
    "distance",
    "experiment_one",
    "experiment_two",
    "filter_jobs",
    "flatten_job",
    "generate",
    "kmeans",
    "node_count_histogram",
    "parse_kpi_records",
    "pca2",
    "prepare_dataset",
    "retained_info_table",
    "run_sweep",
    "select_optimal_k",
    "silhouette",
    "standardize",
    "validation_harness",
]
