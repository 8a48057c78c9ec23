"""Distance metrics, k-means and agglomerative clustering."""

from .distance import Metric, distance, pairwise_distances
from .hierarchy import (
    AgglomerativeClustering,
    Dendrogram,
    Linkage,
    agglomerative,
    check_pairing,
    cut_dendrogram,
    cut_labels,
    linkage_tree,
)
from .kmeans import KMeans, kmeans, kmeans_plusplus
from .result import ClusteringResult

__all__ = [
    "AgglomerativeClustering",
    "ClusteringResult",
    "Dendrogram",
    "KMeans",
    "Linkage",
    "Metric",
    "agglomerative",
    "check_pairing",
    "cut_dendrogram",
    "cut_labels",
    "distance",
    "kmeans",
    "kmeans_plusplus",
    "linkage_tree",
    "pairwise_distances",
]
