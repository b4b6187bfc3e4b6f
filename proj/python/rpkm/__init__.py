"""Grid-based recursive-partition K-means with exact distance accounting."""

from rpkm._core import (
    full_error,
    generate_mixture,
    kmeanspp,
    lloyd,
    minibatch_kmeans,
    partition_sizes,
    rpkm,
    std_error,
    weighted_lloyd,
)

__all__ = [
    "full_error",
    "generate_mixture",
    "kmeanspp",
    "lloyd",
    "minibatch_kmeans",
    "partition_sizes",
    "rpkm",
    "std_error",
    "weighted_lloyd",
]
