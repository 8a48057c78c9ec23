from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ClusteringResult:
    """A flat partition plus the configuration that produced it.

    ``inertia`` is only set for k-means.
    """

    labels: np.ndarray
    k: int
    algorithm: str
    metric: str
    linkage: str | None = None
    seed: int | None = None
    inertia: float | None = None
