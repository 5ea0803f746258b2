"""Anchor-based RBF feature map.

An example x is embedded as the m-vector

    phi(x)_j = exp(-||x - a_j||^2 / sigma),

where {a_j} are anchor rows sampled from the training set and sigma > 0 is
the kernel width. Entries always lie in (0, 1].
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from .dataset import AnchorSet, validate_features
from .errors import ValidationError


@dataclass(frozen=True)
class RbfMap:
    anchors: np.ndarray  # m x d
    sigma: float

    def __post_init__(self):
        if self.anchors.ndim != 2 or self.anchors.shape[0] < 1:
            raise ValidationError("RbfMap needs a nonempty m x d anchor matrix")
        if not self.sigma > 0:
            raise ValidationError(f"kernel width must be positive, got {self.sigma}")


def parse_sigma_rule(rule: str) -> tuple[str, float | None]:
    """Parse "mean", "median" or "fixed:<value>" into (kind, value)."""
    if rule in ("mean", "median"):
        return rule, None
    if rule.startswith("fixed:"):
        try:
            value = float(rule.split(":", 1)[1])
        except ValueError as exc:
            raise ValidationError(f"bad fixed sigma value in {rule!r}") from exc
        return "fixed", value
    raise ValidationError(f"unknown sigma rule {rule!r}")


def fit_sigma(
    X: np.ndarray,
    anchors: AnchorSet | np.ndarray,
    rule: str = "mean",
    max_sample: int = 2000,
    rng=None,
) -> float:
    """Choose the kernel width from data.

    "mean" and "median" take the mean or median of the strictly positive
    squared Euclidean distances between a sample of at most ``max_sample``
    training rows and the anchors. Zero distances (a sampled row coinciding
    with an anchor) carry no scale information and are excluded; if every
    distance is zero the data are degenerate and an error is raised.
    "fixed:<v>" returns v.
    """
    kind, value = parse_sigma_rule(rule)
    if kind == "fixed":
        if value is None or not value > 0:
            raise ValidationError(f"fixed sigma must be positive, got {value}")
        return float(value)

    X = validate_features(X)
    A = anchors.anchors if isinstance(anchors, AnchorSet) else np.asarray(anchors)
    if A.shape[1] != X.shape[1]:
        raise ValidationError(
            f"anchor dim {A.shape[1]} does not match feature dim {X.shape[1]}"
        )
    n = X.shape[0]
    if n > max_sample:
        rng = np.random.default_rng(rng)
        X = X[rng.choice(n, size=max_sample, replace=False)]
    d2 = cdist(X, A, metric="sqeuclidean").ravel()
    d2 = d2[d2 > 0.0]
    if d2.size == 0:
        raise ValidationError(
            "degenerate data: all sampled rows coincide with the anchors"
        )
    sigma = float(np.mean(d2) if kind == "mean" else np.median(d2))
    if not sigma > 0:
        raise ValidationError("computed kernel width is not positive")
    return sigma


def embed(X: np.ndarray, rbf: RbfMap) -> np.ndarray:
    """Compute the n x m embedded matrix, entry (i, j) = exp(-||x_i - a_j||^2 / sigma)."""
    X = validate_features(X)
    if X.shape[1] != rbf.anchors.shape[1]:
        raise ValidationError(
            f"feature dim {X.shape[1]} does not match anchor dim {rbf.anchors.shape[1]}"
        )
    d2 = cdist(X, rbf.anchors, metric="sqeuclidean")
    return np.exp(-d2 / rbf.sigma)
