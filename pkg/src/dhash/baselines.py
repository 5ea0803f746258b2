"""Trivial unsupervised baseline: seeded random-projection sign hashing."""

from __future__ import annotations

import numpy as np

from .dataset import validate_features
from .hamming import sign_codes


def random_projection_codes(X: np.ndarray, bits: int, seed) -> np.ndarray:
    """sgn(X R) with R a seeded standard-normal d x bits matrix."""
    X = validate_features(X)
    rng = np.random.default_rng(seed)
    R = rng.standard_normal((X.shape[1], bits))
    return sign_codes(X @ R)
