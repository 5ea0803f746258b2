"""Synthetic Gaussian-cluster data for benchmarks and stability experiments.

The mixture is fixed once built (centers drawn from a seeded RNG), so fresh
i.i.d. examples can be drawn later from the same distribution, which the
replace-one stability experiment requires.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError


@dataclass(frozen=True)
class ClusterMixture:
    """k isotropic Gaussian clusters with uniform class marginal."""

    centers: np.ndarray  # k x d
    spread: float

    @property
    def num_classes(self) -> int:
        return self.centers.shape[0]

    @property
    def dim(self) -> int:
        return self.centers.shape[1]

    def sample(self, n: int, rng) -> tuple[np.ndarray, np.ndarray]:
        """Draw n i.i.d. examples: labels uniform over classes, features
        center + spread * standard normal."""
        rng = np.random.default_rng(rng)
        labels = rng.integers(0, self.num_classes, size=n)
        X = self.centers[labels] + self.spread * rng.standard_normal(
            (n, self.dim)
        )
        return X, labels.astype(np.int64)


def make_mixture(k: int, d: int, spread: float, seed) -> ClusterMixture:
    if k < 1 or d < 1:
        raise ValidationError(f"need k >= 1 and d >= 1, got k={k}, d={d}")
    if spread < 0:
        raise ValidationError("spread must be nonnegative")
    rng = np.random.default_rng(seed)
    centers = rng.standard_normal((k, d)) * 2.0
    return ClusterMixture(centers=centers, spread=float(spread))


@dataclass(frozen=True)
class SynthSpec:
    k: int = 10
    n: int = 5000
    d: int = 64
    spread: float = 1.0


def parse_synth_spec(text: str) -> SynthSpec:
    """Parse a generator spec like ``clusters:k=10,n=5000,d=64,spread=1.0``."""
    kind, _, args = text.partition(":")
    if kind != "clusters":
        raise ValidationError(f"unknown synthetic generator {kind!r}")
    spec = SynthSpec()
    values = {"k": spec.k, "n": spec.n, "d": spec.d, "spread": spec.spread}
    if args:
        for item in args.split(","):
            key, _, val = item.partition("=")
            key = key.strip()
            if key not in values or not val:
                raise ValidationError(f"bad synthetic spec item {item!r}")
            values[key] = float(val) if key == "spread" else int(val)
    if values["k"] < 2:
        raise ValidationError("clusters generator needs k >= 2")
    if values["n"] < values["k"]:
        raise ValidationError("clusters generator needs n >= k")
    return SynthSpec(**values)


def generate(spec: SynthSpec, seed) -> tuple[np.ndarray, np.ndarray, ClusterMixture]:
    """Materialize a SynthSpec: returns (X, labels, mixture).

    Centers and draws derive from the same seed; the returned mixture can
    produce additional i.i.d. examples.
    """
    rng = np.random.default_rng(seed)
    mixture = make_mixture(spec.k, spec.d, spec.spread, rng)
    X, labels = mixture.sample(spec.n, rng)
    return X, labels, mixture
