"""Replace-one stability experiment for the label-to-code regression step.

Under the sample-size-invariant weighting

    (1/nl) ||B - YW||_F^2 + (lambda'/cl) ||W||_F^2 + (nu'/nl) ||B - F(X)||_F^2

(the plain objective divided by nl once lambda = lambda' n / c and
nu = nu'), swapping a single training example for an i.i.d. one moves the
regression solution by at most

    || W(S) - W(S_i) ||_F  <=  2 c M / (lambda' n)

with M bounding the per-row residual norm ||b - yW||_2, provided the codes
are held fixed. The harness estimates M empirically as the maximum observed
row residual across both samples and both solutions, checks every trial
against the bound, and sweeps the sample size to expose the 1/n decay.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .dataset import one_hot_encode
from .errors import ValidationError
from .fsdh import g_step
from .synth import ClusterMixture


@dataclass(frozen=True)
class StabilityConfig:
    lambda_prime: float = 1.0
    nu_prime: float = 1e-5
    replacements: int = 50
    sample_sizes: tuple[int, ...] = (100, 400, 1600)
    bits: int = 16
    seed: int = 0

    def __post_init__(self):
        if not self.lambda_prime > 0:
            raise ValidationError("lambda_prime must be positive")
        if self.nu_prime < 0:
            raise ValidationError("nu_prime must be nonnegative")
        if self.replacements < 1:
            raise ValidationError("need at least one replacement trial")
        if self.bits < 1:
            raise ValidationError("bits must be >= 1")


@dataclass
class StabilityReport:
    n: int
    num_classes: int
    bits: int
    lambda_prime: float
    deltas: list[float] = field(default_factory=list)
    m_hat: float = 0.0
    bound: float = 0.0
    violations: int = 0

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "num_classes": self.num_classes,
            "bits": self.bits,
            "lambda_prime": self.lambda_prime,
            "m_hat": self.m_hat,
            "bound": self.bound,
            "violations": self.violations,
            "median_delta": float(np.median(self.deltas)),
            "max_delta": float(np.max(self.deltas)),
            "deltas": self.deltas,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def normalized_objective(B, W, P, Y, Phi, lambda_prime: float, nu_prime: float) -> float:
    """The sample-size-invariant weighting of the training objective."""
    B = np.asarray(B, dtype=np.float64)
    n, l = B.shape
    c = np.asarray(Y).shape[1]
    fit = np.linalg.norm(B - Y @ W) ** 2 / (n * l)
    reg = lambda_prime * np.linalg.norm(W) ** 2 / (c * l)
    emb = nu_prime * np.linalg.norm(B - Phi @ P) ** 2 / (n * l)
    return float(fit + reg + emb)


def equivalent_lambda(lambda_prime: float, n: int, c: int) -> float:
    """The plain-objective regularizer matching the normalized model."""
    return lambda_prime * n / c


def perturb_sample(
    X: np.ndarray, labels: np.ndarray, i: int, mixture: ClusterMixture, rng
) -> tuple[np.ndarray, np.ndarray]:
    """Replace example i with a fresh i.i.d. draw from the generating mixture."""
    X = np.asarray(X, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    if not 0 <= i < X.shape[0]:
        raise ValidationError(f"row index {i} out of range for n={X.shape[0]}")
    x_new, y_new = mixture.sample(1, rng)
    X2 = X.copy()
    labels2 = labels.copy()
    X2[i] = x_new[0]
    labels2[i] = y_new[0]
    return X2, labels2


def _max_row_residual(B: np.ndarray, Y: np.ndarray, W: np.ndarray) -> float:
    R = B - Y @ W
    return float(np.sqrt((R * R).sum(axis=1)).max())


def check_g_step_stability(
    X: np.ndarray,
    labels: np.ndarray,
    mixture: ClusterMixture,
    config: StabilityConfig,
) -> StabilityReport:
    """Solve the regression on S and on replace-one samples S_i with shared
    fixed codes; report observed ||dW||_F against the 2cM/(lambda' n) bound."""
    labels = np.asarray(labels, dtype=np.int64)
    n = labels.shape[0]
    c = mixture.num_classes
    rng = np.random.default_rng(config.seed)
    B = rng.integers(0, 2, size=(n, config.bits)).astype(np.float64) * 2 - 1
    lam = equivalent_lambda(config.lambda_prime, n, c)

    Y = one_hot_encode(labels, num_classes=c)
    W_s = g_step(Y, B, lam)
    m_hat = _max_row_residual(B, Y, W_s)

    report = StabilityReport(
        n=n, num_classes=c, bits=config.bits, lambda_prime=config.lambda_prime
    )
    for _ in range(config.replacements):
        i = int(rng.integers(n))
        X2, labels2 = perturb_sample(X, labels, i, mixture, rng)
        Y2 = one_hot_encode(labels2, num_classes=c)
        W_si = g_step(Y2, B, lam)
        report.deltas.append(float(np.linalg.norm(W_s - W_si)))
        # the bound's M must cover both samples under both solutions
        m_hat = max(
            m_hat,
            _max_row_residual(B, Y, W_si),
            _max_row_residual(B, Y2, W_s),
            _max_row_residual(B, Y2, W_si),
        )
    report.m_hat = m_hat
    report.bound = 2.0 * c * m_hat / (config.lambda_prime * n)
    report.violations = int(np.sum(np.asarray(report.deltas) > report.bound))
    return report


def run_sweep(mixture: ClusterMixture, config: StabilityConfig) -> list[StabilityReport]:
    """One stability report per sample size, each on fresh data from the mixture."""
    reports = []
    for n in config.sample_sizes:
        data_rng = np.random.default_rng([config.seed, n])
        X, labels = mixture.sample(n, data_rng)
        reports.append(check_g_step_stability(X, labels, mixture, config))
    return reports


def sweep_csv_lines(reports: list[StabilityReport]) -> list[str]:
    lines = ["n,bound,median_dW,max_dW,violations"]
    for rep in reports:
        lines.append(
            f"{rep.n},{rep.bound!r},{float(np.median(rep.deltas))!r},"
            f"{float(np.max(rep.deltas))!r},{rep.violations}"
        )
    return lines
