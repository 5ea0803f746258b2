"""Closed-form supervised discrete hashing (FSDH variant).

Learns binary codes B in {-1, +1}^(n x l), a label-to-code regression W and
an embedding projection P by alternating minimization of

    || B - Y W ||_F^2 + lambda || W ||_F^2 + nu || B - phi(X) P ||_F^2

subject to B in {-1, +1}^(n x l). Every block update is a closed form:

    G-step:  W = (Y^T Y + lambda I)^-1 Y^T B
    F-step:  P = (phi^T phi + eps I)^-1 phi^T B
    B-step:  B = sgn(Y W + nu phi(X) P)        (single pass, no per-bit loop)

so the objective is non-increasing across iterations. Training stops once B
is bitwise unchanged between iterations, capped at ``max_iters``.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace

import numpy as np

from .dataset import sample_anchors, validate_features, validate_one_hot
from .errors import NumericError, ValidationError
from .hamming import sign_codes
from .rbf import RbfMap, embed, fit_sigma

DEFAULT_RIDGE_EPS = 1e-8


@dataclass(frozen=True)
class TrainConfig:
    """Training hyperparameters; defaults follow the usual experimental setup
    (lambda=1, nu=1e-5, 5 iterations, up to 1000 anchors)."""

    bits: int
    lam: float = 1.0
    nu: float = 1e-5
    max_iters: int = 5
    anchors: int = 1000
    seed: int = 0
    sigma_rule: str = "mean"
    ridge_eps: float = DEFAULT_RIDGE_EPS

    def __post_init__(self):
        if self.bits < 1:
            raise ValidationError(f"code length must be >= 1, got {self.bits}")
        if self.lam < 0 or self.nu < 0:
            raise ValidationError("lambda and nu must be nonnegative")
        if self.max_iters < 1:
            raise ValidationError("max_iters must be >= 1")
        if self.anchors < 1:
            raise ValidationError("anchor count must be >= 1")


@dataclass(frozen=True)
class HashModel:
    """Trained artifact: anchors + kernel width, projection P and regression W.

    ``method`` is "fsdh" (W maps labels to codes, c x l) or "sdh" (W maps
    codes to labels, l x c).
    """

    method: str
    rbf: RbfMap
    P: np.ndarray
    W: np.ndarray
    config: TrainConfig

    def __post_init__(self):
        if self.method not in ("fsdh", "sdh"):
            raise ValidationError(f"unknown method {self.method!r}")
        l = self.config.bits
        if self.P.ndim != 2 or self.P.shape[1] != l:
            raise ValidationError("P must be m x bits")
        w_bits = self.W.shape[1] if self.method == "fsdh" else self.W.shape[0]
        if self.W.ndim != 2 or w_bits != l:
            raise ValidationError("W dimensions inconsistent with code length")
        if self.P.shape[0] != self.rbf.anchors.shape[0]:
            raise ValidationError("P rows must match the anchor count")
        for name, M in (("P", self.P), ("W", self.W)):
            if not np.all(np.isfinite(M)):
                raise ValidationError(f"{name} contains non-finite entries")

    @property
    def num_classes(self) -> int:
        return self.W.shape[0] if self.method == "fsdh" else self.W.shape[1]


@dataclass
class TrainTrace:
    """Per-iteration objective values and wall-clock step durations.

    ``objectives[0]`` is the value right after initialization; entry k is the
    value after iteration k. Step durations are in milliseconds and start at
    iteration 1. ``sweeps`` is populated by the coordinate-descent trainer
    only.
    """

    objectives: list[float] = field(default_factory=list)
    b_step_ms: list[float] = field(default_factory=list)
    g_step_ms: list[float] = field(default_factory=list)
    f_step_ms: list[float] = field(default_factory=list)
    sweeps: list[int] | None = None
    init_seconds: float = 0.0
    iterations: int = 0
    converged: bool = False

    def step_seconds(self) -> float:
        return (sum(self.b_step_ms) + sum(self.g_step_ms) + sum(self.f_step_ms)) / 1e3

    def csv_lines(self) -> list[str]:
        header = "iteration,objective,b_step_ms,g_step_ms,f_step_ms"
        if self.sweeps is not None:
            header += ",sweeps_executed"
        lines = [header]
        row0 = f"0,{self.objectives[0]!r},,,"
        lines.append(row0 + ("," if self.sweeps is not None else ""))
        for k in range(self.iterations):
            cells = [
                str(k + 1),
                repr(self.objectives[k + 1]),
                f"{self.b_step_ms[k]:.3f}",
                f"{self.g_step_ms[k]:.3f}",
                f"{self.f_step_ms[k]:.3f}",
            ]
            if self.sweeps is not None:
                cells.append(str(self.sweeps[k]))
            lines.append(",".join(cells))
        return lines

    def save_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("\n".join(self.csv_lines()) + "\n")


def _check_dims(B, W, P, Y, Phi):
    n, l = B.shape
    if Y.shape[0] != n or Phi.shape[0] != n:
        raise ValidationError("row counts of B, Y and Phi must agree")
    if W.shape != (Y.shape[1], l):
        raise ValidationError(f"W must be c x l = {Y.shape[1]} x {l}, got {W.shape}")
    if P.shape != (Phi.shape[1], l):
        raise ValidationError(f"P must be m x l = {Phi.shape[1]} x {l}, got {P.shape}")


def objective(B, W, P, Y, Phi, lam: float, nu: float) -> float:
    """||B - YW||_F^2 + lambda ||W||_F^2 + nu ||B - Phi P||_F^2."""
    B = np.asarray(B, dtype=np.float64)
    _check_dims(B, W, P, Y, Phi)
    fit = np.linalg.norm(B - Y @ W) ** 2
    reg = np.linalg.norm(W) ** 2
    emb = np.linalg.norm(B - Phi @ P) ** 2
    return float(fit + lam * reg + nu * emb)


def _ridge_solve(G: np.ndarray, R: np.ndarray, step: str, rel_tol: float,
                 advice: str) -> np.ndarray:
    """Solve G S = R and verify the normal-equation residual."""
    try:
        S = np.linalg.solve(G, R)
    except np.linalg.LinAlgError as exc:
        raise NumericError(step, f"singular system ({exc}); {advice}") from exc
    if not np.all(np.isfinite(S)):
        raise NumericError(step, f"solution has non-finite entries; {advice}")
    resid = np.linalg.norm(G @ S - R)
    if resid > rel_tol * max(1.0, np.linalg.norm(R)):
        raise NumericError(
            step, f"residual {resid:.3e} exceeds tolerance; {advice}"
        )
    return S


def g_step(Y: np.ndarray, B: np.ndarray, lam: float) -> np.ndarray:
    """Ridge regression of codes on labels: W = (Y^T Y + lambda I)^-1 Y^T B."""
    Y = np.asarray(Y, dtype=np.float64)
    B = np.asarray(B, dtype=np.float64)
    if Y.shape[0] != B.shape[0]:
        raise ValidationError("Y and B must have the same number of rows")
    c = Y.shape[1]
    G = Y.T @ Y + lam * np.eye(c)
    return _ridge_solve(G, Y.T @ B, "g_step", 1e-8, "use lambda > 0")


def f_step(Phi: np.ndarray, B: np.ndarray, ridge_eps: float = DEFAULT_RIDGE_EPS) -> np.ndarray:
    """Embedding projection: P solves (Phi^T Phi + eps I) P = Phi^T B.

    The tiny default ridge keeps rank-deficient embeddings (duplicate anchor
    columns) solvable without perturbing well-conditioned systems beyond
    tolerance; pass ridge_eps=0 for the plain normal equations.
    """
    Phi = np.asarray(Phi, dtype=np.float64)
    B = np.asarray(B, dtype=np.float64)
    if not np.all(np.isfinite(Phi)):
        raise ValidationError("embedded matrix contains non-finite entries")
    if Phi.shape[0] != B.shape[0] or Phi.shape[0] < 1:
        raise ValidationError("Phi and B must have the same (positive) row count")
    m = Phi.shape[1]
    G = Phi.T @ Phi + ridge_eps * np.eye(m)
    return _ridge_solve(G, Phi.T @ B, "f_step", 1e-6, "increase ridge_eps")


def b_step(Y: np.ndarray, W: np.ndarray, Phi: np.ndarray, P: np.ndarray,
           nu: float) -> np.ndarray:
    """Exact code update in one pass: B = sgn(Y W + nu Phi P), sgn(0) = +1."""
    Y = np.asarray(Y, dtype=np.float64)
    Phi = np.asarray(Phi, dtype=np.float64)
    if Y.shape[1] != W.shape[0] or Phi.shape[1] != P.shape[0]:
        raise ValidationError("inner dimensions of YW / PhiP do not match")
    if W.shape[1] != P.shape[1]:
        raise ValidationError("W and P must produce the same code length")
    if Y.shape[0] != Phi.shape[0]:
        raise ValidationError("Y and Phi must have the same number of rows")
    return sign_codes(Y @ W + nu * (Phi @ P))


def _prepare(X: np.ndarray, Y: np.ndarray, config: TrainConfig):
    """Shared training setup: anchors, kernel width, embedding, random codes.

    Consumes one RNG stream seeded by config.seed so both trainers start from
    byte-identical state for equal seeds.
    """
    X = validate_features(X)
    Y = validate_one_hot(Y)
    if X.shape[0] != Y.shape[0]:
        raise ValidationError("features and labels must align")
    n = X.shape[0]
    rng = np.random.default_rng(config.seed)
    m_eff = min(config.anchors, n)
    anchor_set = sample_anchors(X, m_eff, rng)
    sigma = fit_sigma(X, anchor_set, rule=config.sigma_rule, rng=rng)
    rbf = RbfMap(anchors=anchor_set.anchors, sigma=sigma)
    Phi = embed(X, rbf)
    B = rng.integers(0, 2, size=(n, config.bits)).astype(np.int8) * 2 - 1
    if m_eff != config.anchors:
        config = replace(config, anchors=m_eff)
    return X, Y, config, rbf, Phi, B


def train(X: np.ndarray, Y: np.ndarray, config: TrainConfig):
    """Run the alternating scheme; returns (HashModel, codes, TrainTrace).

    Initialization order: random codes, then W, then P; each iteration runs
    the B, G, F steps in that order and stops early once B stops changing.
    """
    t0 = time.perf_counter()
    X, Y, config, rbf, Phi, B = _prepare(X, Y, config)
    W = g_step(Y, B, config.lam)
    P = f_step(Phi, B, config.ridge_eps)
    trace = TrainTrace(init_seconds=time.perf_counter() - t0)
    trace.objectives.append(objective(B, W, P, Y, Phi, config.lam, config.nu))

    for _ in range(config.max_iters):
        t = time.perf_counter()
        B_new = b_step(Y, W, Phi, P, config.nu)
        trace.b_step_ms.append((time.perf_counter() - t) * 1e3)
        unchanged = np.array_equal(B_new, B)
        B = B_new

        t = time.perf_counter()
        W = g_step(Y, B, config.lam)
        trace.g_step_ms.append((time.perf_counter() - t) * 1e3)

        t = time.perf_counter()
        P = f_step(Phi, B, config.ridge_eps)
        trace.f_step_ms.append((time.perf_counter() - t) * 1e3)

        trace.objectives.append(objective(B, W, P, Y, Phi, config.lam, config.nu))
        trace.iterations += 1
        if unchanged:
            trace.converged = True
            break

    model = HashModel(method="fsdh", rbf=rbf, P=P, W=W, config=config)
    return model, B, trace


def encode(X_new: np.ndarray, model: HashModel) -> np.ndarray:
    """Out-of-sample codes: sgn(phi(X_new) P)."""
    Phi = embed(X_new, model.rbf)
    return sign_codes(Phi @ model.P)
