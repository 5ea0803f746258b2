"""Supervised discrete hashing baseline (code-to-label regression).

Minimizes

    || Y - B W ||_F^2 + lambda || W ||_F^2 + nu || B - phi(X) P ||_F^2

over B in {-1, +1}^(n x l). The F-step is shared with the closed-form
trainer (same function, same code path); the G-step is the transposed ridge

    W = (B^T B + lambda I)^-1 B^T Y        (l x c)

and the B-step is discrete cyclic coordinate descent: one code column at a
time, holding the rest fixed. For column k with W row w, current product
R = B W and precomputed Q = Y W^T + nu phi(X) P, the exact column minimizer
is

    B[:, k] = sgn(Q[:, k] - (R w^T - B[:, k] (w w^T)))

since the objective is linear in the column once the others are fixed. Each
column update therefore never increases the objective. Columns are swept
until no bit changes or ``max_sweeps`` is reached; the per-bit full product
makes this step the expensive part of training, which is exactly what the
single-pass trainer avoids.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .fsdh import (
    HashModel,
    TrainConfig,
    TrainTrace,
    _prepare,
    _ridge_solve,
    f_step,
)
from .hamming import sign_codes

__all__ = [
    "DccConfig",
    "sdh_objective",
    "sdh_g_step",
    "sdh_b_step_dcc",
    "sdh_train",
    "f_step",
]


@dataclass(frozen=True)
class DccConfig:
    max_sweeps: int = 5
    bit_order: str = "sequential"  # or "random"
    order_seed: int = 0

    def __post_init__(self):
        if self.max_sweeps < 1:
            raise ValidationError("max_sweeps must be >= 1")
        if self.bit_order not in ("sequential", "random"):
            raise ValidationError(f"unknown bit order {self.bit_order!r}")


def sdh_objective(B, W, P, Y, Phi, lam: float, nu: float) -> float:
    """||Y - BW||_F^2 + lambda ||W||_F^2 + nu ||B - Phi P||_F^2."""
    B = np.asarray(B, dtype=np.float64)
    n, l = B.shape
    if Y.shape[0] != n or Phi.shape[0] != n:
        raise ValidationError("row counts of B, Y and Phi must agree")
    if W.shape != (l, Y.shape[1]):
        raise ValidationError(f"W must be l x c = {l} x {Y.shape[1]}, got {W.shape}")
    if P.shape != (Phi.shape[1], l):
        raise ValidationError(f"P must be m x l, got {P.shape}")
    fit = np.linalg.norm(Y - B @ W) ** 2
    reg = np.linalg.norm(W) ** 2
    emb = np.linalg.norm(B - Phi @ P) ** 2
    return float(fit + lam * reg + nu * emb)


def sdh_g_step(B: np.ndarray, Y: np.ndarray, lam: float) -> np.ndarray:
    """Ridge regression of labels on codes: W = (B^T B + lambda I)^-1 B^T Y."""
    B = np.asarray(B, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    if B.shape[0] != Y.shape[0]:
        raise ValidationError("B and Y must have the same number of rows")
    l = B.shape[1]
    G = B.T @ B + lam * np.eye(l)
    return _ridge_solve(G, B.T @ Y, "sdh_g_step", 1e-8, "use lambda > 0")


def sdh_b_step_dcc(
    Y: np.ndarray,
    W: np.ndarray,
    Phi: np.ndarray,
    P: np.ndarray,
    nu: float,
    dcc: DccConfig | None = None,
    B_init: np.ndarray | None = None,
) -> tuple[np.ndarray, int]:
    """Cyclic per-column code update; returns (B, sweeps executed)."""
    dcc = dcc or DccConfig()
    Y = np.asarray(Y, dtype=np.float64)
    W = np.asarray(W, dtype=np.float64)
    Phi = np.asarray(Phi, dtype=np.float64)
    P = np.asarray(P, dtype=np.float64)
    n = Y.shape[0]
    l = W.shape[0]
    if W.shape[1] != Y.shape[1]:
        raise ValidationError("W columns must match the class count")
    if Phi.shape[0] != n or P.shape != (Phi.shape[1], l):
        raise ValidationError("Phi/P dimensions inconsistent with Y/W")
    if B_init is None:
        raise ValidationError("DCC needs an initial code matrix")
    B = np.asarray(B_init, dtype=np.float64).copy()
    if B.shape != (n, l):
        raise ValidationError(f"B_init must be {n} x {l}, got {B.shape}")

    Q = Y @ W.T + nu * (Phi @ P)
    order_rng = (
        np.random.default_rng(dcc.order_seed) if dcc.bit_order == "random" else None
    )
    sweeps = 0
    for _ in range(dcc.max_sweeps):
        sweeps += 1
        changed = 0
        cols = (
            order_rng.permutation(l) if order_rng is not None else range(l)
        )
        for k in cols:
            w = W[k]
            # contribution of the other columns: B'W'w^T = (BW)w^T - B_k (w w^T)
            coupling = (B @ W) @ w - B[:, k] * (w @ w)
            z = sign_codes(Q[:, k] - coupling).astype(np.float64)
            changed += int(np.count_nonzero(z != B[:, k]))
            B[:, k] = z
        if changed == 0:
            break
    return B.astype(np.int8), sweeps


def sdh_train(
    X: np.ndarray,
    Y: np.ndarray,
    config: TrainConfig,
    dcc: DccConfig | None = None,
):
    """Alternating optimization with the DCC code solver.

    Same outer structure and stopping rule as the closed-form trainer (stop
    once B is unchanged, capped at max_iters); per-iteration DCC sweep counts
    are recorded in the trace.
    """
    dcc = dcc or DccConfig()
    t0 = time.perf_counter()
    X, Y, config, rbf, Phi, B = _prepare(X, Y, config)
    W = sdh_g_step(B, Y, config.lam)
    P = f_step(Phi, B, config.ridge_eps)
    trace = TrainTrace(sweeps=[], init_seconds=time.perf_counter() - t0)
    trace.objectives.append(sdh_objective(B, W, P, Y, Phi, config.lam, config.nu))

    for _ in range(config.max_iters):
        t = time.perf_counter()
        B_new, sweeps = sdh_b_step_dcc(Y, W, Phi, P, config.nu, dcc, B_init=B)
        trace.b_step_ms.append((time.perf_counter() - t) * 1e3)
        trace.sweeps.append(sweeps)
        unchanged = np.array_equal(B_new, B)
        B = B_new

        t = time.perf_counter()
        W = sdh_g_step(B, Y, config.lam)
        trace.g_step_ms.append((time.perf_counter() - t) * 1e3)

        t = time.perf_counter()
        P = f_step(Phi, B, config.ridge_eps)
        trace.f_step_ms.append((time.perf_counter() - t) * 1e3)

        trace.objectives.append(
            sdh_objective(B, W, P, Y, Phi, config.lam, config.nu)
        )
        trace.iterations += 1
        if unchanged:
            trace.converged = True
            break

    model = HashModel(method="sdh", rbf=rbf, P=P, W=W, config=config)
    return model, B, trace
