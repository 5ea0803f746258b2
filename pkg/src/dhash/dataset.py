"""Loading, encoding and splitting of feature matrices and labels.

Two on-disk feature formats are supported:

* CSV: comma separated, one example per row, no header unless the caller
  skips one. Labels live either in a separate file (one id per line) or in
  the last column of the feature file.
* raw binary ("DHMX"): magic ``DHMX``, u32 version (currently 1), u64 rows,
  u64 cols, then rows*cols little-endian float64 values in row-major order.
  This format round-trips bit-exactly.

All matrices are float64 and row-major in memory. Class ids are dense
integers in ``[0, c)``; :func:`map_labels` converts arbitrary label tokens
into that form.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ParseError, ValidationError

DHMX_MAGIC = b"DHMX"
DHMX_VERSION = 1


def validate_features(X: np.ndarray, name: str = "features") -> np.ndarray:
    """Return X as a C-contiguous float64 matrix, rejecting bad shapes/values."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValidationError(f"{name}: expected a 2-d matrix, got ndim={X.ndim}")
    n, d = X.shape
    if n < 1 or d < 1:
        raise ValidationError(f"{name}: empty matrix ({n} x {d})")
    if not np.all(np.isfinite(X)):
        bad = int(np.flatnonzero(~np.isfinite(X).all(axis=1))[0])
        raise ValidationError(f"{name}: non-finite value in row {bad}")
    return X


def load_features(path, fmt: str = "csv", header: bool = False) -> np.ndarray:
    """Load an n x d feature matrix from ``path``.

    fmt is "csv" or "raw" (the DHMX binary format). ``header`` skips one
    leading CSV line.
    """
    if fmt == "csv":
        return _load_csv(path, header=header)
    if fmt == "raw":
        return _load_dhmx(path)
    raise ValidationError(f"unknown feature format: {fmt!r}")


def _load_csv(path, header: bool = False) -> np.ndarray:
    rows = []
    ncols = None
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh):
            if header and lineno == 0:
                continue
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            row_index = len(rows)
            if ncols is None:
                ncols = len(parts)
            elif len(parts) != ncols:
                raise ParseError(
                    f"{path}: row {row_index} has {len(parts)} fields, expected {ncols}"
                )
            try:
                rows.append([float(p) for p in parts])
            except ValueError as exc:
                raise ParseError(f"{path}: row {row_index}: {exc}") from exc
    if not rows:
        raise ParseError(f"{path}: no data rows")
    return validate_features(np.asarray(rows, dtype=np.float64), name=str(path))


def save_features(path, X: np.ndarray) -> None:
    """Write X in the DHMX raw-binary format."""
    X = validate_features(X)
    n, d = X.shape
    with open(path, "wb") as fh:
        fh.write(DHMX_MAGIC)
        fh.write(struct.pack("<IQQ", DHMX_VERSION, n, d))
        fh.write(np.ascontiguousarray(X, dtype="<f8").tobytes())


def _load_dhmx(path) -> np.ndarray:
    data = Path(path).read_bytes()
    head = 4 + 4 + 8 + 8
    if len(data) < head or data[:4] != DHMX_MAGIC:
        raise ParseError(f"{path}: not a DHMX file")
    version, n, d = struct.unpack("<IQQ", data[4:head])
    if version != DHMX_VERSION:
        raise ParseError(f"{path}: unsupported DHMX version {version}")
    want = head + n * d * 8
    if len(data) != want:
        raise ParseError(f"{path}: expected {want} bytes, found {len(data)}")
    X = np.frombuffer(data[head:], dtype="<f8").reshape(n, d)
    return validate_features(X, name=str(path))


def load_labels(path) -> np.ndarray:
    """Read one label token per line; non-integer tokens go through map_labels."""
    tokens = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                tokens.append(line)
    if not tokens:
        raise ParseError(f"{path}: no labels")
    try:
        return np.asarray([int(t) for t in tokens], dtype=np.int64)
    except ValueError:
        ids, _ = map_labels(tokens)
        return ids


def map_labels(tokens) -> tuple[np.ndarray, list]:
    """Map arbitrary label tokens to dense ids [0, c); returns (ids, table).

    ``table[j]`` is the original token for class j; tokens are ordered by
    first occurrence sorted lexicographically for determinism.
    """
    table = sorted(set(tokens))
    lookup = {t: j for j, t in enumerate(table)}
    return np.asarray([lookup[t] for t in tokens], dtype=np.int64), table


def split_label_column(M: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Split a matrix whose last column holds integer class ids."""
    M = validate_features(M)
    if M.shape[1] < 2:
        raise ValidationError("matrix has no feature columns besides the label column")
    labels = M[:, -1]
    if not np.all(labels == np.round(labels)):
        raise ValidationError("label column contains non-integer values")
    return np.ascontiguousarray(M[:, :-1]), labels.astype(np.int64)


def one_hot_encode(labels, num_classes: int | None = None) -> np.ndarray:
    """Build the n x c indicator matrix Y with Y[i, j] = 1 iff labels[i] == j."""
    labels = np.asarray(labels)
    if labels.ndim != 1 or labels.size == 0:
        raise ValidationError("labels must be a nonempty 1-d sequence")
    if not np.issubdtype(labels.dtype, np.integer):
        if not np.all(labels == np.round(labels)):
            raise ValidationError("labels must be integers")
        labels = labels.astype(np.int64)
    c = int(labels.max()) + 1 if num_classes is None else int(num_classes)
    if labels.min() < 0 or labels.max() >= c:
        raise ValidationError(
            f"label out of range: ids must lie in [0, {c}), got "
            f"[{labels.min()}, {labels.max()}]"
        )
    Y = np.zeros((labels.size, c), dtype=np.float64)
    Y[np.arange(labels.size), labels] = 1.0
    return Y


def labels_from_one_hot(Y: np.ndarray) -> np.ndarray:
    return np.argmax(np.asarray(Y), axis=1).astype(np.int64)


def validate_one_hot(Y: np.ndarray) -> np.ndarray:
    """Check that Y is a 0/1 matrix with exactly one 1 per row."""
    Y = np.ascontiguousarray(Y, dtype=np.float64)
    if Y.ndim != 2 or Y.shape[0] < 1 or Y.shape[1] < 1:
        raise ValidationError("one-hot matrix must be nonempty and 2-d")
    if not np.all((Y == 0.0) | (Y == 1.0)):
        raise ValidationError("one-hot matrix must contain only 0/1 entries")
    if not np.all(Y.sum(axis=1) == 1.0):
        raise ValidationError("each one-hot row must contain exactly one 1")
    return Y


@dataclass(frozen=True)
class AnchorSet:
    """m rows sampled without replacement from a training feature matrix."""

    anchors: np.ndarray  # m x d
    indices: np.ndarray  # source row indices, distinct

    def __post_init__(self):
        if self.anchors.shape[0] != self.indices.shape[0]:
            raise ValidationError("anchor rows and indices disagree in length")
        if len(set(self.indices.tolist())) != self.indices.size:
            raise ValidationError("anchor indices must be distinct")


def sample_anchors(X: np.ndarray, m: int, seed) -> AnchorSet:
    """Sample m distinct rows uniformly without replacement; seeded.

    ``seed`` may be an int or a numpy Generator (passed through), so callers
    with a single RNG stream stay deterministic.
    """
    X = validate_features(X)
    n = X.shape[0]
    if not 1 <= m <= n:
        raise ValidationError(f"anchor count m={m} must satisfy 1 <= m <= n={n}")
    rng = np.random.default_rng(seed)
    idx = rng.choice(n, size=m, replace=False)
    return AnchorSet(anchors=np.ascontiguousarray(X[idx]), indices=idx.astype(np.int64))


@dataclass(frozen=True)
class SplitResult:
    train_X: np.ndarray
    train_labels: np.ndarray
    test_X: np.ndarray
    test_labels: np.ndarray
    train_indices: np.ndarray
    test_indices: np.ndarray


def split(
    X: np.ndarray,
    labels,
    test_fraction: float,
    seed,
    stratified: bool = False,
) -> SplitResult:
    """Disjoint, exhaustive train/test partition preserving row/label alignment.

    With ``stratified=True`` each class keeps at least one training example
    and test rows are drawn per class.
    """
    X = validate_features(X)
    labels = np.asarray(labels, dtype=np.int64)
    n = X.shape[0]
    if labels.shape != (n,):
        raise ValidationError("labels must align with feature rows")
    if not 0.0 < test_fraction < 1.0:
        raise ValidationError("test_fraction must lie strictly between 0 and 1")
    rng = np.random.default_rng(seed)

    if stratified:
        test_idx = []
        for cls in np.unique(labels):
            rows = np.flatnonzero(labels == cls)
            k = int(round(rows.size * test_fraction))
            k = min(k, rows.size - 1)  # keep the class represented in train
            if k > 0:
                test_idx.append(rng.permutation(rows)[:k])
        test_idx = (
            np.sort(np.concatenate(test_idx)) if test_idx else np.empty(0, np.int64)
        )
    else:
        k = int(round(n * test_fraction))
        test_idx = np.sort(rng.permutation(n)[:k])

    mask = np.zeros(n, dtype=bool)
    mask[test_idx] = True
    train_idx = np.flatnonzero(~mask)
    if train_idx.size == 0 or test_idx.size == 0:
        raise ValidationError(
            f"split produced an empty side (n={n}, test_fraction={test_fraction})"
        )
    return SplitResult(
        train_X=np.ascontiguousarray(X[train_idx]),
        train_labels=labels[train_idx],
        test_X=np.ascontiguousarray(X[test_idx]),
        test_labels=labels[test_idx],
        train_indices=train_idx.astype(np.int64),
        test_indices=test_idx.astype(np.int64),
    )
