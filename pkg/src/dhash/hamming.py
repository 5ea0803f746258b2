"""Bit-packed binary codes and exact Hamming-space search.

Packing convention: on each row, code bit j lives at bit position ``j % 64``
(LSB first) of word ``j // 64``; +1 maps to bit 1, -1 to bit 0; unused
trailing bits of the last word are zero. Distances are XOR plus popcount
over the packed words; all lookups are exact linear scans, with ties broken
by ascending row id so results are deterministic.

Code files ("DHCB"): magic ``DHCB``, u32 version (currently 1), u64 rows,
u32 bits, then per-row little-endian packed u64 words. When labels are
available they follow as a parallel little-endian u32 array.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ParseError, ValidationError

DHCB_MAGIC = b"DHCB"
DHCB_VERSION = 1
WORD_BITS = 64


def sign_codes(A: np.ndarray) -> np.ndarray:
    """Quantize real values to {-1, +1} with the tie rule sgn(0) = +1."""
    return np.where(np.asarray(A) >= 0, 1, -1).astype(np.int8)


def validate_codes(B: np.ndarray) -> np.ndarray:
    B = np.asarray(B)
    if B.ndim != 2 or B.shape[0] < 1 or B.shape[1] < 1:
        raise ValidationError("code matrix must be 2-d and nonempty")
    if not np.all(np.isin(B, (-1, 1))):
        raise ValidationError("code entries must be -1 or +1")
    return B.astype(np.int8)


def words_per_row(bits: int) -> int:
    return (bits + WORD_BITS - 1) // WORD_BITS


def pack_codes(B: np.ndarray) -> np.ndarray:
    """Pack an n x l matrix over {-1, +1} into n x ceil(l/64) uint64 words."""
    B = validate_codes(B)
    n, bits = B.shape
    w = words_per_row(bits)
    padded = np.zeros((n, w * 64), dtype=np.uint64)
    padded[:, :bits] = B > 0
    shifts = np.arange(64, dtype=np.uint64)
    return (padded.reshape(n, w, 64) << shifts).sum(axis=2, dtype=np.uint64)


def unpack_codes(packed: np.ndarray, bits: int) -> np.ndarray:
    """Inverse of pack_codes; returns an int8 matrix over {-1, +1}."""
    packed = np.asarray(packed, dtype=np.uint64)
    n, w = packed.shape
    if w != words_per_row(bits):
        raise ValidationError(f"{w} words per row cannot hold {bits} bits")
    shifts = np.arange(64, dtype=np.uint64)
    flat = (packed[:, :, None] >> shifts) & np.uint64(1)
    bits01 = flat.reshape(n, w * 64)[:, :bits]
    return np.where(bits01 == 1, 1, -1).astype(np.int8)


def hamming_distance(a: np.ndarray, b: np.ndarray) -> int:
    """Distance between two packed code rows (number of differing bits)."""
    a = np.atleast_1d(np.asarray(a, dtype=np.uint64))
    b = np.atleast_1d(np.asarray(b, dtype=np.uint64))
    if a.shape != b.shape:
        raise ValidationError(f"code length mismatch: {a.shape} vs {b.shape}")
    return int(np.bitwise_count(a ^ b).sum())


def distances_to(codes: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Distances from one packed query row to every row of ``codes``."""
    q = np.atleast_1d(np.asarray(q, dtype=np.uint64))
    if codes.shape[1] != q.shape[0]:
        raise ValidationError(
            f"query has {q.shape[0]} words, index rows have {codes.shape[1]}"
        )
    return np.bitwise_count(codes ^ q[None, :]).sum(axis=1, dtype=np.int64)


def pairwise_hamming(A: np.ndarray, B: np.ndarray, block: int = 256) -> np.ndarray:
    """All-pairs distance matrix between packed code sets (rows of A x rows of B)."""
    A = np.asarray(A, dtype=np.uint64)
    B = np.asarray(B, dtype=np.uint64)
    if A.shape[1] != B.shape[1]:
        raise ValidationError("packed word counts differ")
    out = np.empty((A.shape[0], B.shape[0]), dtype=np.int64)
    for start in range(0, A.shape[0], block):
        stop = min(start + block, A.shape[0])
        xor = A[start:stop, None, :] ^ B[None, :, :]
        out[start:stop] = np.bitwise_count(xor).sum(axis=2, dtype=np.int64)
    return out


@dataclass(frozen=True)
class PackedIndex:
    """Immutable store of packed codes plus per-row class ids."""

    codes: np.ndarray  # n x words, uint64
    bits: int
    labels: np.ndarray  # n, int64

    def __post_init__(self):
        if self.codes.shape[0] != self.labels.shape[0]:
            raise ValidationError("codes and labels disagree in row count")
        _check_trailing_bits(self.codes, self.bits)

    @property
    def size(self) -> int:
        return self.codes.shape[0]

    @classmethod
    def from_codes(cls, B: np.ndarray, labels) -> "PackedIndex":
        B = validate_codes(B)
        labels = np.asarray(labels, dtype=np.int64)
        return cls(codes=pack_codes(B), bits=B.shape[1], labels=labels)


def _check_trailing_bits(packed: np.ndarray, bits: int) -> None:
    w = words_per_row(bits)
    if packed.ndim != 2 or packed.shape[1] != w:
        raise ValidationError(f"packed shape {packed.shape} cannot hold {bits} bits")
    rem = bits % 64
    if rem:
        mask = ~((np.uint64(1) << np.uint64(rem)) - np.uint64(1))
        if np.any(packed[:, -1] & mask):
            raise ValidationError("unused trailing bits must be zero")


def radius_lookup(index: PackedIndex, q: np.ndarray, r: int) -> np.ndarray:
    """Row ids with distance <= r, ascending by (distance, row id)."""
    if r < 0:
        raise ValidationError("radius must be nonnegative")
    d = distances_to(index.codes, q)
    hits = np.flatnonzero(d <= r)
    order = np.argsort(d[hits], kind="stable")
    return hits[order].astype(np.int64)


def rank_top_n(index: PackedIndex, q: np.ndarray, N: int) -> tuple[np.ndarray, np.ndarray]:
    """The N nearest rows as (ids, distances), ties broken by row id."""
    if not 1 <= N <= index.size:
        raise ValidationError(f"N={N} must satisfy 1 <= N <= {index.size}")
    d = distances_to(index.codes, q)
    order = np.argsort(d, kind="stable")[:N]
    return order.astype(np.int64), d[order]


def save_codes(path, packed: np.ndarray, bits: int, labels=None) -> None:
    """Write packed codes (and optionally labels) in the DHCB format."""
    packed = np.asarray(packed, dtype=np.uint64)
    _check_trailing_bits(packed, bits)
    n = packed.shape[0]
    with open(path, "wb") as fh:
        fh.write(DHCB_MAGIC)
        fh.write(struct.pack("<IQI", DHCB_VERSION, n, bits))
        fh.write(np.ascontiguousarray(packed, dtype="<u8").tobytes())
        if labels is not None:
            labels = np.asarray(labels)
            if labels.shape != (n,):
                raise ValidationError("labels must parallel the code rows")
            if labels.size and (labels.min() < 0 or labels.max() > 0xFFFFFFFF):
                raise ValidationError("labels must fit in u32")
            fh.write(np.ascontiguousarray(labels, dtype="<u4").tobytes())


def load_codes(path) -> tuple[np.ndarray, int, np.ndarray | None]:
    """Read a DHCB file; returns (packed, bits, labels-or-None)."""
    data = Path(path).read_bytes()
    head = 4 + 4 + 8 + 4
    if len(data) < head or data[:4] != DHCB_MAGIC:
        raise ParseError(f"{path}: not a DHCB file")
    version, n, bits = struct.unpack("<IQI", data[4:head])
    if version != DHCB_VERSION:
        raise ParseError(f"{path}: unsupported DHCB version {version}")
    w = words_per_row(bits)
    codes_bytes = n * w * 8
    labels = None
    if len(data) == head + codes_bytes + n * 4:
        labels = np.frombuffer(data[head + codes_bytes :], dtype="<u4").astype(np.int64)
    elif len(data) != head + codes_bytes:
        raise ParseError(f"{path}: truncated or oversized code section")
    packed = np.frombuffer(data[head : head + codes_bytes], dtype="<u8").reshape(n, w)
    packed = packed.astype(np.uint64)
    _check_trailing_bits(packed, bits)
    return packed, bits, labels
