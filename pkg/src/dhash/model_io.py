"""Binary persistence of trained hash models.

Layout ("DHMF", all integers and floats little-endian):

    magic "DHMF" | u32 version=1 | 4-byte method tag ("FSDH"/"SDH\\0")
    u32 bits | u32 classes | u32 anchors | u32 dim
    f64 sigma | u16 rule-length | sigma-rule utf-8
    f64 lambda | f64 nu | u32 max_iters | u64 seed
    anchors (m*d f64) | P (m*bits f64) | W (c*bits or bits*c f64 per method)
    u32 CRC-32 of every preceding byte

Saving is canonical, so save -> load -> save reproduces the file byte for
byte. Any structural damage or checksum mismatch raises CorruptModelError.
"""

from __future__ import annotations

import struct
import zlib
from pathlib import Path

import numpy as np

from .errors import CorruptModelError
from .fsdh import HashModel, TrainConfig
from .rbf import RbfMap

DHMF_MAGIC = b"DHMF"
DHMF_VERSION = 1
_METHOD_TAGS = {"fsdh": b"FSDH", "sdh": b"SDH\x00"}
_TAG_METHODS = {v: k for k, v in _METHOD_TAGS.items()}


def _f64_bytes(M: np.ndarray) -> bytes:
    return np.ascontiguousarray(M, dtype="<f8").tobytes()


def save_model(path, model: HashModel) -> None:
    cfg = model.config
    m, d = model.rbf.anchors.shape
    rule = cfg.sigma_rule.encode("utf-8")
    parts = [
        DHMF_MAGIC,
        struct.pack("<I", DHMF_VERSION),
        _METHOD_TAGS[model.method],
        struct.pack("<IIII", cfg.bits, model.num_classes, m, d),
        struct.pack("<d", model.rbf.sigma),
        struct.pack("<H", len(rule)),
        rule,
        struct.pack("<ddIQ", cfg.lam, cfg.nu, cfg.max_iters, cfg.seed),
        _f64_bytes(model.rbf.anchors),
        _f64_bytes(model.P),
        _f64_bytes(model.W),
    ]
    payload = b"".join(parts)
    with open(path, "wb") as fh:
        fh.write(payload)
        fh.write(struct.pack("<I", zlib.crc32(payload)))


class _Reader:
    def __init__(self, data: bytes, path):
        self.data = data
        self.pos = 0
        self.path = path

    def take(self, size: int) -> bytes:
        if self.pos + size > len(self.data):
            raise CorruptModelError(f"{self.path}: truncated model file")
        out = self.data[self.pos : self.pos + size]
        self.pos += size
        return out

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))

    def matrix(self, rows: int, cols: int) -> np.ndarray:
        raw = self.take(rows * cols * 8)
        return np.frombuffer(raw, dtype="<f8").reshape(rows, cols).copy()


def load_model(path) -> HashModel:
    data = Path(path).read_bytes()
    if len(data) < 4 + 4 + 4 + 4:
        raise CorruptModelError(f"{path}: truncated model file")
    stored_crc = struct.unpack("<I", data[-4:])[0]
    payload = data[:-4]
    if zlib.crc32(payload) != stored_crc:
        raise CorruptModelError(f"{path}: checksum mismatch")

    r = _Reader(payload, path)
    if r.take(4) != DHMF_MAGIC:
        raise CorruptModelError(f"{path}: bad magic")
    (version,) = r.unpack("<I")
    if version != DHMF_VERSION:
        raise CorruptModelError(f"{path}: unsupported model version {version}")
    tag = r.take(4)
    if tag not in _TAG_METHODS:
        raise CorruptModelError(f"{path}: unknown method tag {tag!r}")
    method = _TAG_METHODS[tag]
    bits, classes, m, d = r.unpack("<IIII")
    (sigma,) = r.unpack("<d")
    (rule_len,) = r.unpack("<H")
    rule = r.take(rule_len).decode("utf-8")
    lam, nu, max_iters, seed = r.unpack("<ddIQ")

    anchors = r.matrix(m, d)
    P = r.matrix(m, bits)
    W = r.matrix(classes, bits) if method == "fsdh" else r.matrix(bits, classes)
    if r.pos != len(payload):
        raise CorruptModelError(f"{path}: {len(payload) - r.pos} unexpected trailing bytes")

    config = TrainConfig(
        bits=bits, lam=lam, nu=nu, max_iters=max_iters,
        anchors=m, seed=seed, sigma_rule=rule,
    )
    try:
        return HashModel(
            method=method, rbf=RbfMap(anchors=anchors, sigma=sigma),
            P=P, W=W, config=config,
        )
    except Exception as exc:
        raise CorruptModelError(f"{path}: inconsistent model contents ({exc})") from exc
