"""Retrieval and classification metrics over Hamming rankings.

Ground truth is label equality: a database item is relevant to a query iff
it shares the query's class. Rankings come from the exact packed-code scans
in :mod:`dhash.hamming`, so every metric is deterministic (ties broken by
row id). A query that retrieves nothing at a given radius counts as a miss:
its precision contribution is zero.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass

import numpy as np

from .errors import ValidationError
from .fsdh import TrainTrace
from .hamming import PackedIndex, distances_to


def f_measure(precision: float, recall: float) -> float:
    """2 p r / (p + r), defined as 0 when both are 0."""
    if precision + recall == 0.0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def average_precision(ranked_relevance, total_relevant: int) -> float:
    """AP of one ranked list: mean over relevant ranks k of precision@k,
    normalized by the total number of relevant items in the database."""
    rel = np.asarray(ranked_relevance, dtype=np.float64)
    hits = int(rel.sum())
    if total_relevant < hits:
        raise ValidationError(
            f"total_relevant={total_relevant} is less than the {hits} hits listed"
        )
    if total_relevant == 0:
        raise ValidationError("AP is undefined for a query with no relevant items")
    if hits == 0:
        return 0.0
    ranks = np.arange(1, rel.size + 1)
    prec_at_k = np.cumsum(rel) / ranks
    return float(np.sum(prec_at_k * rel) / total_relevant)


def _ranked_labels(index: PackedIndex, q: np.ndarray, skip_row: int | None):
    """Database labels ordered by (distance, row id) for one query."""
    d = distances_to(index.codes, q)
    labels = index.labels
    if skip_row is not None:
        keep = np.arange(index.size) != skip_row
        d = d[keep]
        labels = labels[keep]
    order = np.argsort(d, kind="stable")
    return labels[order], d[order]


def _query_iter(index, query_codes, query_labels, self_exclude):
    query_codes = np.atleast_2d(np.asarray(query_codes, dtype=np.uint64))
    query_labels = np.asarray(query_labels, dtype=np.int64)
    if query_codes.shape[0] != query_labels.shape[0]:
        raise ValidationError("query codes and labels disagree in length")
    if query_codes.shape[0] == 0:
        raise ValidationError("empty query set")
    if self_exclude and query_codes.shape[0] > index.size:
        raise ValidationError("self-exclusion assumes queries are database rows")
    for i in range(query_codes.shape[0]):
        yield i, query_codes[i], int(query_labels[i]), (i if self_exclude else None)


def mean_average_precision(
    index: PackedIndex,
    query_codes,
    query_labels,
    depth: int | None = None,
    self_exclude: bool = False,
) -> float:
    """Mean AP over queries with at least one relevant database item.

    ``depth`` caps the ranking (default: full depth). ``self_exclude`` drops
    database row i for query i (for query sets drawn from the database).
    """
    aps = []
    for _, q, lab, skip in _query_iter(index, query_codes, query_labels, self_exclude):
        labels, _ = _ranked_labels(index, q, skip)
        total = int(np.count_nonzero(labels == lab))
        if total == 0:
            continue
        rel = labels == lab if depth is None else labels[:depth] == lab
        aps.append(average_precision(rel, total))
    if not aps:
        raise ValidationError("no query has a relevant database item")
    return float(np.mean(aps))


def precision_at_n(
    index: PackedIndex,
    query_codes,
    query_labels,
    n_top: int,
    self_exclude: bool = False,
) -> float:
    """Mean fraction of true neighbors among the top n_top retrieved items."""
    limit = index.size - (1 if self_exclude else 0)
    if not 1 <= n_top <= limit:
        raise ValidationError(f"n_top={n_top} must satisfy 1 <= n_top <= {limit}")
    fracs = []
    for _, q, lab, skip in _query_iter(index, query_codes, query_labels, self_exclude):
        labels, _ = _ranked_labels(index, q, skip)
        fracs.append(np.count_nonzero(labels[:n_top] == lab) / n_top)
    return float(np.mean(fracs))


def lookup_prf(
    index: PackedIndex,
    query_codes,
    query_labels,
    radius: int = 2,
    self_exclude: bool = False,
) -> tuple[float, float, float]:
    """Hash-lookup precision/recall/F at a Hamming radius.

    Per query: precision = relevant-retrieved / retrieved, zero when the
    lookup returns nothing; recall = relevant-retrieved / total-relevant.
    The returned values are means over queries, with F computed from the two
    means (0 when both vanish).
    """
    if radius < 0:
        raise ValidationError("radius must be nonnegative")
    precisions, recalls = [], []
    for _, q, lab, skip in _query_iter(index, query_codes, query_labels, self_exclude):
        labels, dists = _ranked_labels(index, q, skip)
        retrieved = labels[dists <= radius]
        rel_retrieved = int(np.count_nonzero(retrieved == lab))
        precisions.append(
            rel_retrieved / retrieved.size if retrieved.size else 0.0
        )
        total = int(np.count_nonzero(labels == lab))
        recalls.append(rel_retrieved / total if total else 0.0)
    p = float(np.mean(precisions))
    r = float(np.mean(recalls))
    return p, r, f_measure(p, r)


def accuracy_1nn(
    index: PackedIndex,
    query_codes,
    query_labels,
    self_exclude: bool = False,
) -> float:
    """Fraction of queries whose Hamming-nearest database row shares the label."""
    if self_exclude and index.size < 2:
        raise ValidationError("self-exclusion leaves an empty candidate set")
    correct = 0
    count = 0
    for _, q, lab, skip in _query_iter(index, query_codes, query_labels, self_exclude):
        labels, _ = _ranked_labels(index, q, skip)
        correct += int(labels[0] == lab)
        count += 1
    return correct / count


def timing_report(
    trace: TrainTrace, encode_batch_seconds, n_queries: int
) -> tuple[float, float]:
    """(train_seconds, test_seconds_per_query).

    Training time is initialization plus the sum of all step durations; test
    time is the total encode+lookup duration divided by the query count.
    """
    if n_queries < 1:
        raise ValidationError("n_queries must be >= 1")
    train_seconds = trace.init_seconds + trace.step_seconds()
    total = float(np.sum(np.atleast_1d(np.asarray(encode_batch_seconds, dtype=float))))
    return train_seconds, total / n_queries


@dataclass
class MetricsReport:
    method: str
    bits: int
    map: float
    precision_at_n: float
    top_n: int
    precision_r: float
    recall_r: float
    f_measure_r: float
    radius: int
    accuracy: float
    train_seconds: float
    test_seconds_per_query: float

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)

    def csv_header(self) -> str:
        r = self.radius
        return (
            f"method,bits,map,precision_r{r},recall_r{r},f_r{r},"
            "accuracy,train_s,test_s"
        )

    def csv_row(self) -> str:
        return ",".join(
            [
                self.method,
                str(self.bits),
                repr(self.map),
                repr(self.precision_r),
                repr(self.recall_r),
                repr(self.f_measure_r),
                repr(self.accuracy),
                repr(self.train_seconds),
                repr(self.test_seconds_per_query),
            ]
        )


def evaluate(
    index: PackedIndex,
    query_codes,
    query_labels,
    method: str,
    bits: int,
    radius: int = 2,
    top_n: int = 500,
    depth: int | None = None,
    self_exclude: bool = False,
    train_seconds: float = float("nan"),
    test_seconds_per_query: float = float("nan"),
) -> MetricsReport:
    """Compute the full metric suite for one method/bit-count run."""
    top_n = min(top_n, index.size - (1 if self_exclude else 0))
    p, r, f = lookup_prf(index, query_codes, query_labels, radius, self_exclude)
    return MetricsReport(
        method=method,
        bits=bits,
        map=mean_average_precision(index, query_codes, query_labels, depth, self_exclude),
        precision_at_n=precision_at_n(index, query_codes, query_labels, top_n, self_exclude),
        top_n=top_n,
        precision_r=p,
        recall_r=r,
        f_measure_r=f,
        radius=radius,
        accuracy=accuracy_1nn(index, query_codes, query_labels, self_exclude),
        train_seconds=train_seconds,
        test_seconds_per_query=test_seconds_per_query,
    )
