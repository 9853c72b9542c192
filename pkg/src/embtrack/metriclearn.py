"""Embedding distances and the BatchHard triplet loss.

For every anchor element ``j`` carrying a track identity the loss adds

    softplus(m + max_{p: t_p = t_j} D[j, p] - min_{l: t_l != t_j} D[j, l])

where ``D`` is the (non-squared) Euclidean distance matrix. The positive
search includes ``p = j`` and only elements from ``j``'s own clip compete as
positives or negatives.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Hashable, Optional, Sequence

import numpy as np

DEFAULT_MARGIN = 0.1
DEFAULT_TRIPLET_COUNT = 64


def euclidean_distance(a, b) -> float:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return float(np.sqrt(np.sum((a - b) ** 2)))


def cosine_distance(a, b) -> float:
    """``1 - cos(angle)``, in ``[0, 2]``. Zero vectors have no direction and raise."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    if na == 0 or nb == 0:
        raise ValueError("cosine distance is undefined for a zero vector")
    cos = float(np.dot(a, b) / (na * nb))
    return 1.0 - min(1.0, max(-1.0, cos))


def cosine_distance_matrix(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    a = np.atleast_2d(np.asarray(a, dtype=float))
    b = np.atleast_2d(np.asarray(b, dtype=float))
    na = np.linalg.norm(a, axis=1)
    nb = np.linalg.norm(b, axis=1)
    if np.any(na == 0) or np.any(nb == 0):
        raise ValueError("cosine distance is undefined for a zero vector")
    cos = (a @ b.T) / np.outer(na, nb)
    return 1.0 - np.clip(cos, -1.0, 1.0)


def pairwise_euclidean(embeddings: np.ndarray) -> np.ndarray:
    """Exact pairwise distances via differences; the Gram-matrix trick loses the zero diagonal."""
    e = np.asarray(embeddings, dtype=float)
    diff = e[:, None, :] - e[None, :, :]
    return np.sqrt(np.sum(diff * diff, axis=-1))


def softplus(x):
    return np.logaddexp(0.0, x)


@dataclass
class TripletBatch:
    """Embeddings of the anchors in one training batch.

    ``track_ids`` entries may be ``None`` for anchors without an identity;
    those never take part in the loss. ``clip_ids`` defaults to a single clip.
    """

    embeddings: np.ndarray
    track_ids: Sequence[Optional[Hashable]]
    clip_ids: Optional[Sequence[Hashable]] = None
    margin: float = DEFAULT_MARGIN

    def __post_init__(self):
        self.embeddings = np.atleast_2d(np.asarray(self.embeddings, dtype=float))
        n = len(self.embeddings)
        if self.embeddings.size == 0:
            self.embeddings = self.embeddings.reshape(0, 0)
            n = 0
        self.track_ids = list(self.track_ids)
        self.clip_ids = [0] * n if self.clip_ids is None else list(self.clip_ids)
        if len(self.track_ids) != n or len(self.clip_ids) != n:
            raise ValueError("embeddings, track_ids and clip_ids must have equal length")
        if not np.all(np.isfinite(self.embeddings)):
            raise ValueError("embeddings must be finite")
        if self.margin < 0:
            raise ValueError("margin must be non-negative")

    def __len__(self) -> int:
        return len(self.track_ids)


@dataclass
class BatchHardResult:
    loss: float
    terms: np.ndarray  # per-anchor softplus term, NaN where skipped
    hardest_positive: np.ndarray  # index per anchor, -1 where skipped
    hardest_negative: np.ndarray
    skipped: int  # identity-carrying anchors with no same-clip negative
    eligible: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=bool))


def _masks(batch: TripletBatch):
    tids = batch.track_ids
    cids = batch.clip_ids
    n = len(batch)
    has_id = np.array([t is not None for t in tids], dtype=bool)
    same_track = np.array(
        [[tids[i] is not None and tids[i] == tids[j] for j in range(n)] for i in range(n)],
        dtype=bool,
    ).reshape(n, n)
    same_clip = np.array(
        [[cids[i] == cids[j] for j in range(n)] for i in range(n)], dtype=bool
    ).reshape(n, n)
    both = has_id[:, None] & has_id[None, :] & same_clip
    return has_id, both & same_track, both & ~same_track


def batchhard_details(batch: TripletBatch) -> BatchHardResult:
    n = len(batch)
    terms = np.full(n, np.nan)
    hp = np.full(n, -1, dtype=int)
    hn = np.full(n, -1, dtype=int)
    if n == 0:
        return BatchHardResult(0.0, terms, hp, hn, 0, np.zeros(0, dtype=bool))
    dist = pairwise_euclidean(batch.embeddings)
    has_id, pos, neg = _masks(batch)
    eligible = has_id & neg.any(axis=1)
    rows = np.flatnonzero(eligible)
    if len(rows):
        pos_d = np.where(pos, dist, -np.inf)[rows]
        neg_d = np.where(neg, dist, np.inf)[rows]
        hp[rows] = np.argmax(pos_d, axis=1)
        hn[rows] = np.argmin(neg_d, axis=1)
        terms[rows] = softplus(
            batch.margin + pos_d[np.arange(len(rows)), hp[rows]]
            - neg_d[np.arange(len(rows)), hn[rows]]
        )
    skipped = int(np.sum(has_id & ~eligible))
    loss = float(np.sum(terms[rows])) if len(rows) else 0.0
    return BatchHardResult(loss, terms, hp, hn, skipped, eligible)


def batchhard_loss(batch: TripletBatch) -> float:
    """Full BatchHard sum over every identity-carrying anchor that has a negative."""
    return batchhard_details(batch).loss


def batchhard_loss_bruteforce(batch: TripletBatch) -> float:
    """Reference loss by explicit enumeration of all (j, p, l) triples.

    Deliberately loop-based and sharing no code with :func:`batchhard_details`
    beyond the scalar distance, so it can serve as an oracle.
    """
    e = batch.embeddings
    t = batch.track_ids
    c = batch.clip_ids
    n = len(batch)
    total = 0.0
    for j in range(n):
        if t[j] is None:
            continue
        best = None
        for p in range(n):
            if t[p] != t[j] or c[p] != c[j]:
                continue
            for q in range(n):
                if t[q] is None or t[q] == t[j] or c[q] != c[j]:
                    continue
                v = batch.margin + euclidean_distance(e[j], e[p]) - euclidean_distance(e[j], e[q])
                best = v if best is None or v > best else best
        if best is not None:
            total += float(np.log1p(np.exp(best))) if best < 30 else best + float(np.log1p(np.exp(-best)))
    return total


def sample_training_triplets(
    batch: TripletBatch, count: int = DEFAULT_TRIPLET_COUNT, rng_seed: int = 0
) -> list[tuple[int, int, int]]:
    """Draw ``count`` BatchHard triples ``(anchor, hardest positive, hardest negative)``.

    Anchors are drawn uniformly without replacement until every eligible
    anchor has been used once, then with replacement.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    det = batchhard_details(batch)
    pool = np.flatnonzero(det.eligible)
    if len(pool) == 0:
        return []
    rng = np.random.default_rng(rng_seed)
    first = rng.permutation(pool)[:count]
    rest = rng.choice(pool, size=count - len(first), replace=True)
    picks = np.concatenate([first, rest]).astype(int)
    return [(int(j), int(det.hardest_positive[j]), int(det.hardest_negative[j])) for j in picks]


def sampled_batchhard_loss(
    batch: TripletBatch, count: int = DEFAULT_TRIPLET_COUNT, rng_seed: int = 0
) -> float:
    """Loss summed over ``count`` sampled triples instead of every anchor."""
    triples = sample_training_triplets(batch, count, rng_seed)
    if not triples:
        return 0.0
    dist = pairwise_euclidean(batch.embeddings)
    vals = [batch.margin + dist[j, p] - dist[j, q] for j, p, q in triples]
    return float(np.sum(softplus(np.asarray(vals))))
