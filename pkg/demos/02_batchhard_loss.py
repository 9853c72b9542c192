"""
BatchHard triplet loss
======================

For every anchor with a track identity, take its farthest same-track
embedding and its nearest other-track embedding, and penalise
``softplus(margin + hardest_positive - hardest_negative)``.
"""

import numpy as np

from embtrack.metriclearn import (
    TripletBatch,
    batchhard_details,
    batchhard_loss_bruteforce,
    sample_training_triplets,
)

# A 1-D toy batch: two anchors on track A, one on track B
batch = TripletBatch(np.array([[0.0], [0.2], [1.0]]), ["A", "A", "B"], margin=0.1)
details = batchhard_details(batch)
print("per-anchor terms:", np.round(details.terms, 5))
print("loss:", round(details.loss, 5), "oracle:", round(batchhard_loss_bruteforce(batch), 5))

# Triplets never cross clips: elements from another clip are invisible
rng = np.random.default_rng(0)
emb = rng.normal(size=(8, 16))
batch = TripletBatch(emb, [0, 0, 1, 1, 0, 0, 1, 1], clip_ids=[0, 0, 0, 0, 1, 1, 1, 1])
print("two-clip loss:", round(batchhard_details(batch).loss, 4))

# The training recipe samples 64 (anchor, positive, negative) triples
triples = sample_training_triplets(batch, count=64, rng_seed=1)
print("first triples:", triples[:4])
