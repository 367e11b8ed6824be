"""Shared toy-data builders for the test suite."""

from __future__ import annotations

import itertools

import numpy as np

from privsynth import DiscreteDataset, Schema, Workload, schema_from_cardinalities


def random_dataset(schema: Schema, n: int, rng) -> DiscreteDataset:
    rows = np.column_stack([rng.integers(0, t, n) for t in schema.cardinalities])
    return DiscreteDataset(schema, rows.reshape(n, schema.d))


def skewed_dataset(n: int, seed: int, cards=(4, 4, 4, 4, 4)) -> DiscreteDataset:
    """Correlated, skewed categorical data so marginal answers are sizable.

    Feature 0 is drawn from a skewed distribution; each later feature copies
    (a transform of) feature 0 half the time and draws fresh otherwise, which
    produces non-trivial 2-way and 3-way marginals.
    """
    rng = np.random.default_rng(seed)
    schema = schema_from_cardinalities(cards)
    probs = {
        2: [0.7, 0.3],
        3: [0.6, 0.3, 0.1],
        4: [0.55, 0.25, 0.15, 0.05],
    }
    base = rng.choice(cards[0], size=n, p=probs[cards[0]])
    cols = [base]
    for t in cards[1:]:
        fresh = rng.choice(t, size=n, p=probs[t])
        copy_mask = rng.random(n) < 0.5
        cols.append(np.where(copy_mask, base % t, fresh))
    return DiscreteDataset(schema, np.column_stack(cols))


def all_k_way_workload(schema: Schema, ks, kind="product") -> Workload:
    """Workload containing every marginal of each arity in `ks`."""
    marginals = []
    for k in ks:
        marginals.extend(itertools.combinations(range(schema.d), k))
    return Workload(schema, marginals, kind=kind)
