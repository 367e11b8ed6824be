"""Marginal and threshold query workloads, exact and relaxed evaluation.

A marginal query (S, y) counts the fraction of rows whose features S take the
categories y. On the one-hot layout it becomes a product query over the
column set T = {offset[i] + y_i}: q_T(x) = prod_{c in T} x_c, which extends
the 0/1 query differentiably to real-valued rows. The "at least one of k"
threshold variant is q_T(x) = 1 - prod_{c in T} (1 - x_c).

Answers are dataset averages (not counts), so each query has sensitivity 1/n
to a one-row change. Workload enumeration is odometer order (last feature
fastest) per marginal, with marginals sorted lexicographically; both choices
are arbitrary but fixed so serialized workloads are reproducible byte for
byte.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .schema import DiscreteDataset, RelaxedDataset, Schema, SchemaError

PRODUCT = "product"
ONE_OUT_OF_K = "one_out_of_k"
QUERY_KINDS = (PRODUCT, ONE_OUT_OF_K)

#: Queries evaluated per vectorized chunk; bounds peak memory on huge workloads.
DEFAULT_BATCH_SIZE = 1 << 16

# Enumerating all C(d, k) feature subsets is fine up to this count; above it,
# subsets are rejection-sampled instead.
_ENUMERATION_LIMIT = 1 << 20


class WorkloadError(ValueError):
    """Invalid workload request (arity, count, or index out of range)."""


@dataclass(frozen=True)
class MarginalQuery:
    """A value assignment y to a feature subset S."""

    features: tuple[int, ...]
    values: tuple[int, ...]

    def __post_init__(self):
        if len(set(self.features)) != len(self.features):
            raise WorkloadError("marginal features must be distinct")
        if len(self.features) != len(self.values):
            raise WorkloadError("features and values must have equal length")


@dataclass(frozen=True)
class CompiledQuery:
    """A query over one-hot columns: kind plus the column index set T."""

    kind: str
    columns: tuple[int, ...]

    def __post_init__(self):
        if self.kind not in QUERY_KINDS:
            raise WorkloadError(f"unknown query kind {self.kind!r}")
        if len(self.columns) == 0:
            raise WorkloadError("query must touch at least one column")


def compile_marginal(query: MarginalQuery, schema: Schema, kind: str = PRODUCT) -> CompiledQuery:
    """Map (S, y) to its one-hot column set T = {offset[i] + y_i : i in S}."""
    offsets = schema.offsets
    t = schema.cardinalities
    cols = []
    for i, y in zip(query.features, query.values):
        if not 0 <= i < schema.d:
            raise WorkloadError(f"feature index {i} out of range")
        if not 0 <= y < t[i]:
            raise WorkloadError(f"category {y} out of range for feature {i}")
        cols.append(offsets[i] + y)
    return CompiledQuery(kind, tuple(sorted(cols)))


class Workload:
    """An ordered list of compiled queries generated from marginal sets.

    For each marginal S (in the stored order) every category assignment
    y in prod_i [0, t_i) is enumerated odometer-style, keeping each
    marginal's queries contiguous.
    """

    def __init__(self, schema: Schema, marginals, kind: str = PRODUCT, seed: int | None = None):
        if kind not in QUERY_KINDS:
            raise WorkloadError(f"unknown query kind {kind!r}")
        self.schema = schema
        self.kind = kind
        self.seed = seed
        self.marginals = [tuple(int(i) for i in s) for s in marginals]
        t = schema.cardinalities
        queries: list[CompiledQuery] = []
        slices: list[tuple[int, int]] = []
        for s in self.marginals:
            if len(set(s)) != len(s):
                raise WorkloadError(f"marginal {s} has repeated features")
            start = len(queries)
            for y in itertools.product(*(range(t[i]) for i in s)):
                queries.append(compile_marginal(MarginalQuery(s, y), schema, kind))
            slices.append((start, len(queries)))
        self.queries = queries
        self._slices = slices

    @property
    def m(self) -> int:
        return len(self.queries)

    @property
    def k(self) -> int | None:
        """Common marginal arity, or None when marginals mix arities."""
        sizes = {len(s) for s in self.marginals}
        return sizes.pop() if len(sizes) == 1 else None

    def marginal_sizes(self) -> list[int]:
        return [b - a for a, b in self._slices]

    def to_json_dict(self) -> dict:
        return {
            "kind": self.kind,
            "k": self.k,
            "seed": self.seed,
            "marginals": [list(s) for s in self.marginals],
        }

    def save(self, path) -> None:
        Path(path).write_text(
            json.dumps(self.to_json_dict(), sort_keys=True, indent=2) + "\n", encoding="utf-8"
        )

    @classmethod
    def from_json_dict(cls, schema: Schema, obj: dict) -> "Workload":
        return cls(schema, obj["marginals"], kind=obj["kind"], seed=obj.get("seed"))

    @classmethod
    def load(cls, schema: Schema, path) -> "Workload":
        return cls.from_json_dict(schema, json.loads(Path(path).read_text(encoding="utf-8")))

    def compiled_json_dict(self) -> list[list[int]]:
        """Dump of the compiled column index sets, one array per query."""
        return [list(q.columns) for q in self.queries]


def random_workload(
    schema: Schema, k: int, num_marginals: int, seed: int, kind: str = PRODUCT
) -> Workload:
    """Sample distinct k-subsets of features uniformly and enumerate them.

    The same (schema, k, num_marginals, seed, kind) always yields the same
    workload; the selected marginals are stored sorted lexicographically.
    """
    d = schema.d
    if not 1 <= k <= d:
        raise WorkloadError(f"k={k} must be in [1, {d}]")
    total = math.comb(d, k)
    if num_marginals > total:
        raise WorkloadError(f"requested {num_marginals} marginals but only {total} exist")
    rng = np.random.default_rng(seed)
    if total <= _ENUMERATION_LIMIT:
        combos = list(itertools.combinations(range(d), k))
        chosen_idx = rng.choice(total, size=num_marginals, replace=False)
        chosen = [combos[i] for i in sorted(chosen_idx.tolist())]
    else:
        seen: set[tuple[int, ...]] = set()
        while len(seen) < num_marginals:
            s = tuple(sorted(rng.choice(d, size=k, replace=False).tolist()))
            seen.add(s)
        chosen = sorted(seen)
    return Workload(schema, chosen, kind=kind, seed=seed)


# ---------------------------------------------------------------------------
# Exact evaluation on discrete data
# ---------------------------------------------------------------------------

_EINSUM_AXES = "abcdefgh"


def _marginal_counts(rows: np.ndarray, t, subset) -> np.ndarray:
    """Joint match counts for every assignment to `subset`, odometer order."""
    ops, labels = [], []
    for pos, i in enumerate(subset):
        ind = (rows[:, i][:, None] == np.arange(t[i])[None, :]).astype(np.float64)
        ops.append(ind)
        labels.append("z" + _EINSUM_AXES[pos])
    spec = ",".join(labels) + "->" + _EINSUM_AXES[: len(subset)]
    return np.einsum(spec, *ops).ravel()


def _marginal_nomatch_counts(rows: np.ndarray, t, subset) -> np.ndarray:
    """Counts of rows matching none of the assignment's pairs, odometer order."""
    ops, labels = [], []
    for pos, i in enumerate(subset):
        ind = (rows[:, i][:, None] != np.arange(t[i])[None, :]).astype(np.float64)
        ops.append(ind)
        labels.append("z" + _EINSUM_AXES[pos])
    spec = ",".join(labels) + "->" + _EINSUM_AXES[: len(subset)]
    return np.einsum(spec, *ops).ravel()


def eval_discrete(workload: Workload, dataset: DiscreteDataset) -> np.ndarray:
    """Exact answers on discrete data, as match fractions count/n.

    Counts are accumulated per marginal with indicator contractions, so every
    answer is an exactly-representable integer divided by n.
    """
    if dataset.schema != workload.schema:
        raise SchemaError("workload and dataset schemas differ")
    if len(workload.marginals) > 0 and max(len(s) for s in workload.marginals) > len(_EINSUM_AXES):
        raise WorkloadError(f"marginal arity above {len(_EINSUM_AXES)} is not supported")
    n = dataset.n
    t = workload.schema.cardinalities
    out = np.empty(workload.m, dtype=np.float64)
    for s, (a, b) in zip(workload.marginals, workload._slices):
        if n == 0:
            out[a:b] = 0.0
            continue
        if workload.kind == PRODUCT:
            out[a:b] = _marginal_counts(dataset.rows, t, s) / n
        else:
            out[a:b] = 1.0 - _marginal_nomatch_counts(dataset.rows, t, s) / n
    return out


# ---------------------------------------------------------------------------
# Relaxed (differentiable) evaluation and hand-derived gradients
# ---------------------------------------------------------------------------


def _augment_t(X: np.ndarray) -> np.ndarray:
    """Transpose to (columns, rows) layout, appending constant 1/0 pad rows.

    Queries gather whole one-hot columns; in transposed C-order each gather
    is a contiguous row copy instead of a strided column walk.
    """
    n, w = X.shape
    out = np.empty((w + 2, n), dtype=np.float64)
    out[:w] = X.T
    out[w] = 1.0
    out[w + 1] = 0.0
    return out


def _pack(queries, d_prime: int):
    """Group queries by kind into padded column-index matrices.

    Returns a list of (kind, cols, pos): cols is (g, k_max) int32, padded with
    the multiplicative-identity sentinel column for its kind; pos maps group
    rows back to positions in the input list.
    """
    by_kind: dict[str, list[int]] = {}
    for j, q in enumerate(queries):
        by_kind.setdefault(q.kind, []).append(j)
    groups = []
    for kind, idxs in by_kind.items():
        kmax = max(len(queries[j].columns) for j in idxs)
        pad = d_prime if kind == PRODUCT else d_prime + 1  # x=1 resp. 1-x=1
        cols = np.full((len(idxs), kmax), pad, dtype=np.int32)
        for r, j in enumerate(idxs):
            c = queries[j].columns
            cols[r, : len(c)] = c
        groups.append((kind, cols, np.asarray(idxs, dtype=np.int64)))
    return groups


# Soft cap on rows*queries per gradient chunk: the gradient keeps ~2k slot
# buffers of that size alive, so chunks shrink as the relaxed dataset grows.
_GRAD_CELL_BUDGET = 1 << 22


class QueryEvaluator:
    """Packed query list with precomputed scatter plans, built once per use.

    The optimizer calls the gradient thousands of times on a fixed query
    list; packing the column sets and sorting each slot's scatter targets up
    front turns the per-step gradient accumulation into contiguous segment
    sums (add.reduceat) instead of per-element scattered adds.
    """

    def __init__(self, queries, d_prime: int, n_rows: int, batch_size: int = DEFAULT_BATCH_SIZE):
        self.m = len(queries)
        self.d_prime = d_prime
        self.n_rows = n_rows
        self.batch_size = batch_size
        self.groups = _pack(queries, d_prime)
        grad_batch = max(1, min(batch_size, _GRAD_CELL_BUDGET // max(1, n_rows)))
        self._batches = []  # (kind, sub, pos_slice, per-slot scatter plans)
        for kind, cols, pos in self.groups:
            for b0 in range(0, cols.shape[0], grad_batch):
                sub = cols[b0 : b0 + grad_batch]
                plans = [self._scatter_plan(sub[:, p]) for p in range(sub.shape[1])]
                self._batches.append((kind, sub, pos[b0 : b0 + grad_batch], plans))

    @staticmethod
    def _scatter_plan(slot_cols: np.ndarray):
        """Plan for accumulating per-query values into their target columns.

        Small targets get a dense one-hot matrix (the accumulation becomes a
        BLAS matmul); otherwise queries are grouped by target column and
        summed segment-wise.
        """
        distinct, inverse = np.unique(slot_cols, return_inverse=True)
        if slot_cols.shape[0] * distinct.shape[0] <= 1 << 24:
            onehot = np.zeros((slot_cols.shape[0], distinct.shape[0]), dtype=np.float64)
            onehot[np.arange(slot_cols.shape[0]), inverse] = 1.0
            return ("dense", onehot, distinct)
        order = np.argsort(slot_cols, kind="stable")
        _, starts = np.unique(slot_cols[order], return_index=True)
        return ("segments", (order, starts), distinct)

    def answers(self, X: np.ndarray) -> np.ndarray:
        """Query values averaged over the rows of X."""
        n = X.shape[0]
        Xt = _augment_t(X)
        out = np.empty(self.m, dtype=np.float64)
        for kind, cols, pos in self.groups:
            base = Xt if kind == PRODUCT else 1.0 - Xt
            for b0 in range(0, cols.shape[0], self.batch_size):
                sub = cols[b0 : b0 + self.batch_size]
                prod = base[sub[:, 0]].copy()
                for p in range(1, sub.shape[1]):
                    prod *= base[sub[:, p]]
                vals = prod.sum(axis=1) / n
                if kind == ONE_OUT_OF_K:
                    vals = 1.0 - vals
                out[pos[b0 : b0 + self.batch_size]] = vals
        return out

    def loss_and_gradient(self, X: np.ndarray, targets: np.ndarray) -> tuple[float, np.ndarray]:
        """Squared-error loss and its gradient in the data matrix.

        loss = sum_j (q_j(X) - a_j)^2. For a product query,
        d q_j / d X[r, c] is the leave-one-out product
        prod_{i in T, i != c} X[r, i] scaled by 1/n_rows; for the threshold
        kind the same leave-one-out form applies to (1 - X), and the two
        minus signs of the chain rule cancel, so both kinds share one sign.
        Entries outside a query's column set contribute zero.
        """
        n = X.shape[0]
        Xt = _augment_t(X)
        grad_t = np.zeros_like(Xt)
        loss = 0.0
        for kind, sub, pos, plans in self._batches:
            base = Xt if kind == PRODUCT else 1.0 - Xt
            kmax = sub.shape[1]
            slot_vals = [base[sub[:, p]] for p in range(kmax)]  # (batch, n) each
            # suffix[p] = product of slots p+1..k-1; running accumulates all
            suffix = [None] * kmax
            running = np.ones_like(slot_vals[0])
            for p in range(kmax - 1, 0, -1):
                suffix[p] = running
                running = running * slot_vals[p]
            suffix[0] = running
            full = running * slot_vals[0]
            vals = full.sum(axis=1) / n
            if kind == ONE_OUT_OF_K:
                vals = 1.0 - vals
            res = vals - targets[pos]
            loss += float(res @ res)
            coef = (2.0 / n) * res
            prefix = None
            for p in range(kmax):
                loo = suffix[p] if prefix is None else prefix * suffix[p]
                style, plan, distinct = plans[p]
                if style == "dense":
                    grad_t[distinct] += (plan * coef[:, None]).T @ loo
                else:
                    order, starts = plan
                    weighted = loo * coef[:, None]
                    grad_t[distinct] += np.add.reduceat(weighted[order], starts, axis=0)
                if p + 1 < kmax:
                    prefix = slot_vals[p] if prefix is None else prefix * slot_vals[p]
        return loss, grad_t[: self.d_prime].T.copy()


def eval_relaxed(
    workload: Workload, relaxed: RelaxedDataset, batch_size: int = DEFAULT_BATCH_SIZE
) -> np.ndarray:
    """Differentiable-query values averaged over the relaxed rows.

    On rows that are valid one-hot vectors this agrees exactly with
    eval_discrete on the decoded rows: both reduce to count/n.
    """
    if relaxed.data.shape[1] != workload.schema.d_prime:
        raise SchemaError(
            f"relaxed width {relaxed.data.shape[1]} != schema d_prime {workload.schema.d_prime}"
        )
    if relaxed.n == 0:
        return np.zeros(workload.m, dtype=np.float64)
    ev = QueryEvaluator(workload.queries, workload.schema.d_prime, relaxed.n, batch_size)
    return ev.answers(relaxed.data)


def eval_compiled(
    queries, relaxed: RelaxedDataset, batch_size: int = DEFAULT_BATCH_SIZE
) -> np.ndarray:
    """eval_relaxed for an explicit query list (e.g. a selected subset)."""
    if relaxed.n == 0:
        return np.zeros(len(queries), dtype=np.float64)
    ev = QueryEvaluator(queries, relaxed.schema.d_prime, relaxed.n, batch_size)
    return ev.answers(relaxed.data)


def loss_and_gradient(
    queries,
    targets: np.ndarray,
    relaxed: RelaxedDataset,
    batch_size: int = DEFAULT_BATCH_SIZE,
) -> tuple[float, np.ndarray]:
    """One-shot loss/gradient; see QueryEvaluator.loss_and_gradient.

    Loops that evaluate the same query list repeatedly should build one
    QueryEvaluator and reuse it instead.
    """
    targets = np.asarray(targets, dtype=np.float64)
    if len(queries) != targets.shape[0]:
        raise WorkloadError(f"{len(queries)} queries but {targets.shape[0]} targets")
    ev = QueryEvaluator(queries, relaxed.schema.d_prime, relaxed.n, batch_size)
    return ev.loss_and_gradient(relaxed.data, targets)
