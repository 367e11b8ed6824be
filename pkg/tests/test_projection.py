import itertools

import numpy as np
import pytest

from privsynth import (
    NoiseSource,
    Normalization,
    ProjectionConfig,
    RelaxedDataset,
    Workload,
    eval_relaxed,
    normalize_rows,
    one_hot,
    random_init,
    relaxed_projection,
    sparsemax,
    sparsemax_rows,
    schema_from_cardinalities,
)

from helpers import random_dataset


def brute_force_simplex_projection(z):
    """Exhaustive support search: best feasible affine projection per subset."""
    z = np.asarray(z, dtype=np.float64)
    n = z.size
    best, best_dist = None, np.inf
    for support in range(1, 2**n):
        idx = [i for i in range(n) if support >> i & 1]
        tau = (z[idx].sum() - 1.0) / len(idx)
        x = np.zeros(n)
        x[idx] = z[idx] - tau
        if (x[idx] >= -1e-12).all():
            dist = float(((x - z) ** 2).sum())
            if dist < best_dist:
                best, best_dist = np.maximum(x, 0.0), dist
    return best


class TestSparsemax:
    def test_simplex_points_are_fixed(self):
        np.testing.assert_array_equal(sparsemax([1.0, 0.0]), [1.0, 0.0])

    def test_uniform_shift(self):
        np.testing.assert_allclose(sparsemax([0.3, 0.3]), [0.5, 0.5], atol=1e-15)

    def test_clamps_to_vertex(self):
        np.testing.assert_allclose(sparsemax([2.0, 0.0]), [1.0, 0.0], atol=1e-15)

    def test_matches_brute_force(self):
        rng = np.random.default_rng(21)
        for _ in range(200):
            dim = int(rng.integers(1, 9))
            z = rng.uniform(-3, 3, dim)
            np.testing.assert_allclose(
                sparsemax(z), brute_force_simplex_projection(z), atol=1e-9
            )

    def test_idempotent(self):
        rng = np.random.default_rng(22)
        Z = rng.uniform(-2, 2, (50, 6))
        once = sparsemax_rows(Z)
        np.testing.assert_allclose(sparsemax_rows(once), once, atol=1e-12)

    def test_output_on_simplex(self):
        rng = np.random.default_rng(23)
        out = sparsemax_rows(rng.uniform(-5, 5, (100, 7)))
        assert (out >= 0).all()
        np.testing.assert_allclose(out.sum(axis=1), 1.0, atol=1e-9)

    def test_rejects_bad_input(self):
        with pytest.raises(ValueError):
            sparsemax([])
        with pytest.raises(ValueError):
            sparsemax([np.nan, 0.0])


class TestNormalizeRows:
    def test_one_hot_is_fixed_point(self):
        s = schema_from_cardinalities((2, 3))
        d = random_dataset(s, 10, np.random.default_rng(1))
        relaxed = one_hot(d).as_relaxed()
        out = normalize_rows(relaxed, Normalization("sparsemax"))
        np.testing.assert_array_equal(out.data, relaxed.data)

    def test_sparsemax_per_block(self):
        s = schema_from_cardinalities((2,))
        out = normalize_rows(RelaxedDataset(s, np.array([[0.3, 0.3]])))
        np.testing.assert_allclose(out.data, [[0.5, 0.5]], atol=1e-15)

    def test_clip_mode(self):
        s = schema_from_cardinalities((2,))
        out = normalize_rows(
            RelaxedDataset(s, np.array([[1.7, -1.4]])), Normalization("clip", -1.0, 1.0)
        )
        np.testing.assert_array_equal(out.data, [[1.0, -1.0]])

    def test_clip_then_sparsemax(self):
        s = schema_from_cardinalities((3,))
        out = normalize_rows(
            RelaxedDataset(s, np.array([[5.0, 0.0, -3.0]])),
            Normalization("clip+sparsemax", -1.0, 1.0),
        )
        np.testing.assert_allclose(out.data, [[1.0, 0.0, 0.0]], atol=1e-12)

    def test_blocks_sum_to_one(self):
        rng = np.random.default_rng(2)
        s = schema_from_cardinalities((3, 4, 2))
        out = normalize_rows(RelaxedDataset(s, rng.uniform(-1, 1, (20, 9))))
        for off, t in zip(s.offsets, s.cardinalities):
            np.testing.assert_allclose(out.data[:, off : off + t].sum(axis=1), 1.0, atol=1e-9)


class TestRelaxedProjection:
    def _toy(self, seed=0, n=50, cards=(3, 3, 3)):
        rng = np.random.default_rng(seed)
        s = schema_from_cardinalities(cards)
        data = random_dataset(s, n, rng)
        w = Workload(s, list(itertools.combinations(range(len(cards)), 2)))
        return s, data, w

    def test_already_optimal_stops_fast(self):
        s, data, w = self._toy()
        start = one_hot(data).as_relaxed()
        targets = eval_relaxed(w, start)
        result = relaxed_projection(w.queries, targets, start)
        assert result.best_loss == 0.0
        assert result.steps <= 2
        np.testing.assert_array_equal(result.dataset.data, start.data)

    def test_best_iterate_never_worse_than_start(self):
        s, data, w = self._toy(seed=3)
        rng = NoiseSource(4, "init")
        start = random_init(s, 30, rng)
        targets = eval_relaxed(w, one_hot(data).as_relaxed())
        config = ProjectionConfig(max_steps=40)
        result = relaxed_projection(w.queries, targets, start, config)
        assert result.best_loss <= result.losses[0]
        assert all(np.isfinite(l) for l in result.losses)

    def test_loss_decreases_on_recovery_instance(self):
        s, data, w = self._toy(seed=5, n=100)
        start = random_init(s, 100, NoiseSource(6, "init"))
        targets = eval_relaxed(w, one_hot(data).as_relaxed())
        result = relaxed_projection(w.queries, targets, start, ProjectionConfig(max_steps=800))
        assert result.best_loss < 0.05 * result.losses[0]

    def test_blocks_normalized_after_projection(self):
        s, data, w = self._toy(seed=7)
        start = random_init(s, 20, NoiseSource(8, "init"))
        targets = eval_relaxed(w, one_hot(data).as_relaxed())
        result = relaxed_projection(w.queries, targets, start, ProjectionConfig(max_steps=30))
        out = result.dataset.data
        assert (out >= 0).all()
        for off, t in zip(s.offsets, s.cardinalities):
            np.testing.assert_allclose(out[:, off : off + t].sum(axis=1), 1.0, atol=1e-9)

    def test_deterministic_given_same_start(self):
        s, data, w = self._toy(seed=9)
        targets = eval_relaxed(w, one_hot(data).as_relaxed())
        config = ProjectionConfig(max_steps=50)
        r1 = relaxed_projection(w.queries, targets, random_init(s, 10, NoiseSource(1, "init")), config)
        r2 = relaxed_projection(w.queries, targets, random_init(s, 10, NoiseSource(1, "init")), config)
        np.testing.assert_array_equal(r1.dataset.data, r2.dataset.data)
        assert r1.losses == r2.losses

    def test_empty_queries_rejected(self):
        s = schema_from_cardinalities((2,))
        with pytest.raises(ValueError):
            relaxed_projection([], np.array([]), RelaxedDataset(s, np.ones((1, 2))))

    def test_trace_file(self, tmp_path):
        s, data, w = self._toy(seed=11)
        start = one_hot(data).as_relaxed()
        targets = eval_relaxed(w, start)
        trace = tmp_path / "trace.csv"
        config = ProjectionConfig(max_steps=5, trace_path=str(trace))
        relaxed_projection(w.queries, targets, start, config)
        lines = trace.read_text().strip().splitlines()
        assert lines[0] == "step,loss"
        assert len(lines) >= 2
