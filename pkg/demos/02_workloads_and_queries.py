"""Marginal workloads: exact answers, differentiable answers, and gradients.

Run: python demos/02_workloads_and_queries.py
"""

import numpy as np

from privsynth import (
    DiscreteDataset,
    RelaxedDataset,
    eval_discrete,
    eval_relaxed,
    loss_and_gradient,
    one_hot,
    random_workload,
    schema_from_cardinalities,
)

rng = np.random.default_rng(0)
schema = schema_from_cardinalities((2, 3, 4))
data = DiscreteDataset(
    schema, np.column_stack([rng.integers(0, t, 500) for t in schema.cardinalities])
)

# Sample 2 of the 3 possible 2-way marginals; every category combination of a
# selected marginal becomes one query, so m is a sum of block-size products.
workload = random_workload(schema, k=2, num_marginals=2, seed=7)
print("marginals:", workload.marginals)
print("queries per marginal:", workload.marginal_sizes(), "-> m =", workload.m)

# Exact answers are match fractions; on the one-hot encoding the same numbers
# come out of the differentiable product form, bit for bit.
exact = eval_discrete(workload, data)
relaxed = eval_relaxed(workload, one_hot(data).as_relaxed())
print("answers (first 6):", np.round(exact[:6], 4))
print("relaxed == exact on one-hot:", bool(np.array_equal(exact, relaxed)))

# On fractional rows the product queries interpolate smoothly, which is what
# lets gradient descent move synthetic rows toward target answers.
soft = RelaxedDataset(schema, np.full((10, schema.d_prime), 0.25))
print("\nanswers on a uniform fractional dataset (first 6):",
      np.round(eval_relaxed(workload, soft)[:6], 4))

loss, grad = loss_and_gradient(workload.queries, exact, soft)
print("squared-error loss against the true answers:", round(loss, 4))
print("gradient shape:", grad.shape, "| largest entry:", round(float(np.abs(grad).max()), 4))
