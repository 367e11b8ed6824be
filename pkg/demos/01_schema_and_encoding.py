"""Schemas, CSV ingestion, one-hot encoding, and numeric binning.

Run: python demos/01_schema_and_encoding.py
"""

import tempfile
from pathlib import Path

import numpy as np

from privsynth import bin_numeric, decode, load_csv, one_hot

# A tiny categorical table. Categories are inferred per column as the sorted
# distinct labels, so loading is deterministic.
csv_text = """color,size,label
red,small,yes
blue,large,no
red,medium,yes
green,small,no
blue,small,yes
"""

with tempfile.TemporaryDirectory() as tmp:
    path = Path(tmp) / "toy.csv"
    path.write_text(csv_text)
    data = load_csv(path)

print("features:", [f.name for f in data.schema.features])
print("cardinalities:", data.schema.cardinalities)
print("one-hot width d_prime =", data.schema.d_prime)
print("offsets per feature block:", data.schema.offsets)
print("rows as category indices:\n", data.rows)

# The one-hot encoding places a single 1 inside each feature's column block.
encoded = one_hot(data)
print("\nencoded bits:\n", encoded.bits)

# Decoding inverts the encoding exactly.
assert np.array_equal(decode(encoded).rows, data.rows)
print("\ndecode(one_hot(data)) == data: True")

# Real-valued columns are bucketed into equal-width bins before any of this;
# the bin labels record the interval edges.
values = [3.2, 7.7, 5.0, 9.9, 4.4, 6.1]
idx, spec = bin_numeric(values, num_bins=3, name="score")
print("\nbinned", values)
print("  -> indices", idx.tolist())
print("  -> bins", spec.categories)
