import numpy as np
import pytest

from privsynth import (
    DiscreteDataset,
    FeatureSpec,
    Schema,
    SchemaError,
    bin_numeric,
    decode,
    decode_row,
    load_csv,
    one_hot,
    save_csv,
    schema_from_cardinalities,
)

from helpers import random_dataset


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text, encoding="utf-8")
    return p


class TestSchema:
    def test_offsets_and_width(self):
        s = schema_from_cardinalities((2, 3, 4))
        assert s.d == 3
        assert s.d_prime == 9
        assert s.offsets == (0, 2, 5)

    def test_duplicate_categories_rejected(self):
        with pytest.raises(SchemaError):
            FeatureSpec("f", ("a", "a"))

    def test_json_roundtrip(self, tmp_path):
        s = schema_from_cardinalities((2, 5))
        s.save(tmp_path / "schema.json")
        assert Schema.load(tmp_path / "schema.json") == s


class TestLoadCsv:
    def test_inference_shapes(self, tmp_path):
        p = write(tmp_path, "toy.csv", "u,v\na,x\nb,y\na,z\n")
        d = load_csv(p)
        assert d.schema.cardinalities == (2, 3)
        assert d.schema.d_prime == 5
        # lexicographic category order, row order preserved
        assert d.schema.features[0].categories == ("a", "b")
        assert d.rows.tolist() == [[0, 0], [1, 1], [0, 2]]

    def test_deterministic(self, tmp_path):
        p = write(tmp_path, "toy.csv", "u,v\nb,x\na,y\n")
        d1, d2 = load_csv(p), load_csv(p)
        assert d1.schema == d2.schema
        assert np.array_equal(d1.rows, d2.rows)

    def test_missing_file(self):
        with pytest.raises(FileNotFoundError):
            load_csv("/nonexistent/path.csv")

    def test_ragged_row(self, tmp_path):
        p = write(tmp_path, "bad.csv", "u,v\na\n")
        with pytest.raises(SchemaError, match="row 0"):
            load_csv(p)

    def test_missing_value_rejected(self, tmp_path):
        p = write(tmp_path, "bad.csv", "u,v\na,\n")
        with pytest.raises(SchemaError, match="row 0.*'v'"):
            load_csv(p)

    def test_unknown_label_under_schema(self, tmp_path):
        schema = Schema((FeatureSpec("u", ("a",)), FeatureSpec("v", ("x", "y"))))
        p = write(tmp_path, "bad.csv", "u,v\na,zzz\n")
        with pytest.raises(SchemaError, match="'zzz' at row 0, column 'v'"):
            load_csv(p, schema)

    def test_save_load_roundtrip(self, tmp_path):
        s = schema_from_cardinalities((3, 2))
        d = random_dataset(s, 20, np.random.default_rng(0))
        save_csv(d, tmp_path / "out.csv")
        back = load_csv(tmp_path / "out.csv", s)
        assert np.array_equal(back.rows, d.rows)

    def test_quoted_fields(self, tmp_path):
        p = write(tmp_path, "quoted.csv", 'u,v\n"a,b",x\nc,"y z"\n')
        d = load_csv(p)
        assert d.schema.features[0].categories == ("a,b", "c")
        assert d.schema.features[1].categories == ("x", "y z")

    def test_header_mismatch_under_schema(self, tmp_path):
        schema = Schema((FeatureSpec("u", ("a",)),))
        p = write(tmp_path, "bad.csv", "wrong\na\n")
        with pytest.raises(SchemaError, match="does not match schema"):
            load_csv(p, schema)


class TestBinNumeric:
    def test_midpoint_split(self):
        idx, spec = bin_numeric([0, 1, 2, 3], 2)
        assert idx.tolist() == [0, 0, 1, 1]
        assert spec.cardinality == 2

    def test_constant_column_collapses(self):
        idx, spec = bin_numeric([7.5] * 5, 10)
        assert idx.tolist() == [0] * 5
        assert spec.cardinality == 1

    def test_quarter_edges(self):
        # edges at 0.25 / 0.5 / 0.75; the max lands in the last bin
        idx, spec = bin_numeric([0, 0.4, 0.6, 1.0], 4)
        assert idx.tolist() == [0, 1, 2, 3]
        assert spec.cardinality == 4

    def test_invalid_inputs(self):
        with pytest.raises(ValueError):
            bin_numeric([1.0, float("nan")], 2)
        with pytest.raises(ValueError):
            bin_numeric([1.0], 0)
        with pytest.raises(ValueError):
            bin_numeric([], 2)


class TestOneHot:
    def test_single_row(self):
        s = schema_from_cardinalities((2, 2))
        d = DiscreteDataset(s, np.array([[1, 0]]))
        assert one_hot(d).bits.tolist() == [[0, 1, 1, 0]]

    def test_all_first_categories(self):
        s = schema_from_cardinalities((2, 3, 4))
        d = DiscreteDataset(s, np.zeros((1, 3), dtype=int))
        bits = one_hot(d).bits[0]
        assert np.flatnonzero(bits).tolist() == list(s.offsets)

    def test_hand_enumeration(self):
        s = schema_from_cardinalities((2, 3))
        d = DiscreteDataset(s, np.array([[0, 2], [1, 0], [1, 2]]))
        assert one_hot(d).bits.tolist() == [
            [1, 0, 0, 0, 1],
            [0, 1, 1, 0, 0],
            [0, 1, 0, 0, 1],
        ]

    def test_row_structure(self):
        rng = np.random.default_rng(3)
        s = schema_from_cardinalities((3, 2, 5))
        bits = one_hot(random_dataset(s, 40, rng)).bits
        assert (bits.sum(axis=1) == s.d).all()
        for off, t in zip(s.offsets, s.cardinalities):
            assert (bits[:, off : off + t].sum(axis=1) == 1).all()


class TestDecode:
    def test_inverse_of_one_hot_example(self):
        s = schema_from_cardinalities((2, 2))
        assert decode_row(np.array([0, 1, 1, 0]), s).tolist() == [1, 0]

    def test_all_first(self):
        s = schema_from_cardinalities((2, 3))
        assert decode_row(np.array([1, 0, 1, 0, 0]), s).tolist() == [0, 0]

    def test_invalid_block_names_feature(self):
        s = schema_from_cardinalities((2, 2))
        with pytest.raises(SchemaError, match="feature 0"):
            decode_row(np.array([1, 1, 1, 0]), s)

    def test_round_trip_random_datasets(self):
        rng = np.random.default_rng(11)
        for _ in range(25):
            d = rng.integers(1, 6)
            cards = tuple(int(rng.integers(1, 5)) for _ in range(d))
            data = random_dataset(schema_from_cardinalities(cards), int(rng.integers(1, 30)), rng)
            back = decode(one_hot(data))
            assert np.array_equal(back.rows, data.rows)
