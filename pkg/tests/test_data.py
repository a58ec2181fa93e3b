import math
import random

import pytest

from ctxclass import data
from ctxclass.data import MISSING, FeatureRole, LoadError

from conftest import make_hepatitis_text, make_vowel_text, worked_spec


class TestVowelLoader:
    def test_row_counts_and_schema(self, synthetic_vowel_pair):
        train, test = synthetic_vowel_pair
        assert train.n_rows == 528
        assert test.n_rows == 462
        schema = train.schema
        assert schema.names[:2] == ("speaker", "sex")
        assert schema.names[-1] == "vowel"
        assert len(schema.primary_indices) == 10
        assert len(schema.class_feature.alphabet) == 11
        roles = [schema.features[i].role for i in (0, 1)]
        assert roles == [FeatureRole.CONTEXTUAL, FeatureRole.CONTEXTUAL]

    def test_speaker_sets_disjoint(self, synthetic_vowel_pair):
        train, test = synthetic_vowel_pair
        assert not set(train.column(0)) & set(test.column(0))

    def test_empty_file_is_error(self, tmp_path):
        p = tmp_path / "empty.data"
        p.write_text("")
        with pytest.raises(LoadError):
            data.load_vowel(p, p)

    def test_malformed_row_names_line(self, tmp_path):
        text = make_vowel_text().splitlines()
        text[4] = text[4] + " 9.9"  # an 11th real
        p = tmp_path / "bad.data"
        p.write_text("\n".join(text))
        with pytest.raises(LoadError, match="line 5"):
            data.load_vowel(p, p)

    def test_wrong_counts_warn_not_error(self, tmp_path):
        lines = make_vowel_text().splitlines()[:100]
        p = tmp_path / "short.data"
        p.write_text("\n".join(lines))
        with pytest.warns(UserWarning):
            data.load_vowel(p, p)


class TestHepatitisLoader:
    def test_row_count_and_roles(self, synthetic_hepatitis):
        ds = synthetic_hepatitis
        assert ds.n_rows == 155
        schema = ds.schema
        assert schema.class_feature.name == "class"
        assert schema.class_feature.alphabet == ("die", "live")
        assert set(ds.class_labels()) <= {"die", "live"}
        ctx_names = {schema.features[i].name for i in schema.contextual_indices}
        assert ctx_names == {"age", "sex"}
        assert len(schema.primary_indices) == 17

    def test_missing_cells_preserved(self, synthetic_hepatitis):
        assert synthetic_hepatitis.missing_count() > 0

    def test_no_question_marks_means_no_missing(self, tmp_path):
        p = tmp_path / "full.data"
        p.write_text(make_hepatitis_text(missing_rate=0.0))
        assert data.load_hepatitis(p).missing_count() == 0

    def test_unknown_symbol_is_error(self, tmp_path):
        lines = make_hepatitis_text().splitlines()
        fields = lines[0].split(",")
        fields[2] = "7"  # sex only allows 1/2
        lines[0] = ",".join(fields)
        p = tmp_path / "bad.data"
        p.write_text("\n".join(lines))
        with pytest.raises(LoadError):
            data.load_hepatitis(p)


class TestGenericTable:
    SCHEMA = (
        '[{"name": "cls", "role": "class", "kind": "discrete", "alphabet": ["a", "b"]},\n'
        ' {"name": "x", "role": "primary", "kind": "continuous"},\n'
        ' {"name": "g", "role": "contextual", "kind": "discrete", "alphabet": ["0", "1"]}]'
    )

    def test_load_three_columns(self, tmp_path):
        (tmp_path / "t.schema.json").write_text(self.SCHEMA)
        (tmp_path / "t.csv").write_text("a,1.5,0\nb,2.5,1\n")
        ds = data.load_table(tmp_path / "t.csv", tmp_path / "t.schema.json")
        assert ds.n_rows == 2
        assert ds.rows[0] == ("a", 1.5, "0")

    def test_column_count_mismatch(self, tmp_path):
        (tmp_path / "t.schema.json").write_text(self.SCHEMA)
        (tmp_path / "t.csv").write_text("a,1.5\n")
        with pytest.raises(LoadError):
            data.load_table(tmp_path / "t.csv", tmp_path / "t.schema.json")

    def test_numeric_symbols_load_as_discrete(self, tmp_path):
        schema = (
            '[{"name": "cls", "role": "class", "kind": "discrete", "alphabet": ["1", "2"]},'
            ' {"name": "x", "role": "primary", "kind": "discrete", "alphabet": ["3", "4"]}]'
        )
        (tmp_path / "t.schema.json").write_text(schema)
        (tmp_path / "t.csv").write_text("1,3\n2,4\n")
        ds = data.load_table(tmp_path / "t.csv", tmp_path / "t.schema.json")
        assert ds.rows[0] == ("1", "3")

    def test_round_trip_exact(self, tmp_path):
        rng = random.Random(7)
        rows = [
            ("a" if rng.random() < 0.5 else "b", rng.uniform(-1e6, 1e6), str(rng.randrange(2)))
            for _ in range(50)
        ]
        rows[3] = (rows[3][0], MISSING, rows[3][2])
        (tmp_path / "t.schema.json").write_text(self.SCHEMA)
        schema_obj = data.load_schema(tmp_path / "t.schema.json")
        ds = data.Dataset.build(schema_obj, rows)
        data.write_table(ds, tmp_path / "out.csv", tmp_path / "out.schema.json")
        back = data.load_table(tmp_path / "out.csv", tmp_path / "out.schema.json")
        assert back.rows == ds.rows  # floats round-trip bit-exactly via repr


class TestSplitRandom:
    def test_sizes_and_partition(self, synthetic_hepatitis):
        train, test = data.split_random(synthetic_hepatitis, 100, seed=3)
        assert (train.n_rows, test.n_rows) == (100, 55)
        from collections import Counter

        assert Counter(train.rows + test.rows) == Counter(synthetic_hepatitis.rows)

    def test_deterministic(self, synthetic_hepatitis):
        a = data.split_random(synthetic_hepatitis, 100, seed=11)
        b = data.split_random(synthetic_hepatitis, 100, seed=11)
        assert a[0].rows == b[0].rows and a[1].rows == b[1].rows

    def test_different_seeds_differ(self, synthetic_hepatitis):
        a = data.split_random(synthetic_hepatitis, 100, seed=0)
        b = data.split_random(synthetic_hepatitis, 100, seed=1)
        assert a[0].rows != b[0].rows

    def test_preserves_original_order(self, synthetic_hepatitis):
        train, _ = data.split_random(synthetic_hepatitis, 100, seed=5)
        original = list(synthetic_hepatitis.rows)
        positions = [original.index(r) for r in train.rows]
        assert positions == sorted(positions)

    @pytest.mark.parametrize("n_train", [0, 155, 200])
    def test_out_of_range(self, synthetic_hepatitis, n_train):
        with pytest.raises(ValueError):
            data.split_random(synthetic_hepatitis, n_train, seed=0)


class TestSampleFrom:
    def test_tuple_frequency(self, table_spec):
        ds = data.sample_from(table_spec, 16000, seed=42)
        freq = sum(1 for r in ds.rows if r == ("0", "0", "0", "0")) / 16000
        assert abs(freq - 0.03) <= 0.01

    def test_convergence_bound(self, table_spec):
        n = 10000
        ds = data.sample_from(table_spec, n, seed=9)
        counts = {}
        for r in ds.rows:
            counts[r] = counts.get(r, 0) + 1
        for tup, p in table_spec.probs.items():
            bound = 3 * math.sqrt(p * (1 - p) / n)
            assert abs(counts.get(tup, 0) / n - p) <= bound

    def test_point_mass(self):
        spec = data.JointSpec(("c", "x"), (("0",), ("1",)), {("0", "1"): 1.0})
        ds = data.sample_from(spec, 25, seed=0)
        assert set(ds.rows) == {("0", "1")}

    def test_zero_rows(self, table_spec):
        ds = data.sample_from(table_spec, 0, seed=0)
        assert ds.n_rows == 0
        assert len(ds.schema) == 4

    def test_deterministic(self, table_spec):
        assert data.sample_from(table_spec, 500, 5).rows == data.sample_from(table_spec, 500, 5).rows


class TestJointSpecValidation:
    def test_rejects_bad_sum(self):
        with pytest.raises(ValueError):
            data.JointSpec(("c",), (("0", "1"),), {("0",): 0.6, ("1",): 0.5})

    def test_rejects_negative(self):
        with pytest.raises(ValueError):
            data.JointSpec(("c",), (("0", "1"),), {("0",): 1.5, ("1",): -0.5})

    def test_json_round_trip(self, table_spec):
        back = data.JointSpec.from_json(table_spec.to_json())
        assert back == data.JointSpec(table_spec.variables, table_spec.alphabets, dict(table_spec.probs))


class TestPlantedContext:
    def test_contexts_disjoint_and_deterministic(self):
        params = data.PlantedContextParams()
        tr1, te1 = data.plant_context_dataset(params, seed=4)
        tr2, te2 = data.plant_context_dataset(params, seed=4)
        assert tr1.rows == tr2.rows and te1.rows == te2.rows
        ci = tr1.schema.index_of("condition")
        assert max(tr1.column(ci)) < min(te1.column(ci))

    def test_zero_shift_conditionals_match(self):
        # with no context effect a fixed classifier scores about the same
        # with and without contextual normalization
        from ctxclass import harness, preprocess

        params = data.PlantedContextParams(shift=0.0)
        train, test = data.plant_context_dataset(params, seed=1)
        plain = harness.evaluate("nn", *_encoded(train, test))
        base = train.subset([i for i, c in enumerate(train.class_labels()) if c == "c0"])
        cfg = preprocess.PipelineConfig(
            normalize="contextual",
            context=preprocess.ContextKey("condition"),
            contextual_model="linear",
            baseline=base,
        )
        ctx = harness.evaluate("nn", *preprocess.run_pipeline(cfg, train, test))
        assert abs(plain - ctx) / test.n_rows <= 0.05

    def test_large_shift_zero_noise_normalized_is_perfect(self):
        from ctxclass import harness, preprocess

        params = data.PlantedContextParams(shift=8.0, noise=0.0)
        train, test = data.plant_context_dataset(params, seed=2)
        base = train.subset([i for i, c in enumerate(train.class_labels()) if c == "c0"])
        cfg = preprocess.PipelineConfig(
            normalize="contextual",
            context=preprocess.ContextKey("condition"),
            contextual_model="linear",
            baseline=base,
        )
        assert harness.evaluate("nn", *preprocess.run_pipeline(cfg, train, test)) == test.n_rows

    def test_parameter_validation(self):
        with pytest.raises(ValueError):
            data.PlantedContextParams(n_classes=1)
        with pytest.raises(ValueError):
            data.PlantedContextParams(train_context=(1.0, 1.0))


def _encoded(train, test):
    from ctxclass import preprocess

    cfg = preprocess.PipelineConfig()
    return preprocess.run_pipeline(cfg, train, test)
