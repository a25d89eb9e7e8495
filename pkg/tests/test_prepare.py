import math

import pytest

from holdout import (
    ConfigError,
    DataFrame,
    GuardError,
    PartitionError,
    SchemaError,
    apply,
    fingerprint,
    prepare,
    split,
)
from holdout.prepare import fit_transformer

from conftest import make_classification_frame


@pytest.fixture
def partition(registry):
    return split(make_classification_frame(40), "y", seed=2, registry=registry)


class TestGuards:
    def test_unregistered_rejected(self, registry):
        df = make_classification_frame(20)
        with pytest.raises(PartitionError, match="split"):
            prepare(df, "y", registry=registry)

    def test_test_member_rejected(self, registry, partition):
        with pytest.raises(GuardError):
            prepare(partition.test, "y", registry=registry)

    def test_train_valid_dev_accepted(self, registry, partition):
        for member in (partition.train, partition.valid, partition.dev):
            prepared = prepare(member, "y", registry=registry)
            assert prepared.task == "classification"

    def test_guards_off_allows_unregistered(self, registry):
        registry.set_guards("off")
        prepared = prepare(make_classification_frame(20), "y", registry=registry)
        assert prepared.data.row_count == 20


class TestSteps:
    def test_standardize_population_stddev(self):
        df = DataFrame({"x": [1.0, 2.0, 3.0], "y": [0, 1, 0]})
        prepared = fit_transformer(df, "y", ["standardize"])
        got = prepared.data.column("x")
        expect = (-1.224744, 0.0, 1.224744)
        for g, e in zip(got, expect):
            assert math.isclose(g, e, abs_tol=1e-6)

    def test_impute_mean(self):
        df = DataFrame({"x": [1.0, None, 3.0], "y": [0, 1, 0]})
        prepared = fit_transformer(df, "y", ["impute_mean"])
        assert prepared.data.column("x") == (1.0, 2.0, 3.0)

    def test_one_hot_first_appearance_order(self):
        df = DataFrame({"c": ["b", "a", "b", "c"], "y": [0, 1, 0, 1]})
        prepared = fit_transformer(df, "y", ["one_hot"])
        assert prepared.state.feature_names == ("c=b", "c=a", "c=c")
        assert prepared.data.column("c=b") == (1.0, 0.0, 1.0, 0.0)

    def test_default_recipe_order(self):
        df = DataFrame(
            {"x": [1.0, None, 5.0], "c": ["u", "v", "u"], "y": [0, 1, 0]}
        )
        prepared = fit_transformer(df, "y", None)
        kinds = [s.kind for s in prepared.state.steps]
        assert kinds == ["impute_mean", "one_hot", "standardize"]
        for name in prepared.state.feature_names:
            for v in prepared.data.column(name):
                assert v is not None and not isinstance(v, str)

    def test_zero_variance_maps_to_zero(self):
        df = DataFrame({"x": [4.0, 4.0, 4.0], "y": [0, 1, 0]})
        prepared = fit_transformer(df, "y", ["standardize"])
        assert prepared.data.column("x") == (0.0, 0.0, 0.0)

    def test_bool_columns_coerce_numeric(self):
        df = DataFrame({"b": [True, False, True], "y": [0, 1, 0]})
        prepared = fit_transformer(df, "y", ["impute_mean"])
        assert prepared.data.column("b") == (1.0, 0.0, 1.0)

    def test_recipe_leaving_categoricals_rejected(self):
        df = DataFrame({"c": ["a", "b", "a"], "y": [0, 1, 0]})
        with pytest.raises(ConfigError, match="one_hot"):
            fit_transformer(df, "y", ["impute_mean"])

    def test_recipe_leaving_missing_rejected(self):
        df = DataFrame({"x": [1.0, None, 2.0], "y": [0, 1, 0]})
        with pytest.raises(ConfigError, match="impute"):
            fit_transformer(df, "y", ["standardize"])

    def test_unknown_step_rejected(self):
        df = DataFrame({"x": [1.0, 2.0], "y": [0, 1]})
        with pytest.raises(ConfigError, match="unknown"):
            fit_transformer(df, "y", ["scale_minmax"])

    def test_explicit_columns(self):
        df = DataFrame({"x": [1.0, 3.0], "z": [10.0, 20.0], "y": [0, 1]})
        prepared = fit_transformer(
            df, "y", [("impute_mean", None), ("standardize", ["x"])]
        )
        assert prepared.data.column("z") == (10.0, 20.0)
        assert prepared.data.column("x") == (-1.0, 1.0)

    def test_step_on_absent_column_rejected(self):
        df = DataFrame({"x": [1.0, 2.0], "y": [0, 1]})
        with pytest.raises(ConfigError, match="absent"):
            fit_transformer(df, "y", [("standardize", ["zz"])])

    def test_target_excluded_from_statistics(self):
        y = [float(100 + 7 * i) for i in range(25)]  # >20 distinct: regression
        df = DataFrame({"x": [float(i) for i in range(25)], "y": y})
        prepared = fit_transformer(df, "y", ["standardize"])
        assert prepared.data.column("y") == tuple(y)
        standardize = prepared.state.steps[0]
        assert "y" not in standardize.params

    def test_target_missing_rejected(self):
        df = DataFrame({"x": [1.0, 2.0], "y": [None, 1]})
        with pytest.raises(ConfigError, match="target"):
            fit_transformer(df, "y", None)


class TestApply:
    def test_valid_transformed_with_train_statistics(self, registry, partition):
        prepared = prepare(partition.train, "y", registry=registry)
        transformed = apply(prepared.state, partition.valid)
        standardize = next(s for s in prepared.state.steps if s.kind == "standardize")
        for col, (mean, std) in standardize.params.items():
            raw = partition.valid.column(col)
            got = transformed.column(col)
            for r, g in zip(raw, got):
                assert math.isclose(g, (r - mean) / std, rel_tol=1e-12)

    def test_apply_to_fit_frame_centers(self, registry, partition):
        prepared = prepare(partition.train, "y", registry=registry)
        transformed = apply(prepared.state, partition.train)
        for name in prepared.state.feature_names:
            vals = transformed.column(name)
            assert abs(sum(vals) / len(vals)) < 1e-9

    def test_unseen_category_all_zeros(self):
        df = DataFrame({"c": ["a", "b", "a"], "y": [0, 1, 0]})
        prepared = fit_transformer(df, "y", ["one_hot"])
        fresh = DataFrame({"c": ["z", "a"], "y": [0, 1]})
        out = apply(prepared.state, fresh)
        assert out.column("c=a") == (0.0, 1.0)
        assert out.column("c=b") == (0.0, 0.0)

    def test_missing_imputed_with_fit_mean(self):
        df = DataFrame({"x": [2.0, 4.0], "y": [0, 1]})
        prepared = fit_transformer(df, "y", ["impute_mean"])
        out = apply(prepared.state, DataFrame({"x": [None, 10.0], "y": [0, 0]}))
        assert out.column("x") == (3.0, 10.0)

    def test_missing_fitted_column_rejected(self):
        df = DataFrame({"x": [1.0, 2.0], "z": [0.0, 1.0], "y": [0, 1]})
        prepared = fit_transformer(df, "y", None)
        with pytest.raises(SchemaError, match="fitted"):
            apply(prepared.state, DataFrame({"x": [1.0], "y": [0]}))

    def test_deterministic_byte_identical(self, registry, partition):
        prepared = prepare(partition.train, "y", registry=registry)
        a = apply(prepared.state, partition.valid)
        b = apply(prepared.state, partition.valid)
        assert fingerprint(a) == fingerprint(b)

    def test_target_not_required_at_apply(self):
        df = DataFrame({"x": [1.0, 5.0], "y": [0, 1]})
        prepared = fit_transformer(df, "y", ["standardize"])
        out = apply(prepared.state, DataFrame({"x": [3.0]}))
        assert out.column_names == ("x",)


class TestLeakageFreedomOracle:
    def test_statistics_match_independent_recomputation(self, registry):
        # The oracle recomputes means/stddevs by a direct pass over only the
        # frame the transformer was fitted on, exact to 1e-12.
        df = make_classification_frame(50, seed=5)
        p = split(df, "y", seed=9, registry=registry)
        prepared = prepare(p.train, "y", registry=registry)
        standardize = next(s for s in prepared.state.steps if s.kind == "standardize")
        for col, (mean, std) in standardize.params.items():
            values = [float(v) for v in p.train.column(col)]
            m = sum(values) / len(values)
            var = sum((v - m) ** 2 for v in values) / len(values)
            assert abs(mean - m) < 1e-12
            assert abs(std - math.sqrt(var)) < 1e-12


class TestTaskInference:
    def test_classification_by_distinct_values(self):
        df = DataFrame({"x": [1.0] * 25, "y": [i % 3 for i in range(25)]})
        with pytest.raises(ConfigError, match="2 classes"):
            fit_transformer(df, "y", None)

    def test_binary_numeric(self):
        df = DataFrame({"x": [1.0, 2.0, 3.0], "y": [0, 1, 0]})
        assert fit_transformer(df, "y", None).task == "classification"

    def test_text_target_classification(self):
        df = DataFrame({"x": [1.0, 2.0, 3.0], "y": ["no", "yes", "no"]})
        prepared = fit_transformer(df, "y", None)
        assert prepared.task == "classification"
        assert prepared.classes == ("'no'", "'yes'") or prepared.classes == ("no", "yes")
        assert prepared.data.column("y") == (0.0, 1.0, 0.0)

    def test_regression_many_values(self):
        df = DataFrame(
            {"x": [float(i) for i in range(30)], "y": [float(i) * 1.5 for i in range(30)]}
        )
        prepared = fit_transformer(df, "y", None)
        assert prepared.task == "regression"
        assert prepared.classes is None
