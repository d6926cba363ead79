import math

import numpy as np
import pandas as pd
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from sklearn.base import clone

from resbit import codecs
from resbit.exceptions import DomainError, SchemaError, ShapeError, VocabularyError
from resbit.preprocessing import (
    MALFORMED_LABEL,
    MASKED_LABEL,
    OUT_OF_INDEX_LABEL,
    CategoricalEncoder,
    ColumnSchema,
    TabularPipeline,
    bits_from_log,
    cardinality_survey,
    coverage_ratio,
    load_schemas,
    log_clamp,
    survey_cardinalities,
)

LOG_FLOOR = math.log(1e-30)


def unclipped(pipe, frame, name):
    """Mask of rows whose numeric value sits inside the quantile table's open range."""
    start = dict((n, a) for n, a, _ in pipe.output_layout_)[name]
    pre = pipe._pre_quantile(frame)
    p = pipe.quantile_.cdf(pre)[:, start]
    return (p >= pipe.clip) & (p <= 1 - pipe.clip)


# -- schema ------------------------------------------------------------------


def test_column_schema_validation():
    with pytest.raises(SchemaError):
        ColumnSchema("a", "text")
    with pytest.raises(SchemaError):
        ColumnSchema("a", "categorical", None)
    with pytest.raises(SchemaError):
        ColumnSchema("a", "numerical", "resbit")
    with pytest.raises(SchemaError):
        ColumnSchema.categorical("a", min_frequency=1.0)
    with pytest.raises(SchemaError):
        load_schemas([{"name": "a", "kind": "numerical"}, {"name": "a", "kind": "numerical"}])
    assert load_schemas({"columns": [{"name": "c", "kind": "categorical"}]}) == [ColumnSchema.categorical("c")]


# -- log clamp ---------------------------------------------------------------


def test_log_clamp_levels():
    assert log_clamp([1])[0] == 0.0
    assert log_clamp([0])[0] == pytest.approx(-30 * math.log(10), abs=1e-12)
    assert log_clamp([0])[0] == pytest.approx(-69.0776, abs=1e-4)
    assert np.array_equal(bits_from_log([0.0, LOG_FLOOR, LOG_FLOOR / 2, LOG_FLOOR / 2 - 1e-9]), [1, 0, 1, 0])


# -- categorical encoder -----------------------------------------------------


def test_min_frequency_masking_example():
    enc = CategoricalEncoder(min_frequency=0.3).fit(["a", "a", "a", "b"])
    assert enc.space_.labels == ("a", MASKED_LABEL)
    assert enc.space_.masked_label == MASKED_LABEL
    assert enc.space_.class_count == 2


def test_no_masking_at_zero_threshold():
    labels = ["x", "y", "x", "z", "w", "x"]
    enc = CategoricalEncoder(min_frequency=0.0).fit(labels)
    assert enc.space_.labels == ("x", "y", "z", "w")
    assert enc.space_.masked_label is None


def test_masked_sentinel_takes_first_masked_position():
    enc = CategoricalEncoder(min_frequency=0.2).fit(["r1", "a", "a", "b", "b", "r2", "a", "b", "a", "b"])
    assert enc.space_.labels == (MASKED_LABEL, "a", "b")


def test_unseen_labels():
    enc = CategoricalEncoder().fit(["a", "b"])
    with pytest.raises(VocabularyError, match="'zz'"):
        enc.transform(["a", "zz"])
    masked = CategoricalEncoder(min_frequency=0.3).fit(["a", "a", "a", "b"])
    assert np.array_equal(masked.transform_indices(["zz", "a", "b"]), [1, 0, 1])


def test_masked_label_collision():
    with pytest.raises(SchemaError):
        CategoricalEncoder(min_frequency=0.3).fit([MASKED_LABEL] * 3 + ["b"])


def test_missing_labels_are_a_category():
    enc = CategoricalEncoder().fit(pd.Series(["a", None, np.nan, "b"], dtype=object))
    assert enc.space_.labels == ("a", "", "b")
    with pytest.raises(DomainError):
        CategoricalEncoder().fit([None, None])


@settings(max_examples=50, deadline=None)
@given(st.lists(st.sampled_from("abcdefghij"), min_size=1, max_size=200),
       st.floats(0, 0.5), st.floats(0, 0.5))
def test_masking_is_monotone(labels, f1, f2):
    lo, hi = sorted((f1, f2))
    m_lo = CategoricalEncoder(min_frequency=lo).fit(labels).space_.class_count
    m_hi = CategoricalEncoder(min_frequency=hi).fit(labels).space_.class_count
    assert m_hi <= m_lo


@pytest.mark.parametrize("scheme", codecs.SCHEMES)
def test_encoder_round_trip(scheme):
    labels = np.array([f"L{i}" for i in range(37)])[np.random.default_rng(0).integers(0, 37, 500)]
    enc = CategoricalEncoder(scheme).fit(labels)
    bits = enc.transform(labels)
    assert bits.shape == (500, codecs.dims(enc.space_.class_count, scheme))
    assert np.array_equal(enc.inverse_transform(bits), labels)


def test_encoder_sentinels():
    enc = CategoricalEncoder("binary").fit([str(i) for i in range(50)])
    assert list(enc.inverse_transform([[1, 1, 0, 1, 0, 1], [0, 0, 0, 0, 1, 0]])) == [OUT_OF_INDEX_LABEL, "2"]
    oh = CategoricalEncoder("onehot").fit(["a", "b", "c"])
    assert list(oh.inverse_transform([[0, 1, 1], [0, 0, 0], [0, 0, 1]])) == [MALFORMED_LABEL, MALFORMED_LABEL, "c"]
    with pytest.raises(ShapeError):
        enc.inverse_transform([[1, 0]])


def test_encoder_sklearn_params():
    enc = CategoricalEncoder("binary", 0.1, name="col")
    assert clone(enc).get_params() == {"scheme": "binary", "min_frequency": 0.1,
                                        "masked_label": MASKED_LABEL, "name": "col"}


# -- pipeline ----------------------------------------------------------------


def test_fit_errors():
    frame = pd.DataFrame({"a": [1.0, 2.0], "c": ["x", "y"]})
    with pytest.raises(SchemaError):
        TabularPipeline([ColumnSchema.numerical("missing")]).fit(frame)
    with pytest.raises(DomainError):
        TabularPipeline([ColumnSchema.numerical("a")]).fit(frame.iloc[:0])
    with pytest.raises(DomainError):
        TabularPipeline([ColumnSchema.numerical("a")]).fit(pd.DataFrame({"a": [np.nan, np.nan]}))
    with pytest.raises(SchemaError):
        TabularPipeline([ColumnSchema.numerical("c")]).fit(frame)


def test_layout_is_contiguous(mixed_dataset):
    frame, schemas = mixed_dataset
    pipe = TabularPipeline(schemas).fit(frame)
    pos = 0
    for _, start, stop in pipe.output_layout_:
        assert start == pos and stop >= start
        pos = stop
    assert pos == pipe.n_features_out_ == pipe.transform(frame).shape[1]
    # numeric block first
    assert [n for n, _, _ in pipe.output_layout_[:2]] == ["age", "income"]
    assert len(pipe.get_feature_names_out()) == pos


def test_pre_quantile_values_follow_log_clamp(mixed_dataset):
    frame, schemas = mixed_dataset
    pipe = TabularPipeline(schemas).fit(frame)
    pre = pipe._pre_quantile(frame)
    bit_part = pre[:, 2:]
    assert set(np.unique(bit_part)) <= {0.0, LOG_FLOOR}


def test_round_trip(mixed_dataset):
    frame, schemas = mixed_dataset
    pipe = TabularPipeline(schemas).fit(frame)
    back, counts = pipe.inverse_transform(pipe.transform(frame), return_counts=True)
    assert list(back.columns) == [s.name for s in schemas]
    for s in schemas:
        if s.is_categorical:
            assert np.array_equal(back[s.name].to_numpy(), frame[s.name].to_numpy())
            assert counts[s.name] == {"out_of_index": 0, "malformed": 0}
        else:
            ok = unclipped(pipe, frame, s.name)
            assert ok.sum() >= len(frame) - 2
            np.testing.assert_allclose(back[s.name][ok], frame[s.name][ok], rtol=1e-6)


def test_transform_of_inverse_is_identity_on_decoded_data(mixed_dataset):
    frame, schemas = mixed_dataset
    pipe = TabularPipeline(schemas).fit(frame)
    Z = pipe.transform(frame)
    Z2 = pipe.transform(pipe.inverse_transform(Z))
    cat_cols = slice(2, None)
    assert np.array_equal(Z2[:, cat_cols], Z[:, cat_cols])


def test_missing_numeric_values_use_training_mean():
    frame = pd.DataFrame({"v": ["1", "", "3", "5"], "c": ["a", "", "a", "b"]})
    pipe = TabularPipeline([ColumnSchema.numerical("v"), ColumnSchema.categorical("c")]).fit(frame)
    assert pipe.numeric_means_["v"] == 3.0
    back = pipe.inverse_transform(pipe.transform(frame))
    assert list(back["c"]) == ["a", "", "a", "b"]
    assert back["v"][1] == pytest.approx(3.0)


def test_unseen_label_at_transform_names_column(mixed_dataset):
    frame, schemas = mixed_dataset
    pipe = TabularPipeline(schemas).fit(frame)
    bad = frame.head(3).copy()
    bad.loc[1, "state"] = "Atlantis"
    with pytest.raises(VocabularyError) as info:
        pipe.transform(bad)
    assert info.value.column == "state" and info.value.label == "Atlantis"


def test_constant_columns():
    frame = pd.DataFrame({"n": [7.0] * 20, "c": ["only"] * 20})
    pipe = TabularPipeline([ColumnSchema.numerical("n"), ColumnSchema.categorical("c")]).fit(frame)
    Z = pipe.transform(frame)
    assert Z.shape == (20, 1)
    assert np.all(Z == 0.0)
    back = pipe.inverse_transform(Z)
    assert list(back["c"]) == ["only"] * 20 and np.all(back["n"] == 7.0)


def test_inverse_width_mismatch(mixed_dataset):
    frame, schemas = mixed_dataset
    pipe = TabularPipeline(schemas).fit(frame.head(200))
    with pytest.raises(ShapeError):
        pipe.inverse_transform(np.zeros((2, 3)))


def test_resbit_never_out_of_index_under_fuzz(mixed_dataset):
    frame, schemas = mixed_dataset
    pipe = TabularPipeline(schemas).fit(frame)
    rng = np.random.default_rng(5)
    Z = rng.normal(scale=3.0, size=(20_000, pipe.n_features_out_))
    _, counts = pipe.inverse_transform(Z, return_counts=True)
    assert counts["state"]["out_of_index"] == 0
    assert counts["merchant"]["out_of_index"] == 0
    assert counts["zip3"]["out_of_index"] > 0


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-1e300, 1e300, allow_nan=False), min_size=1, max_size=40))
def test_resbit_decode_is_total_for_arbitrary_floats(values):
    frame = pd.DataFrame({"c": [str(i % 23) for i in range(230)]})
    pipe = TabularPipeline([ColumnSchema.categorical("c")]).fit(frame)
    width = pipe.n_features_out_
    Z = np.resize(np.asarray(values), (max(1, len(values) // width + 1), width))
    back, counts = pipe.inverse_transform(Z, return_counts=True)
    assert counts["c"]["out_of_index"] == 0
    assert set(back["c"]) <= set(pipe.encoders_["c"].space_.labels)


def test_serialization_round_trip_is_exact(mixed_dataset, tmp_path):
    frame, schemas = mixed_dataset
    pipe = TabularPipeline(schemas).fit(frame)
    path = tmp_path / "pipe.json"
    pipe.save(path)
    loaded = TabularPipeline.load(path)
    assert loaded.to_json() == pipe.to_json()
    assert pipe.transform(frame).tobytes() == loaded.transform(frame).tobytes()


def test_fit_is_deterministic(mixed_dataset):
    frame, schemas = mixed_dataset
    a = TabularPipeline(schemas).fit(frame).to_json()
    b = TabularPipeline(schemas).fit(frame.copy()).to_json()
    assert a == b


def test_load_rejects_foreign_documents():
    with pytest.raises(SchemaError):
        TabularPipeline.from_dict({"format": "other"})
    with pytest.raises(SchemaError):
        TabularPipeline.from_dict({"format": "resbit-pipeline", "version": 99})


def test_pipeline_is_an_sklearn_estimator(mixed_dataset):
    frame, schemas = mixed_dataset
    pipe = TabularPipeline(schemas, n_quantiles=200)
    params = clone(pipe).get_params()
    assert params["n_quantiles"] == 200 and params["schemas"] == schemas
    Z = pipe.fit_transform(frame.head(500))
    assert Z.shape[0] == 500


# -- survey and coverage -------------------------------------------------------


def test_survey_adult_cardinalities():
    survey = survey_cardinalities([9, 16, 7, 15, 6, 5, 2, 42])
    assert survey.total == 102
    assert survey.total_dims("onehot") == 102


def test_survey_credit_card_cardinalities():
    survey = survey_cardinalities([3, 7515, 153])
    assert survey.total == 7671
    expected = sum(codecs.optimal_block_lengths_oracle(m)[0] for m in (3, 7515, 153))
    assert survey.total_dims("resbit") == expected == 2 + 52 + 16


def test_survey_from_data(mixed_dataset):
    frame, schemas = mixed_dataset
    survey = cardinality_survey(frame, schemas)
    assert [c.cardinality for c in survey.columns] == [50, 700, 13, 3]
    assert survey.total == 766
    assert cardinality_survey(frame, [ColumnSchema.numerical("age")]).total == 0


def test_coverage_examples(mixed_dataset):
    frame, schemas = mixed_dataset
    pipe = TabularPipeline(schemas).fit(frame)
    ratios, mean = coverage_ratio(frame, pipe)
    assert all(r == 1.0 for r in ratios.values()) and mean == 1.0
    collapsed = frame.copy()
    for s in schemas:
        if s.is_categorical:
            collapsed[s.name] = frame[s.name].iloc[0]
    ratios, _ = pipe.coverage_ratio(collapsed)
    for name, r in ratios.items():
        assert r == 1 / pipe.encoders_[name].space_.class_count


def test_coverage_ignores_decode_sentinels():
    frame = pd.DataFrame({"c": ["a", "b", "c", "d"]})
    pipe = TabularPipeline([ColumnSchema.categorical("c", "binary")]).fit(frame)
    ratios, _ = pipe.coverage_ratio(pd.DataFrame({"c": ["a", OUT_OF_INDEX_LABEL, "zz"]}))
    assert ratios["c"] == 2 / 4


def test_coverage_matches_coupon_collector():
    M, n, reps = 40, 60, 400
    labels = [f"k{i}" for i in range(M)]
    pipe = TabularPipeline([ColumnSchema.categorical("c")]).fit(pd.DataFrame({"c": labels}))
    rng = np.random.default_rng(9)
    ratios = [pipe.coverage_ratio(pd.DataFrame({"c": np.array(labels)[rng.integers(0, M, n)]}))[0]["c"]
              for _ in range(reps)]
    expected = 1 - (1 - 1 / M) ** n
    assert abs(np.mean(ratios) - expected) < 0.02
