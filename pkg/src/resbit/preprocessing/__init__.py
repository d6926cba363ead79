from ._categorical import MALFORMED_LABEL, MASKED_LABEL, OUT_OF_INDEX_LABEL, CategoricalEncoder
from ._pipeline import (
    DEFAULT_CLAMP_FLOOR,
    CardinalitySurvey,
    ColumnCardinality,
    ColumnSchema,
    TabularPipeline,
    bits_from_log,
    cardinality_survey,
    coverage_ratio,
    load_schemas,
    log_clamp,
    survey_cardinalities,
)
from ._quantile import QuantileNormalTransformer

__all__ = [
    "CardinalitySurvey",
    "CategoricalEncoder",
    "ColumnCardinality",
    "ColumnSchema",
    "DEFAULT_CLAMP_FLOOR",
    "MALFORMED_LABEL",
    "MASKED_LABEL",
    "OUT_OF_INDEX_LABEL",
    "QuantileNormalTransformer",
    "TabularPipeline",
    "bits_from_log",
    "cardinality_survey",
    "coverage_ratio",
    "load_schemas",
    "log_clamp",
    "survey_cardinalities",
]
