"""Residual-bit categorical encoding, tabular preprocessing and diffusion checks."""

from .codecs import (
    CategorySpace,
    OutOfIndex,
    block_lengths,
    decode_binary,
    decode_onehot,
    decode_resbit,
    dims,
    encode_binary,
    encode_onehot,
    encode_resbit,
    optimal_block_lengths_oracle,
)
from .preprocessing import (
    CategoricalEncoder,
    ColumnSchema,
    QuantileNormalTransformer,
    TabularPipeline,
    cardinality_survey,
    coverage_ratio,
)

__version__ = "0.1.0"

__all__ = [
    "CategoricalEncoder",
    "CategorySpace",
    "ColumnSchema",
    "OutOfIndex",
    "QuantileNormalTransformer",
    "TabularPipeline",
    "block_lengths",
    "cardinality_survey",
    "coverage_ratio",
    "decode_binary",
    "decode_onehot",
    "decode_resbit",
    "dims",
    "encode_binary",
    "encode_onehot",
    "encode_resbit",
    "optimal_block_lengths_oracle",
]
