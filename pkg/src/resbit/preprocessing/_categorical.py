import numpy as np
import pandas as pd
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .. import codecs
from ..codecs import CategorySpace
from ..exceptions import DomainError, SchemaError, ShapeError, VocabularyError
from ._validation import label_array

MASKED_LABEL = "__masked__"
OUT_OF_INDEX_LABEL = "__out_of_index__"
MALFORMED_LABEL = "__malformed__"


class CategoricalEncoder(TransformerMixin, BaseEstimator):
    """Encode one categorical column as a 0/1 matrix under a chosen scheme.

    Labels whose relative frequency is below ``min_frequency`` are merged into
    ``masked_label`` before the vocabulary is built.  Class indices follow the
    order in which labels first appear in the training column.

    Parameters
    ----------
    scheme : {"resbit", "binary", "onehot"}, default="resbit"
    min_frequency : float, default=0.0
        Fraction in ``[0, 1)``.
    masked_label : str, default="__masked__"
    name : str, optional
        Column name used in error messages.

    Attributes
    ----------
    space_ : CategorySpace
    """

    def __init__(self, scheme="resbit", min_frequency=0.0, masked_label=MASKED_LABEL, name=None):
        self.scheme = scheme
        self.min_frequency = min_frequency
        self.masked_label = masked_label
        self.name = name

    def fit(self, X, y=None):
        if self.scheme not in codecs.SCHEMES:
            raise SchemaError(f"unknown scheme {self.scheme!r}")
        if not 0.0 <= self.min_frequency < 1.0:
            raise SchemaError(f"min_frequency must lie in [0, 1), got {self.min_frequency}")
        labels = label_array(X)
        if labels.size == 0:
            raise DomainError(f"column {self.name!r} is empty")
        if np.all(labels == ""):
            raise DomainError(f"column {self.name!r} has only missing values")

        counts = pd.Series(labels).value_counts(sort=False)
        rare = counts.index[counts.to_numpy() / labels.size < self.min_frequency]
        if len(rare):
            if self.masked_label in counts.index and self.masked_label not in rare:
                raise SchemaError(
                    f"masked label {self.masked_label!r} collides with a real label in column {self.name!r}"
                )
            labels = np.where(np.isin(labels, list(rare)), self.masked_label, labels)
        vocab = pd.unique(labels)
        self.space_ = CategorySpace(tuple(vocab), self.masked_label if len(rare) else None)
        self._index = self.space_.index_of()
        return self

    @property
    def width_(self):
        check_is_fitted(self, "space_")
        return codecs.dims(self.space_.class_count, self.scheme)

    def _lookup(self):
        # rebuilt lazily for instances restored through set_params / from_dict
        if not hasattr(self, "_index"):
            self._index = self.space_.index_of()
        return self._index

    def transform_indices(self, X):
        check_is_fitted(self, "space_")
        labels = label_array(X)
        index = self._lookup()
        fallback = index.get(self.space_.masked_label) if self.space_.masked_label is not None else None
        mapped = pd.Series(labels, dtype=object).map(index)
        unknown = mapped.isna().to_numpy()
        if unknown.any():
            if fallback is None:
                raise VocabularyError(labels[unknown.argmax()], self.name)
            mapped[unknown] = fallback
        return mapped.to_numpy(dtype=np.int64)

    def transform(self, X):
        return codecs.encode_array(self.transform_indices(X), self.space_, self.scheme)

    def decode_indices(self, bits):
        """Class index per row; ``-1`` out of index, ``-2`` malformed one-hot."""
        check_is_fitted(self, "space_")
        bits = np.asarray(bits)
        if bits.ndim != 2 or bits.shape[1] != self.width_:
            raise ShapeError(f"expected {self.width_} bit columns, got shape {bits.shape}")
        return codecs.decode_array(bits, self.space_, self.scheme)

    def inverse_transform(self, bits):
        indices = self.decode_indices(bits)
        table = np.array(list(self.space_.labels) + [MALFORMED_LABEL, OUT_OF_INDEX_LABEL], dtype=object)
        # -1 and -2 wrap around to the two sentinels at the end of the table
        return table[indices]
