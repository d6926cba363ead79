"""Input checks shared by the transformers."""

import numpy as np
import pandas as pd
from sklearn.utils import check_array

from ..exceptions import ShapeError


def check_matrix(X, allow_empty=False):
    """Finite 2-D float64 array; 1-D input is read as a single column."""
    X = np.asarray(X, dtype=np.float64) if not hasattr(X, "iloc") else X.to_numpy(dtype=np.float64)
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    if X.ndim != 2:
        raise ShapeError(f"expected a 2-D matrix, got {X.ndim} dimensions")
    if X.shape[0] == 0:
        if allow_empty:
            return X
        raise ShapeError("matrix has no rows")
    return check_array(X, dtype=np.float64, ensure_min_features=0)


def as_frame(rows):
    """Accept a DataFrame, a mapping of columns or a list of row dicts."""
    if isinstance(rows, pd.DataFrame):
        return rows
    return pd.DataFrame(rows)


def label_array(values):
    """Categorical values as an object array of strings; missing becomes ``""``."""
    values = pd.Series(values, dtype=object)
    missing = values.isna()
    out = values.astype(str).to_numpy(dtype=object)
    out[missing.to_numpy()] = ""
    return out
