import numpy as np
from scipy.special import ndtr, ndtri
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ..exceptions import ShapeError
from ._validation import check_matrix


class QuantileNormalTransformer(TransformerMixin, BaseEstimator):
    """Map every column onto standard-normal quantiles through its empirical CDF.

    The fitted table per column is ``n_knots = min(n_quantiles, n_samples)``
    sample quantiles at evenly spaced probabilities.  Values between knots are
    linearly interpolated; values outside the table are clamped to its ends.
    A value that equals a run of tied knots gets the mean probability of the
    run, so two-valued columns land on two well separated quantiles.

    Parameters
    ----------
    n_quantiles : int, default=1000
        Upper bound on the number of knots.
    clip : float, default=1e-7
        CDF values are clipped to ``[clip, 1 - clip]`` before ``ndtri``.
    """

    def __init__(self, n_quantiles=1000, clip=1e-7):
        self.n_quantiles = n_quantiles
        self.clip = clip

    def fit(self, X, y=None):
        X = check_matrix(X)
        n_knots = min(self.n_quantiles, X.shape[0])
        self.references_ = np.linspace(0.0, 1.0, n_knots)
        self.quantiles_ = np.percentile(X, self.references_ * 100.0, axis=0)
        # percentile interpolation can be off by an ulp; knots must not decrease
        self.quantiles_ = np.maximum.accumulate(self.quantiles_, axis=0)
        self.n_features_in_ = X.shape[1]
        return self

    def _check_width(self, X):
        check_is_fitted(self, "quantiles_")
        X = check_matrix(X)
        if X.shape[1] != self.n_features_in_:
            raise ShapeError(f"expected {self.n_features_in_} columns, got {X.shape[1]}")
        return X

    def cdf(self, X):
        """Empirical CDF value of every entry, before clipping."""
        X = self._check_width(X)
        out = np.empty_like(X)
        for j in range(X.shape[1]):
            out[:, j] = _column_cdf(X[:, j], self.quantiles_[:, j], self.references_)
        return out

    def transform(self, X):
        p = self.cdf(X)
        return ndtri(np.clip(p, self.clip, 1.0 - self.clip))

    def inverse_transform(self, X):
        X = self._check_width(X)
        p = ndtr(X)
        out = np.empty_like(X)
        for j in range(X.shape[1]):
            out[:, j] = np.interp(p[:, j], self.references_, self.quantiles_[:, j])
        return out


def _column_cdf(x, knots, refs):
    lo = np.searchsorted(knots, x, side="left")
    hi = np.searchsorted(knots, x, side="right")
    n = knots.shape[0]
    p = np.empty_like(x)

    tied = hi > lo
    p[tied] = 0.5 * (refs[lo[tied]] + refs[hi[tied] - 1])

    below = ~tied & (lo == 0)
    above = ~tied & (lo == n)
    p[below] = refs[0]
    p[above] = refs[-1]

    inner = ~(tied | below | above)
    left = lo[inner] - 1
    right = lo[inner]
    x0, x1 = knots[left], knots[right]
    frac = (x[inner] - x0) / (x1 - x0)
    p[inner] = refs[left] + frac * (refs[right] - refs[left])
    return p
