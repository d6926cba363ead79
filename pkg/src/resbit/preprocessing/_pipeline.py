"""Mixed numeric/categorical preprocessing with full inversion.

Categorical columns are encoded to bits, every bit is passed through
``log(max(bit, floor))`` and the result is concatenated after the numeric
columns.  One :class:`QuantileNormalTransformer` then maps every dimension
onto normal quantiles.  ``inverse_transform`` undoes the quantile map,
thresholds bit dimensions halfway between the two log levels and decodes.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
import pandas as pd
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .. import codecs
from ..codecs import CategorySpace
from ..exceptions import DomainError, SchemaError, ShapeError
from ._categorical import (
    MALFORMED_LABEL,
    MASKED_LABEL,
    OUT_OF_INDEX_LABEL,
    CategoricalEncoder,
)
from ._quantile import QuantileNormalTransformer
from ._validation import as_frame, check_matrix, label_array

FORMAT_VERSION = 1
DEFAULT_CLAMP_FLOOR = 1e-30
KINDS = ("numerical", "categorical")


@dataclass(frozen=True)
class ColumnSchema:
    name: str
    kind: str
    scheme: str | None = None
    min_frequency: float = 0.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise SchemaError(f"column {self.name!r}: kind must be one of {KINDS}, got {self.kind!r}")
        if self.kind == "categorical":
            if self.scheme not in codecs.SCHEMES:
                raise SchemaError(f"column {self.name!r}: scheme must be one of {codecs.SCHEMES}")
            if not 0.0 <= self.min_frequency < 1.0:
                raise SchemaError(f"column {self.name!r}: min_frequency must lie in [0, 1)")
        elif self.scheme is not None:
            raise SchemaError(f"numerical column {self.name!r} cannot carry a scheme")

    @classmethod
    def numerical(cls, name):
        return cls(name, "numerical")

    @classmethod
    def categorical(cls, name, scheme="resbit", min_frequency=0.0):
        return cls(name, "categorical", scheme, float(min_frequency))

    @property
    def is_categorical(self):
        return self.kind == "categorical"

    def to_dict(self):
        d = {"name": self.name, "kind": self.kind}
        if self.is_categorical:
            d.update(scheme=self.scheme, min_frequency=self.min_frequency)
        return d

    @classmethod
    def from_dict(cls, d):
        try:
            kind = d["kind"]
            if kind == "categorical":
                return cls.categorical(d["name"], d.get("scheme", "resbit"), d.get("min_frequency", 0.0))
            return cls(d["name"], kind)
        except KeyError as exc:
            raise SchemaError(f"schema entry {d!r} is missing {exc}") from None


def load_schemas(path_or_obj):
    """Read column schemas from a JSON file (or an already parsed object).

    Accepts either ``{"columns": [...]}`` or a bare list of column entries.
    """
    obj = path_or_obj
    if isinstance(path_or_obj, (str, Path)):
        with open(path_or_obj, encoding="utf-8") as fh:
            obj = json.load(fh)
    if isinstance(obj, dict):
        obj = obj.get("columns", [])
    if not isinstance(obj, list):
        raise SchemaError("schema must be a list of column entries")
    schemas = [s if isinstance(s, ColumnSchema) else ColumnSchema.from_dict(s) for s in obj]
    names = [s.name for s in schemas]
    if len(set(names)) != len(names):
        raise SchemaError("duplicate column names in schema")
    return schemas


def log_clamp(bits, floor=DEFAULT_CLAMP_FLOOR):
    """``log(max(bit, floor))``: 1 becomes 0.0 and 0 becomes ``log(floor)``."""
    return np.log(np.maximum(np.asarray(bits, dtype=np.float64), floor))


def bits_from_log(values, floor=DEFAULT_CLAMP_FLOOR):
    """Threshold log-clamped values at the midpoint of the two levels."""
    return (np.asarray(values) >= 0.5 * math.log(floor)).astype(np.uint8)


def _numeric_column(frame, name):
    col = frame[name]
    if col.dtype == object:
        col = col.replace("", np.nan)
    try:
        return pd.to_numeric(col).to_numpy(dtype=np.float64)
    except (ValueError, TypeError) as exc:
        raise SchemaError(f"numerical column {name!r}: {exc}") from None


class TabularPipeline(TransformerMixin, BaseEstimator):
    """Fit/transform/inverse pipeline over a table of mixed columns.

    Parameters
    ----------
    schemas : list of ColumnSchema
    clamp_floor : float, default=1e-30
    n_quantiles : int, default=1000
    clip : float, default=1e-7
    masked_label : str, default="__masked__"

    Attributes
    ----------
    encoders_ : dict of str -> CategoricalEncoder
    numeric_means_ : dict of str -> float
        Training means, used to fill missing numeric values.
    quantile_ : QuantileNormalTransformer
    output_layout_ : list of (name, start, stop)
    """

    def __init__(self, schemas, clamp_floor=DEFAULT_CLAMP_FLOOR, n_quantiles=1000, clip=1e-7,
                 masked_label=MASKED_LABEL):
        self.schemas = schemas
        self.clamp_floor = clamp_floor
        self.n_quantiles = n_quantiles
        self.clip = clip
        self.masked_label = masked_label

    # -- helpers -----------------------------------------------------------

    def _schemas(self):
        return load_schemas(list(self.schemas))

    def _ordered(self):
        # numeric block first, then categorical blocks, each in schema order
        schemas = self._schemas()
        return [s for s in schemas if not s.is_categorical] + [s for s in schemas if s.is_categorical]

    def _check_columns(self, frame):
        missing = [s.name for s in self._schemas() if s.name not in frame.columns]
        if missing:
            raise SchemaError(f"columns missing from data: {', '.join(map(str, missing))}")

    def _pre_quantile(self, frame):
        parts = []
        for s in self._ordered():
            if s.is_categorical:
                bits = self.encoders_[s.name].transform(frame[s.name])
                parts.append(log_clamp(bits, self.clamp_floor))
            else:
                values = _numeric_column(frame, s.name)
                values = np.where(np.isnan(values), self.numeric_means_[s.name], values)
                parts.append(values.reshape(-1, 1))
        if not parts:
            return np.zeros((len(frame), 0))
        return np.hstack(parts)

    # -- estimator API -----------------------------------------------------

    def fit(self, X, y=None):
        frame = as_frame(X)
        if len(frame) == 0:
            raise DomainError("cannot fit on an empty dataset")
        self._check_columns(frame)
        self.encoders_ = {}
        self.numeric_means_ = {}
        layout = []
        pos = 0
        for s in self._ordered():
            if s.is_categorical:
                enc = CategoricalEncoder(s.scheme, s.min_frequency, self.masked_label, name=s.name)
                enc.fit(frame[s.name])
                self.encoders_[s.name] = enc
                width = enc.width_
            else:
                values = _numeric_column(frame, s.name)
                if np.all(np.isnan(values)):
                    raise DomainError(f"numerical column {s.name!r} has only missing values")
                self.numeric_means_[s.name] = float(np.nanmean(values))
                width = 1
            layout.append((s.name, pos, pos + width))
            pos += width
        self.output_layout_ = layout
        self.quantile_ = QuantileNormalTransformer(self.n_quantiles, self.clip)
        pre = self._pre_quantile(frame)
        if pre.shape[1]:
            self.quantile_.fit(pre)
        self.n_features_out_ = pos
        return self

    def transform(self, X):
        check_is_fitted(self, "output_layout_")
        frame = as_frame(X)
        self._check_columns(frame)
        pre = self._pre_quantile(frame)
        if pre.shape[1] == 0:
            return pre
        return self.quantile_.transform(pre)

    def inverse_transform(self, X, return_counts=False):
        """Recover a DataFrame in schema column order.

        With ``return_counts=True`` also returns, per categorical column, the
        number of out-of-index and malformed decodes.
        """
        check_is_fitted(self, "output_layout_")
        Z = check_matrix(X, allow_empty=True)
        if Z.shape[1] != self.n_features_out_:
            raise ShapeError(f"expected {self.n_features_out_} columns, got {Z.shape[1]}")
        pre = self.quantile_.inverse_transform(Z) if Z.shape[0] and Z.shape[1] else Z
        columns = {}
        counts = {}
        for name, start, stop in self.output_layout_:
            block = pre[:, start:stop]
            if name in self.encoders_:
                labels = self.encoders_[name].inverse_transform(bits_from_log(block, self.clamp_floor))
                counts[name] = {
                    "out_of_index": int(np.count_nonzero(labels == OUT_OF_INDEX_LABEL)),
                    "malformed": int(np.count_nonzero(labels == MALFORMED_LABEL)),
                }
                columns[name] = labels
            else:
                columns[name] = block[:, 0]
        frame = pd.DataFrame({s.name: columns[s.name] for s in self._schemas()})
        if return_counts:
            return frame, counts
        return frame

    def get_feature_names_out(self, input_features=None):
        check_is_fitted(self, "output_layout_")
        names = []
        for name, start, stop in self.output_layout_:
            if name in self.encoders_:
                names.extend(f"{name}[{i}]" for i in range(stop - start))
            else:
                names.append(str(name))
        return np.asarray(names, dtype=object)

    # -- metrics -----------------------------------------------------------

    def coverage_ratio(self, generated):
        """Distinct generated labels over distinct training labels, per column.

        Decode sentinels are not categories and are ignored; labels never seen
        in training still count, so the ratio can exceed 1.
        """
        check_is_fitted(self, "output_layout_")
        frame = as_frame(generated)
        ratios = {}
        for s in self._schemas():
            if not s.is_categorical:
                continue
            if s.name not in frame.columns:
                raise SchemaError(f"column {s.name!r} missing from generated data")
            labels = set(label_array(frame[s.name])) - {OUT_OF_INDEX_LABEL, MALFORMED_LABEL}
            ratios[s.name] = len(labels) / self.encoders_[s.name].space_.class_count
        mean = float(np.mean(list(ratios.values()))) if ratios else float("nan")
        return ratios, mean

    # -- persistence -------------------------------------------------------

    def to_dict(self):
        check_is_fitted(self, "output_layout_")
        quantile = None
        if self.n_features_out_:
            quantile = {
                "references": self.quantile_.references_.tolist(),
                "knots": self.quantile_.quantiles_.T.tolist(),
            }
        return {
            "format": "resbit-pipeline",
            "version": FORMAT_VERSION,
            "params": {
                "clamp_floor": self.clamp_floor,
                "n_quantiles": self.n_quantiles,
                "clip": self.clip,
                "masked_label": self.masked_label,
            },
            "columns": [s.to_dict() for s in self._schemas()],
            "spaces": {
                name: {
                    "labels": list(enc.space_.labels),
                    "masked_label": enc.space_.masked_label,
                    "block_lengths": list(enc.space_.block_lengths),
                }
                for name, enc in self.encoders_.items()
            },
            "numeric_means": self.numeric_means_,
            "layout": [[name, start, stop] for name, start, stop in self.output_layout_],
            "quantile": quantile,
        }

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True, ensure_ascii=False)

    def save(self, path):
        Path(path).write_text(self.to_json() + "\n", encoding="utf-8")

    @classmethod
    def from_dict(cls, d):
        if d.get("format") != "resbit-pipeline":
            raise SchemaError("not a fitted pipeline document")
        if d.get("version") != FORMAT_VERSION:
            raise SchemaError(f"unsupported pipeline version {d.get('version')!r}")
        params = d["params"]
        pipe = cls(load_schemas(d["columns"]), **params)
        pipe.encoders_ = {}
        for s in pipe._ordered():
            if not s.is_categorical:
                continue
            space_doc = d["spaces"][s.name]
            enc = CategoricalEncoder(s.scheme, s.min_frequency, params["masked_label"], name=s.name)
            enc.space_ = CategorySpace(tuple(space_doc["labels"]), space_doc["masked_label"])
            if list(enc.space_.block_lengths) != list(space_doc["block_lengths"]):
                raise SchemaError(f"column {s.name!r}: stored block lengths disagree with the labels")
            pipe.encoders_[s.name] = enc
        pipe.numeric_means_ = {k: float(v) for k, v in d["numeric_means"].items()}
        pipe.output_layout_ = [(name, int(a), int(b)) for name, a, b in d["layout"]]
        pipe.n_features_out_ = pipe.output_layout_[-1][2] if pipe.output_layout_ else 0
        pipe.quantile_ = QuantileNormalTransformer(pipe.n_quantiles, pipe.clip)
        if d["quantile"] is not None:
            pipe.quantile_.references_ = np.asarray(d["quantile"]["references"], dtype=np.float64)
            pipe.quantile_.quantiles_ = np.asarray(d["quantile"]["knots"], dtype=np.float64).T.copy()
            pipe.quantile_.n_features_in_ = pipe.n_features_out_
        return pipe

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))

    @classmethod
    def load(cls, path):
        return cls.from_json(Path(path).read_text(encoding="utf-8"))


# -- cardinality survey ------------------------------------------------------


@dataclass(frozen=True)
class ColumnCardinality:
    name: str
    cardinality: int
    onehot_dims: int
    binary_dims: int
    resbit_dims: int


@dataclass(frozen=True)
class CardinalitySurvey:
    columns: tuple

    @property
    def total(self):
        return sum(c.cardinality for c in self.columns)

    def total_dims(self, scheme):
        return sum(getattr(c, f"{scheme}_dims") for c in self.columns)

    def records(self):
        return [asdict(c) for c in self.columns]


def survey_cardinalities(cardinalities, names=None):
    """Projected widths for a list of known per-column cardinalities."""
    names = names or [f"cat_{i}" for i in range(len(cardinalities))]
    cols = tuple(
        ColumnCardinality(name, int(m), *(codecs.dims(m, sch) if m else 0 for sch in ("onehot", "binary", "resbit")))
        for name, m in zip(names, cardinalities)
    )
    return CardinalitySurvey(cols)


def cardinality_survey(rows, schemas):
    """Distinct-label count of every categorical column, before any masking."""
    frame = as_frame(rows)
    schemas = load_schemas(list(schemas))
    cats = [s for s in schemas if s.is_categorical]
    missing = [s.name for s in cats if s.name not in frame.columns]
    if missing:
        raise SchemaError(f"columns missing from data: {', '.join(map(str, missing))}")
    counts = [len(pd.unique(label_array(frame[s.name]))) for s in cats]
    return survey_cardinalities(counts, [s.name for s in cats])


def coverage_ratio(generated, pipeline):
    """Function form of :meth:`TabularPipeline.coverage_ratio`."""
    return pipeline.coverage_ratio(generated)
