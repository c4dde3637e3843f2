"""Partitioning of raw channels into small per-variable alphabets.

Continuous channels are cut into ``alphabet_size`` cells by one of three
split strategies (uniform width, equal-frequency quantiles, or variance
minimizing natural breaks).  Categorical channels are mapped onto integer
codes through an explicit category list.  The result of fitting is a list
of :class:`VariableSpec` objects that fully determine the symbolization
and can be serialized to JSON.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .exceptions import (
    AllMissing,
    CollapsedCells,
    DataError,
    DegenerateRange,
    InvalidAlphabet,
    ShapeMismatch,
    TooFewDistinct,
    UnknownCategory,
)
from .utils import as_1d_float

UNKNOWN_CATEGORY = "__unknown__"

SPLIT_METHODS = ("uniform", "quantile", "jenks")


def _check_alphabet_size(alphabet_size):
    if not isinstance(alphabet_size, (int, np.integer)) or alphabet_size < 2:
        raise InvalidAlphabet(f"alphabet_size must be an int >= 2, got {alphabet_size!r}")
    return int(alphabet_size)


def uniform_splits(values, alphabet_size):
    """Equal-width interior boundaries between the observed min and max.

    Returns ``alphabet_size - 1`` strictly increasing split points.
    """
    s = _check_alphabet_size(alphabet_size)
    arr = as_1d_float(values)
    lo, hi = float(np.min(arr)), float(np.max(arr))
    if not np.isfinite(lo) or not np.isfinite(hi):
        raise DataError("values contain non-finite entries")
    if hi == lo:
        raise DegenerateRange(f"all values equal to {lo}; no range to partition")
    return lo + (hi - lo) * np.arange(1, s) / s


def quantile_splits(values, alphabet_size):
    """Equal-frequency interior boundaries at quantiles k/s, k=1..s-1.

    Uses linear interpolation between order statistics.  Raises
    :class:`CollapsedCells` when two adjacent splits coincide, which
    happens when a single value occupies more than one cell's share
    of the mass.
    """
    s = _check_alphabet_size(alphabet_size)
    arr = as_1d_float(values)
    if not np.all(np.isfinite(arr)):
        raise DataError("values contain non-finite entries")
    if np.max(arr) == np.min(arr):
        raise DegenerateRange(f"all values equal to {arr[0]}; no range to partition")
    levels = np.arange(1, s) / s
    splits = np.quantile(arr, levels)
    dup = np.nonzero(np.diff(splits) == 0.0)[0]
    if dup.size:
        pct = 100.0 * levels[dup[0] + 1]
        raise CollapsedCells(
            f"splits at the {pct:g}-th percentile collapse; "
            f"reduce alphabet_size or deduplicate the channel",
            percentile=pct,
        )
    return splits


def _prefix_moments(values, counts):
    """Leading-zero cumulative weight, sum and sum of squares."""
    cw = np.concatenate([[0.0], np.cumsum(counts)])
    cs = np.concatenate([[0.0], np.cumsum(values * counts)])
    cs2 = np.concatenate([[0.0], np.cumsum(values * values * counts)])
    return cw, cs, cs2


def _segment_cost(cw, cs, cs2, i, j):
    """Within-segment sum of squared deviations for distinct values i..j."""
    w = cw[j + 1] - cw[i]
    s1 = cs[j + 1] - cs[i]
    s2 = cs2[j + 1] - cs2[i]
    return s2 - s1 * s1 / w


def jenks_splits(values, alphabet_size):
    """Natural-breaks interior boundaries minimizing within-cell variance.

    Runs the exact dynamic program over distinct values weighted by their
    multiplicity, so the optimum is identical to an exhaustive search over
    all contiguous partitions.  Split points are placed halfway between
    the adjacent distinct values of neighbouring cells.
    """
    s = _check_alphabet_size(alphabet_size)
    arr = as_1d_float(values)
    if not np.all(np.isfinite(arr)):
        raise DataError("values contain non-finite entries")
    distinct, counts = np.unique(arr, return_counts=True)
    n = distinct.size
    if n < s:
        raise TooFewDistinct(f"{n} distinct values cannot fill {s} cells")
    cw, cs, cs2 = _prefix_moments(distinct, counts.astype(np.float64))

    # best[k, j]: minimal cost of grouping distinct[0..j] into k+1 segments.
    best = np.full((s, n), np.inf)
    start = np.zeros((s, n), dtype=np.int64)
    best[0, :] = _segment_cost(cw, cs, cs2, 0, np.arange(n))
    for k in range(1, s):
        for j in range(k, n):
            i = np.arange(k, j + 1)
            cand = best[k - 1, i - 1] + _segment_cost(cw, cs, cs2, i, j)
            m = int(np.argmin(cand))  # ties: earliest segment start
            best[k, j] = cand[m]
            start[k, j] = i[m]

    cuts = []
    j = n - 1
    for k in range(s - 1, 0, -1):
        i = start[k, j]
        cuts.append(i)
        j = i - 1
    cuts.reverse()
    return np.array([(distinct[i - 1] + distinct[i]) / 2.0 for i in cuts])


def fit_splits(values, alphabet_size, method="quantile"):
    """Dispatch to one of the split strategies by name."""
    if method == "uniform":
        return uniform_splits(values, alphabet_size)
    if method == "quantile":
        return quantile_splits(values, alphabet_size)
    if method == "jenks":
        return jenks_splits(values, alphabet_size)
    raise InvalidAlphabet(f"unknown split method {method!r}; expected one of {SPLIT_METHODS}")


def symbolize_channel(values, splits):
    """Map continuous values to cell indices 0..len(splits).

    A value equal to a split point lands in the higher cell.
    """
    arr = as_1d_float(values)
    if not np.all(np.isfinite(arr)):
        raise DataError("values contain non-finite entries; impute before symbolizing")
    return np.searchsorted(np.asarray(splits, dtype=np.float64), arr, side="right").astype(np.int64)


def encode_categories(values, categories):
    """Map category labels to their index in ``categories``.

    If ``categories`` contains the reserved ``__unknown__`` entry, unseen
    labels map to its index; otherwise they raise :class:`UnknownCategory`.
    """
    lookup = {c: i for i, c in enumerate(categories)}
    fallback = lookup.get(UNKNOWN_CATEGORY)
    out = np.empty(len(values), dtype=np.int64)
    for pos, v in enumerate(values):
        idx = lookup.get(v, fallback)
        if idx is None:
            raise UnknownCategory(f"category {v!r} not in {list(categories)}")
        out[pos] = idx
    return out


def interpolate_missing(values):
    """Fill NaN gaps in a continuous channel by linear interpolation.

    Leading and trailing gaps take the nearest observed value.
    """
    arr = as_1d_float(values).copy()
    known = np.isfinite(arr)
    if not known.any():
        raise AllMissing("channel has no observed values to interpolate from")
    if known.all():
        return arr
    idx = np.arange(arr.size)
    arr[~known] = np.interp(idx[~known], idx[known], arr[known])
    return arr


def forward_fill(values):
    """Fill missing categorical entries with the previous observed label.

    Missing entries are ``None`` or float NaN.  A missing head takes the
    first observed label.
    """
    out = list(values)
    missing = [v is None or (isinstance(v, float) and np.isnan(v)) for v in out]
    if all(missing):
        raise AllMissing("channel has no observed values to fill from")
    last = None
    for i, miss in enumerate(missing):
        if miss:
            out[i] = last
        else:
            last = out[i]
    # backfill the head
    first = next(out[i] for i in range(len(out)) if not missing[i])
    for i in range(len(out)):
        if out[i] is None:
            out[i] = first
        else:
            break
    return out


@dataclass(frozen=True)
class VariableSpec:
    """Frozen description of one symbolized channel.

    Continuous channels carry strictly increasing ``splits``; categorical
    channels carry an ordered ``categories`` tuple.  ``alphabet_size`` is
    derived, never stored independently.
    """

    name: str
    kind: str
    splits: tuple = field(default=None)
    categories: tuple = field(default=None)
    method: str = field(default=None)

    def __post_init__(self):
        if self.kind == "continuous":
            if self.splits is None or len(self.splits) < 1:
                raise InvalidAlphabet(f"{self.name}: continuous spec needs at least one split")
            splits = tuple(float(x) for x in self.splits)
            if not all(np.isfinite(splits)):
                raise InvalidAlphabet(f"{self.name}: splits must be finite")
            if any(b <= a for a, b in zip(splits, splits[1:])):
                raise InvalidAlphabet(f"{self.name}: splits must be strictly increasing")
            object.__setattr__(self, "splits", splits)
            if self.categories is not None:
                raise InvalidAlphabet(f"{self.name}: continuous spec cannot carry categories")
        elif self.kind == "categorical":
            if self.categories is None or len(self.categories) < 2:
                raise InvalidAlphabet(f"{self.name}: categorical spec needs at least two categories")
            cats = tuple(str(c) for c in self.categories)
            if len(set(cats)) != len(cats):
                raise InvalidAlphabet(f"{self.name}: duplicate categories")
            object.__setattr__(self, "categories", cats)
            if self.splits is not None:
                raise InvalidAlphabet(f"{self.name}: categorical spec cannot carry splits")
        else:
            raise InvalidAlphabet(f"{self.name}: kind must be continuous or categorical, got {self.kind!r}")

    @property
    def alphabet_size(self):
        if self.kind == "continuous":
            return len(self.splits) + 1
        return len(self.categories)

    @property
    def ordered(self):
        """Whether symbol indices carry magnitude order (continuous only)."""
        return self.kind == "continuous"

    def symbolize(self, values):
        if self.kind == "continuous":
            return symbolize_channel(values, self.splits)
        return encode_categories(values, self.categories)

    def to_dict(self):
        d = {"name": self.name, "kind": self.kind, "alphabet_size": self.alphabet_size, "ordered": self.ordered}
        if self.kind == "continuous":
            d["splits"] = list(self.splits)
            if self.method is not None:
                d["method"] = self.method
        else:
            d["categories"] = list(self.categories)
        return d

    @classmethod
    def from_dict(cls, d):
        return cls(
            name=d["name"],
            kind=d["kind"],
            splits=tuple(d["splits"]) if d.get("splits") is not None else None,
            categories=tuple(d["categories"]) if d.get("categories") is not None else None,
            method=d.get("method"),
        )


class SymbolicPartitioner(BaseEstimator, TransformerMixin):
    """Fit per-channel alphabets and map raw rows to integer symbols.

    Parameters
    ----------
    alphabet_size : int, default 4
        Cell count for continuous channels without a schema override.
    method : {"uniform", "quantile", "jenks"}, default "quantile"
        Split strategy for continuous channels without an override.
    schema : dict or None
        Optional per-channel overrides keyed by column name.  Each entry
        may set ``kind``, ``alphabet_size``, ``method`` or ``categories``.
    unknown_slot : bool, default False
        Reserve a ``__unknown__`` category on fitted categorical channels
        so unseen labels symbolize instead of raising.

    After ``fit``, ``variables_`` holds one :class:`VariableSpec` per
    column and ``transform`` returns an int64 matrix of symbol indices.
    """

    def __init__(self, alphabet_size=4, method="quantile", schema=None, unknown_slot=False):
        self.alphabet_size = alphabet_size
        self.method = method
        self.schema = schema
        self.unknown_slot = unknown_slot

    def _columns(self, X):
        if hasattr(X, "columns"):
            return list(map(str, X.columns))
        X = np.asarray(X)
        if X.ndim != 2:
            raise ShapeMismatch(f"expected a 2-D table, got shape {X.shape}")
        return [f"x{i}" for i in range(X.shape[1])]

    def _column(self, X, name, pos):
        if hasattr(X, "columns"):
            return X[name].to_numpy()
        return np.asarray(X)[:, pos]

    def _entry(self, name):
        schema = self.schema or {}
        return schema.get(name, {})

    def _infer_kind(self, name, column):
        entry = self._entry(name)
        if "kind" in entry:
            return entry["kind"]
        if "categories" in entry:
            return "categorical"
        if column.dtype.kind in "OUS":
            return "categorical"
        return "continuous"

    def fit(self, X, y=None):
        columns = self._columns(X)
        variables = []
        for pos, name in enumerate(columns):
            col = self._column(X, name, pos)
            entry = self._entry(name)
            kind = self._infer_kind(name, col)
            if kind == "continuous":
                size = int(entry.get("alphabet_size", self.alphabet_size))
                method = entry.get("method", self.method)
                values = as_1d_float(col, name)
                values = values[np.isfinite(values)]
                if values.size == 0:
                    raise AllMissing(f"{name}: no observed values to fit splits on")
                splits = fit_splits(values, size, method)
                variables.append(VariableSpec(name=name, kind="continuous", splits=tuple(splits), method=method))
            else:
                if "categories" in entry:
                    cats = list(entry["categories"])
                else:
                    observed = [v for v in col if not (v is None or (isinstance(v, float) and np.isnan(v)))]
                    cats = sorted(set(map(str, observed)))
                if self.unknown_slot and UNKNOWN_CATEGORY not in cats:
                    cats.append(UNKNOWN_CATEGORY)
                variables.append(VariableSpec(name=name, kind="categorical", categories=tuple(cats)))
        self.variables_ = variables
        self.n_variables_ = len(variables)
        return self

    def transform(self, X):
        if not hasattr(self, "variables_"):
            raise DataError("partitioner is not fitted")
        columns = self._columns(X)
        names = [v.name for v in self.variables_]
        if columns != names and hasattr(X, "columns"):
            missing = [n for n in names if n not in columns]
            if missing:
                raise ShapeMismatch(f"input lacks fitted columns {missing}")
        elif not hasattr(X, "columns") and len(columns) != len(names):
            raise ShapeMismatch(f"expected {len(names)} columns, got {len(columns)}")
        out = np.empty((len(self._column(X, names[0], 0)), len(names)), dtype=np.int64)
        for pos, spec in enumerate(self.variables_):
            col = self._column(X, spec.name, pos)
            if spec.kind == "categorical":
                col = [str(v) for v in col]
            out[:, pos] = spec.symbolize(col)
        return out

    def alphabet_sizes(self):
        return [v.alphabet_size for v in self.variables_]

    @classmethod
    def from_variable_specs(cls, specs):
        """Rebuild a fitted partitioner from serialized specs."""
        est = cls()
        est.variables_ = [s if isinstance(s, VariableSpec) else VariableSpec.from_dict(s) for s in specs]
        est.n_variables_ = len(est.variables_)
        return est
