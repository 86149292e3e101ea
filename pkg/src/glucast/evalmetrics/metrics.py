"""Post-processing and statistical accuracy metrics.

Predictions emerge from the model standardized and in sample order; before
any evaluation they are rescaled to mg/dL, sorted by target timestamp, and
deduplicated into a prediction series aligned with the reference readings.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np


@dataclass
class PredictionSeries:
    """Reference and predicted glucose paired on an ordered time axis."""

    t: np.ndarray        # datetime64[m], strictly increasing
    y_true: np.ndarray   # mg/dL
    y_pred: np.ndarray   # mg/dL

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype="datetime64[m]")
        self.y_true = np.asarray(self.y_true, dtype=np.float64)
        self.y_pred = np.asarray(self.y_pred, dtype=np.float64)
        n = self.t.shape[0]
        if self.y_true.shape != (n,) or self.y_pred.shape != (n,):
            raise ValueError("prediction series columns have inconsistent lengths")
        if n > 1 and not np.all(np.diff(self.t).astype(np.int64) > 0):
            raise ValueError("prediction series timestamps must be increasing")
        if np.any(self.y_true <= 0) or np.any(self.y_pred <= 0):
            raise ValueError("glucose values must be positive")

    def __len__(self):
        return self.t.shape[0]


def reconstruct(predictions, scaling, truth) -> PredictionSeries:
    """Rescale standardized predictions and reorder them into a series.

    predictions: iterable of (timestamp, standardized prediction).
    truth: mapping timestamp -> reference mg/dL; a prediction at a timestamp
    absent from the mapping is an error. Duplicate timestamps collapse to
    the last write, with a warning.
    """
    seen = {}
    duplicates = 0
    for t, y_std in predictions:
        t = np.datetime64(t, "m")
        if t in seen:
            duplicates += 1
        seen[t] = float(scaling.invert_target(y_std))
    if duplicates:
        warnings.warn(f"{duplicates} duplicate prediction timestamp(s); "
                      "keeping the last value", stacklevel=2)
    if not seen:
        raise ValueError("no predictions to reconstruct")
    unknown = [t for t in seen if t not in truth]
    if unknown:
        raise ValueError(f"predictions at unknown timestamps: {unknown[:3]}"
                         f"{'...' if len(unknown) > 3 else ''}")
    order = np.sort(np.array(list(seen), dtype="datetime64[m]"))
    return PredictionSeries(
        t=order,
        y_true=np.array([truth[t] for t in order]),
        y_pred=np.array([seen[t] for t in order]),
    )


def rmse(series: PredictionSeries) -> float:
    if len(series) == 0:
        raise ValueError("rmse of an empty series")
    return float(np.sqrt(np.mean((series.y_pred - series.y_true) ** 2)))


def mape(series: PredictionSeries) -> float:
    """Mean absolute percentage error, in percent."""
    if len(series) == 0:
        raise ValueError("mape of an empty series")
    return float(np.mean(np.abs(series.y_pred - series.y_true) / series.y_true) * 100.0)


def rates(series: PredictionSeries):
    """Per-step change rates in mg/dL/min for both series.

    Uses the actual timestamp difference of each consecutive pair; the first
    point carries no rate and is excluded from clinical classification.
    """
    if len(series) < 2:
        raise ValueError("rates need at least 2 points")
    dt = np.diff(series.t).astype(np.int64).astype(np.float64)  # minutes
    rate_true = np.diff(series.y_true) / dt
    rate_pred = np.diff(series.y_pred) / dt
    return rate_true, rate_pred
