"""Timestamped multivariate glucose series and their CSV form.

CSV contract (one file per patient): header ``datetime,glucose,CHO,insulin``,
ISO-8601 timestamps at minute resolution, empty field = missing. Glucose is
mg/dL, CHO grams, insulin units. CHO and insulin are event masses: absent
means zero.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from datetime import datetime
from pathlib import Path

import numpy as np

from ..errors import IngestionError

CSV_HEADER = ["datetime", "glucose", "CHO", "insulin"]
GLUCOSE_MIN = 0.0
GLUCOSE_MAX = 600.0


@dataclass
class GlucoseSeries:
    """Ordered readings; NaN marks a missing glucose value."""

    patient_id: str
    t: np.ndarray        # datetime64[m], strictly increasing
    glucose: np.ndarray  # mg/dL or NaN
    cho: np.ndarray      # grams, 0 when absent
    insulin: np.ndarray  # units, 0 when absent

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype="datetime64[m]")
        self.glucose = np.asarray(self.glucose, dtype=np.float64)
        self.cho = np.asarray(self.cho, dtype=np.float64)
        self.insulin = np.asarray(self.insulin, dtype=np.float64)
        n = self.t.shape[0]
        if not (self.glucose.shape == self.cho.shape == self.insulin.shape == (n,)):
            raise IngestionError("series columns have inconsistent lengths")
        if n > 1 and not np.all(np.diff(self.t).astype(np.int64) > 0):
            raise IngestionError(
                f"timestamps must be strictly increasing (patient {self.patient_id})")
        present = np.isfinite(self.glucose)
        if np.any((self.glucose[present] <= GLUCOSE_MIN)
                  | (self.glucose[present] >= GLUCOSE_MAX)):
            raise IngestionError(
                f"glucose readings outside ({GLUCOSE_MIN}, {GLUCOSE_MAX}) mg/dL "
                f"(patient {self.patient_id})")
        if np.any(~np.isfinite(self.cho)) or np.any(~np.isfinite(self.insulin)):
            raise IngestionError("CHO/insulin columns must be finite (0 when absent)")

    def __len__(self):
        return self.t.shape[0]


def _parse_timestamp(text, line_no):
    try:
        dt = datetime.fromisoformat(text.strip())
    except ValueError as exc:
        raise IngestionError(f"line {line_no}: bad timestamp {text!r}") from exc
    return np.datetime64(dt).astype("datetime64[m]")


def read_series_csv(path, patient_id=None) -> GlucoseSeries:
    path = Path(path)
    if patient_id is None:
        patient_id = path.stem
    stamps, glucose, cho, insulin = [], [], [], []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != CSV_HEADER:
            raise IngestionError(f"{path}: expected header {','.join(CSV_HEADER)}")
        for line_no, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 4:
                raise IngestionError(f"{path} line {line_no}: expected 4 fields")
            stamps.append(_parse_timestamp(row[0], line_no))
            glucose.append(float(row[1]) if row[1].strip() else np.nan)
            cho.append(float(row[2]) if row[2].strip() else 0.0)
            insulin.append(float(row[3]) if row[3].strip() else 0.0)
    return GlucoseSeries(patient_id=patient_id, t=np.array(stamps),
                         glucose=np.array(glucose), cho=np.array(cho),
                         insulin=np.array(insulin))


def write_series_csv(series: GlucoseSeries, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_HEADER)
        for i in range(len(series)):
            writer.writerow([
                str(series.t[i]),
                "" if not np.isfinite(series.glucose[i]) else repr(float(series.glucose[i])),
                repr(float(series.cho[i])) if series.cho[i] != 0.0 else "0",
                repr(float(series.insulin[i])) if series.insulin[i] != 0.0 else "0",
            ])
