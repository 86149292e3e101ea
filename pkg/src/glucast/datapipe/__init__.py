"""Raw glucose CSV ingestion and the preprocessing chain."""

from .archive import (
    read_patient_archive,
    read_sample_csv,
    read_scaling_json,
    write_patient_archive,
    write_sample_csv,
    write_scaling_json,
)
from .pipeline import (
    PERIOD_MINUTES,
    PH_STEPS,
    SEQ_LEN,
    Sample,
    SampleSet,
    Scaling,
    SplitSpec,
    build_samples,
    clean_spikes,
    five_fold_rotations,
    preprocess_series,
    recover_missing,
    resample,
    split,
    standardize,
)
from .series import GlucoseSeries, read_series_csv, write_series_csv

__all__ = [
    "GlucoseSeries", "read_series_csv", "write_series_csv",
    "Sample", "SampleSet", "Scaling", "SplitSpec",
    "clean_spikes", "resample", "build_samples", "recover_missing",
    "split", "standardize", "five_fold_rotations", "preprocess_series",
    "SEQ_LEN", "PH_STEPS", "PERIOD_MINUTES",
    "write_sample_csv", "read_sample_csv", "write_scaling_json",
    "read_scaling_json", "write_patient_archive", "read_patient_archive",
]
