"""Post-processing, statistical metrics, and clinical error-grid analysis."""

from .grids import (
    CgEgaReport,
    cg_ega_classify,
    cg_ega_report,
    glycemic_region,
    p_ega,
    r_ega,
    rate_expansions,
    report_to_dict,
    write_points_csv,
    write_report_json,
)
from .metrics import PredictionSeries, mape, rates, reconstruct, rmse

__all__ = [
    "PredictionSeries", "reconstruct", "rmse", "mape", "rates",
    "p_ega", "r_ega", "glycemic_region", "cg_ega_classify", "cg_ega_report",
    "CgEgaReport", "rate_expansions", "report_to_dict",
    "write_report_json", "write_points_csv",
]
