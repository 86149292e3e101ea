"""Hand-written error-grid inequalities, independent of the table encoding.

This module exists to cross-check ``data/cg_ega_tables.json``: it spells the
same pinned zone definitions as literal comparisons, written separately from
the generic constraint interpreter. Tests demand exact agreement between the
two on dense grids. Keep the two encodings independent; do not refactor one
in terms of the other.
"""

from __future__ import annotations

import numpy as np


def point_zones_oracle(y_true, y_pred, rate_true):
    x = np.asarray(y_true, dtype=np.float64)
    y = np.asarray(y_pred, dtype=np.float64)
    r = np.asarray(rate_true, dtype=np.float64)
    x, y, r = np.broadcast_arrays(x, y, r)

    up = np.zeros(x.shape)
    up[(r >= -2.0) & (r < -1.0)] = 10.0
    up[r < -2.0] = 20.0
    lo = np.zeros(x.shape)
    lo[(r > 1.0) & (r <= 2.0)] = 10.0
    lo[r > 2.0] = 20.0

    zone_a = ((x <= 70.0) & (y <= 70.0 + up)) | \
             ((y <= 1.2 * x + up) & (y >= 0.8 * x - lo))
    zone_e = ((x <= 70.0) & (y >= 180.0 + up)) | \
             ((x >= 180.0) & (y <= 70.0 - lo))
    zone_c = ((x >= 70.0) & (x <= 290.0) & (y >= x + 110.0 + up)) | \
             ((x >= 130.0) & (x <= 180.0) & (y <= 1.4 * x - 182.0 - lo))
    zone_d = ((x <= 70.0) & (y >= 70.0 + up) & (y <= 180.0 + up)) | \
             ((x >= 240.0) & (y >= 70.0 - lo) & (y <= 180.0 + up))

    # reverse-precedence overwrites: A beats E beats C beats D beats B
    out = np.full(x.shape, "B", dtype="<U2")
    out[zone_d] = "D"
    out[zone_c] = "C"
    out[zone_e] = "E"
    out[zone_a] = "A"
    return out if out.shape else str(out[()])


def rate_zones_oracle(rate_true, rate_pred):
    x = np.asarray(rate_true, dtype=np.float64)
    y = np.asarray(rate_pred, dtype=np.float64)
    x, y = np.broadcast_arrays(x, y)

    band = np.minimum(0.8 * x, 1.2 * x)
    band_hi = np.maximum(0.8 * x, 1.2 * x)
    # the +/-1 band is stated two-sided, not as |y-x|<=1: the abs form rounds
    # differently on exact boundaries and would disagree with any tabulation
    zone_a = ((y >= x - 1.0) & (y <= x + 1.0)) | ((y >= band) & (y <= band_hi))
    zone_ue = (y >= 2.0) & (x <= 1.0)
    zone_le = (y <= -2.0) & (x >= -1.0)
    zone_uc = (x >= 1.0) & (y >= x + 2.0)
    zone_lc = (x <= -1.0) & (y <= x - 2.0)
    zone_ud = (x <= -1.0) & (y >= x + 1.0) & (y <= 2.0)
    zone_ld = (x >= 1.0) & (y <= x - 1.0) & (y >= -2.0)

    out = np.full(x.shape, "B", dtype="<U2")
    out[zone_ld] = "lD"
    out[zone_ud] = "uD"
    out[zone_lc] = "lC"
    out[zone_uc] = "uC"
    out[zone_le] = "lE"
    out[zone_ue] = "uE"
    out[zone_a] = "A"
    return out if out.shape else str(out[()])


def classify_oracle(p_zone, r_zone, region):
    """AP/BE/EP rule in closed form: the combination matrices restate this."""
    if region not in ("hypo", "eu", "hyper"):
        raise ValueError(f"unknown glycemic region {region!r}")
    point_fine = p_zone in ("A", "B")
    if point_fine and r_zone in ("A", "B"):
        return "AP"
    if point_fine and r_zone in ("uC", "lC", "uD", "lD"):
        return "BE"
    return "EP"
