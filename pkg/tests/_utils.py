"""Shared helpers for gradient comparisons against central differences."""

import numpy as np


def finite_diff_params(value_fn, arrays, eps=1e-5):
    """Central-difference gradients of value_fn() w.r.t. live param arrays."""
    out = {}
    for name, arr in arrays.items():
        g = np.zeros_like(arr)
        flat = arr.reshape(-1)
        gf = g.reshape(-1)
        for i in range(flat.size):
            keep = flat[i]
            flat[i] = keep + eps
            hi = value_fn()
            flat[i] = keep - eps
            lo = value_fn()
            flat[i] = keep
            gf[i] = (hi - lo) / (2.0 * eps)
        out[name] = g
    return out


def max_rel_err(a, b):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    denom = np.maximum(1e-8, np.abs(a) + np.abs(b))
    return float(np.max(np.abs(a - b) / denom)) if a.size else 0.0
