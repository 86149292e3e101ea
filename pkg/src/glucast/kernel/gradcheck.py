"""Central finite-difference validation of analytic gradients."""

from __future__ import annotations

import numpy as np

from ..errors import EvaluationError


def grad_check(f, params, eps):
    """Compare f's analytic gradient against central differences.

    f maps a parameter array to a ``(value, gradient)`` pair where the
    gradient has the same shape as the parameters. Returns the maximum
    relative error over all coordinates:

        |analytic - numeric| / max(1e-8, |analytic| + |numeric|)
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    params = np.asarray(params, dtype=np.float64)
    value, analytic = f(params)
    value = float(value)
    analytic = np.asarray(analytic, dtype=np.float64)
    if not np.isfinite(value) or not np.all(np.isfinite(analytic)):
        raise EvaluationError("function value or gradient is not finite at params")
    if analytic.shape != params.shape:
        raise EvaluationError(
            f"gradient shape {analytic.shape} does not match params {params.shape}")

    numeric = np.empty_like(params)
    flat = params.reshape(-1)
    num_flat = numeric.reshape(-1)
    for i in range(flat.size):
        saved = flat[i]
        flat[i] = saved + eps
        hi = float(f(params)[0])
        flat[i] = saved - eps
        lo = float(f(params)[0])
        flat[i] = saved
        if not (np.isfinite(hi) and np.isfinite(lo)):
            raise EvaluationError(f"function not finite at perturbed coordinate {i}")
        num_flat[i] = (hi - lo) / (2.0 * eps)

    denom = np.maximum(1e-8, np.abs(analytic) + np.abs(numeric))
    return float(np.max(np.abs(analytic - numeric) / denom))
