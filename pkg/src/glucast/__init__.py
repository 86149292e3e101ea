"""Interpretable two-level-attention glucose forecasting.

Subpackages: ``kernel`` (reverse-mode numeric primitives), ``models`` (the
attention regressor, its contribution decomposition, and baselines),
``training`` (adversarial multi-source transfer), ``datapipe``
(preprocessing), ``synthdata`` (synthetic cohorts), ``evalmetrics``
(statistical and clinical evaluation), and ``cli`` (batch front end).
"""

__version__ = "0.1.0"
