"""Predictive models: the two-level-attention regressor and baselines."""

from .attribution import (
    ContributionMap,
    EventAttributionProfile,
    aggregate_attributions,
    contributions,
    event_conditioned_attributions,
    event_mask_from_windows,
    normalized_contributions,
)
from .baselines import (
    LstmRegParams,
    StdAttnParams,
    init_lstm_reg_params,
    init_std_attn_params,
    lstm_regressor_forward,
    std_attention_forward,
)
from .retain import (
    ForwardTrace,
    RetainConfig,
    RetainParams,
    context_vector,
    embed,
    forward,
    init_retain_params,
    predict_batch,
    temporal_attention,
    variable_attention,
)
from .serialize import load_model, save_model
from .wrappers import LstmRegModel, RetainModel, StdAttnModel, restore, snapshot

__all__ = [
    "RetainConfig", "RetainParams", "ForwardTrace", "init_retain_params",
    "forward", "predict_batch", "embed", "temporal_attention",
    "variable_attention", "context_vector",
    "ContributionMap", "contributions", "normalized_contributions",
    "aggregate_attributions", "event_conditioned_attributions",
    "event_mask_from_windows", "EventAttributionProfile",
    "StdAttnParams", "LstmRegParams", "init_std_attn_params",
    "init_lstm_reg_params", "std_attention_forward", "lstm_regressor_forward",
    "RetainModel", "StdAttnModel", "LstmRegModel", "snapshot", "restore",
    "save_model", "load_model",
]
