"""JSON persistence for model parameters.

One document per model: a format-version tag, a config block, and the named
parameter arrays as nested lists. Floats are written through Python's repr,
which is the shortest exact decimal form of an IEEE double, so a save/load
round trip restores every value bit-for-bit.
"""

from __future__ import annotations

import json

import numpy as np

from ..errors import ConfigError
from ..kernel import LstmParams
from . import baselines, retain
from .wrappers import LstmRegModel, RetainModel, StdAttnModel


def _arrays_to_lists(arrays):
    return {name: np.asarray(arr, dtype=np.float64).tolist()
            for name, arr in arrays.items()}


def _list_to_array(doc, name):
    return np.asarray(doc["params"][name], dtype=np.float64)


def save_model(model, path) -> None:
    if isinstance(model, RetainModel):
        cfg = model.config
        config = {"seq_len": cfg.seq_len, "input_dim": cfg.input_dim,
                  "embed_dim": cfg.embed_dim, "alpha_hidden": cfg.alpha_hidden,
                  "beta_hidden": cfg.beta_hidden, "n_sources": cfg.n_sources,
                  "reverse_time": cfg.reverse_time}
    elif isinstance(model, StdAttnModel):
        config = {"input_dim": model.params.rnn.input_size,
                  "hidden": model.params.rnn.hidden_size}
    elif isinstance(model, LstmRegModel):
        config = {"input_dim": model.params.layer1.input_size,
                  "hidden1": model.params.layer1.hidden_size,
                  "hidden2": model.params.layer2.hidden_size,
                  "n_sources": model.params.adv_w.shape[0]}
    else:
        raise ConfigError(f"cannot serialize object of type {type(model).__name__}")

    doc = {"format": model.format_version, "config": config,
           "params": _arrays_to_lists(model.param_arrays())}
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh)


def load_model(path):
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    fmt = doc.get("format")
    if fmt == "retain-v1":
        cfg = retain.RetainConfig(**doc["config"])
        params = retain.RetainParams(
            embed_w=_list_to_array(doc, "embed_w"),
            alpha_rnn=LstmParams(_list_to_array(doc, "alpha_rnn.w_in"),
                                 _list_to_array(doc, "alpha_rnn.w_rec"),
                                 _list_to_array(doc, "alpha_rnn.bias")),
            alpha_w=_list_to_array(doc, "alpha_w"),
            alpha_b=_list_to_array(doc, "alpha_b"),
            beta_rnn=LstmParams(_list_to_array(doc, "beta_rnn.w_in"),
                                _list_to_array(doc, "beta_rnn.w_rec"),
                                _list_to_array(doc, "beta_rnn.bias")),
            beta_w=_list_to_array(doc, "beta_w"),
            beta_b=_list_to_array(doc, "beta_b"),
            out_w=_list_to_array(doc, "out_w"),
            out_b=_list_to_array(doc, "out_b"),
            adv_w=_list_to_array(doc, "adv_w"),
            adv_b=_list_to_array(doc, "adv_b"),
        )
        return RetainModel(cfg, params)
    if fmt == "stdattn-v1":
        params = baselines.StdAttnParams(
            rnn=LstmParams(_list_to_array(doc, "rnn.w_in"),
                           _list_to_array(doc, "rnn.w_rec"),
                           _list_to_array(doc, "rnn.bias")),
            attn_w=_list_to_array(doc, "attn_w"),
            attn_b=_list_to_array(doc, "attn_b"),
            out_w=_list_to_array(doc, "out_w"),
            out_b=_list_to_array(doc, "out_b"),
        )
        return StdAttnModel(params)
    if fmt == "lstmreg-v1":
        params = baselines.LstmRegParams(
            layer1=LstmParams(_list_to_array(doc, "layer1.w_in"),
                              _list_to_array(doc, "layer1.w_rec"),
                              _list_to_array(doc, "layer1.bias")),
            layer2=LstmParams(_list_to_array(doc, "layer2.w_in"),
                              _list_to_array(doc, "layer2.w_rec"),
                              _list_to_array(doc, "layer2.bias")),
            out_w=_list_to_array(doc, "out_w"),
            out_b=_list_to_array(doc, "out_b"),
            adv_w=_list_to_array(doc, "adv_w"),
            adv_b=_list_to_array(doc, "adv_b"),
        )
        return LstmRegModel(params)
    raise ConfigError(f"unknown model format {fmt!r}")
