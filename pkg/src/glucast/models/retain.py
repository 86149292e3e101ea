"""Two-level-attention recurrent regressor with an exact linear readout.

The prediction pipeline: a bias-free linear embedding of each input vector,
one LSTM producing a scalar temporal weight per timestep (softmax over the
window), a second LSTM producing a tanh-bounded per-feature weight vector,
an attention-weighted context vector, and a linear readout. Because the
embedding and readout are linear, the prediction decomposes exactly into
per-(timestep, variable) contributions; see :mod:`glucast.models.attribution`.

A patient-classification head (dense + softmax on the context vector) makes
the model usable for adversarial multi-source transfer.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields

import numpy as np

from ..errors import ConfigError, ConsistencyError, DimensionError
from ..kernel import (
    LstmParams,
    Tape,
    check_finite,
    glorot,
    init_lstm_params,
    lstm_forward,
    lstm_scan,
)
from ..kernel import tape as T


@dataclass
class RetainConfig:
    """Model dimensions. Defaults follow the production configuration:
    37-step windows (3 h at 5 min), 3 input signals, 64-dim embeddings and
    single-layer 128-unit LSTMs for both attention networks."""

    seq_len: int = 37
    input_dim: int = 3
    embed_dim: int = 64
    alpha_hidden: int = 128
    beta_hidden: int = 128
    n_sources: int = 1
    reverse_time: bool = False

    def __post_init__(self):
        if self.seq_len < 2:
            raise ConfigError("seq_len must be at least 2")
        if min(self.input_dim, self.embed_dim, self.alpha_hidden,
               self.beta_hidden, self.n_sources) < 1:
            raise ConfigError("all model dimensions must be at least 1")


@dataclass
class RetainParams:
    """All learnable arrays of the model."""

    embed_w: np.ndarray        # (m, r) bias-free embedding
    alpha_rnn: LstmParams      # m -> p
    alpha_w: np.ndarray        # (p,)
    alpha_b: np.ndarray        # ()
    beta_rnn: LstmParams       # m -> q
    beta_w: np.ndarray         # (m, q)
    beta_b: np.ndarray         # (m,)
    out_w: np.ndarray          # (m,)
    out_b: np.ndarray          # ()
    adv_w: np.ndarray          # (K, m) patient-classifier head
    adv_b: np.ndarray          # (K,)


def init_retain_params(config: RetainConfig, rng) -> RetainParams:
    m, r = config.embed_dim, config.input_dim
    p, q, k = config.alpha_hidden, config.beta_hidden, config.n_sources
    return RetainParams(
        embed_w=glorot(rng, m, r),
        alpha_rnn=init_lstm_params(m, p, rng),
        alpha_w=glorot(rng, p, 1)[:, 0],
        alpha_b=np.zeros(()),
        beta_rnn=init_lstm_params(m, q, rng),
        beta_w=glorot(rng, m, q),
        beta_b=np.zeros(m),
        out_w=glorot(rng, m, 1)[:, 0],
        out_b=np.zeros(()),
        adv_w=glorot(rng, k, m),
        adv_b=np.zeros(k),
    )


def param_arrays(params) -> dict:
    """Flat name -> live ndarray view of a params dataclass (LSTMs nested)."""
    out = {}
    for f in fields(params):
        v = getattr(params, f.name)
        if isinstance(v, LstmParams):
            out[f"{f.name}.w_in"] = v.w_in
            out[f"{f.name}.w_rec"] = v.w_rec
            out[f"{f.name}.bias"] = v.bias
        else:
            out[f.name] = v
    return out


@dataclass
class ForwardTrace:
    """Every intermediate of one forward pass, kept for attribution."""

    embeddings: np.ndarray        # (L, m) v_i
    scores: np.ndarray            # (L,) pre-softmax temporal scores
    temporal_weights: np.ndarray  # (L,) softmax-normalized
    variable_weights: np.ndarray  # (L, m) tanh-bounded
    context: np.ndarray           # (m,)
    y_hat: float
    adv_probs: np.ndarray         # (K,)

    def __post_init__(self):
        if abs(self.temporal_weights.sum() - 1.0) > 1e-9:
            raise ConsistencyError("temporal attention weights do not sum to 1")
        if np.any(np.abs(self.variable_weights) > 1.0):
            raise ConsistencyError("variable attention weights outside [-1, 1]")
        if abs(self.adv_probs.sum() - 1.0) > 1e-9:
            raise ConsistencyError("classifier probabilities do not sum to 1")


@dataclass
class GraphOutputs:
    """Graph nodes of a (possibly batched) forward pass."""

    embeddings: T.Node        # (B, L, m)
    scores: T.Node            # (B, L)
    temporal_weights: T.Node  # (B, L)
    variable_weights: T.Node  # (B, L, m)
    context: T.Node           # (B, m)
    y_hat: T.Node             # (B,)
    adv_probs: T.Node | None  # (B, K)


def build_graph(tp, x_batch, p, config: RetainConfig, with_adversary=True,
                reverse_adversary=True) -> GraphOutputs:
    """Assemble the forward graph for a (B, L, r) input batch.

    ``p`` maps flat parameter names (as in :func:`param_arrays`) to arrays or
    tape nodes. When ``reverse_adversary`` is set, the classifier head reads
    the context vector through a gradient-reversing identity, so its
    cross-entropy gradient arrives sign-flipped at the context computation
    and everything upstream of it.
    """
    x = T._val(x_batch)
    if x.ndim != 3:
        raise DimensionError(f"expected a (B, L, r) batch, got shape {x.shape}")
    batch, seq_len, _ = x.shape
    m = config.embed_dim

    flat = T.reshape(x_batch, (batch * seq_len, -1), tp) if isinstance(x_batch, T.Node) \
        else x.reshape(batch * seq_len, -1)
    v_flat = T.matmul(flat, T.transpose(p["embed_w"], tp), tp)
    embeddings = T.reshape(v_flat, (batch, seq_len, m), tp)

    g_steps = lstm_scan(tp, p["alpha_rnn.w_in"], p["alpha_rnn.w_rec"],
                        p["alpha_rnn.bias"], embeddings,
                        reverse_time=config.reverse_time)
    g_all = T.reshape(T.stack_steps(g_steps, tp), (batch * seq_len, -1), tp)
    scores = T.reshape(T.add(T.matmul(g_all, p["alpha_w"], tp), p["alpha_b"], tp),
                       (batch, seq_len), tp)
    temporal = T.softmax(scores, tp)

    h_steps = lstm_scan(tp, p["beta_rnn.w_in"], p["beta_rnn.w_rec"],
                        p["beta_rnn.bias"], embeddings,
                        reverse_time=config.reverse_time)
    h_all = T.reshape(T.stack_steps(h_steps, tp), (batch * seq_len, -1), tp)
    variable = T.reshape(
        T.tanh(T.add(T.matmul(h_all, T.transpose(p["beta_w"], tp), tp),
                     p["beta_b"], tp), tp),
        (batch, seq_len, m), tp)

    weighted = T.mul(T.mul(variable, embeddings, tp),
                     T.reshape(temporal, (batch, seq_len, 1), tp), tp)
    context = T.sum_axis(weighted, 1, tp)

    y_hat = T.add(T.matmul(context, p["out_w"], tp), p["out_b"], tp)

    adv_probs = None
    if with_adversary:
        fed = T.grad_reverse(context, tp) if reverse_adversary else context
        logits = T.add(T.matmul(fed, T.transpose(p["adv_w"], tp), tp), p["adv_b"], tp)
        adv_probs = T.softmax(logits, tp)

    return GraphOutputs(embeddings=embeddings, scores=scores,
                        temporal_weights=temporal, variable_weights=variable,
                        context=context, y_hat=y_hat, adv_probs=adv_probs)


def forward(x, params: RetainParams, config: RetainConfig) -> ForwardTrace:
    """Run one (L, r) window through the model and keep all intermediates."""
    x = check_finite(x, "input window")
    if x.shape != (config.seq_len, config.input_dim):
        raise DimensionError(
            f"input window has shape {x.shape}, expected "
            f"{(config.seq_len, config.input_dim)}")
    outs = build_graph(None, x[None, :, :], param_arrays(params), config)
    return ForwardTrace(
        embeddings=outs.embeddings.value[0],
        scores=outs.scores.value[0],
        temporal_weights=outs.temporal_weights.value[0],
        variable_weights=outs.variable_weights.value[0],
        context=outs.context.value[0],
        y_hat=float(outs.y_hat.value[0]),
        adv_probs=outs.adv_probs.value[0],
    )


def predict_batch(x_batch, params: RetainParams, config: RetainConfig) -> np.ndarray:
    """Predictions for a (B, L, r) batch, without trace retention."""
    outs = build_graph(None, np.asarray(x_batch, dtype=np.float64),
                       param_arrays(params), config, with_adversary=False)
    return outs.y_hat.value


# ---------------------------------------------------------------------------
# The same pipeline as standalone stages, useful for inspection and testing.

def embed(x, embed_w) -> np.ndarray:
    """Bias-free linear embedding of each row: row i -> embed_w @ x_i."""
    x = np.asarray(x, dtype=np.float64)
    embed_w = np.asarray(embed_w, dtype=np.float64)
    if x.ndim != 2 or embed_w.ndim != 2 or x.shape[1] != embed_w.shape[1]:
        raise DimensionError(
            f"embedding shapes incompatible: input {x.shape}, weights {embed_w.shape}")
    return x @ embed_w.T


def temporal_attention(embeddings, rnn: LstmParams, attn_w, attn_b,
                       reverse_time=False) -> np.ndarray:
    """Scalar weight per timestep: dense layer on LSTM states, then softmax."""
    states = lstm_forward(embeddings, rnn, reverse_time=reverse_time)
    scores = states @ np.asarray(attn_w, dtype=np.float64) + float(attn_b)
    return T.softmax(scores).value


def variable_attention(embeddings, rnn: LstmParams, weight, bias,
                       reverse_time=False) -> np.ndarray:
    """Per-feature weight vector per timestep: tanh of a dense layer on LSTM states."""
    states = lstm_forward(embeddings, rnn, reverse_time=reverse_time)
    return np.tanh(states @ np.asarray(weight, dtype=np.float64).T
                   + np.asarray(bias, dtype=np.float64))


def context_vector(embeddings, temporal_weights, variable_weights) -> np.ndarray:
    """Attention-weighted sum over time of the feature-weighted embeddings."""
    v = np.asarray(embeddings, dtype=np.float64)
    a = np.asarray(temporal_weights, dtype=np.float64)
    b = np.asarray(variable_weights, dtype=np.float64)
    if v.shape != b.shape or a.shape != (v.shape[0],):
        raise DimensionError(
            f"context shapes incompatible: embeddings {v.shape}, "
            f"temporal {a.shape}, variable {b.shape}")
    return (a[:, None] * b * v).sum(axis=0)
