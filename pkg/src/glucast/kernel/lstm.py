"""A plain LSTM layer built on the tape primitives.

Gate layout is fixed: the stacked weight rows hold the input, forget,
cell-candidate and output gates, in that order. Initial hidden and cell
states are zero vectors.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DimensionError
from . import tape as T


@dataclass
class LstmParams:
    """Learnable arrays of one LSTM layer.

    w_in:  (4*hidden, input)  stacked gate weights applied to the input
    w_rec: (4*hidden, hidden) stacked gate weights applied to the state
    bias:  (4*hidden,)
    """

    w_in: np.ndarray
    w_rec: np.ndarray
    bias: np.ndarray

    def __post_init__(self):
        h4, i = self.w_in.shape
        if h4 % 4 != 0:
            raise DimensionError(f"gate weight rows must be 4*hidden, got {h4}")
        if self.w_rec.shape != (h4, h4 // 4):
            raise DimensionError(
                f"recurrent weights {self.w_rec.shape} inconsistent with w_in {self.w_in.shape}")
        if self.bias.shape != (h4,):
            raise DimensionError(f"bias shape {self.bias.shape} does not match {h4} gate rows")

    @property
    def input_size(self) -> int:
        return self.w_in.shape[1]

    @property
    def hidden_size(self) -> int:
        return self.w_in.shape[0] // 4


def glorot(rng, rows, cols):
    limit = np.sqrt(6.0 / (rows + cols))
    return rng.uniform(-limit, limit, size=(rows, cols))


def init_lstm_params(input_size, hidden_size, rng) -> LstmParams:
    """Glorot-uniform weights, zero biases except forget gate bias = 1."""
    w_in = glorot(rng, 4 * hidden_size, input_size)
    w_rec = glorot(rng, 4 * hidden_size, hidden_size)
    bias = np.zeros(4 * hidden_size)
    bias[hidden_size:2 * hidden_size] = 1.0
    return LstmParams(w_in=w_in, w_rec=w_rec, bias=bias)


def lstm_scan(tp, w_in, w_rec, bias, seq, reverse_time=False):
    """Run the LSTM over a (B, L, input) sequence node.

    The input-side gate projection is hoisted out of the time loop into one
    large matmul; only the recurrent projection stays sequential. Returns
    one (B, hidden) node per step, aligned to the original time order
    regardless of the scan direction.
    """
    h4 = T._val(w_in).shape[0]
    hidden = h4 // 4
    batch, length, n_in = T._val(seq).shape
    w_rec_t = T.transpose(w_rec, tp)

    flat = T.matmul(T.reshape(seq, (batch * length, n_in), tp),
                    T.transpose(w_in, tp), tp)
    z_in = T.reshape(T.add(flat, bias, tp), (batch, length, h4), tp)

    order = range(length - 1, -1, -1) if reverse_time else range(length)
    h = None
    c = None
    outputs = [None] * length
    for t in order:
        z = T.take_step(z_in, t, tp)
        if h is not None:
            z = T.add(z, T.matmul(h, w_rec_t, tp), tp)
        gate_i = T.sigmoid(T.slice_cols(z, 0, hidden, tp), tp)
        gate_f = T.sigmoid(T.slice_cols(z, hidden, 2 * hidden, tp), tp)
        gate_g = T.tanh(T.slice_cols(z, 2 * hidden, 3 * hidden, tp), tp)
        gate_o = T.sigmoid(T.slice_cols(z, 3 * hidden, 4 * hidden, tp), tp)
        if c is None:
            c = T.mul(gate_i, gate_g, tp)
        else:
            c = T.add(T.mul(gate_f, c, tp), T.mul(gate_i, gate_g, tp), tp)
        h = T.mul(gate_o, T.tanh(c, tp), tp)
        outputs[t] = h
    return outputs


def lstm_forward(inputs, params: LstmParams, reverse_time=False) -> np.ndarray:
    """Evaluate the layer on a (L, input) sequence, returning (L, hidden).

    Pure function of its arguments; nothing is recorded for differentiation.
    """
    x = np.asarray(inputs, dtype=np.float64)
    if x.ndim != 2:
        raise DimensionError(f"expected a (L, input) sequence, got shape {x.shape}")
    if x.shape[0] < 1:
        raise DimensionError("sequence must contain at least one step")
    if x.shape[1] != params.input_size:
        raise DimensionError(
            f"input vectors have length {x.shape[1]}, layer expects {params.input_size}")
    outputs = lstm_scan(None, T.lift(params.w_in), T.lift(params.w_rec),
                        T.lift(params.bias), T.lift(x[None, :, :]),
                        reverse_time=reverse_time)
    return np.vstack([o.value[0] for o in outputs])
