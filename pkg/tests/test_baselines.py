import numpy as np
import pytest

from glucast.kernel import LstmParams, Tape, init_lstm_params, lstm_forward
from glucast.kernel import tape as T
from glucast.models import (
    LstmRegModel,
    StdAttnModel,
    init_lstm_reg_params,
    init_std_attn_params,
    lstm_regressor_forward,
    std_attention_forward,
)
from glucast.models.baselines import lstm_reg_graph, std_attn_graph

from _utils import finite_diff_params, max_rel_err

RNG = np.random.default_rng(31)


def test_std_attention_uniform_weights_when_attn_zero():
    params = init_std_attn_params(3, 4, np.random.default_rng(0))
    params.attn_w[...] = 0.0
    y, alphas = std_attention_forward(RNG.normal(size=(5, 3)), params)
    assert np.allclose(alphas, np.full(5, 0.2), atol=1e-15)


def test_std_attention_zero_rnn_outputs_bias():
    params = init_std_attn_params(3, 4, np.random.default_rng(1))
    params.rnn = LstmParams(np.zeros((16, 3)), np.zeros((16, 4)), np.zeros(16))
    params.out_b[...] = 2.5
    y, _ = std_attention_forward(RNG.normal(size=(5, 3)), params)
    assert y == pytest.approx(2.5, abs=1e-15)


def test_std_attention_matches_composed_oracles():
    params = init_std_attn_params(2, 3, np.random.default_rng(2))
    x = RNG.normal(size=(4, 2))
    y, alphas = std_attention_forward(x, params)

    states = lstm_forward(x, params.rnn)
    expect_alphas = T.softmax(states @ params.attn_w + float(params.attn_b)).value
    ctx = (expect_alphas[:, None] * states).sum(axis=0)
    expect_y = float(params.out_w @ ctx + params.out_b)

    assert np.allclose(alphas, expect_alphas, atol=1e-12)
    assert y == pytest.approx(expect_y, rel=1e-12)
    # the returned weights really are the ones used in the pooled state
    recomputed = float(params.out_w @ (alphas[:, None] * states).sum(axis=0)
                       + params.out_b)
    assert y == pytest.approx(recomputed, rel=1e-12)
    assert alphas.sum() == pytest.approx(1.0, abs=1e-12)


def test_lstm_regressor_zero_weights():
    params = init_lstm_reg_params(3, 4, np.random.default_rng(3), hidden1=3, hidden2=2)
    for arr in (params.layer1.w_in, params.layer1.w_rec, params.layer1.bias,
                params.layer2.w_in, params.layer2.w_rec, params.layer2.bias,
                params.out_w, params.adv_w, params.adv_b):
        arr[...] = 0.0
    params.out_b[...] = -1.5
    y, hidden, adv = lstm_regressor_forward(RNG.normal(size=(5, 3)), params)
    assert y == pytest.approx(-1.5, abs=1e-15)
    assert np.array_equal(hidden, np.zeros(2))
    assert np.allclose(adv, np.full(4, 0.25), atol=1e-15)


def test_lstm_regressor_length_one_is_single_cell():
    params = init_lstm_reg_params(2, 2, np.random.default_rng(4), hidden1=3, hidden2=2)
    x = RNG.normal(size=(1, 2))
    y, hidden, _ = lstm_regressor_forward(x, params)
    h1 = lstm_forward(x, params.layer1)
    h2 = lstm_forward(h1, params.layer2)
    assert np.allclose(hidden, h2[-1], atol=1e-14)
    assert y == pytest.approx(float(h2[-1] @ params.out_w + params.out_b), rel=1e-12)


def test_determinism_given_params_and_input():
    params = init_std_attn_params(3, 4, np.random.default_rng(5))
    x = RNG.normal(size=(6, 3))
    y1, a1 = std_attention_forward(x, params)
    y2, a2 = std_attention_forward(x, params)
    assert y1 == y2 and np.array_equal(a1, a2)

    reg = init_lstm_reg_params(3, 2, np.random.default_rng(6), hidden1=3, hidden2=2)
    r1 = lstm_regressor_forward(x, reg)
    r2 = lstm_regressor_forward(x, reg)
    assert r1[0] == r2[0]
    assert np.array_equal(r1[1], r2[1]) and np.array_equal(r1[2], r2[2])


def test_std_attention_gradients_match_finite_differences():
    model = StdAttnModel.create(input_dim=2, hidden=3, seed=6)
    x = RNG.normal(size=(1, 4, 2))
    arrays = model.param_arrays()

    nodes = {k: T.Node(v) for k, v in arrays.items()}
    tp = Tape()
    y, _ = std_attn_graph(tp, x, nodes)
    tp.backward(T.sum_all(y, tp))
    analytic = {k: (n.grad if n.grad is not None else np.zeros_like(n.value))
                for k, n in nodes.items()}
    numeric = finite_diff_params(lambda: float(model.predict(x)[0]), arrays, eps=1e-5)
    for name in arrays:
        assert max_rel_err(analytic[name], numeric[name]) <= 1e-4, name


def test_lstm_regressor_gradients_match_finite_differences():
    model = LstmRegModel.create(input_dim=2, n_sources=3, seed=7, hidden1=3, hidden2=2)
    x = RNG.normal(size=(1, 4, 2))
    arrays = model.param_arrays()

    nodes = {k: T.Node(v) for k, v in arrays.items()}
    tp = Tape()
    y, _, _ = lstm_reg_graph(tp, x, nodes, with_adversary=False)
    tp.backward(T.sum_all(y, tp))
    analytic = {k: (n.grad if n.grad is not None else np.zeros_like(n.value))
                for k, n in nodes.items()}
    numeric = finite_diff_params(lambda: float(model.predict(x)[0]), arrays, eps=1e-5)
    for name in arrays:
        if name.startswith("adv_"):
            continue
        assert max_rel_err(analytic[name], numeric[name]) <= 1e-4, name
