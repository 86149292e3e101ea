"""Reverse-mode differentiation over dense float64 numpy arrays.

A ``Tape`` records every primitive operation in execution order; replaying
it backwards accumulates vector-Jacobian products into the participating
``Node`` objects. Gradients accumulate additively at fan-out, and the replay
order is the exact reverse of the recording order, so two identical forward
passes produce bit-identical gradients.

All operations accept either ``Node`` operands or plain array-likes. Plain
arrays are treated as constants: they take part in the value computation but
receive no gradient. Passing ``tape=None`` skips recording entirely, which
turns the same code path into a pure (non-differentiable) evaluation.

Values are immutable once emitted and the ops are pure, so evaluation is
safe from multiple threads; a single Tape, however, belongs to one logical
training thread.
"""

from __future__ import annotations

import numpy as np

from ..errors import DimensionError

__all__ = [
    "Node",
    "Tape",
    "lift",
    "check_finite",
    "add",
    "sub",
    "mul",
    "neg",
    "scale",
    "matmul",
    "transpose",
    "reshape",
    "stack_steps",
    "take_step",
    "slice_cols",
    "tanh",
    "sigmoid",
    "log",
    "clip_min",
    "softmax",
    "sum_all",
    "sum_axis",
    "mean_all",
    "gather_rows",
    "grad_reverse",
]


class Node:
    """A value in the computation graph with room for its adjoint."""

    __slots__ = ("value", "grad")

    def __init__(self, value):
        self.value = value
        self.grad = None


class Tape:
    """Ordered record of primitive operations for reverse-mode replay."""

    def __init__(self):
        self._ops = []

    def __len__(self):
        return len(self._ops)

    def record(self, out, pulls):
        # pulls: list of (parent Node, kind, payload); see PULL_* for kinds
        self._ops.append((out, pulls))

    def backward(self, root, seed=None):
        """Accumulate d(root)/d(node) into every node reachable from root.

        Scatter-style pulls (slicing ops touching a few entries of a large
        operand) add into a shared buffer instead of materializing
        full-size contribution arrays; a buffer is only written in place
        once this pass owns it, so contributions that alias upstream
        gradients are never corrupted. GEMM-style pulls (the weight side of
        a matmul) are deferred and flushed as one stacked product per
        weight, which turns the many thin per-timestep products of a
        recurrent scan into a single efficient one. Both reorderings are
        fixed functions of the recorded op sequence, so replays stay
        bit-identical.
        """
        if seed is None:
            seed = np.ones_like(root.value)
        root.grad = np.asarray(seed, dtype=np.float64)
        owned = set()
        deferred = {}

        def flush(entry):
            parent, lhs, ups = entry
            a = lhs[0] if len(lhs) == 1 else np.vstack(lhs)
            g = ups[0] if len(ups) == 1 else np.vstack(ups)
            contrib = a.T @ g
            if parent.grad is None:
                parent.grad = contrib
            else:
                parent.grad = parent.grad + contrib
            owned.add(id(parent))

        for out, pulls in reversed(self._ops):
            pending = deferred.pop(id(out), None)
            if pending is not None:
                # every consumer of this node was recorded later and has
                # already been replayed; its stacked product is complete
                flush(pending)
            g = out.grad
            if g is None:
                continue
            for parent, kind, payload in pulls:
                if kind == PULL_VJP:
                    contrib = payload(g)
                    if parent.grad is None:
                        parent.grad = contrib
                    else:
                        parent.grad = parent.grad + contrib
                        owned.add(id(parent))
                elif kind == PULL_SCATTER:
                    if parent.grad is None:
                        parent.grad = np.zeros_like(parent.value)
                        owned.add(id(parent))
                    elif id(parent) not in owned:
                        parent.grad = parent.grad.copy()
                        owned.add(id(parent))
                    payload(g, parent.grad)
                else:  # PULL_GEMM: contribution is payload.T @ g, deferred
                    entry = deferred.get(id(parent))
                    if entry is None:
                        deferred[id(parent)] = (parent, [payload], [g])
                    else:
                        entry[1].append(payload)
                        entry[2].append(g)
        for entry in deferred.values():  # leaf parameters
            flush(entry)


def lift(x) -> Node:
    """Wrap an array-like as a differentiable graph node."""
    if isinstance(x, Node):
        return x
    return Node(np.asarray(x, dtype=np.float64))


def check_finite(x, name):
    """Validate an external array: float64-coercible and fully finite."""
    arr = np.asarray(x, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains NaN or Inf entries")
    return arr


def _val(x):
    return x.value if isinstance(x, Node) else np.asarray(x, dtype=np.float64)


def _emit(tape, value, pulls):
    out = Node(value)
    if tape is not None and pulls:
        tape.record(out, pulls)
    return out


PULL_VJP = 0
PULL_SCATTER = 1
PULL_GEMM = 2


def _pulls(*pairs):
    # keep pull entries only for differentiable (Node) operands
    return [(x, PULL_VJP, fn) for x, fn in pairs if isinstance(x, Node)]


def _scatter_pulls(*pairs):
    return [(x, PULL_SCATTER, fn) for x, fn in pairs if isinstance(x, Node)]


def _unbroadcast(g, shape):
    """Reduce an upstream gradient back to the shape of a broadcast operand."""
    if g.shape == shape:
        return g
    extra = g.ndim - len(shape)
    if extra > 0:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and g.shape[i] != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g.reshape(shape)


def add(a, b, tape=None):
    av, bv = _val(a), _val(b)
    return _emit(tape, av + bv, _pulls(
        (a, lambda g: _unbroadcast(g, av.shape)),
        (b, lambda g: _unbroadcast(g, bv.shape)),
    ))


def sub(a, b, tape=None):
    av, bv = _val(a), _val(b)
    return _emit(tape, av - bv, _pulls(
        (a, lambda g: _unbroadcast(g, av.shape)),
        (b, lambda g: _unbroadcast(-g, bv.shape)),
    ))


def mul(a, b, tape=None):
    av, bv = _val(a), _val(b)
    return _emit(tape, av * bv, _pulls(
        (a, lambda g: _unbroadcast(g * bv, av.shape)),
        (b, lambda g: _unbroadcast(g * av, bv.shape)),
    ))


def neg(a, tape=None):
    return _emit(tape, -_val(a), _pulls((a, lambda g: -g)))


def scale(a, k, tape=None):
    k = float(k)
    return _emit(tape, _val(a) * k, _pulls((a, lambda g: g * k)))


def matmul(a, b, tape=None):
    """Matrix/vector product for 1-D and 2-D operands."""
    av, bv = _val(a), _val(b)
    if av.ndim not in (1, 2) or bv.ndim not in (1, 2):
        raise DimensionError(
            f"matmul supports 1-D/2-D operands, got {av.shape} @ {bv.shape}")
    inner_a = av.shape[-1]
    inner_b = bv.shape[0]
    if inner_a != inner_b:
        raise DimensionError(f"matmul shape mismatch: {av.shape} @ {bv.shape}")
    value = av @ bv

    if av.ndim == 2 and bv.ndim == 2:
        pulls = _pulls((a, lambda g: g @ bv.T))
        if isinstance(b, Node):
            pulls.append((b, PULL_GEMM, av))
        return _emit(tape, value, pulls)
    if av.ndim == 2 and bv.ndim == 1:
        da = lambda g: np.outer(g, bv)
        db = lambda g: av.T @ g
    elif av.ndim == 1 and bv.ndim == 2:
        da = lambda g: bv @ g
        db = lambda g: np.outer(av, g)
    else:
        da = lambda g: g * bv
        db = lambda g: g * av
    return _emit(tape, value, _pulls((a, da), (b, db)))


def transpose(a, tape=None):
    av = _val(a)
    if av.ndim != 2:
        raise DimensionError(f"transpose expects a 2-D array, got shape {av.shape}")
    return _emit(tape, av.T, _pulls((a, lambda g: g.T)))


def reshape(a, shape, tape=None):
    av = _val(a)
    old = av.shape
    return _emit(tape, av.reshape(shape), _pulls((a, lambda g: g.reshape(old))))


def stack_steps(nodes, tape=None):
    """Stack a sequence of equally shaped (B, n) values into (B, L, n)."""
    values = [_val(x) for x in nodes]
    value = np.stack(values, axis=1)

    def pull_at(i):
        return lambda g: g[:, i, :]

    return _emit(tape, value, _pulls(*((x, pull_at(i)) for i, x in enumerate(nodes))))


def take_step(a, i, tape=None):
    """Select timestep i from a (B, L, n) array, producing (B, n)."""
    av = _val(a)

    def scatter(g, buf):
        buf[:, i, :] += g

    return _emit(tape, av[:, i, :], _scatter_pulls((a, scatter)))


def slice_cols(a, lo, hi, tape=None):
    """Slice [lo:hi] along the last axis."""
    av = _val(a)

    def scatter(g, buf):
        buf[..., lo:hi] += g

    return _emit(tape, av[..., lo:hi], _scatter_pulls((a, scatter)))


def tanh(a, tape=None):
    y = np.tanh(_val(a))
    return _emit(tape, y, _pulls((a, lambda g: g * (1.0 - y * y))))


def sigmoid(a, tape=None):
    # the tanh form is overflow-free and a single vector pass
    y = 0.5 * (np.tanh(0.5 * _val(a)) + 1.0)
    return _emit(tape, y, _pulls((a, lambda g: g * y * (1.0 - y))))


def log(a, tape=None):
    av = _val(a)
    return _emit(tape, np.log(av), _pulls((a, lambda g: g / av)))


def clip_min(a, lo, tape=None):
    """Elementwise max(a, lo); gradient is blocked where the floor binds."""
    av = _val(a)
    mask = av > lo
    return _emit(tape, np.maximum(av, lo), _pulls((a, lambda g: g * mask)))


def softmax(a, tape=None):
    """Stable softmax along the last axis.

    Outputs are floored at the smallest positive double: a score gap beyond
    ~745 underflows exp to exactly 0.0, and downstream code relies on the
    weights staying positive. The floor is invisible to the sums.
    """
    av = _val(a)
    if av.shape[-1] == 0:
        raise ValueError("softmax of an empty vector")
    if not np.all(np.isfinite(av)):
        raise ValueError("softmax input contains NaN or Inf entries")
    shifted = av - av.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    y = np.maximum(e / e.sum(axis=-1, keepdims=True), 5e-324)

    def pull(g):
        return y * (g - (g * y).sum(axis=-1, keepdims=True))

    return _emit(tape, y, _pulls((a, pull)))


def sum_all(a, tape=None):
    av = _val(a)
    return _emit(tape, np.asarray(av.sum()), _pulls(
        (a, lambda g: np.broadcast_to(g, av.shape).copy() if av.shape else g)))


def sum_axis(a, axis, tape=None):
    av = _val(a)
    return _emit(tape, av.sum(axis=axis), _pulls(
        (a, lambda g: np.broadcast_to(np.expand_dims(g, axis), av.shape).copy())))


def mean_all(a, tape=None):
    av = _val(a)
    n = av.size
    return scale(sum_all(a, tape), 1.0 / n, tape)


def gather_rows(a, idx, tape=None):
    """Pick a[i, idx[i]] for each row of a 2-D array."""
    av = _val(a)
    idx = np.asarray(idx, dtype=np.intp)
    rows = np.arange(av.shape[0])

    def scatter(g, buf):
        np.add.at(buf, (rows, idx), g)

    return _emit(tape, av[rows, idx], _scatter_pulls((a, scatter)))


def grad_reverse(a, tape=None):
    """Identity in the forward pass; multiplies the gradient by -1."""
    return _emit(tape, _val(a), _pulls((a, lambda g: -g)))
