"""Compiled kernels behind training and inference.

The network API flattens layer metadata into parallel arrays once and the
kernels below run allocation-free over them. Arithmetic here must stay
bit-identical to the scalar reference functions in :mod:`activations` and
:mod:`plasticity`: the same expressions in the same order, library tanh
for the squash, exact comparisons with 0.0. The test suite checks the two
paths against each other element by element.

Frozen pooling layers are evaluated by summing source blocks directly
instead of a dense matrix-vector product; the dense matrix is still the
stored representation. Trainable layers always use their dense matrix,
and the update walks every weight of the layer, which is what makes the
per-example cost proportional to the trainable weight count.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit
from numba.typed import List as TypedList

ACT_RECTIFIED_TANH = 0
ACT_RELU = 1

RULE_COMPRESSED = 0
RULE_EXTENDED = 1
RULE_PLAIN = 2

BOUND_HARD_RESET = 0
BOUND_SQUASH = 1

CONN_DENSE = 0
CONN_POOL = 1


@njit(cache=True)
def _activate(code: int, coef: float, z: float) -> float:
    if z > 0.0:
        if code == ACT_RECTIFIED_TANH:
            return math.tanh(coef * z)
        return z
    return 0.0


@njit(cache=True)
def _rule_delta(rule, x, y, w, eta_ltp, eta_ltd, eta_ltp2, threshold, creation, needs_threshold):
    if rule == RULE_PLAIN:
        return eta_ltp * (x * y)
    if rule == RULE_COMPRESSED:
        product = x * y
        if w == 0.0:
            if product >= threshold or not needs_threshold:
                return creation
            return 0.0
        if product >= threshold:
            return eta_ltp * product
        return -(eta_ltp * product)
    # extended rule: branch on the signs of x, y, w
    if x > 0.0 and y > 0.0:
        if w > 0.0:
            return eta_ltp * (x * y)
        if w < 0.0:
            return -(eta_ltp * (x * y))
    elif x > 0.0 and y == 0.0:
        if w > 0.0:
            return -(eta_ltd * x)
        if w < 0.0:
            return eta_ltd * x
    elif x == 0.0 and y > 0.0:
        if w > 0.0:
            return eta_ltp2 * y
        if w < 0.0:
            return -(eta_ltp2 * y)
    if w == 0.0 and x * y >= threshold:
        return creation
    return 0.0


@njit(cache=True)
def _bound(w_old, delta, bound_kind, bound_param):
    w_raw = w_old + delta
    if w_old > 0.0 and w_raw < 0.0:
        return 0.0
    if w_old < 0.0 and w_raw > 0.0:
        return 0.0
    if w_raw > 1.0:
        if bound_kind == BOUND_HARD_RESET:
            return bound_param
        return math.tanh(bound_param * w_raw)
    if w_raw < -1.0:
        if bound_kind == BOUND_HARD_RESET:
            return -bound_param
        return -math.tanh(bound_param * -w_raw)
    return w_raw


@njit(cache=True)
def _forward_layer(
    conn_kind, W, x_vec, side_in, side_out, pool_v, pool_c,
    bias, act_code, act_coef, scratch, out,
):
    if conn_kind == CONN_POOL:
        r = side_in // side_out
        # block sums over the r x r partition of the source grid
        for bi in range(side_out):
            for bj in range(side_out):
                s = 0.0
                for i1 in range(bi * r, bi * r + r):
                    base = i1 * side_in
                    for j1 in range(bj * r, bj * r + r):
                        s += x_vec[base + j1]
                scratch[bi * side_out + bj] = s
        if pool_v == 0:
            for k in range(side_out * side_out):
                out[k] = _activate(act_code, act_coef, pool_c * scratch[k] - bias)
        else:
            for i2 in range(side_out):
                lo_i = max(0, i2 - pool_v)
                hi_i = min(side_out - 1, i2 + pool_v)
                for j2 in range(side_out):
                    lo_j = max(0, j2 - pool_v)
                    hi_j = min(side_out - 1, j2 + pool_v)
                    s = 0.0
                    for bi in range(lo_i, hi_i + 1):
                        for bj in range(lo_j, hi_j + 1):
                            s += scratch[bi * side_out + bj]
                    out[i2 * side_out + j2] = _activate(
                        act_code, act_coef, pool_c * s - bias
                    )
    else:
        rows, cols = W.shape
        for j in range(rows):
            s = 0.0
            for i in range(cols):
                s += x_vec[i] * W[j, i]
            out[j] = _activate(act_code, act_coef, s - bias)


@njit(cache=True)
def _forward_layers(
    weights, conn_kind, side_in, side_out, pool_v, pool_c,
    bias, act_code, act_coef, acts, scratch, upto,
):
    for layer in range(upto):
        _forward_layer(
            conn_kind[layer], weights[layer], acts[layer],
            side_in[layer], side_out[layer], pool_v[layer], pool_c[layer],
            bias[layer], act_code[layer], act_coef[layer],
            scratch, acts[layer + 1],
        )


@njit(cache=True)
def _update_layer(
    W, xs, ys,
    rule, eta_ltp, eta_ltd, eta_ltp2, threshold, creation, needs_threshold,
    bound_kind, bound_param,
):
    rows, cols = W.shape
    for j in range(rows):
        yj = ys[j]
        for i in range(cols):
            w = W[j, i]
            delta = _rule_delta(
                rule, xs[i], yj, w,
                eta_ltp, eta_ltd, eta_ltp2, threshold, creation, needs_threshold,
            )
            W[j, i] = _bound(w, delta, bound_kind, bound_param)


@njit(cache=True)
def _train(
    weights, conn_kind, side_in, side_out, pool_v, pool_c,
    bias, act_code, act_coef, trainable, acts, scratch,
    X, labels, epochs,
    rule, eta_ltp, eta_ltd, eta_ltp2, threshold, creation, needs_threshold,
    bound_kind, bound_param,
):
    n_weight_layers = len(weights)
    last = acts[n_weight_layers]
    for _ in range(epochs):
        for e in range(X.shape[0]):
            row = X[e]
            a0 = acts[0]
            for i in range(row.size):
                a0[i] = row[i]
            # one trace per example: hidden activations, then the clamp.
            # The raw output activations are never consumed during training
            # (the clamp replaces them), so the last layer is not computed.
            _forward_layers(
                weights, conn_kind, side_in, side_out, pool_v, pool_c,
                bias, act_code, act_coef, acts, scratch, n_weight_layers - 1,
            )
            for k in range(last.size):
                last[k] = 0.0
            last[labels[e]] = 1.0
            # update trainable layers in forward order from the fixed trace
            for layer in range(n_weight_layers):
                if trainable[layer] == 0:
                    continue
                _update_layer(
                    weights[layer], acts[layer], acts[layer + 1],
                    rule, eta_ltp, eta_ltd, eta_ltp2, threshold, creation,
                    needs_threshold, bound_kind, bound_param,
                )


@njit(cache=True)
def _predict(
    weights, conn_kind, side_in, side_out, pool_v, pool_c,
    bias, act_code, act_coef, acts, scratch,
    X, out_labels,
):
    n_weight_layers = len(weights)
    last = acts[n_weight_layers]
    for e in range(X.shape[0]):
        row = X[e]
        a0 = acts[0]
        for i in range(row.size):
            a0[i] = row[i]
        _forward_layers(
            weights, conn_kind, side_in, side_out, pool_v, pool_c,
            bias, act_code, act_coef, acts, scratch, n_weight_layers,
        )
        best = 0
        best_value = last[0]
        for k in range(1, last.size):
            if last[k] > best_value:
                best_value = last[k]
                best = k
        out_labels[e] = best


class LayerMeta:
    """Flattened per-weight-layer metadata consumed by the kernels."""

    def __init__(self, conn_kind, side_in, side_out, pool_v, pool_c,
                 bias, act_code, act_coef, trainable, layer_sizes):
        self.conn_kind = np.asarray(conn_kind, dtype=np.int64)
        self.side_in = np.asarray(side_in, dtype=np.int64)
        self.side_out = np.asarray(side_out, dtype=np.int64)
        self.pool_v = np.asarray(pool_v, dtype=np.int64)
        self.pool_c = np.asarray(pool_c, dtype=np.float64)
        self.bias = np.asarray(bias, dtype=np.float64)
        self.act_code = np.asarray(act_code, dtype=np.int64)
        self.act_coef = np.asarray(act_coef, dtype=np.float64)
        self.trainable = np.asarray(trainable, dtype=np.uint8)
        self.layer_sizes = tuple(layer_sizes)
        pooled = self.side_out[self.conn_kind == CONN_POOL]
        self.scratch_size = int((pooled.max() ** 2) if pooled.size else 1)

    def act_buffers(self) -> TypedList:
        buffers = TypedList()
        for size in self.layer_sizes:
            buffers.append(np.zeros(size, dtype=np.float64))
        return buffers

    def scratch(self) -> np.ndarray:
        return np.zeros(self.scratch_size, dtype=np.float64)


def typed_weight_list(weight_arrays) -> TypedList:
    lst = TypedList()
    for w in weight_arrays:
        lst.append(w)
    return lst


def plasticity_scalars(params) -> tuple:
    """Translate PlasticityParams into the scalar tuple the kernels take."""
    from .plasticity import HardReset, RuleVariant

    rule = {
        RuleVariant.COMPRESSED: RULE_COMPRESSED,
        RuleVariant.EXTENDED: RULE_EXTENDED,
        RuleVariant.PLAIN_HEBB: RULE_PLAIN,
    }[params.variant]
    if isinstance(params.bounding, HardReset):
        bound_kind, bound_param = BOUND_HARD_RESET, params.bounding.reset_magnitude
    else:
        bound_kind, bound_param = BOUND_SQUASH, params.bounding.c_weights
    return (
        rule,
        params.eta_ltp,
        params.eta_ltd,
        params.eta_ltp2,
        params.threshold,
        params.creation_value,
        params.creation_requires_threshold,
        bound_kind,
        bound_param,
    )


def run_forward(weights, meta: LayerMeta, x: np.ndarray, upto: int | None = None):
    """Activations for all layers (or the first ``upto`` weight layers)."""
    acts = meta.act_buffers()
    acts[0][:] = x
    scratch = meta.scratch()
    n = len(weights) if upto is None else upto
    _forward_layers(
        typed_weight_list(weights), meta.conn_kind, meta.side_in, meta.side_out,
        meta.pool_v, meta.pool_c, meta.bias, meta.act_code, meta.act_coef,
        acts, scratch, n,
    )
    return [np.array(a) for a in acts]


def run_train(weights, meta: LayerMeta, images, labels, epochs, plast) -> None:
    """Train in place over ``images``/``labels`` for ``epochs`` passes."""
    _train(
        typed_weight_list(weights), meta.conn_kind, meta.side_in, meta.side_out,
        meta.pool_v, meta.pool_c, meta.bias, meta.act_code, meta.act_coef,
        meta.trainable, meta.act_buffers(), meta.scratch(),
        images, labels, epochs, *plast,
    )


def run_predict(weights, meta: LayerMeta, images) -> np.ndarray:
    out = np.empty(images.shape[0], dtype=np.int64)
    _predict(
        typed_weight_list(weights), meta.conn_kind, meta.side_in, meta.side_out,
        meta.pool_v, meta.pool_c, meta.bias, meta.act_code, meta.act_coef,
        meta.act_buffers(), meta.scratch(),
        images, out,
    )
    return out


def update_layer_inplace(W, xs, ys, plast) -> None:
    """Apply one rule-plus-bound sweep over a dense weight matrix."""
    _update_layer(W, xs, ys, *plast)
