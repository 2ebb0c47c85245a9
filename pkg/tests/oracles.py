"""Independent reference implementations used to check the fast paths.

Everything here is deliberately written with scalar Python loops and
``math`` functions, no vectorized numpy, so agreement with the package is
evidence rather than tautology.
"""
from __future__ import annotations

import math

import numpy as np


class DenseMLP:
    """Scalar-loop MLP with softmax output and cross-entropy loss.

    Weights and biases are copied from plain nested lists or arrays; an
    optional neuron-granularity mask freezes the zero pattern the way the
    sparse implementation does (gradients at inactive positions are
    discarded).
    """

    def __init__(self, weights, biases, activation="relu", masks=None):
        self.w = [[[float(v) for v in row] for row in np.asarray(W)]
                  for W in weights]
        self.b = [[float(v) for v in np.asarray(B)] for B in biases]
        self.activation = activation
        if masks is None:
            self.masks = [[[True] * len(row) for row in W] for W in self.w]
        else:
            self.masks = [[[bool(v) for v in row] for row in np.asarray(M)]
                          for M in masks]

    def _act(self, z):
        if self.activation == "relu":
            return z if z > 0.0 else 0.0
        return 1.0 / (1.0 + math.exp(-z)) if z >= 0 else (
            math.exp(z) / (1.0 + math.exp(z)))

    def _act_deriv(self, z):
        if self.activation == "relu":
            return 1.0 if z > 0.0 else 0.0
        s = self._act(z)
        return s * (1.0 - s)

    def forward(self, x):
        """Per-sample scalar forward; returns (z_layers, a_layers)."""
        x = np.asarray(x, dtype=float)
        n_layers = len(self.w)
        z_layers = [[] for _ in range(n_layers)]
        a_layers = [[] for _ in range(n_layers + 1)]
        for sample in x:
            a = [float(v) for v in sample]
            a_layers[0].append(list(a))
            for li in range(n_layers):
                cols = len(self.b[li])
                z = []
                for j in range(cols):
                    acc = self.b[li][j]
                    for i in range(len(a)):
                        acc += a[i] * self.w[li][i][j]
                    z.append(acc)
                z_layers[li].append(list(z))
                if li == n_layers - 1:
                    m = max(z)
                    e = [math.exp(v - m) for v in z]
                    total = sum(e)
                    a = [v / total for v in e]
                else:
                    a = [self._act(v) for v in z]
                a_layers[li + 1].append(list(a))
        return ([np.array(z) for z in z_layers],
                [np.array(a) for a in a_layers])

    def loss(self, x, y):
        _, a_layers = self.forward(x)
        probs = a_layers[-1]
        y = np.asarray(y, dtype=float)
        total = 0.0
        for s in range(probs.shape[0]):
            row = 0.0
            for j in range(probs.shape[1]):
                p = max(probs[s][j], 1e-12)
                row += y[s][j] * math.log(p)
            total -= row
        return total / probs.shape[0]

    def backward(self, x, y):
        """Scalar backprop; returns (weight_grads, bias_grads) as arrays."""
        z_layers, a_layers = self.forward(x)
        y = np.asarray(y, dtype=float)
        n = y.shape[0]
        n_layers = len(self.w)
        gw = [np.zeros((len(W), len(W[0]))) for W in self.w]
        gb = [np.zeros(len(B)) for B in self.b]
        for s in range(n):
            delta = [a_layers[-1][s][j] - y[s][j]
                     for j in range(y.shape[1])]
            for li in range(n_layers - 1, -1, -1):
                a_prev = a_layers[li][s]
                for j in range(len(delta)):
                    gb[li][j] += delta[j] / n
                    for i in range(len(a_prev)):
                        if self.masks[li][i][j]:
                            gw[li][i][j] += a_prev[i] * delta[j] / n
                if li > 0:
                    da = []
                    for i in range(len(a_prev)):
                        acc = 0.0
                        for j in range(len(delta)):
                            acc += delta[j] * self.w[li][i][j]
                        da.append(acc)
                    delta = [da[i] * self._act_deriv(z_layers[li - 1][s][i])
                             for i in range(len(da))]
        return gw, gb

    def sgd_step(self, x, y, lr):
        gw, gb = self.backward(x, y)
        for li in range(len(self.w)):
            for i in range(len(self.w[li])):
                for j in range(len(self.w[li][i])):
                    if self.masks[li][i][j]:
                        self.w[li][i][j] -= lr * gw[li][i][j]
            for j in range(len(self.b[li])):
                self.b[li][j] -= lr * gb[li][j]

    def weights_arrays(self):
        return [np.array(W) for W in self.w]

    def bias_arrays(self):
        return [np.array(B) for B in self.b]


def finite_diff_grads(network, x, y, step=1e-5):
    """Central-difference loss gradients of a package network.

    Perturbs every active stored weight cell and every bias entry in
    place, evaluating the package's own forward/loss.  Inactive cells are
    reported as zero, matching the analytic gradients.
    """
    from motifset.network import forward, loss

    def loss_now():
        return loss(forward(network, x), y)

    weight_grads = []
    bias_grads = []
    for layer in network.layers:
        gw = np.zeros_like(layer.weights)
        active = np.nonzero(layer.weight_mask())
        for idx in zip(*active):
            orig = layer.weights[idx]
            layer.weights[idx] = orig + step
            up = loss_now()
            layer.weights[idx] = orig - step
            down = loss_now()
            layer.weights[idx] = orig
            gw[idx] = (up - down) / (2.0 * step)
        weight_grads.append(gw)
        gb = np.zeros_like(layer.bias)
        for j in range(layer.bias.shape[0]):
            orig = layer.bias[j]
            layer.bias[j] = orig + step
            up = loss_now()
            layer.bias[j] = orig - step
            down = loss_now()
            layer.bias[j] = orig
            gb[j] = (up - down) / (2.0 * step)
        bias_grads.append(gb)
    return weight_grads, bias_grads


def max_rel_error(analytic, numeric, floor=1e-6):
    """Worst-case relative disagreement with an absolute floor.

    The floor keeps finite-difference noise (loss cancellation divided by
    the step) from inflating the ratio where both gradients are tiny.
    """
    worst = 0.0
    for g, f in zip(analytic, numeric):
        denom = np.maximum(np.maximum(np.abs(g), np.abs(f)), floor)
        worst = max(worst, float((np.abs(g - f) / denom).max()))
    return worst
