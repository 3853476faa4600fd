"""Numpy implementations of the inner-loop kernels.

These are the reference versions; ``_ccore.pyx`` mirrors them one-to-one and
the test suite checks both agree.
"""
import numpy as np


def count_transitions(seq, n_states):
    """Count consecutive state transitions ``seq[t] -> seq[t+1]``."""
    seq = np.asarray(seq, dtype=np.intp)
    counts = np.zeros((n_states, n_states), dtype=np.float64)
    if seq.size > 1:
        np.add.at(counts, (seq[:-1], seq[1:]), 1.0)
    return counts


def nearest_centroid(X, centroids):
    """Index of the closest centroid per row and the squared distance to it.

    Ties go to the lowest centroid index.
    """
    X = np.asarray(X, dtype=np.float64)
    C = np.asarray(centroids, dtype=np.float64)
    d2 = ((X[:, None, :] - C[None, :, :]) ** 2).sum(axis=2)
    labels = np.argmin(d2, axis=1)
    return labels.astype(np.intp), d2[np.arange(X.shape[0]), labels]


def mlp_forward(theta, sizes, X):
    """Network output for every row of ``X``.

    ``sizes`` is ``[n_in, h1, ..., hk, 1]``; hidden layers use tanh and the
    output neuron is linear. ``theta`` stores, per layer, the weight matrix
    (out x in, row-major) followed by the bias vector.
    """
    a = np.asarray(X, dtype=np.float64)
    pos = 0
    n_layers = len(sizes) - 1
    for layer in range(n_layers):
        n_in, n_out = sizes[layer], sizes[layer + 1]
        W = theta[pos:pos + n_in * n_out].reshape(n_out, n_in)
        pos += n_in * n_out
        b = theta[pos:pos + n_out]
        pos += n_out
        z = a @ W.T + b
        a = np.tanh(z) if layer < n_layers - 1 else z
    return a[:, 0]


def mlp_jacobian(theta, sizes, X):
    """Output and d(output)/d(theta) for every row of ``X``.

    Returns ``(f, J)`` with ``f`` of shape (n,) and ``J`` of shape
    (n, len(theta)).
    """
    X = np.asarray(X, dtype=np.float64)
    theta = np.asarray(theta, dtype=np.float64)
    n = X.shape[0]
    n_layers = len(sizes) - 1
    weights, offsets = [], []
    pos = 0
    for layer in range(n_layers):
        n_in, n_out = sizes[layer], sizes[layer + 1]
        offsets.append(pos)
        W = theta[pos:pos + n_in * n_out].reshape(n_out, n_in)
        pos += n_in * n_out
        b = theta[pos:pos + n_out]
        pos += n_out
        weights.append((W, b))

    acts = [X]
    a = X
    for layer, (W, b) in enumerate(weights):
        z = a @ W.T + b
        a = np.tanh(z) if layer < n_layers - 1 else z
        acts.append(a)

    J = np.empty((n, theta.size), dtype=np.float64)
    delta = np.ones((n, 1))
    for layer in range(n_layers - 1, -1, -1):
        W, _ = weights[layer]
        n_out, n_in = W.shape
        start = offsets[layer]
        J[:, start:start + n_in * n_out] = (delta[:, :, None] * acts[layer][:, None, :]).reshape(n, -1)
        J[:, start + n_in * n_out:start + n_in * n_out + n_out] = delta
        if layer > 0:
            delta = (delta @ W) * (1.0 - acts[layer] ** 2)
    return acts[-1][:, 0].copy(), J
