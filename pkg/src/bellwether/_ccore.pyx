# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled versions of the kernels in ``_pycore``; same signatures."""
import numpy as np
cimport numpy as cnp
from libc.math cimport tanh

cnp.import_array()


def count_transitions(seq, Py_ssize_t n_states):
    cdef cnp.intp_t[::1] s = np.ascontiguousarray(seq, dtype=np.intp)
    counts = np.zeros((n_states, n_states), dtype=np.float64)
    cdef double[:, ::1] c = counts
    cdef Py_ssize_t t
    for t in range(s.shape[0] - 1):
        c[s[t], s[t + 1]] += 1.0
    return counts


def nearest_centroid(X, centroids):
    cdef double[:, ::1] x = np.ascontiguousarray(X, dtype=np.float64)
    cdef double[:, ::1] cen = np.ascontiguousarray(centroids, dtype=np.float64)
    cdef Py_ssize_t n = x.shape[0], p = x.shape[1], k = cen.shape[0]
    labels = np.empty(n, dtype=np.intp)
    dist = np.empty(n, dtype=np.float64)
    cdef cnp.intp_t[::1] lab = labels
    cdef double[::1] dst = dist
    cdef Py_ssize_t i, j, m, best
    cdef double d, diff, bestd
    for i in range(n):
        best = 0
        bestd = -1.0
        for j in range(k):
            d = 0.0
            for m in range(p):
                diff = x[i, m] - cen[j, m]
                d += diff * diff
            if bestd < 0.0 or d < bestd:
                bestd = d
                best = j
        lab[i] = best
        dst[i] = bestd
    return labels, dist


def mlp_forward(theta, sizes, X):
    f, _ = _forward_backward(theta, sizes, X, False)
    return f


def mlp_jacobian(theta, sizes, X):
    return _forward_backward(theta, sizes, X, True)


cdef _forward_backward(theta_in, sizes_in, X_in, bint want_jac):
    cdef double[::1] theta = np.ascontiguousarray(theta_in, dtype=np.float64)
    cdef double[:, ::1] x = np.ascontiguousarray(X_in, dtype=np.float64)
    cdef cnp.intp_t[::1] sizes = np.ascontiguousarray(sizes_in, dtype=np.intp)
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t n_layers = sizes.shape[0] - 1
    cdef Py_ssize_t n_par = theta.shape[0]
    cdef Py_ssize_t width = 0, l, i, j, m, pos
    for l in range(n_layers + 1):
        if sizes[l] > width:
            width = sizes[l]

    offsets_arr = np.empty(n_layers, dtype=np.intp)
    act_off_arr = np.empty(n_layers + 2, dtype=np.intp)
    cdef cnp.intp_t[::1] offsets = offsets_arr
    cdef cnp.intp_t[::1] act_off = act_off_arr
    pos = 0
    act_off[0] = 0
    for l in range(n_layers):
        offsets[l] = pos
        pos += sizes[l] * sizes[l + 1] + sizes[l + 1]
        act_off[l + 1] = act_off[l] + sizes[l]
    act_off[n_layers + 1] = act_off[n_layers] + sizes[n_layers]
    if pos != n_par:
        raise ValueError("theta length does not match layer sizes")

    acts_arr = np.empty(act_off[n_layers + 1], dtype=np.float64)
    delta_arr = np.empty(width, dtype=np.float64)
    delta2_arr = np.empty(width, dtype=np.float64)
    cdef double[::1] acts = acts_arr
    cdef double[::1] delta = delta_arr
    cdef double[::1] delta2 = delta2_arr
    f = np.empty(n, dtype=np.float64)
    cdef double[::1] fv = f
    if want_jac:
        J = np.zeros((n, n_par), dtype=np.float64)
    else:
        J = np.zeros((1, 1), dtype=np.float64)
    cdef double[:, ::1] jac = J
    cdef Py_ssize_t n_in, n_out, w0, b0, a_in, a_out
    cdef double z, s

    for i in range(n):
        for m in range(sizes[0]):
            acts[m] = x[i, m]
        for l in range(n_layers):
            n_in = sizes[l]
            n_out = sizes[l + 1]
            w0 = offsets[l]
            b0 = w0 + n_in * n_out
            a_in = act_off[l]
            a_out = act_off[l + 1]
            for j in range(n_out):
                z = theta[b0 + j]
                for m in range(n_in):
                    z += theta[w0 + j * n_in + m] * acts[a_in + m]
                acts[a_out + j] = tanh(z) if l < n_layers - 1 else z
        fv[i] = acts[act_off[n_layers]]
        if not want_jac:
            continue
        delta[0] = 1.0
        for l in range(n_layers - 1, -1, -1):
            n_in = sizes[l]
            n_out = sizes[l + 1]
            w0 = offsets[l]
            b0 = w0 + n_in * n_out
            a_in = act_off[l]
            for j in range(n_out):
                for m in range(n_in):
                    jac[i, w0 + j * n_in + m] = delta[j] * acts[a_in + m]
                jac[i, b0 + j] = delta[j]
            if l > 0:
                for m in range(n_in):
                    s = 0.0
                    for j in range(n_out):
                        s += delta[j] * theta[w0 + j * n_in + m]
                    delta2[m] = s * (1.0 - acts[a_in + m] * acts[a_in + m])
                for m in range(n_in):
                    delta[m] = delta2[m]
    return f, J
