"""Compiled pair-sum kernels for Gaussian potentials.

The serial kernels visit each pair once (i < j) in a fixed order, so
results are bitwise reproducible. The parallel kernels partition rows; each
row sums in fixed j order, so results depend only on the input.
"""
import numba
import numpy as np


@numba.njit(cache=True)
def gauss_accel_serial(x, w, amp, inv_w2):
    n, d = x.shape
    out = np.zeros((n, d))
    r = np.empty(d)
    for i in range(n):
        for j in range(i + 1, n):
            r2 = 0.0
            for k in range(d):
                r[k] = x[i, k] - x[j, k]
                r2 += r[k] * r[k]
            # -grad phi(r) = amp * r / w^2 * exp(-r^2 / 2 w^2)
            f = amp * inv_w2 * np.exp(-0.5 * r2 * inv_w2)
            for k in range(d):
                out[i, k] += w[j] * f * r[k]
                out[j, k] -= w[i] * f * r[k]
    return out


@numba.njit(cache=True, parallel=True)
def gauss_accel_parallel(x, w, amp, inv_w2):
    n, d = x.shape
    out = np.zeros((n, d))
    for i in numba.prange(n):
        for j in range(n):
            if j == i:
                continue
            r2 = 0.0
            for k in range(d):
                r2 += (x[i, k] - x[j, k]) ** 2
            f = amp * inv_w2 * np.exp(-0.5 * r2 * inv_w2)
            for k in range(d):
                out[i, k] += w[j] * f * (x[i, k] - x[j, k])
    return out


@numba.njit(cache=True)
def gauss_pair_energy(x, w, amp, inv_w2):
    n, d = x.shape
    e = 0.0
    for i in range(n):
        for j in range(i + 1, n):
            r2 = 0.0
            for k in range(d):
                r2 += (x[i, k] - x[j, k]) ** 2
            e += w[i] * w[j] * amp * np.exp(-0.5 * r2 * inv_w2)
    return e


@numba.njit(cache=True)
def gauss_hessian_sum(x, w, amp, inv_w2):
    """S_i = sum_k w_k Hess phi(x_i - x_k), shape (n, d, d)."""
    n, d = x.shape
    out = np.zeros((n, d, d))
    r = np.empty(d)
    for i in range(n):
        for j in range(i + 1, n):
            r2 = 0.0
            for k in range(d):
                r[k] = x[i, k] - x[j, k]
                r2 += r[k] * r[k]
            g = amp * np.exp(-0.5 * r2 * inv_w2)
            for a in range(d):
                for b in range(d):
                    h = g * (r[a] * r[b] * inv_w2 * inv_w2)
                    if a == b:
                        h -= g * inv_w2
                    out[i, a, b] += w[j] * h
                    out[j, a, b] += w[i] * h
    # self term Hess phi(0) = -amp/w^2 I
    for i in range(n):
        for a in range(d):
            out[i, a, a] += -w[i] * amp * inv_w2
    return out


@numba.njit(cache=True)
def gauss_potential_sum(x, w, amp, inv_w2):
    """V_i = sum_k w_k phi(x_i - x_k), self term included."""
    n, d = x.shape
    out = np.zeros(n)
    for i in range(n):
        out[i] += w[i] * amp
        for j in range(i + 1, n):
            r2 = 0.0
            for k in range(d):
                r2 += (x[i, k] - x[j, k]) ** 2
            g = amp * np.exp(-0.5 * r2 * inv_w2)
            out[i] += w[j] * g
            out[j] += w[i] * g
    return out
