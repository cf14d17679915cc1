"""Pure-numpy implementations of the hot kernels.

These are the reference versions; ``_ckernels`` must agree with them to
rounding.
"""

import numpy as np

_CHUNK = 2048


def gaussian_mix_eval(points, coeffs, alphas, centers):
    """Value, gradient and Hessian of sum_j c_j exp(-a_j |r - C_j|^2).

    points: (N, 3); coeffs, alphas: (J,); centers: (J, 3).
    Returns arrays of shape (N,), (N, 3), (N, 3, 3).
    """
    points = np.ascontiguousarray(points, dtype=float)
    n = points.shape[0]
    value = np.zeros(n)
    grad = np.zeros((n, 3))
    hess = np.zeros((n, 3, 3))
    eye = np.eye(3)
    for c, a, center in zip(coeffs, alphas, centers):
        d = points - center
        g = c * np.exp(-a * np.einsum("ij,ij->i", d, d))
        value += g
        grad += (-2.0 * a * g)[:, None] * d
        hess += g[:, None, None] * (4.0 * a * a * d[:, :, None] * d[:, None, :] - 2.0 * a * eye)
    return value, grad, hess


def coulomb_pair_sum(pa, qa, pb, qb):
    """sum_ij qa_i qb_j / |pa_i - pb_j| over two disjoint point sets."""
    pa = np.asarray(pa, dtype=float)
    pb = np.asarray(pb, dtype=float)
    qa = np.asarray(qa, dtype=float)
    qb = np.asarray(qb, dtype=float)
    total = 0.0
    for start in range(0, pa.shape[0], _CHUNK):
        block = pa[start:start + _CHUNK]
        diff = block[:, None, :] - pb[None, :, :]
        dist = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
        if np.any(dist == 0.0):
            raise ZeroDivisionError("coincident points in Coulomb pair sum")
        total += float(qa[start:start + _CHUNK] @ (1.0 / dist) @ qb)
    return total
